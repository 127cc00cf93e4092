// SPDX-License-Identifier: Apache-2.0
#include "framepick/digest.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "framepick/core.hpp"

namespace framepick {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

std::uint64_t mix(std::uint64_t x) {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ULL;
    x ^= x >> 33;
    return x;
}

nlohmann::json normalize_numbers(const nlohmann::json& j) {
    if (j.is_object()) {
        nlohmann::json out = nlohmann::json::object();
        for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = normalize_numbers(it.value());
        return out;
    }
    if (j.is_array()) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& v : j) out.push_back(normalize_numbers(v));
        return out;
    }
    if (j.is_number_float()) {
        const double v = j.get<double>();
        if (std::isfinite(v) && v == std::trunc(v) && std::fabs(v) < 9007199254740992.0)
            return static_cast<std::int64_t>(v);
        return v;
    }
    if (j.is_number_unsigned()) return static_cast<std::int64_t>(j.get<std::uint64_t>());
    return j;
}

}  // namespace

std::uint64_t fast_hash64(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = mix(seed ^ 0x9e3779b97f4a7c15ULL ^ bytes.size());
    std::size_t i = 0;
    for (; i + 8 <= bytes.size(); i += 8) {
        std::uint64_t w;
        std::memcpy(&w, bytes.data() + i, 8);
        h = (h ^ (w * 0x9e3779b97f4a7c15ULL)) * 0xbf58476d1ce4e5b9ULL;
        h ^= h >> 29;
    }
    std::uint64_t tail = 0;
    std::memcpy(&tail, bytes.data() + i, bytes.size() - i);
    h ^= tail * 0x94d049bb133111ebULL;
    return mix(h);
}

std::uint64_t hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot read " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return fast_hash64(data);
}

std::string canonical_json(const nlohmann::json& j) { return normalize_numbers(j).dump(); }

std::uint64_t config_digest(const nlohmann::json& j) { return fnv1a64(canonical_json(j)); }

std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[std::size_t(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

DigestBuilder& DigestBuilder::add(std::string_view tag, std::uint64_t value) {
    state_ = fnv1a64(tag, state_);
    char buf[8];
    std::memcpy(buf, &value, 8);
    state_ = fnv1a64(std::string_view(buf, 8), state_);
    return *this;
}

DigestBuilder& DigestBuilder::add(std::string_view tag, std::string_view text) {
    return add(tag, fnv1a64(text));
}

DigestBuilder& DigestBuilder::add_json(std::string_view tag, const nlohmann::json& j) {
    return add(tag, config_digest(j));
}

}  // namespace framepick
