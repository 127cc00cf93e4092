// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

namespace framepick {

// 64-bit FNV-1a, the byte-exact reference used for small strings.
[[nodiscard]] std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

// Word-at-a-time hash for file fingerprints. Stable across platforms with the
// same endianness; not cryptographic.
[[nodiscard]] std::uint64_t fast_hash64(std::string_view bytes, std::uint64_t seed = 0);
[[nodiscard]] std::uint64_t hash_file(const std::filesystem::path& path);

// Serializes with sorted keys, integral doubles written as integers and other
// doubles in shortest round-trip form, so digests ignore key order and
// "1" vs "1.0" spelling.
[[nodiscard]] std::string canonical_json(const nlohmann::json& j);
[[nodiscard]] std::uint64_t config_digest(const nlohmann::json& j);

[[nodiscard]] std::string hex64(std::uint64_t v);

// Incremental combination of digests and fingerprints.
class DigestBuilder {
public:
    DigestBuilder& add(std::string_view tag, std::uint64_t value);
    DigestBuilder& add(std::string_view tag, std::string_view text);
    DigestBuilder& add_json(std::string_view tag, const nlohmann::json& j);
    [[nodiscard]] std::uint64_t value() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace framepick
