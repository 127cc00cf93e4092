// SPDX-License-Identifier: Apache-2.0
#include "framepick/stage_cache.hpp"

#include <json.hpp>

#include "framepick/core.hpp"
#include "framepick/digest.hpp"
#include "framepick/fsio.hpp"

namespace fs = std::filesystem;

namespace framepick::ingest {

namespace {

struct Parsed {
    nlohmann::json header;
    std::string payload;
};

std::optional<Parsed> parse_entry(const std::string& bytes, std::string& why) {
    const auto nl = bytes.find('\n');
    if (nl == std::string::npos) {
        why = "missing header";
        return std::nullopt;
    }
    Parsed p;
    try {
        p.header = nlohmann::json::parse(bytes.substr(0, nl));
    } catch (const nlohmann::json::exception&) {
        why = "unreadable header";
        return std::nullopt;
    }
    p.payload = bytes.substr(nl + 1);
    if (!p.header.is_object() || p.header.value("payload_size", std::uint64_t(0)) != p.payload.size()) {
        why = "payload size mismatch";
        return std::nullopt;
    }
    if (p.header.value("payload_hash", std::string{}) != hex64(fast_hash64(p.payload))) {
        why = "payload checksum mismatch";
        return std::nullopt;
    }
    return p;
}

}  // namespace

StageCache::StageCache(fs::path dir) : dir_(std::move(dir)) {}

fs::path StageCache::path_for(const std::string& stage) const { return dir_ / (stage + ".stage"); }

std::mutex& StageCache::lock_for(const std::string& stage) {
    std::lock_guard g(locks_guard_);
    return locks_[stage];
}

std::optional<std::string> StageCache::get(const std::string& stage, std::uint64_t digest,
                                           std::vector<std::string>* warnings) const {
    const fs::path p = path_for(stage);
    if (!fs::exists(p)) return std::nullopt;
    std::string bytes;
    try {
        bytes = read_file(p);
    } catch (const Error& e) {
        if (warnings) warnings->push_back(std::string("stage cache: ") + e.what());
        return std::nullopt;
    }
    std::string why;
    auto parsed = parse_entry(bytes, why);
    if (!parsed) {
        if (warnings) warnings->push_back("stage cache: corrupt entry for '" + stage + "' (" + why + ")");
        return std::nullopt;
    }
    if (parsed->header.value("digest", std::string{}) != hex64(digest)) return std::nullopt;
    return std::move(parsed->payload);
}

void StageCache::put(const std::string& stage, std::uint64_t digest, const std::string& payload) {
    std::lock_guard g(lock_for(stage));
    nlohmann::json header = {{"stage", stage},
                             {"digest", hex64(digest)},
                             {"payload_size", payload.size()},
                             {"payload_hash", hex64(fast_hash64(payload))},
                             {"created_at", utc_timestamp()}};
    std::string bytes = header.dump();
    bytes += '\n';
    bytes += payload;
    atomic_write_file(path_for(stage), bytes, before_commit);
}

std::optional<StageCacheEntry> StageCache::entry(const std::string& stage) const {
    const fs::path p = path_for(stage);
    if (!fs::exists(p)) return std::nullopt;
    std::string why;
    auto parsed = parse_entry(read_file(p), why);
    if (!parsed) return std::nullopt;
    StageCacheEntry e;
    e.stage = stage;
    e.digest = std::stoull(parsed->header.value("digest", std::string("0")), nullptr, 16);
    e.payload_path = p;
    e.created_at = parsed->header.value("created_at", std::string{});
    return e;
}

}  // namespace framepick::ingest
