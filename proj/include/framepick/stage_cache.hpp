// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace framepick::ingest {

struct StageCacheEntry {
    std::string stage;
    std::uint64_t digest = 0;
    std::filesystem::path payload_path;
    std::string created_at;
};

// One entry per stage, stored as "<dir>/<stage>.stage": a JSON header line
// (stage, digest, payload size and hash, created_at) followed by the payload.
// Replacement is write-temp-then-rename, so an interrupted put leaves the
// previous entry readable.
class StageCache {
public:
    explicit StageCache(std::filesystem::path dir);

    // Payload iff an entry for `stage` exists with a matching digest and an
    // intact payload. Corruption yields nullopt and a warning.
    [[nodiscard]] std::optional<std::string> get(const std::string& stage, std::uint64_t digest,
                                                 std::vector<std::string>* warnings = nullptr) const;
    void put(const std::string& stage, std::uint64_t digest, const std::string& payload);
    [[nodiscard]] std::optional<StageCacheEntry> entry(const std::string& stage) const;

    [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }

    // Fault-injection seam: runs after the temp file is durable, before the
    // rename that publishes it.
    std::function<void(const std::filesystem::path&)> before_commit;

private:
    std::filesystem::path path_for(const std::string& stage) const;
    std::mutex& lock_for(const std::string& stage);

    std::filesystem::path dir_;
    std::mutex locks_guard_;
    std::map<std::string, std::mutex> locks_;
};

}  // namespace framepick::ingest
