// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace framepick {

[[nodiscard]] std::string read_file(const std::filesystem::path& path);

// Writes to "<path>.tmp.<pid>", fsyncs, then renames over `path`. Readers see
// either the old or the new content, never a mix. `before_rename` is a
// test seam invoked once the temp file is durable.
void atomic_write_file(const std::filesystem::path& path, std::string_view bytes,
                       const std::function<void(const std::filesystem::path&)>& before_rename = {});

// Appends bytes and fsyncs before returning.
void durable_append(const std::filesystem::path& path, std::string_view bytes);

// ISO-8601 UTC timestamp with millisecond precision.
[[nodiscard]] std::string utc_timestamp();

}  // namespace framepick
