// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "framepick/ingest.hpp"

namespace framepick {

enum class IssueKind { missing_artifact, dangling_reference, dimension_mismatch, duplicate_id, invalid_value };

struct ValidationIssue {
    IssueKind kind;
    std::string item;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    [[nodiscard]] bool usable() const { return issues.empty(); }
    [[nodiscard]] nlohmann::json to_json() const;
};

std::string_view to_string(IssueKind k);

// Cross-checks manifest, frame index and every loaded artifact. Never throws
// for per-item problems; each becomes one issue.
[[nodiscard]] ValidationReport validate_dataset(const VideoManifest& manifest, const ingest::ArtifactIndex& artifacts);

}  // namespace framepick
