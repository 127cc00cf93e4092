// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "framepick/config.hpp"
#include "framepick/dataset.hpp"
#include "framepick/ingest.hpp"

namespace framepick::pipeline {

// Stage names, in execution order.
inline const std::vector<std::string> kStages{"downsample", "group", "crop", "faces", "face-cluster", "score",
                                              "propose"};

enum class StageState { pending, cached, done, failed };
std::string_view to_string(StageState s);

struct StageStatus {
    std::string stage;
    StageState state = StageState::pending;
    std::string digest;
    double seconds = 0.0;
    std::string error;
};

struct PipelineRun {
    std::string video_id;
    std::vector<StageStatus> stages;
    std::string config_digest;
    std::vector<std::string> warnings;
    double seconds = 0.0;

    [[nodiscard]] int cache_hits() const;
    [[nodiscard]] bool ok() const;
    [[nodiscard]] nlohmann::json to_json() const;
};

struct RunOptions {
    std::optional<std::string> until;  // last stage to run (inclusive)
    std::optional<int> workers;        // overrides the config value
};

// Runs the stages in order against the bundle's stage cache. A failing stage
// stops the run and leaves earlier cache entries intact; the error is recorded
// on its status and rethrown.
PipelineRun run_pipeline(const std::filesystem::path& bundle_root, const EngineConfig& cfg,
                         const RunOptions& options = {});

// Output files under <bundle>/cache/out.
struct OutputPaths {
    std::filesystem::path dataset;
    std::filesystem::path proposals;
    std::filesystem::path embeddings;
    std::filesystem::path scores;
};
[[nodiscard]] OutputPaths output_paths(const ingest::BundlePaths& paths);

// Reads the dataset produced by a finished run.
[[nodiscard]] Dataset load_dataset(const std::filesystem::path& bundle_root);

// Tab-separated score table: raw and normalized columns per candidate.
[[nodiscard]] std::string scores_tsv(const Dataset& ds, const scoring::WeightConfig& weights);

// Matches each reference embedding (one row per reference) against the
// keyframes and against the proposed candidates of a finished run. Returns
// per-reference reports plus tier counts and rates for both scopes.
[[nodiscard]] nlohmann::json reference_report(const std::filesystem::path& bundle_root,
                                              const ingest::TensorFile& references,
                                              const selection::MatchThresholds& thresholds);

}  // namespace framepick::pipeline
