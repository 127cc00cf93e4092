// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "framepick/cropper.hpp"
#include "framepick/grouping.hpp"
#include "framepick/keyframe.hpp"
#include "framepick/scoring.hpp"
#include "framepick/selection.hpp"

namespace framepick {

struct DownsampleConfig {
    int working_edge = 336;  // shortest edge after letterbox removal; never upscaled
    keyframe::QualityThresholds quality;
    double uniformity_top_fraction = 0.05;
    keyframe::ShotDetectorConfig shots;
    keyframe::SubshotConfig subshots;
};

struct CropConfig {
    cropping::CropGridConfig grid;
    cropping::CropFilterConfig filter;
    double border_fraction = 0.05;
    double border_penalty = 0.1;
};

struct FaceConfig {
    double expand_factor = 1.2;
    double ear_threshold = 0.2;
    grouping::FaceClusterConfig cluster;
};

struct ScoringConfig {
    double temperature = 1.0;
    scoring::FacePositionTable face_position;
    int logo_grid_max = 256;  // longest side of the grid the logo score is evaluated on
};

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string embedding_endpoint;  // POST {text} -> {embedding}; empty disables
    int histogram_bins = 20;
};

struct KeywordConfig {
    std::string endpoint;
    int max_keywords = 10;
    int max_tokens = 256;
    int retries = 3;
    double timeout_s = 10.0;
};

struct EngineConfig {
    int workers = 1;
    std::vector<AspectTag> aspects{parse_aspect("original"), parse_aspect("16:9"), parse_aspect("2:3")};
    DownsampleConfig downsample;
    cropping::LetterboxConfig letterbox;
    grouping::GroupingConfig group;
    CropConfig crop;
    FaceConfig faces;
    ScoringConfig scoring;
    scoring::WeightConfig weights;
    selection::PresetConfig presets;  // `weights` mirrors the top-level weights
    selection::MatchThresholds reference;
    KeywordConfig keywords;
    ServiceConfig service;

    // Throws ConfigError naming the offending key.
    void validate() const;
};

[[nodiscard]] nlohmann::json to_json(const EngineConfig& cfg);
// Missing keys keep their defaults; unknown keys are a ConfigError.
[[nodiscard]] EngineConfig config_from_json(const nlohmann::json& j);
[[nodiscard]] EngineConfig load_config(const std::filesystem::path& path);

}  // namespace framepick
