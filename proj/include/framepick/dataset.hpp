// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "framepick/core.hpp"
#include "framepick/cropper.hpp"
#include "framepick/grouping.hpp"

namespace framepick {

struct CandidateFace {
    std::string face_id;
    Rect bbox;  // post-letterbox frame coordinates
    bool eyes_closed = false;
    bool eye_state_unknown = false;
    Emotion emotion = Emotion::neutral;
    int cluster_id = kNoiseCluster;
    double position = 0.0;              // face-position weight within the crop
    std::optional<double> focus;        // saliency share of this face within the crop
};

// Raw (pre-normalization) score columns.
struct RawScores {
    double aesthetic = 0.0;
    double logo = 0.0;
    std::vector<double> semantic;  // per dataset keyword, same order
    std::optional<double> position_max;
    std::optional<double> position_mean;
    std::optional<double> focus_max;
    std::optional<double> focus_mean;
};

// Columns min-max normalized over the candidates of one aspect tag. Face
// columns are normalized over the candidates that have faces.
struct NormalizedScores {
    double aesthetic = 0.0;
    double logo = 0.0;
    std::optional<double> position_max;
    std::optional<double> position_mean;
    std::optional<double> focus_max;
    std::optional<double> focus_mean;
};

struct Candidate {
    std::string id;
    int frame_id = 0;
    double timestamp_s = 0.0;
    int shot_id = 0;
    int group_id = 0;
    AspectTag aspect;
    Rect rect;  // post-letterbox frame coordinates
    bool face_centered = false;
    bool alternate = false;  // face-centred alternate of the top crop
    std::optional<cropping::RejectReason> fallback_reason;
    ShotScale shot_scale = ShotScale::unknown;
    bool embedding_fallback = false;  // aesthetic/semantic computed on the frame embedding
    std::vector<CandidateFace> faces;
    RawScores raw;
    NormalizedScores norm;

    [[nodiscard]] bool any_eyes_closed() const;
};

struct FaceClusterInfo {
    int cluster_id = 0;
    int size = 0;  // appearances
    std::vector<std::string> face_ids;
};

struct Dataset {
    std::string video_id;
    std::string title;
    std::string summary;
    double fps = 0.0;
    int frame_count = 0;
    int width = 0;  // post-letterbox frame size
    int height = 0;
    int letterbox_top = 0;
    int letterbox_bottom = 0;
    std::vector<Keyword> keywords;
    std::vector<AspectTag> aspects;
    std::vector<FrameRecord> frames;  // keyframes only
    std::vector<grouping::Group> groups;
    std::vector<FaceClusterInfo> face_clusters;  // largest first
    int face_cluster_k = 0;
    bool face_clusters_need_manual_parameters = false;
    std::vector<grouping::ScorePoint> face_cluster_curve;
    std::vector<Candidate> candidates;
    std::vector<std::string> warnings;
    std::string config_digest;

    // Built by `reindex()`.
    std::map<std::string, std::size_t> by_id;
    std::map<int, std::vector<std::size_t>> by_group;

    void reindex();
    [[nodiscard]] const Candidate* find(const std::string& candidate_id) const;
    [[nodiscard]] int keyword_index(const std::string& text) const;  // -1 when absent
};

// Recomputes every normalized column per aspect tag.
void normalize_scores(Dataset& ds);

[[nodiscard]] nlohmann::json to_json(const Candidate& c);
[[nodiscard]] nlohmann::json to_json(const Dataset& ds);
[[nodiscard]] Dataset dataset_from_json(const nlohmann::json& j);

}  // namespace framepick
