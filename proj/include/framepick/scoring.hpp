// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "framepick/core.hpp"

namespace framepick::scoring {

// softmax over (cos(img, good), cos(img, bad)) at temperature tau; returns the
// "good" probability.
[[nodiscard]] double aesthetic_score(std::span<const float> image, std::span<const float> good,
                                     std::span<const float> bad, double tau = 1.0);

// Raw cosine of `embedding` against each keyword, in keyword order.
[[nodiscard]] std::vector<double> semantic_scores(std::span<const float> embedding,
                                                  std::span<const Keyword> keywords);
// Mean of the selected entries of a raw-cosine row. Throws ConfigError when
// `selected` is empty.
[[nodiscard]] double aggregate_semantic(std::span<const double> row, std::span<const int> selected);

// Σ max(0, prior - saliency), zeroed inside face boxes, over Σ prior.
// `saliency` is expected peak-normalized; `faces` are in its coordinates.
// The prior is nearest-resampled to the saliency grid when sizes differ.
[[nodiscard]] double logo_score(const Grid& prior, const Grid& saliency, std::span<const Rect> faces);

// Saliency mass inside the union of face boxes over the total mass.
// nullopt with no faces or with a zero-mass map.
[[nodiscard]] std::optional<double> on_face_focus(const Grid& saliency, std::span<const Rect> faces);

// Six horizontal bands from top to bottom inside the central column band;
// a flat weight outside it.
struct FacePositionTable {
    double column_lo = 0.2;
    double column_hi = 0.8;
    std::array<double, 6> rows{0.5, 0.75, 1.0, 0.75, 0.5, 0.25};
    double side = 0.1;
};

[[nodiscard]] double face_position_score(Point center, Size frame, const FacePositionTable& table = {});

enum class FaceAggregation { max, mean };
std::string_view to_string(FaceAggregation a);
FaceAggregation parse_face_aggregation(std::string_view s);

// Throws DomainError on an empty input.
[[nodiscard]] double aggregate_faces(std::span<const double> per_face, FaceAggregation mode = FaceAggregation::max);

// Min-max scaling to [0,1]; a constant column maps to 0.5.
[[nodiscard]] std::vector<double> normalize_column(std::span<const double> raw);
// Same, over the present entries only; absent entries stay absent.
[[nodiscard]] std::vector<std::optional<double>> normalize_column(std::span<const std::optional<double>> raw);

struct ScoreVector {
    double aesthetic = 0.0;
    std::optional<double> semantic;  // absent when no keyword applies
    double logo = 0.0;
    std::optional<double> face_position;
    std::optional<double> on_face_focus;
};

struct WeightConfig {
    double aesthetic = 1.0;
    double semantic = 1.0;
    double logo = 1.0;
    double face_position = 1.0;
    double on_face_focus = 1.0;
    FaceAggregation face_aggregation = FaceAggregation::max;

    // Throws ConfigError on a negative or non-finite weight, or all zero.
    void validate() const;
};

// Weighted mean over the applicable scores. nullopt when every applicable
// weight is zero.
[[nodiscard]] std::optional<double> try_final_score(const ScoreVector& normalized, const WeightConfig& w);
// As above; throws ConfigError instead of returning nullopt.
[[nodiscard]] double final_score(const ScoreVector& normalized, const WeightConfig& w);

}  // namespace framepick::scoring
