// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "framepick/core.hpp"
#include "framepick/image.hpp"

// Downsampling: per-frame quality metrics, low-quality filtering, shot
// boundaries, subshot segmentation and stillness-based keyframe choice.
namespace framepick::keyframe {

// Mean of 0.2126 R + 0.7152 G + 0.0722 B over all pixels.
[[nodiscard]] double luminance(const Image& img);
// Mean gradient magnitude of the grayscale image; central differences,
// clamped at the border.
[[nodiscard]] double sharpness(const Image& img);
// Fraction of pixels in the most populated `top_fraction` of the 256 gray
// bins (bins sorted by count, descending; ceil(top_fraction * 256) bins).
[[nodiscard]] double uniformity(const Image& img, double top_fraction = 0.05);
// 1 / (1 + SSD / pixel_count) over RGB; 1.0 without a previous frame.
[[nodiscard]] double stillness(const Image& img, const Image* previous);

// Expects a letterbox-free 8-bit RGB image. Throws DomainError when empty.
[[nodiscard]] FrameMetrics compute_frame_metrics(const Image& img, const Image* previous);

struct QualityThresholds {
    double min_luminance = 15.0;
    double min_sharpness = 2.0;
    double max_uniformity = 0.98;

    // Throws ConfigError for values outside their metric's range.
    void validate() const;
};

[[nodiscard]] bool passes_quality(const FrameMetrics& m, const QualityThresholds& t);

struct MeasuredFrame {
    int frame_id = 0;
    FrameMetrics metrics;
};

// Frame ids (input order) that survive the darkness/blur/uniformity filter.
[[nodiscard]] std::vector<int> filter_low_quality(std::span<const MeasuredFrame> frames,
                                                  const QualityThresholds& thresholds);

// 16 bins per channel -> 4096-bin RGB histogram, normalized to sum 1.
[[nodiscard]] std::vector<float> rgb_histogram(const Image& img, int bins_per_channel = 16);
// 8 hue x 4 saturation x 4 value bins, normalized to sum 1.
[[nodiscard]] std::vector<float> hsv_histogram(const Image& img);
// 1 - Σ min(a_i, b_i) for normalized histograms.
[[nodiscard]] double histogram_distance(std::span<const float> a, std::span<const float> b);

struct ShotDetectorConfig {
    double k_sigma = 3.0;         // boundary when d > mean + k * stddev of the window
    int window = 12;              // previous distances considered
    double min_distance = 0.25;   // absolute floor on d
    int min_shot_len = 2;
    int transition_radius = 1;    // frames either side of a cut flagged transition
};

struct Shot {
    int shot_id = 0;
    int first_index = 0;  // indices into the kept-frame sequence, inclusive
    int last_index = 0;
    int first_id = 0;
    int last_id = 0;
    double boundary_confidence = 0.0;  // distance at the opening cut (0 for the first shot)

    [[nodiscard]] int length() const { return last_index - first_index + 1; }
};

struct ShotDetection {
    std::vector<Shot> shots;
    std::vector<bool> transition;  // per kept frame
};

// `histograms[i]` belongs to kept frame `frame_ids[i]`, in timestamp order.
[[nodiscard]] ShotDetection detect_shots(std::span<const std::vector<float>> histograms,
                                         std::span<const int> frame_ids, const ShotDetectorConfig& cfg = {});

struct SubshotConfig {
    int target_len = 24;
    int max_iterations = 50;
    std::uint64_t seed = 0x5eed5eedULL;
};

struct ShotFrame {
    int frame_id = 0;
    std::vector<float> features;  // coarse HSV histogram
    double stillness = 1.0;
    bool transition = false;
};

struct Subshot {
    int subshot_id = 0;
    int shot_id = 0;
    std::vector<int> members;
    int keyframe = -1;  // -1 when every member is a transition frame
};

struct KMeansResult {
    std::vector<int> labels;
    int iterations = 0;
    bool converged = false;
};

// Lloyd k-means with seeded farthest-point initialisation. Deterministic.
[[nodiscard]] KMeansResult kmeans(std::span<const std::vector<float>> points, int k, int max_iterations,
                                  std::uint64_t seed);

// Splits one shot's surviving frames (temporal order) into contiguous runs of
// equal k-means labels and picks the stillest non-transition frame of each
// run (earliest on ties). Subshot ids start at `first_subshot_id`.
[[nodiscard]] std::vector<Subshot> segment_subshots(const Shot& shot, std::span<const ShotFrame> frames,
                                                    const SubshotConfig& cfg, int first_subshot_id = 0,
                                                    std::vector<std::string>* warnings = nullptr);

}  // namespace framepick::keyframe
