// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "framepick/core.hpp"
#include "framepick/image.hpp"

namespace framepick::cropping {

struct LetterboxConfig {
    int sample_size = 200;
    double nonblack_fraction = 0.30;
    int black_level = 16;
    std::uint64_t seed = 0x1e77e7b0ULL;
};

struct LetterboxEstimate {
    int top_rows = 0;
    int bottom_rows = 0;
    int sample_size = 0;
    std::vector<int> sampled_frames;  // indices into the frame sequence
    std::vector<int> top_samples;     // per usable sample
    std::vector<int> bottom_samples;
    bool all_black = false;
};

// Bars of one frame: rows above the first (and below the last) row in which
// at least `nonblack_fraction` of pixels have luma above `black_level`.
// nullopt for an entirely black frame.
[[nodiscard]] std::optional<std::pair<int, int>> frame_letterbox(const Image& img, const LetterboxConfig& cfg);

// Indices of min(sample_size, count) frames drawn without replacement,
// ascending. Deterministic for a given seed.
[[nodiscard]] std::vector<int> sample_frames(int count, int sample_size, std::uint64_t seed);

// Median (lower) of per-frame bars over the sample. Black frames carry no
// evidence and are skipped; if every sample is black the estimate is (0,0)
// with `all_black` set.
[[nodiscard]] LetterboxEstimate detect_letterbox(int frame_count, const std::function<Image(int)>& load_frame,
                                                 const LetterboxConfig& cfg = {});
[[nodiscard]] LetterboxEstimate detect_letterbox(std::span<const Image> frames, const LetterboxConfig& cfg = {});

enum class RejectReason { bisects_face, small_face_emphasis, off_center_single_face, area_too_small };
std::string_view to_string(RejectReason r);
RejectReason parse_reject_reason(std::string_view s);

struct CropCandidate {
    Rect rect;
    AspectTag aspect;
    double score = 0.0;
    bool face_centered = false;
    std::optional<RejectReason> rejected;
};

struct CropGridConfig {
    int grid = 12;
    double min_area_ratio = 0.5;
};

// Largest crop of the tag's aspect that fits `frame`, centred.
[[nodiscard]] Rect max_aspect_crop(Size frame, const AspectTag& tag);

// Anchor pairs on a (grid+1) x (grid+1) lattice. Width-driven candidates take
// two column anchors and a row anchor for the top edge; height-driven ones
// take two row anchors and a column anchor for the left edge. Candidates below
// `min_area_ratio` of the maximal crop are returned marked area-too-small.
// The "original" tag yields only the full frame. Sorted by (y, x, w).
[[nodiscard]] std::vector<CropCandidate> generate_crop_candidates(Size frame, const AspectTag& tag,
                                                                  const CropGridConfig& cfg = {});

struct CropFilterConfig {
    double small_face_ratio = 1.5;
    double single_face_band = 0.40;  // 2:3 crops: solitary face centre must sit in this central band
    double centered_band = 0.20;
};

// Applies the face rules to candidates not already rejected. Rule order:
// bisects-face, small-face-emphasis, off-center-single-face.
void filter_crops(std::vector<CropCandidate>& candidates, std::span<const Rect> faces,
                  const CropFilterConfig& cfg = {});

using CropScorer = std::function<double(const Rect&)>;

// Saliency mass in the crop minus `border_penalty` times the mass in its
// inner border band (`border_fraction` of each side), over the total mass.
class SaliencyCropScorer {
public:
    explicit SaliencyCropScorer(const Grid& saliency, double border_fraction = 0.05, double border_penalty = 0.1);
    [[nodiscard]] double operator()(const Rect& r) const;
    [[nodiscard]] double mass(const Rect& r) const;
    [[nodiscard]] double total() const { return total_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> integral_;  // (w+1) x (h+1)
    double total_ = 0.0;
    double border_fraction_;
    double border_penalty_;
};

struct RankedCrops {
    std::vector<CropCandidate> ranked;          // survivors, best first
    std::optional<CropCandidate> face_centered; // best face-centred survivor
    bool fallback = false;                       // no survivor; ranked holds the least-rejected one
    std::vector<std::string> warnings;
};

// Scores survivors; ties go to the larger area, then the top-most, left-most
// rect. With no survivors the earliest candidate with the mildest rejection
// reason is returned alone, reason intact.
[[nodiscard]] RankedCrops rank_crops(std::span<const CropCandidate> candidates, const CropScorer& scorer);

}  // namespace framepick::cropping
