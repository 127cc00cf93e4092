// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "framepick/core.hpp"

namespace framepick::faces {

// Grows each side by round((factor - 1) * extent / 2) about the same centre,
// then clamps to the frame. factor < 1 shrinks.
[[nodiscard]] Rect expand_bbox(const Rect& bbox, Size frame, double factor = 1.2);

// Six-point: (|p2-p6| + |p3-p5|) / (2 |p1-p4|).
// Nine-point: (|p2-p8| + |p3-p7| + |p4-p6|) / (3 |p1-p5|).
// Throws DomainError on a zero horizontal span or a short contour.
[[nodiscard]] double compute_ear(const EyeLandmarks& eye);

struct EyeState {
    std::optional<double> ear_left;
    std::optional<double> ear_right;
    bool closed = false;
    bool unknown = false;  // no usable landmarks; treated as open
};

// Closed when the smaller available EAR is below `threshold`. An eye whose
// landmarks are degenerate counts as missing.
[[nodiscard]] EyeState classify_eyes(const std::optional<EyeLandmarks>& left, const std::optional<EyeLandmarks>& right,
                                     double threshold = 0.2);
// Fills ear_left/ear_right/eyes_closed/eye_state_unknown on the record.
void classify_eyes(FaceRecord& face, double threshold = 0.2);

struct FaceCenter {
    Point point;
    bool fallback = false;  // bbox centre used; pupils unavailable
};

// Midpoint of the two pupils when both are present, else the bbox centre.
[[nodiscard]] FaceCenter face_center(const FaceRecord& face);

// Translates a frame-space point into the coordinate system of `crop`.
[[nodiscard]] inline Point to_crop(Point p, const Rect& crop) { return {p.x - crop.x, p.y - crop.y}; }

struct LabeledFrame {
    int frame_id = 0;
    double timestamp_s = 0.0;
    int shot_id = 0;
    std::optional<ShotScale> label;
};

// Majority label per shot; a tie goes to the tied label held by the frame
// nearest the shot's temporal midpoint (earlier frame on equal distance).
// Throws ValidationError naming any unlabeled frame.
[[nodiscard]] std::map<int, ShotScale> smooth_shot_scale(std::span<const LabeledFrame> frames);

}  // namespace framepick::faces
