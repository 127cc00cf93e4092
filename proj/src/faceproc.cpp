// SPDX-License-Identifier: Apache-2.0
#include "framepick/faceproc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace framepick::faces {

namespace {

double dist(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

Rect expand_bbox(const Rect& bbox, Size frame, double factor) {
    if (!(factor > 0.0)) throw ConfigError("expand_bbox: factor must be > 0");
    const int mx = int(std::lround((factor - 1.0) * bbox.w / 2.0));
    const int my = int(std::lround((factor - 1.0) * bbox.h / 2.0));
    const Rect grown{bbox.x - mx, bbox.y - my, bbox.w + 2 * mx, bbox.h + 2 * my};
    return clamp_to(grown, frame.width, frame.height);
}

double compute_ear(const EyeLandmarks& eye) {
    const auto& p = eye.contour;
    if (eye.scheme == LandmarkScheme::six_point) {
        if (p.size() < 6) throw DomainError("compute_ear: six-point eye needs 6 contour points");
        const double span = dist(p[0], p[3]);
        if (!(span > 0.0)) throw DomainError("compute_ear: zero horizontal span");
        return (dist(p[1], p[5]) + dist(p[2], p[4])) / (2.0 * span);
    }
    if (p.size() < 8) throw DomainError("compute_ear: nine-point eye needs 8 contour points");
    const double span = dist(p[0], p[4]);
    if (!(span > 0.0)) throw DomainError("compute_ear: zero horizontal span");
    return (dist(p[1], p[7]) + dist(p[2], p[6]) + dist(p[3], p[5])) / (3.0 * span);
}

EyeState classify_eyes(const std::optional<EyeLandmarks>& left, const std::optional<EyeLandmarks>& right,
                       double threshold) {
    EyeState s;
    auto ear = [](const std::optional<EyeLandmarks>& eye) -> std::optional<double> {
        if (!eye) return std::nullopt;
        try {
            return compute_ear(*eye);
        } catch (const DomainError&) {
            return std::nullopt;
        }
    };
    s.ear_left = ear(left);
    s.ear_right = ear(right);
    if (!s.ear_left && !s.ear_right) {
        s.unknown = true;
        return s;
    }
    const double lo = std::min(s.ear_left.value_or(std::numeric_limits<double>::infinity()),
                               s.ear_right.value_or(std::numeric_limits<double>::infinity()));
    s.closed = lo < threshold;
    return s;
}

void classify_eyes(FaceRecord& face, double threshold) {
    const EyeState s = classify_eyes(face.left_eye, face.right_eye, threshold);
    face.ear_left = s.ear_left;
    face.ear_right = s.ear_right;
    face.eyes_closed = s.closed;
    face.eye_state_unknown = s.unknown;
}

FaceCenter face_center(const FaceRecord& face) {
    if (face.left_eye && face.right_eye && face.left_eye->pupil && face.right_eye->pupil) {
        const Point a = *face.left_eye->pupil, b = *face.right_eye->pupil;
        return {{(a.x + b.x) / 2.0, (a.y + b.y) / 2.0}, false};
    }
    return {face.bbox.center(), true};
}

std::map<int, ShotScale> smooth_shot_scale(std::span<const LabeledFrame> frames) {
    std::vector<int> unlabeled;
    std::map<int, std::vector<const LabeledFrame*>> by_shot;
    for (const auto& f : frames) {
        if (!f.label) unlabeled.push_back(f.frame_id);
        by_shot[f.shot_id].push_back(&f);
    }
    if (!unlabeled.empty()) {
        std::string ids;
        for (int id : unlabeled) ids += (ids.empty() ? "" : ", ") + std::to_string(id);
        throw ValidationError("smooth_shot_scale: unlabeled frames: " + ids);
    }

    std::map<int, ShotScale> out;
    for (auto& [shot, members] : by_shot) {
        std::stable_sort(members.begin(), members.end(), [](const LabeledFrame* a, const LabeledFrame* b) {
            return a->timestamp_s < b->timestamp_s;
        });
        std::map<ShotScale, int> votes;
        for (const auto* f : members) ++votes[*f->label];
        int top = 0;
        for (const auto& [label, n] : votes) top = std::max(top, n);
        const double mid = (members.front()->timestamp_s + members.back()->timestamp_s) / 2.0;
        const LabeledFrame* pick = nullptr;
        for (const auto* f : members) {
            if (votes[*f->label] != top) continue;
            if (!pick || std::abs(f->timestamp_s - mid) < std::abs(pick->timestamp_s - mid)) pick = f;
        }
        for (const auto* f : members) out[f->frame_id] = *pick->label;
    }
    return out;
}

}  // namespace framepick::faces
