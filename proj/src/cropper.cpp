// SPDX-License-Identifier: Apache-2.0
#include "framepick/cropper.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <tuple>

namespace framepick::cropping {

namespace {

bool row_is_content(const Image& img, int y, const LetterboxConfig& cfg) {
    int bright = 0;
    for (int x = 0; x < img.width; ++x) {
        const auto* p = img.px(x, y);
        const double luma = 0.2126 * p[0] + 0.7152 * p[1] + 0.0722 * p[2];
        if (luma > cfg.black_level) ++bright;
    }
    return bright >= cfg.nonblack_fraction * img.width;
}

int lower_median(std::vector<int> v) {
    std::sort(v.begin(), v.end());
    return v[(v.size() - 1) / 2];
}

}  // namespace

std::optional<std::pair<int, int>> frame_letterbox(const Image& img, const LetterboxConfig& cfg) {
    if (img.width <= 0 || img.height <= 0) throw DomainError("frame_letterbox: empty image");
    int top = 0;
    while (top < img.height && !row_is_content(img, top, cfg)) ++top;
    if (top == img.height) return std::nullopt;
    int last = img.height - 1;
    while (last > top && !row_is_content(img, last, cfg)) --last;
    return std::pair{top, img.height - 1 - last};
}

std::vector<int> sample_frames(int count, int sample_size, std::uint64_t seed) {
    std::vector<int> idx(std::size_t(std::max(0, count)));
    std::iota(idx.begin(), idx.end(), 0);
    const int take = std::clamp(sample_size, 0, count);
    std::mt19937_64 rng(seed);
    for (int i = 0; i < take; ++i) {
        const auto j = i + int(rng() % std::uint64_t(count - i));
        std::swap(idx[std::size_t(i)], idx[std::size_t(j)]);
    }
    idx.resize(std::size_t(take));
    std::sort(idx.begin(), idx.end());
    return idx;
}

LetterboxEstimate detect_letterbox(int frame_count, const std::function<Image(int)>& load_frame,
                                   const LetterboxConfig& cfg) {
    if (frame_count < 1) throw DomainError("detect_letterbox: no frames");
    if (cfg.sample_size < 1) throw ConfigError("letterbox sample_size must be >= 1");
    if (!(cfg.nonblack_fraction > 0.0 && cfg.nonblack_fraction <= 1.0))
        throw ConfigError("letterbox nonblack_fraction must lie in (0, 1]");
    if (cfg.black_level < 0 || cfg.black_level > 254) throw ConfigError("letterbox black_level must lie in [0, 254]");

    LetterboxEstimate est;
    est.sampled_frames = sample_frames(frame_count, cfg.sample_size, cfg.seed);
    est.sample_size = int(est.sampled_frames.size());
    int height = 0;
    for (int index : est.sampled_frames) {
        const Image img = load_frame(index);
        height = img.height;
        if (const auto bars = frame_letterbox(img, cfg)) {
            est.top_samples.push_back(bars->first);
            est.bottom_samples.push_back(bars->second);
        }
    }
    if (est.top_samples.empty()) {
        est.all_black = true;
        return est;
    }
    est.top_rows = lower_median(est.top_samples);
    est.bottom_rows = lower_median(est.bottom_samples);
    // Medians of top and bottom are taken independently; keep one content row.
    if (est.top_rows + est.bottom_rows >= height) {
        est.top_rows = 0;
        est.bottom_rows = 0;
    }
    return est;
}

LetterboxEstimate detect_letterbox(std::span<const Image> frames, const LetterboxConfig& cfg) {
    return detect_letterbox(int(frames.size()), [&](int i) { return frames[std::size_t(i)]; }, cfg);
}

std::string_view to_string(RejectReason r) {
    switch (r) {
        case RejectReason::bisects_face: return "bisects-face";
        case RejectReason::small_face_emphasis: return "small-face-emphasis";
        case RejectReason::off_center_single_face: return "off-center-single-face";
        case RejectReason::area_too_small: return "area-too-small";
    }
    return "unknown";
}

RejectReason parse_reject_reason(std::string_view s) {
    for (auto r : {RejectReason::bisects_face, RejectReason::small_face_emphasis, RejectReason::off_center_single_face,
                   RejectReason::area_too_small})
        if (to_string(r) == s) return r;
    throw ParseError("unknown reject reason: " + std::string(s));
}

Rect max_aspect_crop(Size frame, const AspectTag& tag) {
    if (tag.is_original()) return {0, 0, frame.width, frame.height};
    const std::int64_t W = tag.width_ratio, H = tag.height_ratio;
    int w = 0, h = 0;
    if (std::int64_t(frame.width) * H <= std::int64_t(frame.height) * W) {
        w = frame.width;
        h = std::min(frame.height, int(std::lround(double(w) * H / W)));
    } else {
        h = frame.height;
        w = std::min(frame.width, int(std::lround(double(h) * W / H)));
    }
    return {(frame.width - w) / 2, (frame.height - h) / 2, w, h};
}

std::vector<CropCandidate> generate_crop_candidates(Size frame, const AspectTag& tag, const CropGridConfig& cfg) {
    if (frame.width < 16 || frame.height < 16)
        throw DomainError("generate_crop_candidates: frame smaller than 16 px on a side");
    if (cfg.grid < 1) throw ConfigError("crop grid must be >= 1");
    if (tag.is_original()) return {CropCandidate{{0, 0, frame.width, frame.height}, tag, 0.0, false, std::nullopt}};
    if (tag.width_ratio <= 0 || tag.height_ratio <= 0) throw ConfigError("invalid aspect tag " + tag.name);

    const int G = cfg.grid;
    std::vector<int> xs, ys;
    for (int i = 0; i <= G; ++i) {
        xs.push_back(int(std::lround(double(i) * frame.width / G)));
        ys.push_back(int(std::lround(double(i) * frame.height / G)));
    }
    const double W = tag.width_ratio, H = tag.height_ratio;
    std::set<std::tuple<int, int, int, int>> seen;  // (y, x, w, h)
    for (int i = 0; i <= G; ++i)
        for (int j = i + 1; j <= G; ++j) {
            const int w = xs[std::size_t(j)] - xs[std::size_t(i)];
            const int h = int(std::lround(w * H / W));
            if (h > 0)
                for (int y : ys)
                    if (y + h <= frame.height) seen.emplace(y, xs[std::size_t(i)], w, h);
            const int hh = ys[std::size_t(j)] - ys[std::size_t(i)];
            const int ww = int(std::lround(hh * W / H));
            if (ww > 0)
                for (int x : xs)
                    if (x + ww <= frame.width) seen.emplace(ys[std::size_t(i)], x, ww, hh);
        }

    const double floor_area = cfg.min_area_ratio * double(max_aspect_crop(frame, tag).area());
    std::vector<CropCandidate> out;
    out.reserve(seen.size());
    for (const auto& [y, x, w, h] : seen) {
        CropCandidate c{{x, y, w, h}, tag, 0.0, false, std::nullopt};
        if (double(c.rect.area()) < floor_area) c.rejected = RejectReason::area_too_small;
        out.push_back(std::move(c));
    }
    return out;
}

void filter_crops(std::vector<CropCandidate>& candidates, std::span<const Rect> faces, const CropFilterConfig& cfg) {
    for (auto& c : candidates) {
        const bool is_portrait = c.aspect.width_ratio == 2 && c.aspect.height_ratio == 3;
        std::vector<const Rect*> inside;
        std::vector<const Rect*> outside;
        bool bisects = false;
        for (const Rect& f : faces) {
            const auto ov = overlap_area(c.rect, f);
            if (ov == 0)
                outside.push_back(&f);
            else if (ov >= f.area())
                inside.push_back(&f);
            else
                bisects = true;
        }
        const double mid = c.rect.x + c.rect.w / 2.0;
        c.face_centered = std::any_of(inside.begin(), inside.end(), [&](const Rect* f) {
            return std::abs(f->center().x - mid) <= cfg.centered_band * c.rect.w / 2.0;
        });
        if (c.rejected) continue;
        if (bisects) {
            c.rejected = RejectReason::bisects_face;
            continue;
        }
        const bool emphasis = std::any_of(inside.begin(), inside.end(), [&](const Rect* in) {
            return std::any_of(outside.begin(), outside.end(), [&](const Rect* out) {
                return double(out->area()) >= cfg.small_face_ratio * double(in->area());
            });
        });
        if (emphasis) {
            c.rejected = RejectReason::small_face_emphasis;
            continue;
        }
        if (is_portrait && inside.size() == 1 &&
            std::abs(inside.front()->center().x - mid) > cfg.single_face_band * c.rect.w / 2.0)
            c.rejected = RejectReason::off_center_single_face;
    }
}

SaliencyCropScorer::SaliencyCropScorer(const Grid& saliency, double border_fraction, double border_penalty)
    : width_(saliency.width), height_(saliency.height), border_fraction_(border_fraction),
      border_penalty_(border_penalty) {
    integral_.assign(std::size_t(width_ + 1) * std::size_t(height_ + 1), 0.0);
    const auto stride = std::size_t(width_ + 1);
    for (int y = 0; y < height_; ++y) {
        double row = 0.0;
        for (int x = 0; x < width_; ++x) {
            const double v = saliency.at(x, y);
            if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("saliency cells must be finite and >= 0");
            row += v;
            integral_[std::size_t(y + 1) * stride + std::size_t(x + 1)] =
                integral_[std::size_t(y) * stride + std::size_t(x + 1)] + row;
        }
    }
    total_ = integral_.back();
}

double SaliencyCropScorer::mass(const Rect& r) const {
    const Rect c = clamp_to(r, width_, height_);
    if (c.empty()) return 0.0;
    const auto stride = std::size_t(width_ + 1);
    auto I = [&](int x, int y) { return integral_[std::size_t(y) * stride + std::size_t(x)]; };
    return I(c.right(), c.bottom()) - I(c.x, c.bottom()) - I(c.right(), c.y) + I(c.x, c.y);
}

double SaliencyCropScorer::operator()(const Rect& r) const {
    if (!(total_ > 0.0)) return 0.0;
    const double inside = mass(r);
    const int bx = int(std::lround(border_fraction_ * r.w));
    const int by = int(std::lround(border_fraction_ * r.h));
    const Rect core{r.x + bx, r.y + by, std::max(0, r.w - 2 * bx), std::max(0, r.h - 2 * by)};
    const double border = inside - mass(core);
    return (inside - border_penalty_ * border) / total_;
}

namespace {

int severity(const std::optional<RejectReason>& r) {
    if (!r) return 0;
    switch (*r) {
        case RejectReason::area_too_small: return 1;
        case RejectReason::off_center_single_face: return 2;
        case RejectReason::small_face_emphasis: return 3;
        case RejectReason::bisects_face: return 4;
    }
    return 5;
}

bool better(const CropCandidate& a, const CropCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.rect.area() != b.rect.area()) return a.rect.area() > b.rect.area();
    if (a.rect.y != b.rect.y) return a.rect.y < b.rect.y;
    if (a.rect.x != b.rect.x) return a.rect.x < b.rect.x;
    return a.rect.w < b.rect.w;
}

}  // namespace

RankedCrops rank_crops(std::span<const CropCandidate> candidates, const CropScorer& scorer) {
    RankedCrops out;
    auto score_into = [&](const CropCandidate& c, std::vector<CropCandidate>& dst) {
        CropCandidate s = c;
        try {
            s.score = scorer(c.rect);
        } catch (const std::exception& e) {
            out.warnings.push_back("scorer failed on crop " + std::to_string(c.rect.x) + "," +
                                   std::to_string(c.rect.y) + "," + std::to_string(c.rect.w) + "," +
                                   std::to_string(c.rect.h) + ": " + e.what());
            return;
        }
        if (!std::isfinite(s.score)) {
            out.warnings.push_back("scorer returned a non-finite value; crop dropped");
            return;
        }
        dst.push_back(std::move(s));
    };

    for (const auto& c : candidates)
        if (!c.rejected) score_into(c, out.ranked);
    if (out.ranked.empty()) {
        int mildest = 99;
        for (const auto& c : candidates) mildest = std::min(mildest, severity(c.rejected));
        std::vector<CropCandidate> pool;
        for (const auto& c : candidates)
            if (severity(c.rejected) == mildest) score_into(c, pool);
        if (!pool.empty()) {
            std::stable_sort(pool.begin(), pool.end(), better);
            out.ranked.push_back(pool.front());
            out.fallback = true;
        }
        return out;
    }
    std::stable_sort(out.ranked.begin(), out.ranked.end(), better);
    for (const auto& c : out.ranked)
        if (c.face_centered) {
            out.face_centered = c;
            break;
        }
    return out;
}

}  // namespace framepick::cropping
