// SPDX-License-Identifier: Apache-2.0
#include "framepick/keyframe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace framepick::keyframe {

namespace {

constexpr double kR = 0.2126, kG = 0.7152, kB = 0.0722;

inline double gray_at(const Image& img, int x, int y) {
    const auto* p = img.px(x, y);
    return kR * p[0] + kG * p[1] + kB * p[2];
}

void require_pixels(const Image& img, const char* what) {
    if (img.empty() || img.rgb.size() != img.pixel_count() * 3)
        throw DomainError(std::string(what) + ": empty image");
}

double squared_distance(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = double(a[i]) - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

double luminance(const Image& img) {
    require_pixels(img, "luminance");
    double sum = 0.0;
    for (std::size_t i = 0; i < img.pixel_count(); ++i)
        sum += kR * img.rgb[i * 3] + kG * img.rgb[i * 3 + 1] + kB * img.rgb[i * 3 + 2];
    return sum / double(img.pixel_count());
}

double sharpness(const Image& img) {
    require_pixels(img, "sharpness");
    const int w = img.width, h = img.height;
    std::vector<double> g(img.pixel_count());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) g[std::size_t(y) * w + x] = gray_at(img, x, y);
    double sum = 0.0;
    for (int y = 0; y < h; ++y) {
        const int yu = std::max(0, y - 1), yd = std::min(h - 1, y + 1);
        for (int x = 0; x < w; ++x) {
            const int xl = std::max(0, x - 1), xr = std::min(w - 1, x + 1);
            const double dx = (g[std::size_t(y) * w + xr] - g[std::size_t(y) * w + xl]) / 2.0;
            const double dy = (g[std::size_t(yd) * w + x] - g[std::size_t(yu) * w + x]) / 2.0;
            sum += std::sqrt(dx * dx + dy * dy);
        }
    }
    return sum / double(img.pixel_count());
}

double uniformity(const Image& img, double top_fraction) {
    require_pixels(img, "uniformity");
    std::vector<std::size_t> hist(256, 0);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            ++hist[std::size_t(std::clamp<long>(std::lround(gray_at(img, x, y)), 0, 255))];
    std::sort(hist.begin(), hist.end(), std::greater<>());
    const auto bins = std::size_t(std::max(1.0, std::ceil(top_fraction * 256.0 - 1e-9)));
    std::size_t covered = 0;
    for (std::size_t i = 0; i < std::min<std::size_t>(bins, 256); ++i) covered += hist[i];
    return double(covered) / double(img.pixel_count());
}

double stillness(const Image& img, const Image* previous) {
    require_pixels(img, "stillness");
    if (previous == nullptr) return 1.0;
    if (previous->width != img.width || previous->height != img.height)
        throw DomainError("stillness: frame size changed between consecutive frames");
    double ssd = 0.0;
    for (std::size_t i = 0; i < img.rgb.size(); ++i) {
        const double d = double(img.rgb[i]) - previous->rgb[i];
        ssd += d * d;
    }
    return 1.0 / (1.0 + ssd / double(img.pixel_count()));
}

FrameMetrics compute_frame_metrics(const Image& img, const Image* previous) {
    FrameMetrics m;
    m.luminance = luminance(img);
    m.sharpness = sharpness(img);
    m.uniformity = uniformity(img);
    m.stillness = stillness(img, previous);
    return m;
}

void QualityThresholds::validate() const {
    if (!(min_luminance >= 0.0 && min_luminance <= 255.0))
        throw ConfigError("min_luminance must lie in [0, 255]");
    if (!(min_sharpness >= 0.0) || !std::isfinite(min_sharpness))
        throw ConfigError("min_sharpness must be a finite value >= 0");
    if (!(max_uniformity >= 0.0 && max_uniformity <= 1.0))
        throw ConfigError("max_uniformity must lie in [0, 1]");
}

bool passes_quality(const FrameMetrics& m, const QualityThresholds& t) {
    return m.luminance >= t.min_luminance && m.sharpness >= t.min_sharpness && m.uniformity <= t.max_uniformity;
}

std::vector<int> filter_low_quality(std::span<const MeasuredFrame> frames, const QualityThresholds& thresholds) {
    thresholds.validate();
    std::vector<int> kept;
    for (const auto& f : frames)
        if (passes_quality(f.metrics, thresholds)) kept.push_back(f.frame_id);
    return kept;
}

std::vector<float> rgb_histogram(const Image& img, int bins_per_channel) {
    require_pixels(img, "rgb_histogram");
    const int b = bins_per_channel;
    std::vector<double> acc(std::size_t(b) * b * b, 0.0);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        const int r = img.rgb[i * 3] * b / 256, g = img.rgb[i * 3 + 1] * b / 256, bl = img.rgb[i * 3 + 2] * b / 256;
        acc[std::size_t((r * b + g) * b + bl)] += 1.0;
    }
    std::vector<float> out(acc.size());
    const double n = double(img.pixel_count());
    for (std::size_t i = 0; i < acc.size(); ++i) out[i] = float(acc[i] / n);
    return out;
}

std::vector<float> hsv_histogram(const Image& img) {
    require_pixels(img, "hsv_histogram");
    constexpr int kH = 8, kS = 4, kV = 4;
    std::vector<double> acc(kH * kS * kV, 0.0);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        const double r = img.rgb[i * 3] / 255.0, g = img.rgb[i * 3 + 1] / 255.0, b = img.rgb[i * 3 + 2] / 255.0;
        const double mx = std::max({r, g, b}), mn = std::min({r, g, b}), c = mx - mn;
        double hue = 0.0;
        if (c > 0.0) {
            if (mx == r)
                hue = std::fmod((g - b) / c + 6.0, 6.0);
            else if (mx == g)
                hue = (b - r) / c + 2.0;
            else
                hue = (r - g) / c + 4.0;
        }
        const double sat = mx > 0.0 ? c / mx : 0.0;
        const int hb = std::min(kH - 1, int(hue / 6.0 * kH));
        const int sb = std::min(kS - 1, int(sat * kS));
        const int vb = std::min(kV - 1, int(mx * kV));
        acc[std::size_t((hb * kS + sb) * kV + vb)] += 1.0;
    }
    std::vector<float> out(acc.size());
    const double n = double(img.pixel_count());
    for (std::size_t i = 0; i < acc.size(); ++i) out[i] = float(acc[i] / n);
    return out;
}

double histogram_distance(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw DomainError("histogram_distance: size mismatch");
    double inter = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) inter += std::min(a[i], b[i]);
    return std::clamp(1.0 - inter, 0.0, 1.0);
}

ShotDetection detect_shots(std::span<const std::vector<float>> histograms, std::span<const int> frame_ids,
                           const ShotDetectorConfig& cfg) {
    if (histograms.size() != frame_ids.size()) throw DomainError("detect_shots: histogram/frame count mismatch");
    ShotDetection out;
    const int n = int(histograms.size());
    out.transition.assign(std::size_t(n), false);
    if (n == 0) return out;

    std::vector<double> dist(std::size_t(n), 0.0);
    for (int i = 1; i < n; ++i) dist[std::size_t(i)] = histogram_distance(histograms[std::size_t(i - 1)], histograms[std::size_t(i)]);

    std::vector<int> starts{0};
    std::vector<double> confidence{0.0};
    for (int i = 1; i < n; ++i) {
        const int lo = std::max(1, i - cfg.window);
        double mean = 0.0, var = 0.0;
        const int count = i - lo;
        if (count > 0) {
            for (int j = lo; j < i; ++j) mean += dist[std::size_t(j)];
            mean /= count;
            for (int j = lo; j < i; ++j) var += (dist[std::size_t(j)] - mean) * (dist[std::size_t(j)] - mean);
            var /= count;
        }
        const double d = dist[std::size_t(i)];
        const bool cut = d > cfg.min_distance && d > mean + cfg.k_sigma * std::sqrt(var) &&
                         i - starts.back() >= cfg.min_shot_len;
        if (cut) {
            starts.push_back(i);
            confidence.push_back(d);
            for (int t = i - cfg.transition_radius; t <= i + cfg.transition_radius - 1; ++t)
                if (t >= 0 && t < n) out.transition[std::size_t(t)] = true;
        }
    }
    for (std::size_t s = 0; s < starts.size(); ++s) {
        Shot shot;
        shot.shot_id = int(s);
        shot.first_index = starts[s];
        shot.last_index = s + 1 < starts.size() ? starts[s + 1] - 1 : n - 1;
        shot.first_id = frame_ids[std::size_t(shot.first_index)];
        shot.last_id = frame_ids[std::size_t(shot.last_index)];
        shot.boundary_confidence = confidence[s];
        out.shots.push_back(shot);
    }
    return out;
}

KMeansResult kmeans(std::span<const std::vector<float>> points, int k, int max_iterations, std::uint64_t seed) {
    KMeansResult res;
    const int n = int(points.size());
    if (n == 0) return res;
    k = std::clamp(k, 1, n);
    const std::size_t dim = points[0].size();

    // Farthest-point seeding from a seeded first pick.
    std::mt19937_64 rng(seed);
    std::vector<int> chosen{int(rng() % std::uint64_t(n))};
    std::vector<double> nearest(std::size_t(n), std::numeric_limits<double>::infinity());
    while (int(chosen.size()) < k) {
        const auto& last = points[std::size_t(chosen.back())];
        int best = -1;
        double best_d = -1.0;
        for (int i = 0; i < n; ++i) {
            nearest[std::size_t(i)] = std::min(nearest[std::size_t(i)], squared_distance(points[std::size_t(i)], last));
            if (nearest[std::size_t(i)] > best_d) {
                best_d = nearest[std::size_t(i)];
                best = i;
            }
        }
        chosen.push_back(best);
    }
    std::vector<std::vector<float>> centers;
    for (int c : chosen) centers.push_back(points[std::size_t(c)]);

    res.labels.assign(std::size_t(n), -1);
    for (int it = 0; it < max_iterations; ++it) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double d = squared_distance(points[std::size_t(i)], centers[std::size_t(c)]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (res.labels[std::size_t(i)] != best) {
                res.labels[std::size_t(i)] = best;
                changed = true;
            }
        }
        res.iterations = it + 1;
        if (!changed) {
            res.converged = true;
            break;
        }
        std::vector<std::vector<double>> sums(std::size_t(k), std::vector<double>(dim, 0.0));
        std::vector<int> counts(std::size_t(k), 0);
        for (int i = 0; i < n; ++i) {
            const int l = res.labels[std::size_t(i)];
            ++counts[std::size_t(l)];
            for (std::size_t d = 0; d < dim; ++d) sums[std::size_t(l)][d] += points[std::size_t(i)][d];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[std::size_t(c)] == 0) continue;  // empty cluster keeps its centre
            for (std::size_t d = 0; d < dim; ++d)
                centers[std::size_t(c)][d] = float(sums[std::size_t(c)][d] / counts[std::size_t(c)]);
        }
    }
    return res;
}

std::vector<Subshot> segment_subshots(const Shot& shot, std::span<const ShotFrame> frames, const SubshotConfig& cfg,
                                      int first_subshot_id, std::vector<std::string>* warnings) {
    if (frames.empty()) throw DomainError("segment_subshots: shot " + std::to_string(shot.shot_id) + " has no frames");
    if (cfg.target_len < 1) throw ConfigError("subshot target length must be >= 1");
    const int n = int(frames.size());
    const int k = std::max(1, (n + cfg.target_len - 1) / cfg.target_len);

    std::vector<std::vector<float>> feats;
    feats.reserve(frames.size());
    for (const auto& f : frames) feats.push_back(f.features);
    const KMeansResult km = kmeans(feats, k, cfg.max_iterations, cfg.seed ^ std::uint64_t(shot.shot_id));
    if (!km.converged && warnings)
        warnings->push_back("k-means did not converge for shot " + std::to_string(shot.shot_id) + " after " +
                            std::to_string(km.iterations) + " iterations; keeping current assignment");

    std::vector<Subshot> out;
    int run_start = 0;
    for (int i = 1; i <= n; ++i) {
        if (i < n && km.labels[std::size_t(i)] == km.labels[std::size_t(run_start)]) continue;
        Subshot s;
        s.subshot_id = first_subshot_id + int(out.size());
        s.shot_id = shot.shot_id;
        bool any_clean = false;
        for (int j = run_start; j < i; ++j) {
            s.members.push_back(frames[std::size_t(j)].frame_id);
            any_clean = any_clean || !frames[std::size_t(j)].transition;
        }
        int best = -1;
        for (int j = run_start; j < i; ++j) {
            const auto& f = frames[std::size_t(j)];
            if (any_clean && f.transition) continue;
            if (best < 0 || f.stillness > frames[std::size_t(best)].stillness) best = j;
        }
        s.keyframe = frames[std::size_t(best)].frame_id;
        if (!any_clean) s.keyframe = -1;
        out.push_back(std::move(s));
        run_start = i;
    }
    // A run made only of transition frames yields no keyframe, unless that
    // would leave the whole shot without one.
    const bool shot_has_keyframe =
        std::any_of(out.begin(), out.end(), [](const Subshot& s) { return s.keyframe >= 0; });
    if (!shot_has_keyframe) {
        for (auto& s : out) {
            int best = -1;
            for (const auto& f : frames)
                if (std::find(s.members.begin(), s.members.end(), f.frame_id) != s.members.end() &&
                    (best < 0 || f.stillness > frames[std::size_t(best)].stillness))
                    best = int(&f - frames.data());
            s.keyframe = frames[std::size_t(best)].frame_id;
        }
    }
    return out;
}

}  // namespace framepick::keyframe
