// SPDX-License-Identifier: Apache-2.0
#include "framepick/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "framepick/image.hpp"

namespace framepick::scoring {

double aesthetic_score(std::span<const float> image, std::span<const float> good, std::span<const float> bad,
                       double tau) {
    if (!std::isfinite(tau)) throw ConfigError("aesthetic temperature must be finite");
    const double sg = cosine_similarity(image, good);
    const double sb = cosine_similarity(image, bad);
    // exp(t sg) / (exp(t sg) + exp(t sb)) written as a logistic for stability.
    return 1.0 / (1.0 + std::exp(tau * (sb - sg)));
}

std::vector<double> semantic_scores(std::span<const float> embedding, std::span<const Keyword> keywords) {
    std::vector<double> out;
    out.reserve(keywords.size());
    for (const auto& k : keywords) out.push_back(cosine_similarity(embedding, std::span<const float>(k.embedding)));
    return out;
}

double aggregate_semantic(std::span<const double> row, std::span<const int> selected) {
    if (selected.empty()) throw ConfigError("semantic aggregation needs at least one keyword");
    double sum = 0.0;
    for (int i : selected) {
        if (i < 0 || std::size_t(i) >= row.size()) throw ConfigError("keyword index out of range");
        sum += row[std::size_t(i)];
    }
    return sum / double(selected.size());
}

double logo_score(const Grid& prior, const Grid& saliency, std::span<const Rect> faces) {
    if (saliency.width <= 0 || saliency.height <= 0) throw DomainError("logo_score: empty saliency grid");
    const Grid p = (prior.width == saliency.width && prior.height == saliency.height)
                       ? prior
                       : resample_nearest(prior, saliency.width, saliency.height);
    double prior_mass = 0.0;
    double kept = 0.0;
    for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x) {
            const double pv = p.at(x, y);
            prior_mass += pv;
            const Point c{x + 0.5, y + 0.5};
            if (std::any_of(faces.begin(), faces.end(), [&](const Rect& f) { return f.contains(c); })) continue;
            kept += std::max(0.0, pv - saliency.at(x, y));
        }
    if (!(prior_mass > 0.0)) throw ConfigError("logo prior has zero mass over the crop");
    return kept / prior_mass;
}

std::optional<double> on_face_focus(const Grid& saliency, std::span<const Rect> faces) {
    if (faces.empty()) return std::nullopt;
    double total = 0.0;
    double inside = 0.0;
    for (int y = 0; y < saliency.height; ++y)
        for (int x = 0; x < saliency.width; ++x) {
            const double v = saliency.at(x, y);
            total += v;
            const Point c{x + 0.5, y + 0.5};
            if (std::any_of(faces.begin(), faces.end(), [&](const Rect& f) { return f.contains(c); })) inside += v;
        }
    if (!(total > 0.0)) return std::nullopt;
    return std::clamp(inside / total, 0.0, 1.0);
}

double face_position_score(Point center, Size frame, const FacePositionTable& table) {
    if (frame.width <= 0 || frame.height <= 0) throw DomainError("face_position_score: empty frame");
    const double fx = center.x / frame.width;
    const double fy = center.y / frame.height;
    if (fx < table.column_lo || fx > table.column_hi) return table.side;
    int row = 0;
    while (row < 5 && fy * 6.0 > row + 1) ++row;
    return table.rows[std::size_t(row)];
}

std::string_view to_string(FaceAggregation a) { return a == FaceAggregation::max ? "max" : "mean"; }

FaceAggregation parse_face_aggregation(std::string_view s) {
    if (s == "max") return FaceAggregation::max;
    if (s == "mean") return FaceAggregation::mean;
    throw ParseError("face aggregation must be 'max' or 'mean', got '" + std::string(s) + "'");
}

double aggregate_faces(std::span<const double> per_face, FaceAggregation mode) {
    if (per_face.empty()) throw DomainError("aggregate_faces: no faces");
    if (mode == FaceAggregation::max) return *std::max_element(per_face.begin(), per_face.end());
    return std::accumulate(per_face.begin(), per_face.end(), 0.0) / double(per_face.size());
}

std::vector<double> normalize_column(std::span<const double> raw) {
    std::vector<double> out(raw.size(), 0.5);
    if (raw.empty()) return out;
    const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
    const double range = *hi - *lo;
    if (!(range > 0.0)) return out;
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = std::clamp((raw[i] - *lo) / range, 0.0, 1.0);
    return out;
}

std::vector<std::optional<double>> normalize_column(std::span<const std::optional<double>> raw) {
    std::vector<double> present;
    for (const auto& v : raw)
        if (v) present.push_back(*v);
    const auto scaled = normalize_column(std::span<const double>(present));
    std::vector<std::optional<double>> out(raw.size());
    std::size_t j = 0;
    for (std::size_t i = 0; i < raw.size(); ++i)
        if (raw[i]) out[i] = scaled[j++];
    return out;
}

void WeightConfig::validate() const {
    const double all[] = {aesthetic, semantic, logo, face_position, on_face_focus};
    for (double w : all)
        if (!std::isfinite(w) || w < 0.0) throw ConfigError("weights must be finite and >= 0");
    if (std::all_of(std::begin(all), std::end(all), [](double w) { return w == 0.0; }))
        throw ConfigError("at least one weight must be > 0");
}

std::optional<double> try_final_score(const ScoreVector& s, const WeightConfig& w) {
    double num = w.aesthetic * s.aesthetic + w.logo * s.logo;
    double den = w.aesthetic + w.logo;
    auto add = [&](const std::optional<double>& v, double weight) {
        if (!v) return;
        num += weight * *v;
        den += weight;
    };
    add(s.semantic, w.semantic);
    add(s.face_position, w.face_position);
    add(s.on_face_focus, w.on_face_focus);
    if (!(den > 0.0)) return std::nullopt;
    return std::clamp(num / den, 0.0, 1.0);
}

double final_score(const ScoreVector& s, const WeightConfig& w) {
    const auto v = try_final_score(s, w);
    if (!v) throw ConfigError("all applicable weights are zero");
    return *v;
}

}  // namespace framepick::scoring
