// SPDX-License-Identifier: Apache-2.0
#include "framepick/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace framepick {

Rect intersect(const Rect& a, const Rect& b) {
    const int x0 = std::max(a.x, b.x);
    const int y0 = std::max(a.y, b.y);
    const int x1 = std::min(a.right(), b.right());
    const int y1 = std::min(a.bottom(), b.bottom());
    if (x1 <= x0 || y1 <= y0) return {x0, y0, 0, 0};
    return {x0, y0, x1 - x0, y1 - y0};
}

std::int64_t overlap_area(const Rect& a, const Rect& b) {
    const Rect r = intersect(a, b);
    return r.empty() ? 0 : r.area();
}

Rect clamp_to(const Rect& r, int width, int height) {
    return intersect(r, Rect{0, 0, width, height});
}

namespace {

template <typename T>
double cosine_impl(std::span<const T> a, std::span<const T> b) {
    if (a.size() != b.size())
        throw DomainError("cosine_similarity: dimension mismatch (" + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()) + ")");
    if (a.empty()) throw DomainError("cosine_similarity: empty vector");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i], y = b[i];
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (!(na > 0.0) || !(nb > 0.0)) throw DomainError("cosine_similarity: zero-norm vector");
    if (!std::isfinite(dot) || !std::isfinite(na) || !std::isfinite(nb))
        throw DomainError("cosine_similarity: non-finite component");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

}  // namespace

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
    return cosine_impl(a, b);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    return cosine_impl(a, b);
}

double Grid::sum() const {
    double s = 0.0;
    for (double c : cells) s += c;
    return s;
}

double Grid::max() const {
    if (cells.empty()) return 0.0;
    return *std::max_element(cells.begin(), cells.end());
}

std::string AspectTag::slug() const {
    std::string s = name;
    std::replace(s.begin(), s.end(), ':', 'x');
    return s;
}

AspectTag parse_aspect(std::string_view name) {
    if (name == "original") return {"original", 0, 0};
    auto sep = name.find_first_of(":x");
    if (sep == std::string_view::npos) throw ConfigError("bad aspect tag '" + std::string(name) + "'");
    int w = 0, h = 0;
    auto lhs = name.substr(0, sep);
    auto rhs = name.substr(sep + 1);
    auto r1 = std::from_chars(lhs.data(), lhs.data() + lhs.size(), w);
    auto r2 = std::from_chars(rhs.data(), rhs.data() + rhs.size(), h);
    if (r1.ec != std::errc{} || r2.ec != std::errc{} || r1.ptr != lhs.data() + lhs.size() ||
        r2.ptr != rhs.data() + rhs.size() || w <= 0 || h <= 0)
        throw ConfigError("bad aspect tag '" + std::string(name) + "'");
    return {std::to_string(w) + ":" + std::to_string(h), w, h};
}

std::string_view to_string(EmbeddingKind k) {
    switch (k) {
        case EmbeddingKind::frame: return "frame";
        case EmbeddingKind::crop: return "crop";
        case EmbeddingKind::face: return "face";
        case EmbeddingKind::keyword: return "keyword";
        case EmbeddingKind::prompt: return "prompt";
    }
    return "frame";
}

std::string_view to_string(KeywordSource s) {
    switch (s) {
        case KeywordSource::metadata: return "metadata";
        case KeywordSource::remote_extraction: return "remote-extraction";
        case KeywordSource::user_added: return "user-added";
    }
    return "metadata";
}

namespace {
constexpr std::string_view kEmotionNames[] = {"neutral", "anger",    "fear",    "happiness",
                                              "sadness", "surprise", "disgust", "contempt"};
}

std::string_view to_string(Emotion e) { return kEmotionNames[static_cast<int>(e)]; }

Emotion parse_emotion(std::string_view s) {
    for (int i = 0; i < 8; ++i)
        if (kEmotionNames[i] == s) return static_cast<Emotion>(i);
    throw ParseError("unknown emotion '" + std::string(s) + "'");
}

std::string_view to_string(ShotScale s) {
    switch (s) {
        case ShotScale::long_shot: return "long";
        case ShotScale::medium: return "medium";
        case ShotScale::close_up: return "close-up";
        case ShotScale::unknown: return "unknown";
    }
    return "unknown";
}

ShotScale parse_shot_scale(std::string_view s) {
    if (s == "long" || s == "LS") return ShotScale::long_shot;
    if (s == "medium" || s == "MS") return ShotScale::medium;
    if (s == "close-up" || s == "CU") return ShotScale::close_up;
    if (s == "unknown") return ShotScale::unknown;
    throw ParseError("unknown shot scale '" + std::string(s) + "'");
}

KeywordSource parse_keyword_source(std::string_view s) {
    if (s == "metadata") return KeywordSource::metadata;
    if (s == "remote-extraction") return KeywordSource::remote_extraction;
    if (s == "user-added") return KeywordSource::user_added;
    throw ParseError("unknown keyword source '" + std::string(s) + "'");
}

std::string_view to_string(LandmarkScheme s) {
    return s == LandmarkScheme::six_point ? "six-point" : "nine-point";
}

LandmarkScheme parse_landmark_scheme(std::string_view s) {
    if (s == "six-point") return LandmarkScheme::six_point;
    if (s == "nine-point") return LandmarkScheme::nine_point;
    throw ParseError("unknown landmark scheme '" + std::string(s) + "'");
}

}  // namespace framepick
