// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace framepick {

// Error taxonomy shared by every module. Callers catch the specific type they
// can act on; the CLI and service map the rest to exit codes / HTTP statuses.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DomainError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct ParseError : Error {
    using Error::Error;
};
struct FormatError : Error {
    using Error::Error;
};
struct LengthError : Error {
    using Error::Error;
};
struct ValidationError : Error {
    using Error::Error;
};
struct IngestError : Error {
    using Error::Error;
};
struct ArtifactMissingError : Error {
    ArtifactMissingError(const std::string& what, std::vector<std::string> items)
        : Error(what), missing(std::move(items)) {}
    std::vector<std::string> missing;
};

inline constexpr int kNoiseCluster = -1;

struct Point {
    double x = 0.0;
    double y = 0.0;
};

// Half-open integer rectangle [x, x+w) x [y, y+h), top-left origin, y down.
struct Rect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    [[nodiscard]] int right() const { return x + w; }
    [[nodiscard]] int bottom() const { return y + h; }
    [[nodiscard]] std::int64_t area() const { return std::int64_t(w) * h; }
    [[nodiscard]] bool empty() const { return w <= 0 || h <= 0; }
    [[nodiscard]] Point center() const { return {x + w / 2.0, y + h / 2.0}; }
    [[nodiscard]] bool contains(const Rect& o) const {
        return o.x >= x && o.y >= y && o.right() <= right() && o.bottom() <= bottom();
    }
    [[nodiscard]] bool contains(Point p) const {
        return p.x >= x && p.x < right() && p.y >= y && p.y < bottom();
    }
    friend bool operator==(const Rect&, const Rect&) = default;
};

[[nodiscard]] Rect intersect(const Rect& a, const Rect& b);
[[nodiscard]] std::int64_t overlap_area(const Rect& a, const Rect& b);
[[nodiscard]] Rect clamp_to(const Rect& r, int width, int height);

struct Size {
    int width = 0;
    int height = 0;
    friend bool operator==(const Size&, const Size&) = default;
};

enum class EmbeddingKind { frame, crop, face, keyword, prompt };

struct EmbeddingVector {
    std::string id;
    EmbeddingKind kind = EmbeddingKind::frame;
    std::vector<float> values;
};

// Σ a_i b_i / (‖a‖ ‖b‖). Throws DomainError on dimension mismatch or a
// zero-norm operand.
[[nodiscard]] double cosine_similarity(std::span<const float> a, std::span<const float> b);
[[nodiscard]] double cosine_similarity(std::span<const double> a, std::span<const double> b);
[[nodiscard]] inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    return cosine_similarity(std::span<const float>(a.values), std::span<const float>(b.values));
}

enum class KeywordSource { metadata, remote_extraction, user_added };

struct Keyword {
    std::string text;
    std::vector<float> embedding;
    KeywordSource source = KeywordSource::metadata;
};

struct VideoManifest {
    std::string video_id;
    double fps = 0.0;
    int frame_count = 0;
    double duration_s = 0.0;
    std::string title;
    std::string summary;
    std::vector<Keyword> keywords;
    int embedding_dim = 0;
    int face_embedding_dim = 0;
};

struct FrameMetrics {
    double luminance = 0.0;
    double sharpness = 0.0;
    double uniformity = 0.0;
    double stillness = 1.0;
};

struct FrameRecord {
    int frame_id = 0;
    double timestamp_s = 0.0;
    int width = 0;
    int height = 0;
    int letterbox_top = 0;
    int letterbox_bottom = 0;
    int shot_id = -1;
    int subshot_id = -1;
    int group_id = -1;
    bool is_keyframe = false;
    FrameMetrics metrics;
};

enum class LandmarkScheme { six_point, nine_point };

// Per eye: six-point scheme stores p1..p6; nine-point stores contour p1..p8
// (clockwise from the left extreme, p1/p5 horizontal extremes) plus pupil.
struct EyeLandmarks {
    LandmarkScheme scheme = LandmarkScheme::six_point;
    std::vector<Point> contour;
    std::optional<Point> pupil;
};

enum class Emotion { neutral, anger, fear, happiness, sadness, surprise, disgust, contempt };

enum class ShotScale { long_shot, medium, close_up, unknown };

struct FaceRecord {
    std::string face_id;
    int frame_id = 0;
    Rect bbox;          // post-letterbox frame coordinates
    Rect expanded_bbox;
    std::optional<EyeLandmarks> left_eye;
    std::optional<EyeLandmarks> right_eye;
    double area_fraction = 0.0;
    std::optional<double> ear_left;
    std::optional<double> ear_right;
    bool eyes_closed = false;
    bool eye_state_unknown = false;
    Emotion emotion = Emotion::neutral;
    int cluster_id = kNoiseCluster;
};

// Row-major real grid; used for saliency maps and the logo prior.
struct Grid {
    int width = 0;
    int height = 0;
    std::vector<double> cells;

    Grid() = default;
    Grid(int w, int h, double fill = 0.0) : width(w), height(h), cells(std::size_t(w) * h, fill) {}
    [[nodiscard]] double at(int x, int y) const { return cells[std::size_t(y) * width + x]; }
    double& at(int x, int y) { return cells[std::size_t(y) * width + x]; }
    [[nodiscard]] double sum() const;
    [[nodiscard]] double max() const;
};

// Aspect ratio tag. width_ratio == 0 marks the uncropped "original" tag.
struct AspectTag {
    std::string name;
    int width_ratio = 0;
    int height_ratio = 0;

    [[nodiscard]] bool is_original() const { return width_ratio == 0; }
    // Path-safe form: "16:9" -> "16x9".
    [[nodiscard]] std::string slug() const;
    friend bool operator==(const AspectTag& a, const AspectTag& b) { return a.name == b.name; }
};

[[nodiscard]] AspectTag parse_aspect(std::string_view name);

std::string_view to_string(EmbeddingKind k);
std::string_view to_string(KeywordSource s);
std::string_view to_string(Emotion e);
std::string_view to_string(ShotScale s);
std::string_view to_string(LandmarkScheme s);
Emotion parse_emotion(std::string_view s);
ShotScale parse_shot_scale(std::string_view s);
KeywordSource parse_keyword_source(std::string_view s);
LandmarkScheme parse_landmark_scheme(std::string_view s);

}  // namespace framepick
