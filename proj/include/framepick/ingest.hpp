// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "framepick/core.hpp"
#include "framepick/image.hpp"

namespace framepick::ingest {

// ---------------------------------------------------------------------------
// FPK1 tensor files
//
//   "FPK1" | u32 rows | u32 dim | rows x (u32 len, UTF-8 id) | rows*dim f32
//
// All integers and reals little-endian.
// ---------------------------------------------------------------------------
struct TensorFile {
    int dim = 0;
    std::vector<std::string> row_ids;
    std::vector<float> values;  // row-major

    [[nodiscard]] std::size_t rows() const { return row_ids.size(); }
    [[nodiscard]] std::span<const float> row(std::size_t i) const {
        return {values.data() + i * std::size_t(dim), std::size_t(dim)};
    }
    // Index of a row id, or nullopt.
    [[nodiscard]] std::optional<std::size_t> find(const std::string& id) const;
    void append(const std::string& id, std::span<const float> v);

private:
    mutable std::unordered_map<std::string, std::size_t> index_;
};

[[nodiscard]] std::string encode_tensor(const TensorFile& t);
[[nodiscard]] TensorFile decode_tensor(std::string_view bytes, const std::string& origin = "<memory>");
[[nodiscard]] TensorFile read_tensor_file(const std::filesystem::path& path);
void write_tensor_file(const std::filesystem::path& path, const TensorFile& t);

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

// Parses the manifest document. Keyword embeddings are attached from the
// sidecar tensor named by "keyword_embeddings" (row id == keyword text) when
// present. Throws ParseError (with line/column) or ValidationError.
[[nodiscard]] VideoManifest load_manifest(const std::filesystem::path& path);
[[nodiscard]] VideoManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir,
                                           const std::string& origin = "<memory>");

// ---------------------------------------------------------------------------
// Line-delimited artifact records
// ---------------------------------------------------------------------------
struct FrameEntry {
    int frame_id = 0;
    double timestamp_s = 0.0;
    std::string file;
};

struct RawFace {
    std::string face_id;
    int frame_id = 0;
    Rect bbox;  // original-frame coordinates
    std::optional<Emotion> emotion;
    nlohmann::json passthrough = nlohmann::json::object();
};

struct LandmarkRow {
    std::string face_id;
    int frame_id = 0;
    LandmarkScheme scheme = LandmarkScheme::six_point;
    std::vector<Point> points;
};

struct EmotionRow {
    std::string face_id;
    Emotion emotion = Emotion::neutral;
};

struct ShotScaleRow {
    int frame_id = 0;
    ShotScale label = ShotScale::unknown;
};

// Calls `fn(json, line_no)` for each non-blank line. Parse errors carry the
// file and line number.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const nlohmann::json&, int)>& fn);

[[nodiscard]] std::vector<FrameEntry> read_frames_index(const std::filesystem::path& path);
[[nodiscard]] std::vector<RawFace> read_faces(const std::filesystem::path& path);
[[nodiscard]] std::vector<LandmarkRow> read_landmarks(const std::filesystem::path& path);
[[nodiscard]] std::vector<EmotionRow> read_emotions(const std::filesystem::path& path);
[[nodiscard]] std::vector<ShotScaleRow> read_shot_scales(const std::filesystem::path& path);

// Splits a landmark row into left/right eye sets following the fixed index
// convention (left eye first; six points per eye, or eight contour points
// plus pupil per eye).
void split_eyes(const LandmarkRow& row, EyeLandmarks& left, EyeLandmarks& right);

// ---------------------------------------------------------------------------
// Dataset bundle
// ---------------------------------------------------------------------------
struct BundlePaths {
    std::filesystem::path root;
    std::filesystem::path manifest;
    std::filesystem::path frames_dir;
    std::filesystem::path frames_index;
    std::filesystem::path frame_embeddings;
    std::filesystem::path crop_embeddings;
    std::filesystem::path prompt_embeddings;
    std::filesystem::path face_embeddings;
    std::filesystem::path faces;
    std::filesystem::path landmarks;
    std::filesystem::path emotions;
    std::filesystem::path shot_scales;
    std::filesystem::path saliency_dir;
    std::filesystem::path logo_prior;
    std::filesystem::path templates_dir;
    std::filesystem::path cache_dir;
    std::filesystem::path output_dir;
    std::filesystem::path state_dir;

    [[nodiscard]] std::filesystem::path saliency_for(int frame_id) const;
    // Per-aspect prior ("logo_prior_2x3.pgm") falling back to the shared one.
    [[nodiscard]] std::filesystem::path logo_prior_for(const AspectTag& tag) const;
};

[[nodiscard]] BundlePaths bundle_paths(const std::filesystem::path& root);

// Everything ingest can enumerate about a bundle, loaded eagerly except for
// frame images and saliency rasters.
struct ArtifactIndex {
    std::vector<FrameEntry> frames;
    std::optional<TensorFile> frame_embeddings;
    std::optional<TensorFile> crop_embeddings;
    std::optional<TensorFile> prompt_embeddings;
    std::optional<TensorFile> face_embeddings;
    std::vector<RawFace> faces;
    std::vector<LandmarkRow> landmarks;
    std::vector<EmotionRow> emotions;
    std::vector<ShotScaleRow> shot_scales;
    std::vector<int> saliency_frames;
    bool logo_prior_present = false;
    std::vector<std::string> missing_files;
};

struct Bundle {
    BundlePaths paths;
    VideoManifest manifest;
    ArtifactIndex artifacts;
};

[[nodiscard]] Bundle load_bundle(const std::filesystem::path& root);

[[nodiscard]] Image load_frame(const BundlePaths& paths, const FrameEntry& entry);

// Whole-file content fingerprint of a bundle path (0 when absent).
[[nodiscard]] std::uint64_t fingerprint(const std::filesystem::path& path);

}  // namespace framepick::ingest
