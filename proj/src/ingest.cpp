// SPDX-License-Identifier: Apache-2.0
#include "framepick/ingest.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>

#include "framepick/digest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace framepick::ingest {

static_assert(std::endian::native == std::endian::little, "FPK1 I/O assumes a little-endian host");

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot read " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void put_u32(std::string& out, std::uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    out.append(b, 4);
}

std::uint32_t get_u32(std::string_view bytes, std::size_t& pos, const std::string& origin) {
    if (bytes.size() - pos < 4) throw LengthError(origin + ": truncated header");
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + pos, 4);
    pos += 4;
    return v;
}

// Line/column for a byte offset, for parse error context.
std::string line_context(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

Rect parse_rect(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 4) throw ParseError(where + ": bbox must be [x, y, w, h]");
    Rect r{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
    if (r.w <= 0 || r.h <= 0) throw ValidationError(where + ": bbox has non-positive size");
    return r;
}

}  // namespace

std::optional<std::size_t> TensorFile::find(const std::string& id) const {
    if (index_.size() != row_ids.size()) {
        index_.clear();
        for (std::size_t i = 0; i < row_ids.size(); ++i) index_.emplace(row_ids[i], i);
    }
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void TensorFile::append(const std::string& id, std::span<const float> v) {
    if (row_ids.empty() && dim == 0) dim = int(v.size());
    if (int(v.size()) != dim) throw DomainError("tensor append: dimension mismatch for '" + id + "'");
    row_ids.push_back(id);
    values.insert(values.end(), v.begin(), v.end());
    index_.clear();
}

std::string encode_tensor(const TensorFile& t) {
    if (t.values.size() != t.rows() * std::size_t(t.dim)) throw DomainError("tensor: payload size mismatch");
    std::string out = "FPK1";
    put_u32(out, std::uint32_t(t.rows()));
    put_u32(out, std::uint32_t(t.dim));
    for (const auto& id : t.row_ids) {
        put_u32(out, std::uint32_t(id.size()));
        out += id;
    }
    const std::size_t off = out.size();
    out.resize(off + t.values.size() * 4);
    std::memcpy(out.data() + off, t.values.data(), t.values.size() * 4);
    return out;
}

TensorFile decode_tensor(std::string_view bytes, const std::string& origin) {
    if (bytes.size() < 4 || bytes.substr(0, 4) != "FPK1") throw FormatError(origin + ": bad magic (expected FPK1)");
    std::size_t pos = 4;
    const std::uint32_t rows = get_u32(bytes, pos, origin);
    const std::uint32_t dim = get_u32(bytes, pos, origin);
    TensorFile t;
    t.dim = int(dim);
    t.row_ids.reserve(std::min<std::uint32_t>(rows, 1u << 20));
    for (std::uint32_t r = 0; r < rows; ++r) {
        const std::uint32_t len = get_u32(bytes, pos, origin);
        if (bytes.size() - pos < len) throw LengthError(origin + ": truncated row-id table");
        t.row_ids.emplace_back(bytes.substr(pos, len));
        pos += len;
    }
    const std::uint64_t count = std::uint64_t(rows) * dim;
    if (std::uint64_t(bytes.size() - pos) != count * 4)
        throw LengthError(origin + ": payload holds " + std::to_string((bytes.size() - pos) / 4) +
                          " values, header declares " + std::to_string(count));
    t.values.resize(count);
    std::memcpy(t.values.data(), bytes.data() + pos, count * 4);
    for (std::size_t i = 0; i < t.values.size(); ++i)
        if (!std::isfinite(t.values[i]))
            throw ValidationError(origin + ": non-finite value in row '" + t.row_ids[i / dim] + "'");
    return t;
}

TensorFile read_tensor_file(const fs::path& path) { return decode_tensor(slurp(path), path.string()); }

void write_tensor_file(const fs::path& path, const TensorFile& t) {
    const std::string bytes = encode_tensor(t);
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IngestError("cannot write " + tmp.string());
        out.write(bytes.data(), std::streamsize(bytes.size()));
    }
    fs::rename(tmp, path);
}

VideoManifest parse_manifest(const std::string& text, const fs::path& base_dir, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(origin + ": " + line_context(text, e.byte > 0 ? e.byte - 1 : 0) + ": " + e.what());
    }
    if (!doc.is_object()) throw ParseError(origin + ": manifest must be an object");

    VideoManifest m;
    try {
        m.video_id = doc.value("video_id", std::string{});
        m.fps = doc.value("fps", 0.0);
        m.frame_count = doc.value("frame_count", 0);
        m.duration_s = doc.value("duration_s", 0.0);
        m.title = doc.value("title", std::string{});
        m.summary = doc.value("summary", std::string{});
        m.embedding_dim = doc.value("embedding_dim", 0);
        m.face_embedding_dim = doc.value("face_embedding_dim", 0);
    } catch (const json::type_error& e) {
        throw ParseError(origin + ": " + e.what());
    }
    if (!(m.fps > 0.0) || !std::isfinite(m.fps)) throw ValidationError(origin + ": fps must be > 0");
    if (m.video_id.empty()) m.video_id = base_dir.filename().empty() ? "video" : base_dir.filename().string();
    // 0 means "take it from the embedding files".
    if (m.embedding_dim < 0) throw ValidationError(origin + ": embedding_dim must be >= 0");
    if (m.face_embedding_dim < 0) throw ValidationError(origin + ": face_embedding_dim must be >= 0");
    if (m.frame_count < 0) throw ValidationError(origin + ": frame_count must be >= 0");
    if (m.duration_s <= 0.0 && m.frame_count > 0) m.duration_s = m.frame_count / m.fps;

    std::optional<TensorFile> sidecar;
    if (doc.contains("keyword_embeddings")) {
        const fs::path p = base_dir / doc["keyword_embeddings"].get<std::string>();
        sidecar = read_tensor_file(p);
    }
    for (const auto& k : doc.value("keywords", json::array())) {
        Keyword kw;
        if (k.is_string()) {
            kw.text = k.get<std::string>();
        } else if (k.is_object()) {
            kw.text = k.value("text", std::string{});
            kw.source = parse_keyword_source(k.value("source", std::string("metadata")));
        } else {
            throw ParseError(origin + ": keyword entries must be strings or objects");
        }
        if (kw.text.find_first_not_of(" \t\r\n") == std::string::npos)
            throw ValidationError(origin + ": blank keyword");
        if (sidecar) {
            if (auto row = sidecar->find(kw.text)) {
                auto v = sidecar->row(*row);
                kw.embedding.assign(v.begin(), v.end());
            }
        }
        m.keywords.push_back(std::move(kw));
    }
    return m;
}

VideoManifest load_manifest(const fs::path& path) {
    return parse_manifest(slurp(path), path.parent_path(), path.string());
}

void for_each_jsonl(const fs::path& path, const std::function<void(const json&, int)>& fn) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot read " + path.string());
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
        }
        try {
            fn(j, line_no);
        } catch (const json::exception& e) {
            throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

std::vector<FrameEntry> read_frames_index(const fs::path& path) {
    std::vector<FrameEntry> out;
    for_each_jsonl(path, [&](const json& j, int) {
        FrameEntry e;
        e.frame_id = j.at("frame_id").get<int>();
        e.timestamp_s = j.at("timestamp_s").get<double>();
        e.file = j.value("file", "frame_" + std::to_string(e.frame_id) + ".png");
        out.push_back(std::move(e));
    });
    std::stable_sort(out.begin(), out.end(),
                     [](const FrameEntry& a, const FrameEntry& b) { return a.timestamp_s < b.timestamp_s; });
    return out;
}

std::vector<RawFace> read_faces(const fs::path& path) {
    std::vector<RawFace> out;
    for_each_jsonl(path, [&](const json& j, int line) {
        RawFace f;
        f.face_id = j.at("face_id").get<std::string>();
        f.frame_id = j.at("frame_id").get<int>();
        f.bbox = parse_rect(j.at("bbox"), path.string() + ":" + std::to_string(line));
        if (j.contains("emotion")) f.emotion = parse_emotion(j["emotion"].get<std::string>());
        for (auto it = j.begin(); it != j.end(); ++it)
            if (it.key() != "face_id" && it.key() != "frame_id" && it.key() != "bbox" && it.key() != "emotion")
                f.passthrough[it.key()] = it.value();
        out.push_back(std::move(f));
    });
    return out;
}

std::vector<LandmarkRow> read_landmarks(const fs::path& path) {
    std::vector<LandmarkRow> out;
    for_each_jsonl(path, [&](const json& j, int line) {
        LandmarkRow r;
        r.face_id = j.at("face_id").get<std::string>();
        r.frame_id = j.at("frame_id").get<int>();
        r.scheme = parse_landmark_scheme(j.at("scheme").get<std::string>());
        const auto& pts = j.at("points");
        const std::size_t expect = r.scheme == LandmarkScheme::six_point ? 24 : 36;
        if (!pts.is_array() || pts.size() != expect)
            throw ParseError(path.string() + ": line " + std::to_string(line) + ": expected " +
                             std::to_string(expect) + " coordinates for " + std::string(to_string(r.scheme)));
        for (std::size_t i = 0; i < pts.size(); i += 2)
            r.points.push_back({pts[i].get<double>(), pts[i + 1].get<double>()});
        out.push_back(std::move(r));
    });
    return out;
}

std::vector<EmotionRow> read_emotions(const fs::path& path) {
    std::vector<EmotionRow> out;
    for_each_jsonl(path, [&](const json& j, int) {
        out.push_back({j.at("face_id").get<std::string>(), parse_emotion(j.at("emotion").get<std::string>())});
    });
    return out;
}

std::vector<ShotScaleRow> read_shot_scales(const fs::path& path) {
    std::vector<ShotScaleRow> out;
    for_each_jsonl(path, [&](const json& j, int) {
        out.push_back({j.at("frame_id").get<int>(), parse_shot_scale(j.at("label").get<std::string>())});
    });
    return out;
}

void split_eyes(const LandmarkRow& row, EyeLandmarks& left, EyeLandmarks& right) {
    left = {};
    right = {};
    left.scheme = right.scheme = row.scheme;
    const std::size_t per_eye = row.scheme == LandmarkScheme::six_point ? 6 : 9;
    if (row.points.size() != per_eye * 2) throw ParseError("landmarks for " + row.face_id + ": wrong point count");
    for (int eye = 0; eye < 2; ++eye) {
        EyeLandmarks& e = eye == 0 ? left : right;
        const std::size_t base = std::size_t(eye) * per_eye;
        if (row.scheme == LandmarkScheme::six_point) {
            e.contour.assign(row.points.begin() + long(base), row.points.begin() + long(base + 6));
        } else {
            e.contour.assign(row.points.begin() + long(base), row.points.begin() + long(base + 8));
            e.pupil = row.points[base + 8];
        }
    }
}

fs::path BundlePaths::saliency_for(int frame_id) const {
    return saliency_dir / ("frame_" + std::to_string(frame_id) + ".pgm");
}

fs::path BundlePaths::logo_prior_for(const AspectTag& tag) const {
    const fs::path specific = logo_prior.parent_path() / ("logo_prior_" + tag.slug() + ".pgm");
    if (fs::exists(specific)) return specific;
    return logo_prior;
}

BundlePaths bundle_paths(const fs::path& root) {
    BundlePaths p;
    p.root = root;
    p.manifest = root / "manifest.json";
    p.frames_dir = root / "frames";
    p.frames_index = root / "frames" / "index.jsonl";
    const fs::path a = root / "artifacts";
    p.frame_embeddings = a / "frame_embeddings.fpk";
    p.crop_embeddings = a / "crop_embeddings.fpk";
    p.prompt_embeddings = a / "prompt_embeddings.fpk";
    p.face_embeddings = a / "face_embeddings.fpk";
    p.faces = a / "faces.jsonl";
    p.landmarks = a / "landmarks.jsonl";
    p.emotions = a / "emotions.jsonl";
    p.shot_scales = a / "shot_scale.jsonl";
    p.saliency_dir = a / "saliency";
    p.logo_prior = a / "logo_prior.pgm";
    p.templates_dir = root / "templates";
    p.cache_dir = root / "cache";
    p.output_dir = root / "cache" / "out";
    p.state_dir = root / "cache" / "state";
    return p;
}

Bundle load_bundle(const fs::path& root) {
    Bundle b;
    b.paths = bundle_paths(root);
    if (!fs::exists(b.paths.manifest)) throw IngestError("bundle " + root.string() + ": manifest.json missing");
    b.manifest = load_manifest(b.paths.manifest);
    auto& a = b.artifacts;
    auto need = [&](const fs::path& p) {
        if (fs::exists(p)) return true;
        a.missing_files.push_back(fs::relative(p, root).string());
        return false;
    };
    if (need(b.paths.frames_index)) a.frames = read_frames_index(b.paths.frames_index);
    if (need(b.paths.frame_embeddings)) a.frame_embeddings = read_tensor_file(b.paths.frame_embeddings);
    if (need(b.paths.prompt_embeddings)) a.prompt_embeddings = read_tensor_file(b.paths.prompt_embeddings);
    if (fs::exists(b.paths.crop_embeddings)) a.crop_embeddings = read_tensor_file(b.paths.crop_embeddings);
    if (fs::exists(b.paths.face_embeddings)) a.face_embeddings = read_tensor_file(b.paths.face_embeddings);
    if (b.manifest.embedding_dim == 0 && a.frame_embeddings) b.manifest.embedding_dim = a.frame_embeddings->dim;
    if (b.manifest.face_embedding_dim == 0)
        b.manifest.face_embedding_dim = a.face_embeddings ? a.face_embeddings->dim : b.manifest.embedding_dim;
    if (fs::exists(b.paths.faces)) a.faces = read_faces(b.paths.faces);
    if (fs::exists(b.paths.landmarks)) a.landmarks = read_landmarks(b.paths.landmarks);
    if (fs::exists(b.paths.emotions)) a.emotions = read_emotions(b.paths.emotions);
    if (fs::exists(b.paths.shot_scales)) a.shot_scales = read_shot_scales(b.paths.shot_scales);
    if (fs::exists(b.paths.saliency_dir)) {
        for (const auto& entry : fs::directory_iterator(b.paths.saliency_dir)) {
            const std::string name = entry.path().filename().string();
            if (name.rfind("frame_", 0) == 0 && entry.path().extension() == ".pgm") {
                try {
                    a.saliency_frames.push_back(std::stoi(name.substr(6)));
                } catch (const std::exception&) {
                }
            }
        }
        std::sort(a.saliency_frames.begin(), a.saliency_frames.end());
    }
    a.logo_prior_present = need(b.paths.logo_prior);
    return b;
}

Image load_frame(const BundlePaths& paths, const FrameEntry& entry) {
    return read_image(paths.frames_dir / entry.file);
}

std::uint64_t fingerprint(const fs::path& path) {
    if (!fs::exists(path)) return 0;
    return hash_file(path);
}

}  // namespace framepick::ingest
