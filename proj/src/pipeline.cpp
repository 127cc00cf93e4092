// SPDX-License-Identifier: Apache-2.0
#include "framepick/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "framepick/digest.hpp"
#include "framepick/faceproc.hpp"
#include "framepick/fsio.hpp"
#include "framepick/stage_cache.hpp"
#include "framepick/validate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace framepick::pipeline {

std::string_view to_string(StageState s) {
    switch (s) {
        case StageState::pending: return "pending";
        case StageState::cached: return "cached";
        case StageState::done: return "done";
        case StageState::failed: return "failed";
    }
    return "pending";
}

int PipelineRun::cache_hits() const {
    return int(std::count_if(stages.begin(), stages.end(),
                             [](const StageStatus& s) { return s.state == StageState::cached; }));
}

bool PipelineRun::ok() const {
    return std::none_of(stages.begin(), stages.end(),
                        [](const StageStatus& s) { return s.state == StageState::failed; });
}

json PipelineRun::to_json() const {
    json stages_json = json::array();
    for (const auto& s : stages) {
        json j = {{"stage", s.stage}, {"status", to_string(s.state)}, {"digest", s.digest}, {"seconds", s.seconds}};
        if (!s.error.empty()) j["error"] = s.error;
        stages_json.push_back(j);
    }
    return {{"video_id", video_id},
            {"config_digest", config_digest},
            {"stages", stages_json},
            {"cache_hits", cache_hits()},
            {"seconds", seconds},
            {"warnings", warnings}};
}

OutputPaths output_paths(const ingest::BundlePaths& paths) {
    return {paths.output_dir / "dataset.json", paths.output_dir / "proposals.json",
            paths.output_dir / "candidate_embeddings.fpk", paths.output_dir / "scores.tsv"};
}

namespace {

// ---------------------------------------------------------------------------
// small helpers
// ---------------------------------------------------------------------------

// Splits [0, n) into contiguous chunks, one per worker.
void parallel_chunks(int n, int workers, const std::function<void(int, int)>& fn) {
    workers = std::clamp(workers, 1, std::max(1, n));
    if (workers == 1) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        const int begin = int(std::int64_t(n) * w / workers);
        const int end = int(std::int64_t(n) * (w + 1) / workers);
        pool.emplace_back([&, w, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                errors[std::size_t(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    parallel_chunks(n, workers, [&](int begin, int end) {
        for (int i = begin; i < end; ++i) fn(i);
    });
}

json rect_json(const Rect& r) { return json::array({r.x, r.y, r.w, r.h}); }
Rect rect_from(const json& j) { return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()}; }
json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
std::optional<double> opt_from(const json& j) {
    return j.is_null() ? std::nullopt : std::optional<double>(j.get<double>());
}

std::string frame_tag(int frame_id) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "f%06d", frame_id);
    return buf;
}

std::uint64_t directory_fingerprint(const fs::path& dir, const std::string& prefix = "") {
    DigestBuilder b;
    if (!fs::exists(dir)) return b.add("absent", dir.filename().string()).value();
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().filename().string().rfind(prefix, 0) == 0) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) b.add(f.filename().string(), hash_file(f));
    return b.value();
}

Rect to_post_letterbox(const Rect& r, int top, Size post) {
    return clamp_to(Rect{r.x, r.y - top, r.w, r.h}, post.width, post.height);
}

// Saliency for one frame in post-letterbox coordinates at frame resolution.
std::optional<Grid> load_saliency(const ingest::BundlePaths& paths, int frame_id, Size original, int top,
                                  Size post) {
    const fs::path p = paths.saliency_for(frame_id);
    if (!fs::exists(p)) return std::nullopt;
    const Grid raw = read_pgm(p);
    const Grid full = (raw.width == original.width && raw.height == original.height)
                          ? raw
                          : resample_nearest(raw, original.width, original.height);
    Grid out(post.width, post.height);
    for (int y = 0; y < post.height; ++y)
        for (int x = 0; x < post.width; ++x) out.at(x, y) = full.at(x, y + top);
    return out;
}

void write_output(const fs::path& path, const std::string& bytes) {
    if (fs::exists(path) && fs::file_size(path) == bytes.size() && read_file(path) == bytes) return;
    fs::create_directories(path.parent_path());
    atomic_write_file(path, bytes);
}

// ---------------------------------------------------------------------------
// stage payloads
// ---------------------------------------------------------------------------

struct DownsampleResult {
    cropping::LetterboxEstimate letterbox;
    Size original;
    Size post;
    std::vector<FrameRecord> frames;  // every frame, timestamp order
    std::vector<bool> kept;
    std::vector<bool> transition;
    std::vector<keyframe::Shot> shots;
    std::vector<std::string> warnings;

    [[nodiscard]] std::vector<const FrameRecord*> keyframes() const {
        std::vector<const FrameRecord*> out;
        for (const auto& f : frames)
            if (f.is_keyframe) out.push_back(&f);
        return out;
    }
};

json to_json(const DownsampleResult& d) {
    json frames = json::array();
    for (std::size_t i = 0; i < d.frames.size(); ++i) {
        const auto& f = d.frames[i];
        frames.push_back({{"frame_id", f.frame_id},
                          {"timestamp_s", f.timestamp_s},
                          {"kept", bool(d.kept[i])},
                          {"transition", bool(d.transition[i])},
                          {"shot_id", f.shot_id},
                          {"subshot_id", f.subshot_id},
                          {"is_keyframe", f.is_keyframe},
                          {"metrics",
                           {f.metrics.luminance, f.metrics.sharpness, f.metrics.uniformity, f.metrics.stillness}}});
    }
    json shots = json::array();
    for (const auto& s : d.shots)
        shots.push_back({{"shot_id", s.shot_id},
                         {"first_index", s.first_index},
                         {"last_index", s.last_index},
                         {"first_id", s.first_id},
                         {"last_id", s.last_id},
                         {"boundary_confidence", s.boundary_confidence}});
    return {{"letterbox",
             {{"top", d.letterbox.top_rows},
              {"bottom", d.letterbox.bottom_rows},
              {"sample_size", d.letterbox.sample_size},
              {"all_black", d.letterbox.all_black}}},
            {"original", {d.original.width, d.original.height}},
            {"post", {d.post.width, d.post.height}},
            {"frames", frames},
            {"shots", shots},
            {"warnings", d.warnings}};
}

DownsampleResult downsample_from_json(const json& j) {
    DownsampleResult d;
    d.letterbox.top_rows = j.at("letterbox").at("top").get<int>();
    d.letterbox.bottom_rows = j.at("letterbox").at("bottom").get<int>();
    d.letterbox.sample_size = j.at("letterbox").at("sample_size").get<int>();
    d.letterbox.all_black = j.at("letterbox").at("all_black").get<bool>();
    d.original = {j.at("original")[0].get<int>(), j.at("original")[1].get<int>()};
    d.post = {j.at("post")[0].get<int>(), j.at("post")[1].get<int>()};
    for (const auto& f : j.at("frames")) {
        FrameRecord r;
        r.frame_id = f.at("frame_id").get<int>();
        r.timestamp_s = f.at("timestamp_s").get<double>();
        r.width = d.post.width;
        r.height = d.post.height;
        r.letterbox_top = d.letterbox.top_rows;
        r.letterbox_bottom = d.letterbox.bottom_rows;
        r.shot_id = f.at("shot_id").get<int>();
        r.subshot_id = f.at("subshot_id").get<int>();
        r.is_keyframe = f.at("is_keyframe").get<bool>();
        const auto& m = f.at("metrics");
        r.metrics = {m[0].get<double>(), m[1].get<double>(), m[2].get<double>(), m[3].get<double>()};
        d.frames.push_back(r);
        d.kept.push_back(f.at("kept").get<bool>());
        d.transition.push_back(f.at("transition").get<bool>());
    }
    for (const auto& s : j.at("shots"))
        d.shots.push_back({s.at("shot_id").get<int>(), s.at("first_index").get<int>(), s.at("last_index").get<int>(),
                           s.at("first_id").get<int>(), s.at("last_id").get<int>(),
                           s.at("boundary_confidence").get<double>()});
    d.warnings = j.at("warnings").get<std::vector<std::string>>();
    return d;
}

struct FaceInfo {
    std::string face_id;
    int frame_id = 0;
    Rect bbox;
    Rect expanded;
    double area_fraction = 0.0;
    faces::EyeState eyes;
    Emotion emotion = Emotion::neutral;
    Point center;
    bool center_fallback = true;
};

// ---------------------------------------------------------------------------
// stage implementations
// ---------------------------------------------------------------------------

DownsampleResult run_downsample(const ingest::Bundle& b, const EngineConfig& cfg, int workers) {
    const auto& entries = b.artifacts.frames;
    if (entries.empty()) throw IngestError("frame index is empty");
    const int n = int(entries.size());
    auto load = [&](int i) { return ingest::load_frame(b.paths, entries[std::size_t(i)]); };

    DownsampleResult d;
    d.letterbox = cropping::detect_letterbox(n, load, cfg.letterbox);
    if (d.letterbox.all_black) d.warnings.push_back("every sampled frame is black; letterbox estimate is (0,0)");
    const Image first = load(0);
    d.original = {first.width, first.height};
    const int top = d.letterbox.top_rows;
    d.post = {first.width, first.height - top - d.letterbox.bottom_rows};

    std::vector<FrameMetrics> metrics(static_cast<std::size_t>(n));
    std::vector<std::vector<float>> rgb(static_cast<std::size_t>(n)), hsv(static_cast<std::size_t>(n));
    const auto& ds = cfg.downsample;
    auto prepare = [&](int i) {
        const Image img = load(i);
        if (img.width != d.original.width || img.height != d.original.height)
            throw IngestError("frame " + std::to_string(entries[std::size_t(i)].frame_id) + " is " +
                              std::to_string(img.width) + "x" + std::to_string(img.height) + ", expected " +
                              std::to_string(d.original.width) + "x" + std::to_string(d.original.height));
        return downscale_shortest_edge(crop(img, {0, top, d.post.width, d.post.height}), ds.working_edge);
    };
    parallel_chunks(n, workers, [&](int begin, int end) {
        std::optional<Image> previous;
        if (begin > 0 && begin < end) previous = prepare(begin - 1);
        for (int i = begin; i < end; ++i) {
            Image work = prepare(i);
            FrameMetrics m;
            m.luminance = keyframe::luminance(work);
            m.sharpness = keyframe::sharpness(work);
            m.uniformity = keyframe::uniformity(work, ds.uniformity_top_fraction);
            m.stillness = keyframe::stillness(work, previous ? &*previous : nullptr);
            metrics[std::size_t(i)] = m;
            rgb[std::size_t(i)] = keyframe::rgb_histogram(work);
            hsv[std::size_t(i)] = keyframe::hsv_histogram(work);
            previous = std::move(work);
        }
    });

    std::vector<keyframe::MeasuredFrame> measured;
    for (int i = 0; i < n; ++i) measured.push_back({entries[std::size_t(i)].frame_id, metrics[std::size_t(i)]});
    const auto kept_ids = keyframe::filter_low_quality(measured, ds.quality);
    const std::set<int> kept_set(kept_ids.begin(), kept_ids.end());

    std::vector<int> kept_index;  // kept position -> frame index
    for (int i = 0; i < n; ++i)
        if (kept_set.count(entries[std::size_t(i)].frame_id)) kept_index.push_back(i);
    d.kept.assign(std::size_t(n), false);
    d.transition.assign(std::size_t(n), false);
    d.frames.resize(std::size_t(n));
    for (int i = 0; i < n; ++i) {
        auto& f = d.frames[std::size_t(i)];
        f.frame_id = entries[std::size_t(i)].frame_id;
        f.timestamp_s = entries[std::size_t(i)].timestamp_s;
        f.width = d.post.width;
        f.height = d.post.height;
        f.letterbox_top = top;
        f.letterbox_bottom = d.letterbox.bottom_rows;
        f.metrics = metrics[std::size_t(i)];
    }
    for (int i : kept_index) d.kept[std::size_t(i)] = true;
    if (kept_index.empty()) {
        d.warnings.push_back("every frame failed the quality filter; no keyframes");
        return d;
    }

    std::vector<std::vector<float>> kept_hist;
    std::vector<int> kept_ids_ordered;
    for (int i : kept_index) {
        kept_hist.push_back(rgb[std::size_t(i)]);
        kept_ids_ordered.push_back(entries[std::size_t(i)].frame_id);
    }
    const auto shots = keyframe::detect_shots(kept_hist, kept_ids_ordered, ds.shots);
    d.shots = shots.shots;
    for (std::size_t k = 0; k < kept_index.size(); ++k) d.transition[std::size_t(kept_index[k])] = shots.transition[k];

    std::map<int, std::size_t> index_of;
    for (int i = 0; i < n; ++i) index_of[entries[std::size_t(i)].frame_id] = std::size_t(i);
    int next_subshot = 0;
    for (const auto& shot : d.shots) {
        std::vector<keyframe::ShotFrame> members;
        for (int k = shot.first_index; k <= shot.last_index; ++k) {
            const int i = kept_index[std::size_t(k)];
            d.frames[std::size_t(i)].shot_id = shot.shot_id;
            members.push_back({entries[std::size_t(i)].frame_id, hsv[std::size_t(i)], metrics[std::size_t(i)].stillness,
                               shots.transition[std::size_t(k)]});
        }
        const auto subshots = keyframe::segment_subshots(shot, members, ds.subshots, next_subshot, &d.warnings);
        for (const auto& s : subshots) {
            for (int fid : s.members) d.frames[index_of.at(fid)].subshot_id = s.subshot_id;
            if (s.keyframe >= 0) d.frames[index_of.at(s.keyframe)].is_keyframe = true;
        }
        next_subshot += int(subshots.size());
    }
    return d;
}

grouping::GroupingResult run_group(const ingest::Bundle& b, const DownsampleResult& d, const EngineConfig& cfg) {
    const auto keyframes = d.keyframes();
    const auto& tensor = b.artifacts.frame_embeddings;
    if (!tensor) throw ArtifactMissingError("frame embeddings missing", {"artifacts/frame_embeddings.fpk"});
    std::vector<int> ids, shots;
    std::vector<std::string> missing;
    Eigen::MatrixXd m(Eigen::Index(keyframes.size()), tensor->dim);
    for (std::size_t i = 0; i < keyframes.size(); ++i) {
        ids.push_back(keyframes[i]->frame_id);
        shots.push_back(keyframes[i]->shot_id);
        const auto row = tensor->find(std::to_string(keyframes[i]->frame_id));
        if (!row) {
            missing.push_back(std::to_string(keyframes[i]->frame_id));
            continue;
        }
        const auto values = tensor->row(*row);
        for (int c = 0; c < tensor->dim; ++c) m(Eigen::Index(i), c) = values[std::size_t(c)];
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
        throw ValidationError("keyframes without frame embeddings: " + list);
    }
    return grouping::group_keyframes(ids, shots, m, cfg.group);
}

json group_to_json(const grouping::GroupingResult& g) {
    json groups = json::array();
    for (const auto& gr : g.groups) groups.push_back({{"group_id", gr.group_id}, {"members", gr.members}});
    return {{"groups", groups}, {"labels", g.cluster_labels}, {"components", g.components}};
}

std::vector<grouping::Group> groups_from_json(const json& j) {
    std::vector<grouping::Group> out;
    for (const auto& g : j.at("groups"))
        out.push_back({g.at("group_id").get<int>(), g.at("members").get<std::vector<int>>(), -1});
    return out;
}

std::map<int, std::vector<Rect>> post_letterbox_faces(const ingest::Bundle& b, const DownsampleResult& d) {
    std::map<int, std::vector<Rect>> out;
    for (const auto& f : b.artifacts.faces) {
        const Rect r = to_post_letterbox(f.bbox, d.letterbox.top_rows, d.post);
        if (!r.empty()) out[f.frame_id].push_back(r);
    }
    return out;
}

json run_crop(const ingest::Bundle& b, const DownsampleResult& d, const EngineConfig& cfg, int workers) {
    const auto keyframes = d.keyframes();
    const auto faces = post_letterbox_faces(b, d);
    std::vector<json> per_frame(keyframes.size());
    std::vector<std::vector<std::string>> warnings(keyframes.size());
    parallel_for(int(keyframes.size()), workers, [&](int i) {
        const int fid = keyframes[std::size_t(i)]->frame_id;
        auto saliency = load_saliency(b.paths, fid, d.original, d.letterbox.top_rows, d.post);
        if (!saliency) {
            warnings[std::size_t(i)].push_back("frame " + std::to_string(fid) +
                                               ": no saliency map, cropping with uniform saliency");
            saliency = Grid(d.post.width, d.post.height, 1.0);
        }
        const cropping::SaliencyCropScorer scorer(*saliency, cfg.crop.border_fraction, cfg.crop.border_penalty);
        const auto it = faces.find(fid);
        const std::vector<Rect> frame_faces = it == faces.end() ? std::vector<Rect>{} : it->second;
        json crops = json::array();
        for (const auto& tag : cfg.aspects) {
            auto candidates = cropping::generate_crop_candidates(d.post, tag, cfg.crop.grid);
            cropping::filter_crops(candidates, frame_faces, cfg.crop.filter);
            auto ranked = cropping::rank_crops(candidates, [&](const Rect& r) { return scorer(r); });
            for (const auto& w : ranked.warnings)
                warnings[std::size_t(i)].push_back("frame " + std::to_string(fid) + ": " + w);
            if (ranked.ranked.empty()) {
                warnings[std::size_t(i)].push_back("frame " + std::to_string(fid) + ": no crop for " + tag.name);
                continue;
            }
            const auto& top = ranked.ranked.front();
            json entry = {{"aspect", tag.name},
                          {"rect", rect_json(top.rect)},
                          {"face_centered", top.face_centered},
                          {"fallback_reason",
                           ranked.fallback && top.rejected ? json(cropping::to_string(*top.rejected)) : json(nullptr)},
                          {"alternate", nullptr}};
            if (ranked.face_centered && !(ranked.face_centered->rect == top.rect))
                entry["alternate"] = rect_json(ranked.face_centered->rect);
            crops.push_back(entry);
        }
        per_frame[std::size_t(i)] = {{"frame_id", fid}, {"crops", crops}};
    });
    json all_warnings = json::array();
    for (const auto& w : warnings)
        for (const auto& s : w) all_warnings.push_back(s);
    return {{"frames", per_frame}, {"warnings", all_warnings}};
}

json run_faces(const ingest::Bundle& b, const DownsampleResult& d, const EngineConfig& cfg) {
    std::set<int> keyframe_ids;
    for (const auto* f : d.keyframes()) keyframe_ids.insert(f->frame_id);
    const int top = d.letterbox.top_rows;
    std::map<std::string, const ingest::LandmarkRow*> landmarks;
    for (const auto& l : b.artifacts.landmarks) landmarks[l.face_id] = &l;
    std::map<std::string, Emotion> emotions;
    for (const auto& e : b.artifacts.emotions) emotions[e.face_id] = e.emotion;

    json warnings = json::array();
    json faces_json = json::array();
    const double frame_area = double(d.post.width) * d.post.height;
    for (const auto& raw : b.artifacts.faces) {
        if (!keyframe_ids.count(raw.frame_id)) continue;
        FaceRecord face;
        face.face_id = raw.face_id;
        face.frame_id = raw.frame_id;
        face.bbox = to_post_letterbox(raw.bbox, top, d.post);
        if (face.bbox.empty()) {
            warnings.push_back("face " + raw.face_id + " lies inside the letterbox bars; dropped");
            continue;
        }
        face.expanded_bbox = faces::expand_bbox(face.bbox, d.post, cfg.faces.expand_factor);
        face.area_fraction = double(face.bbox.area()) / frame_area;
        if (const auto it = landmarks.find(raw.face_id); it != landmarks.end()) {
            ingest::LandmarkRow shifted = *it->second;
            for (auto& p : shifted.points) p.y -= top;
            EyeLandmarks left, right;
            ingest::split_eyes(shifted, left, right);
            face.left_eye = left;
            face.right_eye = right;
        }
        faces::classify_eyes(face, cfg.faces.ear_threshold);
        if (const auto it = emotions.find(raw.face_id); it != emotions.end())
            face.emotion = it->second;
        else if (raw.emotion)
            face.emotion = *raw.emotion;
        const auto center = faces::face_center(face);
        faces_json.push_back({{"face_id", face.face_id},
                              {"frame_id", face.frame_id},
                              {"bbox", rect_json(face.bbox)},
                              {"expanded", rect_json(face.expanded_bbox)},
                              {"area_fraction", face.area_fraction},
                              {"ear_left", opt_json(face.ear_left)},
                              {"ear_right", opt_json(face.ear_right)},
                              {"eyes_closed", face.eyes_closed},
                              {"eye_state_unknown", face.eye_state_unknown},
                              {"emotion", to_string(face.emotion)},
                              {"center", {center.point.x, center.point.y}},
                              {"center_fallback", center.fallback}});
    }

    json scales = json::object();
    if (fs::exists(b.paths.shot_scales)) {
        std::map<int, ShotScale> labels;
        for (const auto& s : b.artifacts.shot_scales) labels[s.frame_id] = s.label;
        std::vector<faces::LabeledFrame> frames;
        for (const auto* f : d.keyframes()) {
            const auto it = labels.find(f->frame_id);
            frames.push_back({f->frame_id, f->timestamp_s, f->shot_id,
                              it == labels.end() ? std::nullopt : std::optional<ShotScale>(it->second)});
        }
        for (const auto& [fid, label] : faces::smooth_shot_scale(frames))
            scales[std::to_string(fid)] = to_string(label);
    } else {
        warnings.push_back("no shot-scale artifact; every keyframe labeled unknown");
        for (const auto* f : d.keyframes()) scales[std::to_string(f->frame_id)] = to_string(ShotScale::unknown);
    }
    return {{"faces", faces_json}, {"shot_scale", scales}, {"warnings", warnings}};
}

std::vector<FaceInfo> faces_from_json(const json& j) {
    std::vector<FaceInfo> out;
    for (const auto& f : j.at("faces")) {
        FaceInfo x;
        x.face_id = f.at("face_id").get<std::string>();
        x.frame_id = f.at("frame_id").get<int>();
        x.bbox = rect_from(f.at("bbox"));
        x.expanded = rect_from(f.at("expanded"));
        x.area_fraction = f.at("area_fraction").get<double>();
        x.eyes.ear_left = opt_from(f.at("ear_left"));
        x.eyes.ear_right = opt_from(f.at("ear_right"));
        x.eyes.closed = f.at("eyes_closed").get<bool>();
        x.eyes.unknown = f.at("eye_state_unknown").get<bool>();
        x.emotion = parse_emotion(f.at("emotion").get<std::string>());
        x.center = {f.at("center")[0].get<double>(), f.at("center")[1].get<double>()};
        x.center_fallback = f.at("center_fallback").get<bool>();
        out.push_back(x);
    }
    return out;
}

json run_face_cluster(const ingest::Bundle& b, const std::vector<FaceInfo>& faces, const EngineConfig& cfg,
                      int workers) {
    json warnings = json::array();
    std::map<std::string, std::vector<std::size_t>> rows_of;
    const auto& tensor = b.artifacts.face_embeddings;
    if (tensor)
        for (std::size_t r = 0; r < tensor->row_ids.size(); ++r) {
            const auto& id = tensor->row_ids[r];
            rows_of[id.substr(0, id.find('/'))].push_back(r);
        }
    else
        warnings.push_back("no face embeddings; faces are not clustered");

    std::vector<std::size_t> rows;
    std::vector<std::string> row_face;
    for (const auto& f : faces) {
        if (f.area_fraction < cfg.faces.cluster.min_area) continue;
        const auto it = rows_of.find(f.face_id);
        if (it == rows_of.end()) continue;
        for (auto r : it->second) {
            rows.push_back(r);
            row_face.push_back(f.face_id);
        }
    }

    grouping::FaceClusterResult result;
    if (!rows.empty()) {
        Eigen::MatrixXd m(Eigen::Index(rows.size()), tensor->dim);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto v = tensor->row(rows[i]);
            for (int c = 0; c < tensor->dim; ++c) m(Eigen::Index(i), c) = v[std::size_t(c)];
        }
        auto cluster_cfg = cfg.faces.cluster;
        cluster_cfg.workers = workers;
        result = grouping::cluster_faces(m, cluster_cfg);
    } else {
        result.manual_parameters_needed = true;
    }
    if (result.manual_parameters_needed) warnings.push_back("face clustering needs manual parameters");

    // A face takes the label of its first appearance row.
    json assignments = json::object();
    std::map<int, std::set<std::string>> members;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (assignments.contains(row_face[i])) continue;
        const int label = result.labels.empty() ? kNoiseCluster : result.labels[i];
        assignments[row_face[i]] = label;
        if (label != kNoiseCluster) members[label].insert(row_face[i]);
    }
    json clusters = json::array();
    for (const auto& c : result.clusters) {
        const auto& ids = members[c.cluster_id];
        clusters.push_back({{"cluster_id", c.cluster_id},
                            {"size", c.size},
                            {"face_ids", std::vector<std::string>(ids.begin(), ids.end())}});
    }
    json curve = json::array();
    for (const auto& p : result.score_curve)
        curve.push_back({{"k", p.k}, {"score", p.score}, {"clusters", p.clusters}, {"noise", p.noise}});
    return {{"k", result.chosen_k},
            {"base_k", result.base_k},
            {"manual_parameters_needed", result.manual_parameters_needed},
            {"score_curve", curve},
            {"clusters", clusters},
            {"assignments", assignments},
            {"warnings", warnings}};
}

// Logo score of one crop on a grid whose longest side is at most grid_max.
double candidate_logo(const Grid& prior, const Grid& saliency_peak, const Rect& crop_rect,
                      std::span<const Rect> faces, int grid_max) {
    const int stride = std::max(1, (std::max(crop_rect.w, crop_rect.h) + grid_max - 1) / grid_max);
    const int gw = (crop_rect.w + stride - 1) / stride;
    const int gh = (crop_rect.h + stride - 1) / stride;
    Grid s(gw, gh);
    for (int y = 0; y < gh; ++y)
        for (int x = 0; x < gw; ++x) {
            const int sx = crop_rect.x + std::min(crop_rect.w - 1, x * stride + stride / 2);
            const int sy = crop_rect.y + std::min(crop_rect.h - 1, y * stride + stride / 2);
            s.at(x, y) = saliency_peak.at(sx, sy);
        }
    std::vector<Rect> grid_faces;
    for (const auto& f : faces) {
        const Rect in = intersect(f, crop_rect);
        if (in.empty()) continue;
        const int x0 = (in.x - crop_rect.x) / stride;
        const int y0 = (in.y - crop_rect.y) / stride;
        const int x1 = (in.right() - crop_rect.x + stride - 1) / stride;
        const int y1 = (in.bottom() - crop_rect.y + stride - 1) / stride;
        grid_faces.push_back({x0, y0, x1 - x0, y1 - y0});
    }
    return scoring::logo_score(prior, s, grid_faces);
}

struct ScoreOutput {
    Dataset dataset;
    ingest::TensorFile embeddings;
};

ScoreOutput run_score(const ingest::Bundle& b, const DownsampleResult& d, const std::vector<grouping::Group>& groups,
                      const json& crops, const json& faces_payload, const json& clusters, const EngineConfig& cfg,
                      int workers) {
    const auto& art = b.artifacts;
    const auto keyframes = d.keyframes();

    std::vector<std::string> missing;
    for (const auto* f : keyframes)
        if (!fs::exists(b.paths.saliency_for(f->frame_id)))
            missing.push_back(fs::relative(b.paths.saliency_for(f->frame_id), b.paths.root).string());
    if (!missing.empty()) {
        std::string list;
        for (std::size_t i = 0; i < missing.size() && i < 20; ++i) list += (i ? ", " : "") + missing[i];
        if (missing.size() > 20) list += ", ...";
        throw ArtifactMissingError("scoring needs saliency maps for " + std::to_string(missing.size()) +
                                       " keyframe(s): " + list,
                                   missing);
    }
    if (!art.prompt_embeddings) throw ArtifactMissingError("prompt embeddings missing", {"artifacts/prompt_embeddings.fpk"});
    const auto good_row = art.prompt_embeddings->find("good");
    const auto bad_row = art.prompt_embeddings->find("bad");
    if (!good_row || !bad_row) throw ArtifactMissingError("prompt embeddings need 'good' and 'bad' rows", {"good", "bad"});
    const std::vector<float> good(art.prompt_embeddings->row(*good_row).begin(),
                                  art.prompt_embeddings->row(*good_row).end());
    const std::vector<float> bad(art.prompt_embeddings->row(*bad_row).begin(), art.prompt_embeddings->row(*bad_row).end());

    std::map<std::string, Grid> priors;
    for (const auto& tag : cfg.aspects) {
        const auto p = b.paths.logo_prior_for(tag);
        if (!fs::exists(p)) throw ArtifactMissingError("logo prior missing", {fs::relative(p, b.paths.root).string()});
        priors[tag.name] = read_pgm(p);
    }

    std::map<int, int> group_of;
    for (const auto& g : groups)
        for (int m : g.members) group_of[m] = g.group_id;
    std::map<int, std::vector<FaceInfo>> faces_by_frame;
    for (auto& f : faces_from_json(faces_payload)) faces_by_frame[f.frame_id].push_back(f);
    const auto& assignments = clusters.at("assignments");
    const auto& scales = faces_payload.at("shot_scale");
    std::map<int, const json*> crops_by_frame;
    for (const auto& c : crops.at("frames")) crops_by_frame[c.at("frame_id").get<int>()] = &c;

    std::vector<std::vector<Candidate>> per_frame(keyframes.size());
    std::vector<std::vector<std::vector<float>>> per_frame_emb(keyframes.size());
    parallel_for(int(keyframes.size()), workers, [&](int i) {
        const FrameRecord& fr = *keyframes[std::size_t(i)];
        const int fid = fr.frame_id;
        const Grid saliency = *load_saliency(b.paths, fid, d.original, d.letterbox.top_rows, d.post);
        Grid peak = saliency;
        const double mx = saliency.max();
        if (mx > 0.0)
            for (auto& v : peak.cells) v /= mx;
        const cropping::SaliencyCropScorer mass(saliency);

        const auto frame_row = art.frame_embeddings->find(std::to_string(fid));
        const std::vector<float> frame_emb(art.frame_embeddings->row(*frame_row).begin(),
                                           art.frame_embeddings->row(*frame_row).end());
        const auto& frame_faces = faces_by_frame[fid];
        std::vector<Rect> face_boxes;
        for (const auto& f : frame_faces) face_boxes.push_back(f.bbox);

        auto make = [&](const AspectTag& tag, const Rect& rect, bool face_centered, bool alternate,
                        std::optional<cropping::RejectReason> fallback) {
            Candidate c;
            c.id = frame_tag(fid) + "-" + (tag.is_original() ? std::string("original") : tag.slug()) +
                   (alternate ? "-fc" : "");
            c.frame_id = fid;
            c.timestamp_s = fr.timestamp_s;
            c.shot_id = fr.shot_id;
            c.group_id = group_of.at(fid);
            c.aspect = tag;
            c.rect = rect;
            c.face_centered = face_centered;
            c.alternate = alternate;
            c.fallback_reason = fallback;
            c.shot_scale = parse_shot_scale(scales.at(std::to_string(fid)).get<std::string>());

            std::vector<double> positions, focuses;
            bool focus_ok = true;
            const double crop_mass = mass.mass(rect);
            for (const auto& f : frame_faces) {
                if (!rect.contains(f.bbox.center())) continue;
                CandidateFace cf;
                cf.face_id = f.face_id;
                cf.bbox = f.bbox;
                cf.eyes_closed = f.eyes.closed;
                cf.eye_state_unknown = f.eyes.unknown;
                cf.emotion = f.emotion;
                cf.cluster_id = assignments.contains(f.face_id) ? assignments.at(f.face_id).get<int>() : kNoiseCluster;
                cf.position = scoring::face_position_score(faces::to_crop(f.center, rect), {rect.w, rect.h},
                                                           cfg.scoring.face_position);
                if (crop_mass > 0.0)
                    cf.focus = std::clamp(mass.mass(intersect(f.bbox, rect)) / crop_mass, 0.0, 1.0);
                else
                    focus_ok = false;
                positions.push_back(cf.position);
                if (cf.focus) focuses.push_back(*cf.focus);
                c.faces.push_back(cf);
            }
            if (!positions.empty()) {
                c.raw.position_max = scoring::aggregate_faces(positions, scoring::FaceAggregation::max);
                c.raw.position_mean = scoring::aggregate_faces(positions, scoring::FaceAggregation::mean);
                if (focus_ok) {
                    c.raw.focus_max = scoring::aggregate_faces(focuses, scoring::FaceAggregation::max);
                    c.raw.focus_mean = scoring::aggregate_faces(focuses, scoring::FaceAggregation::mean);
                }
            }

            std::vector<float> emb = frame_emb;
            if (!tag.is_original()) {
                const auto crop_row =
                    art.crop_embeddings ? art.crop_embeddings->find(std::to_string(fid) + "@" + tag.name) : std::nullopt;
                if (crop_row && !alternate)
                    emb.assign(art.crop_embeddings->row(*crop_row).begin(), art.crop_embeddings->row(*crop_row).end());
                else
                    c.embedding_fallback = true;
            }
            c.raw.aesthetic = scoring::aesthetic_score(emb, good, bad, cfg.scoring.temperature);
            c.raw.semantic = scoring::semantic_scores(emb, b.manifest.keywords);
            c.raw.logo = candidate_logo(priors.at(tag.name), peak, rect, face_boxes, cfg.scoring.logo_grid_max);
            per_frame[std::size_t(i)].push_back(std::move(c));
            per_frame_emb[std::size_t(i)].push_back(std::move(emb));
        };

        const auto it = crops_by_frame.find(fid);
        if (it == crops_by_frame.end()) return;
        for (const auto& entry : it->second->at("crops")) {
            const AspectTag tag = parse_aspect(entry.at("aspect").get<std::string>());
            std::optional<cropping::RejectReason> fallback;
            if (!entry.at("fallback_reason").is_null())
                fallback = cropping::parse_reject_reason(entry.at("fallback_reason").get<std::string>());
            make(tag, rect_from(entry.at("rect")), entry.at("face_centered").get<bool>(), false, fallback);
            if (!entry.at("alternate").is_null()) make(tag, rect_from(entry.at("alternate")), true, true, std::nullopt);
        }
    });

    ScoreOutput out;
    Dataset& ds = out.dataset;
    ds.video_id = b.manifest.video_id;
    ds.title = b.manifest.title;
    ds.summary = b.manifest.summary;
    ds.fps = b.manifest.fps;
    ds.frame_count = b.manifest.frame_count;
    ds.width = d.post.width;
    ds.height = d.post.height;
    ds.letterbox_top = d.letterbox.top_rows;
    ds.letterbox_bottom = d.letterbox.bottom_rows;
    ds.keywords = b.manifest.keywords;
    ds.aspects = cfg.aspects;
    for (const auto* f : keyframes) {
        FrameRecord r = *f;
        r.group_id = group_of.at(f->frame_id);
        ds.frames.push_back(r);
    }
    ds.groups = groups;
    ds.face_cluster_k = clusters.at("k").get<int>();
    ds.face_clusters_need_manual_parameters = clusters.at("manual_parameters_needed").get<bool>();
    for (const auto& c : clusters.at("clusters"))
        ds.face_clusters.push_back(
            {c.at("cluster_id").get<int>(), c.at("size").get<int>(), c.at("face_ids").get<std::vector<std::string>>()});
    for (const auto& p : clusters.at("score_curve"))
        ds.face_cluster_curve.push_back(
            {p.at("k").get<int>(), p.at("score").get<double>(), p.at("clusters").get<int>(), p.at("noise").get<int>()});

    out.embeddings.dim = b.manifest.embedding_dim;
    for (std::size_t i = 0; i < per_frame.size(); ++i)
        for (std::size_t k = 0; k < per_frame[i].size(); ++k) {
            out.embeddings.append(per_frame[i][k].id, per_frame_emb[i][k]);
            ds.candidates.push_back(std::move(per_frame[i][k]));
        }
    normalize_scores(ds);
    ds.reindex();
    selection::assign_representatives(ds, cfg.aspects.front(), cfg.weights);
    return out;
}

std::string pack_score(const ScoreOutput& s) {
    const std::string text = to_json(s.dataset).dump();
    return std::to_string(text.size()) + "\n" + text + ingest::encode_tensor(s.embeddings);
}

std::pair<std::string, std::string> unpack_score(const std::string& payload) {
    const auto nl = payload.find('\n');
    const std::size_t len = std::stoull(payload.substr(0, nl));
    return {payload.substr(nl + 1, len), payload.substr(nl + 1 + len)};
}

json run_propose(const Dataset& ds, const EngineConfig& cfg) {
    json sets = json::array();
    auto preset_cfg = cfg.presets;
    preset_cfg.weights = cfg.weights;
    for (const auto& tag : cfg.aspects) {
        sets.push_back(selection::to_json(selection::preset_main_characters(ds, tag, preset_cfg)));
        sets.push_back(selection::to_json(selection::preset_per_emotion(ds, tag, preset_cfg)));
        if (ds.keywords.empty()) {
            sets.push_back({{"preset", "per-keyword"}, {"aspect", tag.name}, {"sections", json::array()},
                            {"reason", "no keywords"}});
        } else {
            sets.push_back(selection::to_json(selection::preset_per_keyword(ds, tag, preset_cfg)));
        }
    }
    return {{"video_id", ds.video_id}, {"config_digest", ds.config_digest}, {"proposals", sets}};
}

}  // namespace

std::string scores_tsv(const Dataset& ds, const scoring::WeightConfig& weights) {
    std::ostringstream out;
    out.precision(17);
    auto opt = [&](const std::optional<double>& v) -> std::ostringstream& {
        if (v)
            out << *v;
        else
            out << "NA";
        return out;
    };
    out << "candidate_id\taspect\tframe_id\tgroup_id\tfaces\taesthetic_raw\taesthetic\tlogo_raw\tlogo"
           "\tposition_max_raw\tposition_max\tposition_mean_raw\tposition_mean"
           "\tfocus_max_raw\tfocus_max\tfocus_mean_raw\tfocus_mean";
    for (const auto& k : ds.keywords) out << "\tsemantic:" << k.text;
    out << "\tfinal\n";
    std::map<std::string, double> finals;
    for (const auto& tag : ds.aspects)
        for (const auto& r : selection::rank_all(ds, tag, weights)) finals[ds.candidates[r.index].id] = r.final;
    for (const auto& c : ds.candidates) {
        out << c.id << '\t' << c.aspect.name << '\t' << c.frame_id << '\t' << c.group_id << '\t' << c.faces.size()
            << '\t' << c.raw.aesthetic << '\t' << c.norm.aesthetic << '\t' << c.raw.logo << '\t' << c.norm.logo;
        for (const auto& [raw, norm] : {std::pair{c.raw.position_max, c.norm.position_max},
                                        std::pair{c.raw.position_mean, c.norm.position_mean},
                                        std::pair{c.raw.focus_max, c.norm.focus_max},
                                        std::pair{c.raw.focus_mean, c.norm.focus_mean}}) {
            out << '\t';
            opt(raw) << '\t';
            opt(norm);
        }
        for (double s : c.raw.semantic) out << '\t' << s;
        out << '\t';
        const auto it = finals.find(c.id);
        opt(it == finals.end() ? std::nullopt : std::optional<double>(it->second)) << '\n';
    }
    return out.str();
}

PipelineRun run_pipeline(const fs::path& bundle_root, const EngineConfig& cfg, const RunOptions& options) {
    const auto t0 = std::chrono::steady_clock::now();
    cfg.validate();
    const int workers = std::max(1, options.workers.value_or(cfg.workers));
    if (options.until && std::find(kStages.begin(), kStages.end(), *options.until) == kStages.end())
        throw ConfigError("unknown stage '" + *options.until + "'");

    const ingest::Bundle bundle = ingest::load_bundle(bundle_root);
    const auto report = validate_dataset(bundle.manifest, bundle.artifacts);
    if (!report.usable()) {
        std::string msg = "bundle does not validate (" + std::to_string(report.issues.size()) + " issue(s))";
        for (std::size_t i = 0; i < report.issues.size() && i < 5; ++i)
            msg += "; " + std::string(to_string(report.issues[i].kind)) + " " + report.issues[i].item + ": " +
                   report.issues[i].detail;
        throw ValidationError(msg);
    }

    PipelineRun run;
    run.video_id = bundle.manifest.video_id;
    const json cfg_json = to_json(cfg);
    json digest_cfg = cfg_json;
    digest_cfg.erase("workers");
    digest_cfg.erase("service");
    digest_cfg.erase("keywords");
    run.config_digest = hex64(config_digest(digest_cfg));

    ingest::StageCache cache(bundle.paths.cache_dir / "stages");
    const auto& p = bundle.paths;
    const auto outputs = output_paths(p);

    // Digest of each stage: its config section, upstream digests, input files.
    std::map<std::string, std::uint64_t> digests;
    auto stage_digest = [&](const std::string& stage, std::initializer_list<const char*> upstream, const json& section,
                            const std::vector<std::pair<std::string, std::uint64_t>>& files) {
        DigestBuilder b;
        b.add("engine", "framepick/1").add("stage", stage).add_json("config", section);
        for (const char* u : upstream) b.add(u, digests.at(u));
        for (const auto& [name, fp] : files) b.add(name, fp);
        return digests[stage] = b.value();
    };
    auto frames_fp = [&] {
        DigestBuilder b;
        b.add("index", ingest::fingerprint(p.frames_index));
        for (const auto& f : bundle.artifacts.frames) b.add(f.file, ingest::fingerprint(p.frames_dir / f.file));
        return b.value();
    };
    auto section = [&](std::initializer_list<const char*> keys) {
        json j = json::object();
        for (const char* k : keys) j[k] = cfg_json.at(k);
        return j;
    };
    const std::uint64_t saliency_fp = directory_fingerprint(p.saliency_dir);

    stage_digest("downsample", {}, section({"downsample", "letterbox"}), {{"frames", frames_fp()}});
    stage_digest("group", {"downsample"}, section({"group"}),
                 {{"frame_embeddings", ingest::fingerprint(p.frame_embeddings)}});
    stage_digest("crop", {"downsample"}, section({"crop", "aspects"}),
                 {{"faces", ingest::fingerprint(p.faces)}, {"saliency", saliency_fp}});
    stage_digest("faces", {"downsample"},
                 json{{"expand_factor", cfg_json["faces"]["expand_factor"]},
                      {"ear_threshold", cfg_json["faces"]["ear_threshold"]}},
                 {{"faces", ingest::fingerprint(p.faces)},
                  {"landmarks", ingest::fingerprint(p.landmarks)},
                  {"emotions", ingest::fingerprint(p.emotions)},
                  {"shot_scale", ingest::fingerprint(p.shot_scales)}});
    stage_digest("face-cluster", {"faces"}, cfg_json["faces"]["cluster"],
                 {{"face_embeddings", ingest::fingerprint(p.face_embeddings)}});
    stage_digest("score", {"downsample", "group", "crop", "faces", "face-cluster"},
                 section({"scoring", "weights", "aspects"}),
                 {{"manifest", ingest::fingerprint(p.manifest)},
                  {"frame_embeddings", ingest::fingerprint(p.frame_embeddings)},
                  {"crop_embeddings", ingest::fingerprint(p.crop_embeddings)},
                  {"prompt_embeddings", ingest::fingerprint(p.prompt_embeddings)},
                  {"logo_priors", directory_fingerprint(p.logo_prior.parent_path(), "logo_prior")},
                  {"saliency", saliency_fp}});
    stage_digest("propose", {"score"}, section({"presets", "weights", "aspects"}), {});

    // Lazily materialized stage results.
    std::map<std::string, std::string> payloads;
    std::optional<DownsampleResult> down;
    std::optional<json> crop_json, faces_json, cluster_json, group_json;
    std::optional<Dataset> dataset;
    auto parsed = [&](const std::string& stage) { return json::parse(payloads.at(stage)); };
    auto need_down = [&]() -> const DownsampleResult& {
        if (!down) down = downsample_from_json(parsed("downsample"));
        return *down;
    };
    auto need = [&](std::optional<json>& slot, const std::string& stage) -> const json& {
        if (!slot) slot = parsed(stage);
        return *slot;
    };
    auto need_dataset = [&]() -> const Dataset& {
        if (!dataset) dataset = dataset_from_json(json::parse(unpack_score(payloads.at("score")).first));
        return *dataset;
    };

    for (const auto& stage : kStages) {
        StageStatus status{stage, StageState::pending, hex64(digests.at(stage)), 0.0, ""};
        run.stages.push_back(status);
    }

    auto compute = [&](const std::string& stage) -> std::string {
        if (stage == "downsample") return to_json(run_downsample(bundle, cfg, workers)).dump();
        if (stage == "group") return group_to_json(run_group(bundle, need_down(), cfg)).dump();
        if (stage == "crop") return run_crop(bundle, need_down(), cfg, workers).dump();
        if (stage == "faces") return run_faces(bundle, need_down(), cfg).dump();
        if (stage == "face-cluster")
            return run_face_cluster(bundle, faces_from_json(need(faces_json, "faces")), cfg, workers).dump();
        if (stage == "score") {
            auto out = run_score(bundle, need_down(), groups_from_json(need(group_json, "group")),
                                 need(crop_json, "crop"), need(faces_json, "faces"),
                                 need(cluster_json, "face-cluster"), cfg, workers);
            out.dataset.config_digest = run.config_digest;
            for (const char* s : {"downsample", "crop", "faces", "face-cluster"})
                for (const auto& w : parsed(s).at("warnings")) out.dataset.warnings.push_back(w.get<std::string>());
            return pack_score(out);
        }
        return run_propose(need_dataset(), cfg).dump(2) + "\n";
    };

    for (std::size_t i = 0; i < kStages.size(); ++i) {
        const std::string& stage = kStages[i];
        auto& status = run.stages[i];
        const auto s0 = std::chrono::steady_clock::now();
        try {
            if (auto hit = cache.get(stage, digests.at(stage), &run.warnings)) {
                payloads[stage] = std::move(*hit);
                status.state = StageState::cached;
            } else {
                std::string payload = compute(stage);
                cache.put(stage, digests.at(stage), payload);
                payloads[stage] = std::move(payload);
                status.state = StageState::done;
            }
            if (stage == "score" && (status.state == StageState::done || !fs::exists(outputs.dataset) ||
                                     !fs::exists(outputs.embeddings) || !fs::exists(outputs.scores))) {
                const auto [text, tensor] = unpack_score(payloads.at("score"));
                write_output(outputs.dataset, json::parse(text).dump(1) + "\n");
                write_output(outputs.embeddings, tensor);
                write_output(outputs.scores, scores_tsv(need_dataset(), cfg.weights));
            }
            if (stage == "propose" && (status.state == StageState::done || !fs::exists(outputs.proposals)))
                write_output(outputs.proposals, payloads.at("propose"));
        } catch (const std::exception& e) {
            status.state = StageState::failed;
            status.error = e.what();
            status.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - s0).count();
            run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            throw;
        }
        status.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - s0).count();
        if (options.until && *options.until == stage) break;
    }
    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return run;
}

Dataset load_dataset(const fs::path& bundle_root) {
    const auto paths = ingest::bundle_paths(bundle_root);
    const auto out = output_paths(paths);
    if (!fs::exists(out.dataset))
        throw ArtifactMissingError("no dataset for bundle " + bundle_root.string() + "; run the pipeline first",
                                   {out.dataset.string()});
    try {
        return dataset_from_json(json::parse(read_file(out.dataset)));
    } catch (const json::parse_error& e) {
        throw ParseError(out.dataset.string() + ": " + e.what());
    }
}

json reference_report(const fs::path& bundle_root, const ingest::TensorFile& references,
                      const selection::MatchThresholds& thresholds) {
    const auto paths = ingest::bundle_paths(bundle_root);
    const auto out = output_paths(paths);
    const Dataset ds = load_dataset(bundle_root);
    const auto frame_emb = ingest::read_tensor_file(paths.frame_embeddings);
    const auto cand_emb = ingest::read_tensor_file(out.embeddings);
    if (references.dim != frame_emb.dim || references.dim != cand_emb.dim)
        throw ValidationError("reference dimension " + std::to_string(references.dim) + " does not match embeddings (" +
                              std::to_string(frame_emb.dim) + ")");

    auto rows_of = [](const ingest::TensorFile& t, const std::string& key, const std::string& id) {
        const auto row = t.find(key);
        if (!row) throw ArtifactMissingError("embedding missing for " + key, {key});
        const auto r = t.row(*row);
        return selection::EmbeddedCandidate{id, std::vector<float>(r.begin(), r.end())};
    };
    std::vector<selection::EmbeddedCandidate> keyframes, proposed;
    for (const auto& f : ds.frames)
        keyframes.push_back(rows_of(frame_emb, std::to_string(f.frame_id), "frame_" + std::to_string(f.frame_id)));
    std::set<std::string> seen;
    const auto proposals = json::parse(read_file(out.proposals));
    for (const auto& set : proposals.at("proposals"))
        for (const auto& section : set.at("sections"))
            for (const auto& e : section.at("entries")) {
                const auto id = e.at("candidate_id").get<std::string>();
                if (seen.insert(id).second) proposed.push_back(rows_of(cand_emb, id, id));
            }

    json scopes = json::object();
    json per_reference = json::array();
    for (std::size_t i = 0; i < references.rows(); ++i) per_reference.push_back({{"reference", references.row_ids[i]}});
    auto run_scope = [&](const std::string& name, const std::vector<selection::EmbeddedCandidate>& pool) {
        std::map<std::string, int> counts{{"exact", 0}, {"similar", 0}, {"none", 0}};
        double sum = 0.0;
        for (std::size_t i = 0; i < references.rows(); ++i) {
            if (pool.empty()) break;
            const auto r = selection::evaluate_against_reference(pool, references.row(i), thresholds);
            ++counts[std::string(selection::to_string(r.tier))];
            sum += r.best_similarity;
            per_reference[i][name] = {{"candidate_id", r.candidate_id},
                                      {"similarity", r.best_similarity},
                                      {"tier", selection::to_string(r.tier)}};
        }
        const double n = double(references.rows());
        scopes[name] = {{"pool", pool.size()},
                        {"counts", counts},
                        {"exact_rate", n > 0 && !pool.empty() ? counts["exact"] / n : 0.0},
                        {"similar_or_better_rate", n > 0 && !pool.empty() ? (counts["exact"] + counts["similar"]) / n : 0.0},
                        {"mean_best_similarity", n > 0 && !pool.empty() ? sum / n : 0.0}};
    };
    run_scope("keyframes", keyframes);
    run_scope("proposals", proposed);
    return {{"video_id", ds.video_id},
            {"thresholds", {{"exact", thresholds.exact}, {"similar", thresholds.similar}}},
            {"references", references.rows()},
            {"scopes", scopes},
            {"per_reference", per_reference}};
}

}  // namespace framepick::pipeline
