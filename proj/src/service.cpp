// SPDX-License-Identifier: Apache-2.0
#include "framepick/service.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "framepick/fsio.hpp"
#include "framepick/image.hpp"
#include "framepick/pipeline.hpp"
#include "framepick/remote.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace framepick::service {

// ---------------------------------------------------------------------------
// Selections log
// ---------------------------------------------------------------------------

json to_json(const SelectionRecord& r) {
    json j = {{"seq", r.seq},
              {"video_id", r.video_id},
              {"candidate_id", r.candidate_id},
              {"aspect", r.aspect},
              {"chosen_by", r.chosen_by},
              {"chosen_at", r.chosen_at},
              {"note", r.note},
              {"action", r.action}};
    if (!r.request_id.empty()) j["request_id"] = r.request_id;
    return j;
}

SelectionRecord selection_from_json(const json& j) {
    SelectionRecord r;
    r.seq = j.at("seq").get<std::uint64_t>();
    r.video_id = j.at("video_id").get<std::string>();
    r.candidate_id = j.at("candidate_id").get<std::string>();
    r.aspect = j.at("aspect").get<std::string>();
    r.chosen_by = j.at("chosen_by").get<std::string>();
    r.chosen_at = j.at("chosen_at").get<std::string>();
    r.note = j.value("note", std::string{});
    r.action = j.value("action", std::string("select"));
    r.request_id = j.value("request_id", std::string{});
    return r;
}

SelectionLog::SelectionLog(fs::path path, std::vector<std::string>* warnings) : path_(std::move(path)) {
    if (!fs::exists(path_)) return;
    const std::string text = read_file(path_);
    std::size_t pos = 0, good_end = 0;
    int line_no = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        ++line_no;
        const bool complete = nl != std::string::npos;
        const std::string line = text.substr(pos, complete ? nl - pos : std::string::npos);
        const std::size_t next = complete ? nl + 1 : text.size();
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            if (complete) good_end = next;
            pos = next;
            continue;
        }
        try {
            if (!complete) throw ParseError("unterminated line");
            records_.push_back(selection_from_json(json::parse(line)));
            good_end = next;
        } catch (const std::exception& e) {
            if (next < text.size())
                throw ParseError(path_.string() + ": line " + std::to_string(line_no) + ": " + e.what());
            // Torn tail: drop it so later appends start on a clean line.
            if (warnings)
                warnings->push_back(path_.string() + ": dropped incomplete final record (" +
                                    std::to_string(text.size() - pos) + " bytes)");
        }
        pos = next;
    }
    if (good_end < text.size()) fs::resize_file(path_, good_end);
}

SelectionRecord SelectionLog::append(SelectionRecord r,
                                     const std::function<void(const SelectionRecord&)>& after_durable) {
    std::lock_guard lock(mutex_);
    r.seq = records_.empty() ? 1 : records_.back().seq + 1;
    fs::create_directories(path_.parent_path());
    durable_append(path_, to_json(r).dump() + "\n");
    records_.push_back(r);
    if (after_durable) after_durable(r);
    return r;
}

std::vector<SelectionRecord> SelectionLog::all() const {
    std::lock_guard lock(mutex_);
    return records_;
}

std::vector<SelectionRecord> SelectionLog::latest() const {
    std::lock_guard lock(mutex_);
    std::map<std::pair<std::string, std::string>, const SelectionRecord*> last;
    for (const auto& r : records_) last[{r.aspect, r.candidate_id}] = &r;
    std::vector<SelectionRecord> out;
    for (const auto& [key, r] : last)
        if (r->action == "select") out.push_back(*r);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.seq < b.seq; });
    return out;
}

std::optional<SelectionRecord> SelectionLog::find_request(const std::string& request_id) const {
    std::lock_guard lock(mutex_);
    for (const auto& r : records_)
        if (r.request_id == request_id) return r;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Request parsing
// ---------------------------------------------------------------------------

namespace {

template <class T>
std::optional<T> field(const json& obj, const std::string& key, const std::string& path,
                       std::vector<FieldError>& errors) {
    if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
    try {
        const auto& v = obj.at(key);
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw std::invalid_argument("expected a boolean");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw std::invalid_argument("expected a number");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw std::invalid_argument("expected a string");
        }
        return v.get<T>();
    } catch (const std::exception& e) {
        errors.push_back({path + key, e.what()});
        return std::nullopt;
    }
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& path,
                    std::vector<FieldError>& errors) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return it.key() == k; }))
            errors.push_back({path + it.key(), "unknown field"});
}

template <class T, class Parse>
std::vector<T> string_list(const json& obj, const std::string& key, const std::string& path,
                           std::vector<FieldError>& errors, Parse parse) {
    std::vector<T> out;
    if (!obj.contains(key)) return out;
    const auto& v = obj.at(key);
    if (!v.is_array()) {
        errors.push_back({path + key, "expected an array"});
        return out;
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        try {
            out.push_back(parse(v[i]));
        } catch (const std::exception& e) {
            errors.push_back({path + key + "[" + std::to_string(i) + "]", e.what()});
        }
    }
    return out;
}

std::string lower(std::string s) {
    for (auto& ch : s) ch = char(std::tolower(static_cast<unsigned char>(ch)));
    return s;
}

}  // namespace

selection::SearchQuery parse_search_query(const json& body, std::vector<FieldError>& errors,
                                          const scoring::WeightConfig& default_weights) {
    selection::SearchQuery q;
    q.weights = default_weights;
    if (!body.is_object()) {
        errors.push_back({"", "body must be a JSON object"});
        return q;
    }
    reject_unknown(body, {"aspect", "filters", "keywords", "weights", "page", "page_size", "reverse", "dedup_groups"},
                   "", errors);
    if (auto a = field<std::string>(body, "aspect", "", errors)) {
        try {
            q.aspect = parse_aspect(*a);
        } catch (const std::exception& e) {
            errors.push_back({"aspect", e.what()});
        }
    }
    if (body.contains("filters")) {
        const auto& f = body.at("filters");
        if (!f.is_object()) {
            errors.push_back({"filters", "expected an object"});
        } else {
            reject_unknown(f, {"min_faces", "max_faces", "emotions", "eyes_open_only", "clusters", "shot_scales"},
                           "filters.", errors);
            q.filters.min_faces = field<int>(f, "min_faces", "filters.", errors);
            q.filters.max_faces = field<int>(f, "max_faces", "filters.", errors);
            if (q.filters.min_faces && *q.filters.min_faces < 0)
                errors.push_back({"filters.min_faces", "must be >= 0"});
            if (q.filters.max_faces && *q.filters.max_faces < 0)
                errors.push_back({"filters.max_faces", "must be >= 0"});
            q.filters.eyes_open_only = field<bool>(f, "eyes_open_only", "filters.", errors).value_or(false);
            q.filters.emotions = string_list<Emotion>(f, "emotions", "filters.", errors,
                                                      [](const json& v) { return parse_emotion(v.get<std::string>()); });
            q.filters.shot_scales = string_list<ShotScale>(
                f, "shot_scales", "filters.", errors, [](const json& v) { return parse_shot_scale(v.get<std::string>()); });
            q.filters.clusters = string_list<int>(f, "clusters", "filters.", errors, [](const json& v) {
                if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
                return v.get<int>();
            });
        }
    }
    q.keywords = string_list<std::string>(body, "keywords", "", errors, [](const json& v) {
        if (!v.is_string()) throw std::invalid_argument("expected a string");
        return v.get<std::string>();
    });
    if (body.contains("weights")) {
        const auto& w = body.at("weights");
        if (!w.is_object()) {
            errors.push_back({"weights", "expected an object"});
        } else {
            reject_unknown(w, {"aesthetic", "semantic", "logo", "face_position", "on_face_focus", "face_aggregation"},
                           "weights.", errors);
            q.weights.aesthetic = field<double>(w, "aesthetic", "weights.", errors).value_or(q.weights.aesthetic);
            q.weights.semantic = field<double>(w, "semantic", "weights.", errors).value_or(q.weights.semantic);
            q.weights.logo = field<double>(w, "logo", "weights.", errors).value_or(q.weights.logo);
            q.weights.face_position =
                field<double>(w, "face_position", "weights.", errors).value_or(q.weights.face_position);
            q.weights.on_face_focus =
                field<double>(w, "on_face_focus", "weights.", errors).value_or(q.weights.on_face_focus);
            if (auto agg = field<std::string>(w, "face_aggregation", "weights.", errors)) {
                try {
                    q.weights.face_aggregation = scoring::parse_face_aggregation(*agg);
                } catch (const std::exception& e) {
                    errors.push_back({"weights.face_aggregation", e.what()});
                }
            }
            try {
                q.weights.validate();
            } catch (const std::exception& e) {
                errors.push_back({"weights", e.what()});
            }
        }
    }
    q.page = field<int>(body, "page", "", errors).value_or(0);
    q.page_size = field<int>(body, "page_size", "", errors).value_or(24);
    if (q.page < 0) errors.push_back({"page", "must be >= 0"});
    if (q.page_size < 1 || q.page_size > 500) errors.push_back({"page_size", "must be in [1, 500]"});
    q.reverse = field<bool>(body, "reverse", "", errors).value_or(false);
    q.dedup_groups = field<bool>(body, "dedup_groups", "", errors).value_or(true);
    return q;
}

ApiResponse error_response(int status, const std::string& message, const std::vector<FieldError>& fields) {
    static const std::map<int, std::string> codes{{400, "bad_request"},    {404, "not_found"},
                                                  {405, "method_not_allowed"}, {409, "conflict"},
                                                  {422, "unprocessable"},  {500, "internal"},
                                                  {502, "upstream_failed"}};
    json err = {{"status", status}, {"code", codes.count(status) ? codes.at(status) : "error"}, {"message", message}};
    if (!fields.empty()) {
        json f = json::array();
        for (const auto& e : fields) f.push_back({{"field", e.field}, {"message", e.message}});
        err["fields"] = f;
    }
    return {status, "application/json", json{{"error", err}}.dump()};
}

// ---------------------------------------------------------------------------
// Service
// ---------------------------------------------------------------------------

struct Service::Video {
    fs::path root;
    std::string video_id;
    std::string title;
    int frame_count = 0;

    std::mutex load_mutex;   // first load and reloads
    std::mutex snap_mutex;   // guards the pointer only
    std::shared_ptr<const Snapshot> snap;
    std::mutex write_mutex;  // one writer per video
    std::unique_ptr<SelectionLog> log;
    std::vector<std::string> warnings;

    [[nodiscard]] std::shared_ptr<const Snapshot> current() {
        std::lock_guard lock(snap_mutex);
        return snap;
    }
    void publish(std::shared_ptr<const Snapshot> s) {
        std::lock_guard lock(snap_mutex);
        snap = std::move(s);
    }
    [[nodiscard]] fs::path keywords_log() const { return ingest::bundle_paths(root).state_dir / "keywords.jsonl"; }
};

namespace {

struct HttpError : Error {
    HttpError(int s, const std::string& what, std::vector<FieldError> f = {})
        : Error(what), status(s), fields(std::move(f)) {}
    int status;
    std::vector<FieldError> fields;
};

ApiResponse ok_json(const json& j, int status = 200) { return {status, "application/json", j.dump()}; }

json rect_json(const Rect& r) { return json::array({r.x, r.y, r.w, r.h}); }

std::vector<double> keyword_cosines(const Dataset& ds, const ingest::TensorFile& emb, std::span<const float> kw) {
    std::vector<double> out;
    out.reserve(ds.candidates.size());
    for (const auto& c : ds.candidates) {
        const auto row = emb.find(c.id);
        if (!row) throw ArtifactMissingError("candidate embedding missing for " + c.id, {c.id});
        out.push_back(cosine_similarity(emb.row(*row), kw));
    }
    return out;
}

json hit_json(const Candidate& c, const selection::Ranked& r) {
    return {{"candidate_id", c.id},
            {"frame_id", c.frame_id},
            {"timestamp_s", c.timestamp_s},
            {"shot_id", c.shot_id},
            {"group_id", c.group_id},
            {"aspect", c.aspect.name},
            {"rect", rect_json(c.rect)},
            {"face_centered", c.face_centered},
            {"alternate", c.alternate},
            {"faces", c.faces.size()},
            {"shot_scale", to_string(c.shot_scale)},
            {"final", r.final},
            {"scores", selection::to_json(r.scores)}};
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : path) {
        if (ch == '/') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

json parse_body(const std::string& body) {
    if (body.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
    try {
        return json::parse(body);
    } catch (const json::parse_error& e) {
        throw HttpError(400, "request body is not valid JSON", {{"", e.what()}});
    }
}

}  // namespace

Service::Service(const std::vector<fs::path>& bundles, EngineConfig cfg) : cfg_(std::move(cfg)) {
    for (const auto& root : bundles) {
        const auto manifest = ingest::load_manifest(ingest::bundle_paths(root).manifest);
        if (videos_.count(manifest.video_id))
            throw ConfigError("two bundles share video id '" + manifest.video_id + "'");
        auto v = std::make_unique<Video>();
        v->root = root;
        v->video_id = manifest.video_id;
        v->title = manifest.title;
        v->frame_count = manifest.frame_count;
        v->log = std::make_unique<SelectionLog>(ingest::bundle_paths(root).state_dir / "selections.jsonl",
                                                &v->warnings);
        videos_[manifest.video_id] = std::move(v);
    }
}

Service::~Service() = default;

std::vector<std::string> Service::video_ids() const {
    std::vector<std::string> out;
    for (const auto& [id, v] : videos_) out.push_back(id);
    return out;
}

Service::Video& Service::video(const std::string& id) {
    const auto it = videos_.find(id);
    if (it == videos_.end()) throw HttpError(404, "unknown video '" + id + "'");
    return *it->second;
}

std::shared_ptr<const Snapshot> Service::load_snapshot(Video& v) {
    auto snap = std::make_shared<Snapshot>();
    auto ds = std::make_shared<Dataset>(pipeline::load_dataset(v.root));
    ds->reindex();
    const auto paths = ingest::bundle_paths(v.root);
    const auto out = pipeline::output_paths(paths);
    snap->proposals = std::make_shared<const json>(fs::exists(out.proposals) ? json::parse(read_file(out.proposals))
                                                                             : json::object());
    if (fs::exists(out.embeddings))
        snap->embeddings = std::make_shared<const ingest::TensorFile>(ingest::read_tensor_file(out.embeddings));
    for (const auto& f : ingest::read_frames_index(paths.frames_index)) snap->frame_files[f.frame_id] = f.file;

    // Replay user keywords; an unterminated last line is ignored.
    const fs::path kw = v.keywords_log();
    if (fs::exists(kw) && snap->embeddings) {
        const std::string text = read_file(kw);
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j;
            try {
                j = json::parse(line);
            } catch (const json::parse_error&) {
                v.warnings.push_back(kw.string() + ": skipped unreadable keyword record");
                continue;
            }
            const auto text_kw = j.at("text").get<std::string>();
            const auto e = j.at("embedding").get<std::vector<float>>();
            if (snap->extra.count(text_kw) || int(e.size()) != snap->embeddings->dim) continue;
            snap->extra[text_kw] = keyword_cosines(*ds, *snap->embeddings, e);
            snap->user_keywords.push_back(text_kw);
        }
    }
    snap->dataset = std::move(ds);
    return snap;
}

std::shared_ptr<const Snapshot> Service::snapshot(const std::string& video_id) {
    auto it = videos_.find(video_id);
    if (it == videos_.end()) throw ArtifactMissingError("unknown video '" + video_id + "'", {video_id});
    Video& v = *it->second;
    if (auto s = v.current()) return s;
    std::lock_guard lock(v.load_mutex);
    if (auto s = v.current()) return s;
    auto s = load_snapshot(v);
    v.publish(s);
    return s;
}

void Service::reload(const std::string& video_id) {
    Video& v = video(video_id);
    std::lock_guard lock(v.load_mutex);
    std::lock_guard write(v.write_mutex);
    v.publish(load_snapshot(v));
}

ApiResponse Service::handle(const ApiRequest& req) {
    try {
        const auto seg = split_path(req.path);
        const bool get = req.method == "GET", post = req.method == "POST";
        auto method_not_allowed = [&] { return error_response(405, req.method + " not allowed on " + req.path); };
        if (seg.empty() || seg[0] != "videos") return error_response(404, "no route for " + req.path);
        if (seg.size() == 1) return get ? list_videos() : method_not_allowed();
        Video& v = video(seg[1]);
        if (seg.size() == 2) return get ? get_video(v) : method_not_allowed();
        const std::string& what = seg[2];
        if (seg.size() == 3) {
            if (what == "proposals") return get ? get_proposals(v, req) : method_not_allowed();
            if (what == "search") return post ? post_search(v, req) : method_not_allowed();
            if (what == "score-distributions") return get ? get_distributions(v, req) : method_not_allowed();
            if (what == "selections") {
                if (get) return get_selections(v);
                if (post) return post_selection(v, req);
                return method_not_allowed();
            }
            if (what == "keywords") {
                if (post) return post_keyword(v, req);
                if (get) {
                    const auto snap = snapshot(v.video_id);
                    json list = json::array();
                    for (const auto& k : snap->dataset->keywords)
                        list.push_back({{"keyword", k.text}, {"source", to_string(k.source)}});
                    for (const auto& k : snap->user_keywords)
                        list.push_back({{"keyword", k}, {"source", to_string(KeywordSource::user_added)}});
                    return ok_json({{"video_id", v.video_id}, {"keywords", list}});
                }
                return method_not_allowed();
            }
            if (what == "reload") {
                if (!post) return method_not_allowed();
                reload(v.video_id);
                return ok_json({{"video_id", v.video_id}, {"reloaded", true}});
            }
        }
        if (seg.size() == 4) {
            if (what == "groups") return get ? get_group(v, seg[3]) : method_not_allowed();
            if (what == "images") return get ? get_image(v, seg[3], req) : method_not_allowed();
        }
        return error_response(404, "no route for " + req.path);
    } catch (const HttpError& e) {
        return error_response(e.status, e.what(), e.fields);
    } catch (const ArtifactMissingError& e) {
        return error_response(404, e.what());
    } catch (const ValidationError& e) {
        return error_response(400, e.what());
    } catch (const ConfigError& e) {
        return error_response(400, e.what());
    } catch (const std::exception& e) {
        return error_response(500, e.what());
    }
}

ApiResponse Service::list_videos() {
    json list = json::array();
    for (const auto& [id, v] : videos_)
        list.push_back({{"video_id", id}, {"title", v->title}, {"frame_count", v->frame_count}});
    return ok_json({{"videos", list}});
}

ApiResponse Service::get_video(Video& v) {
    const auto snap = snapshot(v.video_id);
    const Dataset& ds = *snap->dataset;
    json aspects = json::array();
    for (const auto& a : ds.aspects) {
        const auto n = std::count_if(ds.candidates.begin(), ds.candidates.end(),
                                     [&](const Candidate& c) { return c.aspect == a; });
        aspects.push_back({{"aspect", a.name}, {"candidates", n}});
    }
    json keywords = json::array();
    for (const auto& k : ds.keywords) keywords.push_back(k.text);
    for (const auto& k : snap->user_keywords) keywords.push_back(k);
    json clusters = json::array();
    for (const auto& c : ds.face_clusters)
        clusters.push_back({{"cluster_id", c.cluster_id}, {"size", c.size}, {"faces", c.face_ids.size()}});
    json curve = json::array();
    for (const auto& p : ds.face_cluster_curve)
        curve.push_back({{"k", p.k}, {"score", p.score}, {"clusters", p.clusters}, {"noise", p.noise}});
    json presets = json::array();
    for (auto p : {selection::Preset::main_characters, selection::Preset::per_emotion, selection::Preset::per_keyword})
        presets.push_back(selection::to_string(p));
    return ok_json({{"video_id", ds.video_id},
                    {"title", ds.title},
                    {"summary", ds.summary},
                    {"fps", ds.fps},
                    {"frame_count", ds.frame_count},
                    {"width", ds.width},
                    {"height", ds.height},
                    {"letterbox", {ds.letterbox_top, ds.letterbox_bottom}},
                    {"keyframes", ds.frames.size()},
                    {"groups", ds.groups.size()},
                    {"candidates", ds.candidates.size()},
                    {"aspects", aspects},
                    {"keywords", keywords},
                    {"face_clusters", clusters},
                    {"face_clusters_need_manual_parameters", ds.face_clusters_need_manual_parameters},
                    {"face_cluster_search", {{"chosen_k", ds.face_cluster_k}, {"score_curve", curve}}},
                    {"presets", presets},
                    {"config_digest", ds.config_digest},
                    {"warnings", ds.warnings}});
}

ApiResponse Service::get_proposals(Video& v, const ApiRequest& req) {
    const auto snap = snapshot(v.video_id);
    std::vector<FieldError> errors;
    std::optional<std::string> preset, aspect;
    for (const auto& [k, val] : req.query) {
        if (k == "preset") {
            try {
                preset = std::string(selection::to_string(selection::parse_preset(val)));
            } catch (const std::exception& e) {
                errors.push_back({"preset", e.what()});
            }
        } else if (k == "aspect") {
            try {
                const auto tag = parse_aspect(val);
                const auto& as = snap->dataset->aspects;
                if (std::find(as.begin(), as.end(), tag) == as.end())
                    errors.push_back({"aspect", "no candidates for aspect '" + tag.name + "'"});
                aspect = tag.name;
            } catch (const std::exception& e) {
                errors.push_back({"aspect", e.what()});
            }
        } else {
            errors.push_back({k, "unknown query parameter"});
        }
    }
    if (!errors.empty()) throw HttpError(400, "invalid proposals query", errors);
    json list = json::array();
    if (snap->proposals->contains("proposals"))
        for (const auto& p : snap->proposals->at("proposals")) {
            if (preset && p.at("preset") != *preset) continue;
            if (aspect && p.at("aspect") != *aspect) continue;
            list.push_back(p);
        }
    return ok_json({{"video_id", v.video_id}, {"proposals", list}});
}

ApiResponse Service::post_search(Video& v, const ApiRequest& req) {
    const auto snap = snapshot(v.video_id);
    const Dataset& ds = *snap->dataset;
    std::vector<FieldError> errors;
    const auto q = parse_search_query(parse_body(req.body), errors, cfg_.weights);
    if (std::find(ds.aspects.begin(), ds.aspects.end(), q.aspect) == ds.aspects.end())
        errors.push_back({"aspect", "no candidates for aspect '" + q.aspect.name + "'"});
    for (std::size_t i = 0; i < q.keywords.size(); ++i)
        if (ds.keyword_index(q.keywords[i]) < 0 && !snap->extra.count(q.keywords[i]))
            errors.push_back({"keywords[" + std::to_string(i) + "]",
                              "unknown keyword '" + q.keywords[i] + "'; register it via POST keywords first"});
    if (!errors.empty()) throw HttpError(400, "invalid search query", errors);
    const auto result = selection::search(ds, q, &snap->extra);
    json hits = json::array();
    for (const auto& r : result.hits) hits.push_back(hit_json(ds.candidates[r.index], r));
    return ok_json({{"video_id", v.video_id},
                    {"aspect", q.aspect.name},
                    {"page", q.page},
                    {"page_size", q.page_size},
                    {"total", result.total},
                    {"hits", hits},
                    {"facets", result.facets}});
}

ApiResponse Service::get_group(Video& v, const std::string& gid_text) {
    const auto snap = snapshot(v.video_id);
    const Dataset& ds = *snap->dataset;
    int gid = 0;
    try {
        std::size_t used = 0;
        gid = std::stoi(gid_text, &used);
        if (used != gid_text.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
        throw HttpError(400, "group id must be an integer", {{"gid", "not an integer: '" + gid_text + "'"}});
    }
    const auto g = std::find_if(ds.groups.begin(), ds.groups.end(),
                                [&](const grouping::Group& x) { return x.group_id == gid; });
    if (g == ds.groups.end()) throw HttpError(404, "unknown group " + gid_text);
    std::map<int, json> variants;
    const auto it = ds.by_group.find(gid);
    if (it != ds.by_group.end())
        for (std::size_t idx : it->second) {
            const auto& c = ds.candidates[idx];
            variants[c.frame_id].push_back({{"candidate_id", c.id},
                                            {"aspect", c.aspect.name},
                                            {"rect", rect_json(c.rect)},
                                            {"alternate", c.alternate},
                                            {"face_centered", c.face_centered}});
        }
    json members = json::array();
    for (int fid : g->members) {
        const auto fr = std::find_if(ds.frames.begin(), ds.frames.end(),
                                     [&](const FrameRecord& f) { return f.frame_id == fid; });
        json m = {{"frame_id", fid}, {"variants", variants.count(fid) ? variants[fid] : json::array()}};
        if (fr != ds.frames.end()) {
            m["timestamp_s"] = fr->timestamp_s;
            m["shot_id"] = fr->shot_id;
        }
        members.push_back(m);
    }
    return ok_json({{"video_id", v.video_id},
                    {"group_id", gid},
                    {"representative", g->representative},
                    {"members", members}});
}

ApiResponse Service::get_image(Video& v, const std::string& candidate, const ApiRequest& req) {
    const auto snap = snapshot(v.video_id);
    const Dataset& ds = *snap->dataset;
    const Candidate* c = ds.find(candidate);
    if (!c) throw HttpError(404, "unknown candidate '" + candidate + "'");
    for (const auto& [k, val] : req.query)
        if (k != "aspect") throw HttpError(400, "invalid image query", {{k, "unknown query parameter"}});
    if (const auto a = req.query.find("aspect"); a != req.query.end()) {
        AspectTag tag;
        try {
            tag = parse_aspect(a->second);
        } catch (const std::exception& e) {
            throw HttpError(400, "invalid image query", {{"aspect", e.what()}});
        }
        if (!(tag == c->aspect)) {
            const Candidate* sibling = nullptr;
            for (const auto& other : ds.candidates)
                if (other.frame_id == c->frame_id && other.aspect == tag && !other.alternate) sibling = &other;
            if (!sibling) throw HttpError(404, "no " + tag.name + " variant for frame " + std::to_string(c->frame_id));
            c = sibling;
        }
    }
    const auto paths = ingest::bundle_paths(v.root);
    const Rect& r = c->rect;
    const fs::path cached = paths.cache_dir / "images" /
                            (c->id + "_" + (c->aspect.is_original() ? "original" : c->aspect.slug()) + "_" +
                             std::to_string(r.x) + "_" + std::to_string(r.y) + "_" + std::to_string(r.w) + "_" +
                             std::to_string(r.h) + ".png");
    if (fs::exists(cached)) return {200, "image/png", read_file(cached)};
    const auto file = snap->frame_files.find(c->frame_id);
    if (file == snap->frame_files.end()) throw HttpError(404, "frame " + std::to_string(c->frame_id) + " not indexed");
    const Image frame = read_image(paths.frames_dir / file->second);
    const Image cut = crop(frame, {r.x, r.y + ds.letterbox_top, r.w, r.h});
    std::string png = encode_png(cut);
    fs::create_directories(cached.parent_path());
    atomic_write_file(cached, png);
    return {200, "image/png", std::move(png)};
}

ApiResponse Service::get_distributions(Video& v, const ApiRequest& req) {
    const auto snap = snapshot(v.video_id);
    const Dataset& ds = *snap->dataset;
    AspectTag tag = ds.aspects.empty() ? parse_aspect("original") : ds.aspects.front();
    for (const auto& [k, val] : req.query) {
        if (k != "aspect") throw HttpError(400, "invalid distribution query", {{k, "unknown query parameter"}});
        try {
            tag = parse_aspect(val);
        } catch (const std::exception& e) {
            throw HttpError(400, "invalid distribution query", {{"aspect", e.what()}});
        }
        if (std::find(ds.aspects.begin(), ds.aspects.end(), tag) == ds.aspects.end())
            throw HttpError(400, "invalid distribution query", {{"aspect", "no candidates for aspect '" + val + "'"}});
    }
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < ds.candidates.size(); ++i)
        if (ds.candidates[i].aspect == tag) idx.push_back(i);
    const int bins = cfg_.service.histogram_bins;
    json edges = json::array();
    for (int b = 0; b <= bins; ++b) edges.push_back(double(b) / bins);

    json columns = json::object();
    auto histogram = [&](const std::string& name, const std::vector<std::optional<double>>& values) {
        std::vector<int> counts(static_cast<std::size_t>(bins), 0);
        int missing = 0;
        for (const auto& x : values) {
            if (!x) {
                ++missing;
                continue;
            }
            const int b = std::clamp(int(std::floor(*x * bins)), 0, bins - 1);
            ++counts[std::size_t(b)];
        }
        columns[name] = {{"counts", counts}, {"missing", missing}};
    };
    auto column = [&](auto get) {
        std::vector<std::optional<double>> out;
        for (auto i : idx) out.push_back(get(ds.candidates[i]));
        return out;
    };
    histogram("aesthetic", column([](const Candidate& c) { return std::optional<double>(c.norm.aesthetic); }));
    histogram("logo", column([](const Candidate& c) { return std::optional<double>(c.norm.logo); }));
    histogram("face_position_max", column([](const Candidate& c) { return c.norm.position_max; }));
    histogram("face_position_mean", column([](const Candidate& c) { return c.norm.position_mean; }));
    histogram("on_face_focus_max", column([](const Candidate& c) { return c.norm.focus_max; }));
    histogram("on_face_focus_mean", column([](const Candidate& c) { return c.norm.focus_mean; }));
    auto semantic = [&](const std::string& name, const std::vector<double>& raw) {
        auto norm = scoring::normalize_column(raw);
        std::vector<std::optional<double>> vals(norm.begin(), norm.end());
        histogram("semantic:" + name, vals);
    };
    for (std::size_t k = 0; k < ds.keywords.size(); ++k) {
        std::vector<double> raw;
        for (auto i : idx) raw.push_back(ds.candidates[i].raw.semantic[k]);
        semantic(ds.keywords[k].text, raw);
    }
    for (const auto& kw : snap->user_keywords) {
        std::vector<double> raw;
        for (auto i : idx) raw.push_back(snap->extra.at(kw)[i]);
        semantic(kw, raw);
    }
    return ok_json({{"video_id", v.video_id},
                    {"aspect", tag.name},
                    {"candidates", idx.size()},
                    {"bins", bins},
                    {"edges", edges},
                    {"columns", columns}});
}

ApiResponse Service::post_selection(Video& v, const ApiRequest& req) {
    const auto snap = snapshot(v.video_id);
    const json body = parse_body(req.body);
    std::vector<FieldError> errors;
    if (!body.is_object()) throw HttpError(400, "body must be a JSON object");
    reject_unknown(body, {"candidate_id", "aspect", "chosen_by", "note", "action", "request_id"}, "", errors);
    const auto candidate = field<std::string>(body, "candidate_id", "", errors);
    const auto chosen_by = field<std::string>(body, "chosen_by", "", errors);
    const auto aspect = field<std::string>(body, "aspect", "", errors);
    const auto note = field<std::string>(body, "note", "", errors);
    const auto action = field<std::string>(body, "action", "", errors);
    const auto request_id = field<std::string>(body, "request_id", "", errors);
    if (!candidate || candidate->empty()) errors.push_back({"candidate_id", "required"});
    if (!chosen_by || chosen_by->find_first_not_of(" \t") == std::string::npos)
        errors.push_back({"chosen_by", "required"});
    if (action && *action != "select" && *action != "deselect")
        errors.push_back({"action", "must be 'select' or 'deselect'"});
    if (!errors.empty()) throw HttpError(400, "invalid selection", errors);

    const Candidate* c = snap->dataset->find(*candidate);
    if (!c) throw HttpError(404, "unknown candidate '" + *candidate + "'");
    if (aspect) {
        std::string name;
        try {
            name = parse_aspect(*aspect).name;
        } catch (const std::exception& e) {
            throw HttpError(400, "invalid selection", {{"aspect", e.what()}});
        }
        if (name != c->aspect.name)
            throw HttpError(409, "candidate '" + c->id + "' is a " + c->aspect.name + " crop, not " + name);
    }

    std::lock_guard lock(v.write_mutex);
    if (request_id && !request_id->empty())
        if (auto prior = v.log->find_request(*request_id)) return ok_json({{"selection", to_json(*prior)}}, 200);
    SelectionRecord r;
    r.video_id = v.video_id;
    r.candidate_id = c->id;
    r.aspect = c->aspect.name;
    r.chosen_by = *chosen_by;
    r.chosen_at = utc_timestamp();
    r.note = note.value_or("");
    r.action = action.value_or("select");
    r.request_id = request_id.value_or("");
    r = v.log->append(r, after_selection_durable);
    return ok_json({{"selection", to_json(r)}}, 201);
}

ApiResponse Service::get_selections(Video& v) {
    json list = json::array();
    for (const auto& r : v.log->latest()) list.push_back(to_json(r));
    return ok_json({{"video_id", v.video_id}, {"selections", list}, {"log_records", v.log->all().size()}});
}

ApiResponse Service::post_keyword(Video& v, const ApiRequest& req) {
    const json body = parse_body(req.body);
    std::vector<FieldError> errors;
    if (!body.is_object()) throw HttpError(400, "body must be a JSON object");
    reject_unknown(body, {"text", "embedding"}, "", errors);
    auto text = field<std::string>(body, "text", "", errors);
    if (!text || text->find_first_not_of(" \t\r\n") == std::string::npos) errors.push_back({"text", "required"});
    std::optional<std::vector<float>> embedding;
    if (body.contains("embedding")) {
        const auto& e = body.at("embedding");
        if (!e.is_array() || e.empty() || !std::all_of(e.begin(), e.end(), [](const json& x) { return x.is_number(); }))
            errors.push_back({"embedding", "expected a non-empty array of numbers"});
        else
            embedding = e.get<std::vector<float>>();
    }
    if (!errors.empty()) throw HttpError(400, "invalid keyword", errors);

    (void)snapshot(v.video_id);  // load outside the write lock
    std::lock_guard lock(v.write_mutex);
    const auto snap = v.current();
    const Dataset& ds = *snap->dataset;
    const std::string key = lower(*text);
    for (const auto& k : ds.keywords)
        if (lower(k.text) == key) return ok_json({{"keyword", k.text}, {"source", to_string(k.source)}, {"existing", true}});
    for (const auto& k : snap->user_keywords)
        if (lower(k) == key)
            return ok_json({{"keyword", k}, {"source", to_string(KeywordSource::user_added)}, {"existing", true}});

    if (!snap->embeddings) throw HttpError(409, "candidate embeddings missing; rerun the pipeline");
    if (!embedding) {
        const std::string endpoint = cfg_.service.embedding_endpoint;
        if (endpoint.empty())
            return error_response(422,
                                  "keyword '" + *text +
                                      "' has no embedding and no embedding endpoint is configured; supply "
                                      "\"embedding\" in the request body (dimension " +
                                      std::to_string(snap->embeddings->dim) +
                                      ") or set service.embedding_endpoint in the config",
                                  {{"embedding", "required when no embedding endpoint is configured"}});
        try {
            embedding = ingest::fetch_text_embedding(endpoint, *text, cfg_.keywords.timeout_s);
        } catch (const std::exception& e) {
            throw HttpError(502, std::string("embedding endpoint failed: ") + e.what());
        }
    }
    if (int(embedding->size()) != snap->embeddings->dim)
        throw HttpError(400, "invalid keyword",
                        {{"embedding", "dimension " + std::to_string(embedding->size()) + ", expected " +
                                           std::to_string(snap->embeddings->dim)}});
    auto cosines = keyword_cosines(ds, *snap->embeddings, *embedding);
    fs::create_directories(v.keywords_log().parent_path());
    durable_append(v.keywords_log(), json{{"text", *text}, {"embedding", *embedding}}.dump() + "\n");
    auto next = std::make_shared<Snapshot>(*snap);
    next->extra[*text] = std::move(cosines);
    next->user_keywords.push_back(*text);
    v.publish(std::move(next));
    return ok_json({{"keyword", *text}, {"source", to_string(KeywordSource::user_added)}, {"existing", false}}, 201);
}

}  // namespace framepick::service
