// SPDX-License-Identifier: Apache-2.0
#include "framepick/dataset.hpp"

#include <algorithm>

#include "framepick/scoring.hpp"

using nlohmann::json;

namespace framepick {

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> get_opt(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

json rect_json(const Rect& r) { return json::array({r.x, r.y, r.w, r.h}); }

Rect rect_from(const json& j) {
    if (!j.is_array() || j.size() != 4) throw ParseError("rect must be [x, y, w, h]");
    return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

}  // namespace

bool Candidate::any_eyes_closed() const {
    return std::any_of(faces.begin(), faces.end(), [](const CandidateFace& f) { return f.eyes_closed; });
}

void Dataset::reindex() {
    by_id.clear();
    by_group.clear();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!by_id.emplace(candidates[i].id, i).second)
            throw ValidationError("duplicate candidate id " + candidates[i].id);
        by_group[candidates[i].group_id].push_back(i);
    }
}

const Candidate* Dataset::find(const std::string& candidate_id) const {
    const auto it = by_id.find(candidate_id);
    return it == by_id.end() ? nullptr : &candidates[it->second];
}

int Dataset::keyword_index(const std::string& text) const {
    for (std::size_t i = 0; i < keywords.size(); ++i)
        if (keywords[i].text == text) return int(i);
    return -1;
}

void normalize_scores(Dataset& ds) {
    std::map<std::string, std::vector<std::size_t>> by_aspect;
    for (std::size_t i = 0; i < ds.candidates.size(); ++i) by_aspect[ds.candidates[i].aspect.name].push_back(i);
    for (const auto& [aspect, idx] : by_aspect) {
        auto column = [&](auto get) {
            std::vector<decltype(get(ds.candidates.front()))> col;
            for (auto i : idx) col.push_back(get(ds.candidates[i]));
            return scoring::normalize_column(std::span<const typename decltype(col)::value_type>(col));
        };
        const auto aes = column([](const Candidate& c) { return c.raw.aesthetic; });
        const auto logo = column([](const Candidate& c) { return c.raw.logo; });
        const auto pmax = column([](const Candidate& c) { return c.raw.position_max; });
        const auto pmean = column([](const Candidate& c) { return c.raw.position_mean; });
        const auto fmax = column([](const Candidate& c) { return c.raw.focus_max; });
        const auto fmean = column([](const Candidate& c) { return c.raw.focus_mean; });
        for (std::size_t k = 0; k < idx.size(); ++k) {
            auto& n = ds.candidates[idx[k]].norm;
            n.aesthetic = aes[k];
            n.logo = logo[k];
            n.position_max = pmax[k];
            n.position_mean = pmean[k];
            n.focus_max = fmax[k];
            n.focus_mean = fmean[k];
        }
    }
}

json to_json(const Candidate& c) {
    json faces = json::array();
    for (const auto& f : c.faces)
        faces.push_back({{"face_id", f.face_id},
                         {"bbox", rect_json(f.bbox)},
                         {"eyes_closed", f.eyes_closed},
                         {"eye_state_unknown", f.eye_state_unknown},
                         {"emotion", to_string(f.emotion)},
                         {"cluster_id", f.cluster_id},
                         {"position", f.position},
                         {"focus", opt(f.focus)}});
    json j = {{"id", c.id},
              {"frame_id", c.frame_id},
              {"timestamp_s", c.timestamp_s},
              {"shot_id", c.shot_id},
              {"group_id", c.group_id},
              {"aspect", c.aspect.name},
              {"rect", rect_json(c.rect)},
              {"face_centered", c.face_centered},
              {"alternate", c.alternate},
              {"fallback_reason", c.fallback_reason ? json(cropping::to_string(*c.fallback_reason)) : json(nullptr)},
              {"shot_scale", to_string(c.shot_scale)},
              {"embedding_fallback", c.embedding_fallback},
              {"faces", faces},
              {"raw",
               {{"aesthetic", c.raw.aesthetic},
                {"logo", c.raw.logo},
                {"semantic", c.raw.semantic},
                {"position_max", opt(c.raw.position_max)},
                {"position_mean", opt(c.raw.position_mean)},
                {"focus_max", opt(c.raw.focus_max)},
                {"focus_mean", opt(c.raw.focus_mean)}}},
              {"norm",
               {{"aesthetic", c.norm.aesthetic},
                {"logo", c.norm.logo},
                {"position_max", opt(c.norm.position_max)},
                {"position_mean", opt(c.norm.position_mean)},
                {"focus_max", opt(c.norm.focus_max)},
                {"focus_mean", opt(c.norm.focus_mean)}}}};
    return j;
}

json to_json(const Dataset& ds) {
    json keywords = json::array();
    for (const auto& k : ds.keywords)
        keywords.push_back({{"text", k.text}, {"source", to_string(k.source)}, {"embedding", k.embedding}});
    json aspects = json::array();
    for (const auto& a : ds.aspects) aspects.push_back(a.name);
    json frames = json::array();
    for (const auto& f : ds.frames)
        frames.push_back({{"frame_id", f.frame_id},
                          {"timestamp_s", f.timestamp_s},
                          {"width", f.width},
                          {"height", f.height},
                          {"letterbox_top", f.letterbox_top},
                          {"letterbox_bottom", f.letterbox_bottom},
                          {"shot_id", f.shot_id},
                          {"subshot_id", f.subshot_id},
                          {"group_id", f.group_id},
                          {"is_keyframe", f.is_keyframe},
                          {"metrics",
                           {{"luminance", f.metrics.luminance},
                            {"sharpness", f.metrics.sharpness},
                            {"uniformity", f.metrics.uniformity},
                            {"stillness", f.metrics.stillness}}}});
    json groups = json::array();
    for (const auto& g : ds.groups)
        groups.push_back({{"group_id", g.group_id}, {"members", g.members}, {"representative", g.representative}});
    json clusters = json::array();
    for (const auto& c : ds.face_clusters)
        clusters.push_back({{"cluster_id", c.cluster_id}, {"size", c.size}, {"face_ids", c.face_ids}});
    json curve = json::array();
    for (const auto& p : ds.face_cluster_curve)
        curve.push_back({{"k", p.k}, {"score", p.score}, {"clusters", p.clusters}, {"noise", p.noise}});
    json candidates = json::array();
    for (const auto& c : ds.candidates) candidates.push_back(to_json(c));

    return {{"format", "framepick-dataset/1"},
            {"video_id", ds.video_id},
            {"title", ds.title},
            {"summary", ds.summary},
            {"fps", ds.fps},
            {"frame_count", ds.frame_count},
            {"width", ds.width},
            {"height", ds.height},
            {"letterbox", {{"top", ds.letterbox_top}, {"bottom", ds.letterbox_bottom}}},
            {"keywords", keywords},
            {"aspects", aspects},
            {"frames", frames},
            {"groups", groups},
            {"face_clusters",
             {{"k", ds.face_cluster_k},
              {"manual_parameters_needed", ds.face_clusters_need_manual_parameters},
              {"clusters", clusters},
              {"score_curve", curve}}},
            {"candidates", candidates},
            {"warnings", ds.warnings},
            {"config_digest", ds.config_digest}};
}

Dataset dataset_from_json(const json& j) {
    try {
        if (j.value("format", "") != "framepick-dataset/1") throw FormatError("not a framepick dataset file");
        Dataset ds;
        ds.video_id = j.at("video_id").get<std::string>();
        ds.title = j.value("title", "");
        ds.summary = j.value("summary", "");
        ds.fps = j.at("fps").get<double>();
        ds.frame_count = j.at("frame_count").get<int>();
        ds.width = j.at("width").get<int>();
        ds.height = j.at("height").get<int>();
        ds.letterbox_top = j.at("letterbox").at("top").get<int>();
        ds.letterbox_bottom = j.at("letterbox").at("bottom").get<int>();
        for (const auto& k : j.at("keywords"))
            ds.keywords.push_back({k.at("text").get<std::string>(), k.at("embedding").get<std::vector<float>>(),
                                   parse_keyword_source(k.at("source").get<std::string>())});
        for (const auto& a : j.at("aspects")) ds.aspects.push_back(parse_aspect(a.get<std::string>()));
        for (const auto& f : j.at("frames")) {
            FrameRecord r;
            r.frame_id = f.at("frame_id").get<int>();
            r.timestamp_s = f.at("timestamp_s").get<double>();
            r.width = f.at("width").get<int>();
            r.height = f.at("height").get<int>();
            r.letterbox_top = f.at("letterbox_top").get<int>();
            r.letterbox_bottom = f.at("letterbox_bottom").get<int>();
            r.shot_id = f.at("shot_id").get<int>();
            r.subshot_id = f.at("subshot_id").get<int>();
            r.group_id = f.at("group_id").get<int>();
            r.is_keyframe = f.at("is_keyframe").get<bool>();
            const auto& m = f.at("metrics");
            r.metrics = {m.at("luminance").get<double>(), m.at("sharpness").get<double>(),
                         m.at("uniformity").get<double>(), m.at("stillness").get<double>()};
            ds.frames.push_back(r);
        }
        for (const auto& g : j.at("groups"))
            ds.groups.push_back({g.at("group_id").get<int>(), g.at("members").get<std::vector<int>>(),
                                 g.at("representative").get<int>()});
        const auto& fc = j.at("face_clusters");
        ds.face_cluster_k = fc.at("k").get<int>();
        ds.face_clusters_need_manual_parameters = fc.at("manual_parameters_needed").get<bool>();
        for (const auto& c : fc.at("clusters"))
            ds.face_clusters.push_back({c.at("cluster_id").get<int>(), c.at("size").get<int>(),
                                        c.at("face_ids").get<std::vector<std::string>>()});
        for (const auto& p : fc.at("score_curve"))
            ds.face_cluster_curve.push_back({p.at("k").get<int>(), p.at("score").get<double>(),
                                             p.at("clusters").get<int>(), p.at("noise").get<int>()});
        for (const auto& c : j.at("candidates")) {
            Candidate x;
            x.id = c.at("id").get<std::string>();
            x.frame_id = c.at("frame_id").get<int>();
            x.timestamp_s = c.at("timestamp_s").get<double>();
            x.shot_id = c.at("shot_id").get<int>();
            x.group_id = c.at("group_id").get<int>();
            x.aspect = parse_aspect(c.at("aspect").get<std::string>());
            x.rect = rect_from(c.at("rect"));
            x.face_centered = c.at("face_centered").get<bool>();
            x.alternate = c.at("alternate").get<bool>();
            if (!c.at("fallback_reason").is_null())
                x.fallback_reason = cropping::parse_reject_reason(c.at("fallback_reason").get<std::string>());
            x.shot_scale = parse_shot_scale(c.at("shot_scale").get<std::string>());
            x.embedding_fallback = c.at("embedding_fallback").get<bool>();
            for (const auto& f : c.at("faces"))
                x.faces.push_back({f.at("face_id").get<std::string>(), rect_from(f.at("bbox")),
                                   f.at("eyes_closed").get<bool>(), f.at("eye_state_unknown").get<bool>(),
                                   parse_emotion(f.at("emotion").get<std::string>()), f.at("cluster_id").get<int>(),
                                   f.at("position").get<double>(), get_opt(f, "focus")});
            const auto& raw = c.at("raw");
            x.raw.aesthetic = raw.at("aesthetic").get<double>();
            x.raw.logo = raw.at("logo").get<double>();
            x.raw.semantic = raw.at("semantic").get<std::vector<double>>();
            x.raw.position_max = get_opt(raw, "position_max");
            x.raw.position_mean = get_opt(raw, "position_mean");
            x.raw.focus_max = get_opt(raw, "focus_max");
            x.raw.focus_mean = get_opt(raw, "focus_mean");
            const auto& n = c.at("norm");
            x.norm.aesthetic = n.at("aesthetic").get<double>();
            x.norm.logo = n.at("logo").get<double>();
            x.norm.position_max = get_opt(n, "position_max");
            x.norm.position_mean = get_opt(n, "position_mean");
            x.norm.focus_max = get_opt(n, "focus_max");
            x.norm.focus_mean = get_opt(n, "focus_mean");
            if (x.raw.semantic.size() != ds.keywords.size())
                throw ValidationError("candidate " + x.id + " has " + std::to_string(x.raw.semantic.size()) +
                                      " semantic scores for " + std::to_string(ds.keywords.size()) + " keywords");
            ds.candidates.push_back(std::move(x));
        }
        ds.warnings = j.value("warnings", std::vector<std::string>{});
        ds.config_digest = j.value("config_digest", "");
        ds.reindex();
        return ds;
    } catch (const json::exception& e) {
        throw ParseError(std::string("dataset file: ") + e.what());
    }
}

}  // namespace framepick
