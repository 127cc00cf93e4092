// SPDX-License-Identifier: Apache-2.0
#include "framepick/selection.hpp"

#include <algorithm>
#include <functional>
#include <set>

using nlohmann::json;

namespace framepick::selection {

namespace {

scoring::ScoreVector score_vector(const Candidate& c, std::optional<double> semantic, scoring::FaceAggregation mode) {
    scoring::ScoreVector s;
    s.aesthetic = c.norm.aesthetic;
    s.logo = c.norm.logo;
    s.semantic = semantic;
    const bool use_max = mode == scoring::FaceAggregation::max;
    s.face_position = use_max ? c.norm.position_max : c.norm.position_mean;
    s.on_face_focus = use_max ? c.norm.focus_max : c.norm.focus_mean;
    return s;
}

std::vector<std::size_t> aspect_indices(const Dataset& ds, const AspectTag& aspect) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < ds.candidates.size(); ++i)
        if (ds.candidates[i].aspect == aspect) out.push_back(i);
    return out;
}

// Normalized semantic column (mean raw cosine over `keywords`) for `idx`.
// Returns an empty vector when no keyword applies.
std::vector<double> semantic_column(const Dataset& ds, const std::vector<std::size_t>& idx,
                                    const std::vector<std::string>& keywords, const ExtraKeywords* extra) {
    std::vector<int> own;
    std::vector<const std::vector<double>*> foreign;
    if (keywords.empty()) {
        for (std::size_t k = 0; k < ds.keywords.size(); ++k) own.push_back(int(k));
    } else {
        std::vector<std::string> unknown;
        for (const auto& text : keywords) {
            if (const int k = ds.keyword_index(text); k >= 0) {
                own.push_back(k);
            } else if (extra && extra->count(text)) {
                const auto& col = extra->at(text);
                if (col.size() != ds.candidates.size())
                    throw ValidationError("keyword '" + text + "' has a stale score column");
                foreign.push_back(&col);
            } else {
                unknown.push_back(text);
            }
        }
        if (!unknown.empty()) {
            std::string names;
            for (const auto& u : unknown) names += (names.empty() ? "" : ", ") + u;
            throw ValidationError("unknown keyword(s): " + names + "; register them with an embedding first");
        }
    }
    const std::size_t count = own.size() + foreign.size();
    if (count == 0) return {};
    std::vector<double> raw;
    raw.reserve(idx.size());
    for (auto i : idx) {
        double sum = 0.0;
        for (int k : own) sum += ds.candidates[i].raw.semantic[std::size_t(k)];
        for (const auto* col : foreign) sum += (*col)[i];
        raw.push_back(sum / double(count));
    }
    return scoring::normalize_column(std::span<const double>(raw));
}

std::vector<Ranked> rank_indices(const Dataset& ds, const std::vector<std::size_t>& idx,
                                 const std::vector<double>& semantic, const scoring::WeightConfig& weights,
                                 const std::function<bool(const Candidate&)>& keep) {
    std::vector<Ranked> out;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const Candidate& c = ds.candidates[idx[k]];
        if (keep && !keep(c)) continue;
        const std::optional<double> sem = semantic.empty() ? std::nullopt : std::optional<double>(semantic[k]);
        Ranked r{idx[k], score_vector(c, sem, weights.face_aggregation), 0.0};
        const auto f = scoring::try_final_score(r.scores, weights);
        if (!f) continue;
        r.final = *f;
        out.push_back(r);
    }
    sort_ranked(out, ds);
    return out;
}

ProposalEntry entry_of(const Dataset& ds, const Ranked& r) {
    const Candidate& c = ds.candidates[r.index];
    return {c.id, c.group_id, c.frame_id, c.rect, r.final, r.scores};
}

ProposalSection make_section(const Dataset& ds, std::string key, std::string label, const std::vector<Ranked>& ranked,
                             int per_section) {
    ProposalSection s{std::move(key), std::move(label), {}};
    for (const auto& r : pick_group_representatives(ranked, ds)) {
        if (int(s.entries.size()) >= per_section) break;
        s.entries.push_back(entry_of(ds, r));
    }
    return s;
}

bool face_ready(const Candidate& c) {
    return !c.faces.empty() && !c.any_eyes_closed() && c.shot_scale != ShotScale::long_shot;
}

}  // namespace

void sort_ranked(std::vector<Ranked>& ranked, const Dataset& ds) {
    std::stable_sort(ranked.begin(), ranked.end(), [&](const Ranked& a, const Ranked& b) {
        if (a.final != b.final) return a.final > b.final;
        const Candidate& ca = ds.candidates[a.index];
        const Candidate& cb = ds.candidates[b.index];
        if (ca.frame_id != cb.frame_id) return ca.frame_id < cb.frame_id;
        return ca.id < cb.id;
    });
}

std::vector<Ranked> pick_group_representatives(std::span<const Ranked> ranked, const Dataset& ds) {
    std::set<int> seen;
    std::vector<Ranked> out;
    for (const auto& r : ranked)
        if (seen.insert(ds.candidates[r.index].group_id).second) out.push_back(r);
    return out;
}

bool passes(const Candidate& c, const SearchFilters& f) {
    const int faces = int(c.faces.size());
    if (f.min_faces && faces < *f.min_faces) return false;
    if (f.max_faces && faces > *f.max_faces) return false;
    if (f.eyes_open_only && c.any_eyes_closed()) return false;
    if (!f.emotions.empty() &&
        !std::any_of(c.faces.begin(), c.faces.end(), [&](const CandidateFace& face) {
            return std::find(f.emotions.begin(), f.emotions.end(), face.emotion) != f.emotions.end();
        }))
        return false;
    if (!f.clusters.empty() &&
        !std::any_of(c.faces.begin(), c.faces.end(), [&](const CandidateFace& face) {
            return std::find(f.clusters.begin(), f.clusters.end(), face.cluster_id) != f.clusters.end();
        }))
        return false;
    if (!f.shot_scales.empty() &&
        std::find(f.shot_scales.begin(), f.shot_scales.end(), c.shot_scale) == f.shot_scales.end())
        return false;
    return true;
}

std::vector<Ranked> rank_all(const Dataset& ds, const AspectTag& aspect, const scoring::WeightConfig& weights,
                             const std::vector<std::string>& keywords, const ExtraKeywords* extra) {
    weights.validate();
    const auto idx = aspect_indices(ds, aspect);
    return rank_indices(ds, idx, semantic_column(ds, idx, keywords, extra), weights, nullptr);
}

SearchResult search(const Dataset& ds, const SearchQuery& q, const ExtraKeywords* extra) {
    q.weights.validate();
    if (q.page < 0) throw ConfigError("page must be >= 0");
    if (q.page_size < 1) throw ConfigError("page_size must be >= 1");
    if (std::find(ds.aspects.begin(), ds.aspects.end(), q.aspect) == ds.aspects.end())
        throw ValidationError("aspect '" + q.aspect.name + "' is not part of this dataset");

    const auto idx = aspect_indices(ds, q.aspect);
    const auto semantic = semantic_column(ds, idx, q.keywords, extra);
    auto ranked = rank_indices(ds, idx, semantic, q.weights, [&](const Candidate& c) { return passes(c, q.filters); });

    SearchResult res;
    for (const auto& r : ranked) {
        const Candidate& c = ds.candidates[r.index];
        const int n = int(c.faces.size());
        ++res.facets["faces"][n >= 3 ? "3+" : std::to_string(n)];
        ++res.facets["shot_scale"][std::string(to_string(c.shot_scale))];
        ++res.facets["eyes"][c.any_eyes_closed() ? "closed" : "open"];
        std::set<std::string> emotions, clusters;
        for (const auto& f : c.faces) {
            emotions.insert(std::string(to_string(f.emotion)));
            clusters.insert(std::to_string(f.cluster_id));
        }
        for (const auto& e : emotions) ++res.facets["emotion"][e];
        for (const auto& k : clusters) ++res.facets["cluster"][k];
    }

    if (q.dedup_groups) ranked = pick_group_representatives(ranked, ds);
    if (q.reverse) std::reverse(ranked.begin(), ranked.end());
    res.total = int(ranked.size());
    const std::size_t begin = std::min(ranked.size(), std::size_t(q.page) * std::size_t(q.page_size));
    const std::size_t end = std::min(ranked.size(), begin + std::size_t(q.page_size));
    res.hits.assign(ranked.begin() + std::ptrdiff_t(begin), ranked.begin() + std::ptrdiff_t(end));
    return res;
}

void assign_representatives(Dataset& ds, const AspectTag& aspect, const scoring::WeightConfig& weights) {
    const auto reps = pick_group_representatives(rank_all(ds, aspect, weights), ds);
    std::map<int, int> best;
    for (const auto& r : reps) best[ds.candidates[r.index].group_id] = ds.candidates[r.index].frame_id;
    for (auto& g : ds.groups)
        if (const auto it = best.find(g.group_id); it != best.end()) g.representative = it->second;
}

std::string_view to_string(Preset p) {
    switch (p) {
        case Preset::main_characters: return "main-characters";
        case Preset::per_emotion: return "per-emotion";
        case Preset::per_keyword: return "per-keyword";
    }
    return "unknown";
}

Preset parse_preset(std::string_view s) {
    for (auto p : {Preset::main_characters, Preset::per_emotion, Preset::per_keyword})
        if (to_string(p) == s) return p;
    throw ParseError("unknown preset '" + std::string(s) + "'");
}

std::vector<int> main_clusters(const Dataset& ds, double coverage) {
    if (!(coverage > 0.0 && coverage <= 1.0)) throw ConfigError("main_cluster_coverage must lie in (0, 1]");
    auto clusters = ds.face_clusters;
    std::stable_sort(clusters.begin(), clusters.end(),
                     [](const FaceClusterInfo& a, const FaceClusterInfo& b) { return a.size > b.size; });
    long total = 0;
    for (const auto& c : clusters) total += c.size;
    std::vector<int> out;
    long covered = 0;
    for (const auto& c : clusters) {
        out.push_back(c.cluster_id);
        covered += c.size;
        if (double(covered) >= coverage * double(total)) break;
    }
    return out;
}

ProposalSet preset_main_characters(const Dataset& ds, const AspectTag& aspect, const PresetConfig& cfg) {
    ProposalSet set{Preset::main_characters, aspect, {}, ""};
    auto weights = cfg.weights;
    weights.semantic = 0.0;
    const auto idx = aspect_indices(ds, aspect);
    const auto qualifying = rank_indices(ds, idx, {}, weights, face_ready);
    if (qualifying.empty()) {
        set.reason = "no candidate shows open-eyed faces outside long shots";
        return set;
    }
    if (ds.face_clusters.empty()) {
        set.reason = ds.face_clusters_need_manual_parameters
                         ? "face clustering found no identities; manual parameters needed"
                         : "face clustering found no identities";
        return set;
    }
    const auto main = main_clusters(ds, cfg.main_cluster_coverage);
    auto with_cluster = [&](const std::function<bool(int)>& want) {
        std::vector<Ranked> out;
        for (const auto& r : qualifying) {
            const auto& faces = ds.candidates[r.index].faces;
            if (std::any_of(faces.begin(), faces.end(), [&](const CandidateFace& f) { return want(f.cluster_id); }))
                out.push_back(r);
        }
        return out;
    };
    for (int cluster : main)
        set.sections.push_back(make_section(ds, std::to_string(cluster), "character " + std::to_string(cluster),
                                            with_cluster([&](int id) { return id == cluster; }),
                                            cfg.per_section));
    const std::set<int> main_set(main.begin(), main.end());
    set.sections.push_back(make_section(
        ds, "secondary", "secondary characters",
        with_cluster([&](int id) { return id != kNoiseCluster && !main_set.count(id); }), cfg.per_section));
    return set;
}

ProposalSet preset_per_emotion(const Dataset& ds, const AspectTag& aspect, const PresetConfig& cfg) {
    ProposalSet set{Preset::per_emotion, aspect, {}, ""};
    auto weights = cfg.weights;
    weights.semantic = 0.0;
    const auto idx = aspect_indices(ds, aspect);
    const auto qualifying = rank_indices(ds, idx, {}, weights, face_ready);
    if (qualifying.empty()) {
        set.reason = "no candidate shows open-eyed faces outside long shots";
        return set;
    }
    std::vector<std::pair<Emotion, std::vector<Ranked>>> buckets;
    for (int e = 0; e <= int(Emotion::contempt); ++e) {
        const auto emotion = Emotion(e);
        std::vector<Ranked> members;
        for (const auto& r : qualifying) {
            const auto& faces = ds.candidates[r.index].faces;
            if (std::all_of(faces.begin(), faces.end(), [&](const CandidateFace& f) { return f.emotion == emotion; }))
                members.push_back(r);
        }
        if (!members.empty()) buckets.emplace_back(emotion, std::move(members));
    }
    std::stable_sort(buckets.begin(), buckets.end(),
                     [](const auto& a, const auto& b) { return a.second.size() > b.second.size(); });
    for (const auto& [emotion, members] : buckets)
        set.sections.push_back(
            make_section(ds, std::string(to_string(emotion)), std::string(to_string(emotion)), members,
                         cfg.per_section));
    if (set.sections.empty()) set.reason = "no candidate shows a single shared emotion";
    return set;
}

ProposalSet preset_per_keyword(const Dataset& ds, const AspectTag& aspect, const PresetConfig& cfg) {
    if (ds.keywords.empty()) throw ConfigError("per-keyword preset needs at least one keyword");
    ProposalSet set{Preset::per_keyword, aspect, {}, ""};
    auto weights = cfg.weights;
    weights.face_position = 0.0;
    weights.on_face_focus = 0.0;
    weights.validate();
    const auto idx = aspect_indices(ds, aspect);
    for (const auto& k : ds.keywords) {
        const auto semantic = semantic_column(ds, idx, {k.text}, nullptr);
        set.sections.push_back(
            make_section(ds, k.text, k.text, rank_indices(ds, idx, semantic, weights, nullptr), cfg.per_section));
    }
    return set;
}

json to_json(const scoring::ScoreVector& s) {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    return {{"aesthetic", s.aesthetic},
            {"semantic", opt(s.semantic)},
            {"logo", s.logo},
            {"face_position", opt(s.face_position)},
            {"on_face_focus", opt(s.on_face_focus)}};
}

json to_json(const ProposalSet& p) {
    json sections = json::array();
    for (const auto& s : p.sections) {
        json entries = json::array();
        for (const auto& e : s.entries)
            entries.push_back({{"candidate_id", e.candidate_id},
                               {"group_id", e.group_id},
                               {"frame_id", e.frame_id},
                               {"rect", {e.rect.x, e.rect.y, e.rect.w, e.rect.h}},
                               {"final", e.final},
                               {"scores", to_json(e.scores)}});
        sections.push_back({{"key", s.key}, {"label", s.label}, {"entries", entries}});
    }
    json j = {{"preset", to_string(p.preset)}, {"aspect", p.aspect.name}, {"sections", sections}};
    if (!p.reason.empty()) j["reason"] = p.reason;
    return j;
}

std::string_view to_string(MatchTier t) {
    switch (t) {
        case MatchTier::exact: return "exact";
        case MatchTier::similar: return "similar";
        case MatchTier::none: return "none";
    }
    return "none";
}

MatchReport evaluate_against_reference(std::span<const EmbeddedCandidate> candidates, std::span<const float> reference,
                                       const MatchThresholds& thresholds) {
    if (candidates.empty()) throw ValidationError("evaluate_against_reference: no candidates");
    if (!(thresholds.exact >= thresholds.similar)) throw ConfigError("exact threshold must be >= similar threshold");
    MatchReport report;
    bool first = true;
    for (const auto& c : candidates) {
        const double s = cosine_similarity(std::span<const float>(c.embedding), reference);
        if (first || s > report.best_similarity) {
            report.best_similarity = s;
            report.candidate_id = c.id;
            first = false;
        }
    }
    report.tier = report.best_similarity >= thresholds.exact     ? MatchTier::exact
                  : report.best_similarity >= thresholds.similar ? MatchTier::similar
                                                                 : MatchTier::none;
    return report;
}

}  // namespace framepick::selection
