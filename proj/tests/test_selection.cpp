// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <set>

#include "fixtures.hpp"
#include "framepick/selection.hpp"

using namespace framepick;
using namespace framepick::selection;

namespace {

std::vector<std::string> ids(const Dataset& ds, const std::vector<Ranked>& r) {
    std::vector<std::string> out;
    for (const auto& x : r) out.push_back(ds.candidates[x.index].id);
    return out;
}

std::vector<std::string> ids(const ProposalSection& s) {
    std::vector<std::string> out;
    for (const auto& e : s.entries) out.push_back(e.candidate_id);
    return out;
}

// Two-group dataset on the original tag with aesthetic as the only signal.
Dataset tiny(const std::vector<std::pair<int, double>>& frames_and_scores, const std::vector<int>& group_of) {
    Dataset ds;
    ds.video_id = "tiny";
    ds.aspects = {parse_aspect("original")};
    for (std::size_t i = 0; i < frames_and_scores.size(); ++i) {
        Candidate c;
        c.id = "c" + std::to_string(frames_and_scores[i].first);
        c.frame_id = frames_and_scores[i].first;
        c.group_id = group_of[i];
        c.aspect = parse_aspect("original");
        c.raw.aesthetic = frames_and_scores[i].second;
        ds.candidates.push_back(c);
    }
    normalize_scores(ds);
    ds.reindex();
    return ds;
}

scoring::WeightConfig only_aesthetic() { return {1, 0, 0, 0, 0}; }

}  // namespace

TEST_CASE("group representatives") {
    SUBCASE("max wins") {
        const auto ds = tiny({{1, 0.9}, {2, 0.7}, {3, 0.1}}, {0, 0, 1});
        const auto ranked = rank_all(ds, parse_aspect("original"), only_aesthetic());
        const auto reps = pick_group_representatives(ranked, ds);
        CHECK(ids(ds, reps) == std::vector<std::string>{"c1", "c3"});
    }
    SUBCASE("tie goes to the earlier frame") {
        const auto ds = tiny({{9, 0.8}, {4, 0.8}, {5, 0.1}}, {0, 0, 0});
        const auto reps = pick_group_representatives(rank_all(ds, parse_aspect("original"), only_aesthetic()), ds);
        CHECK(ids(ds, reps) == std::vector<std::string>{"c4"});
    }
    SUBCASE("singleton") {
        const auto ds = tiny({{2, 0.3}}, {7});
        CHECK(pick_group_representatives(rank_all(ds, parse_aspect("original"), only_aesthetic()), ds).size() == 1);
    }
    SUBCASE("representatives are written back to groups") {
        auto ds = fixture::random_dataset({});
        assign_representatives(ds, parse_aspect("original"), {});
        for (const auto& g : ds.groups) {
            CHECK(g.representative >= 0);
            CHECK(std::find(g.members.begin(), g.members.end(), g.representative) != g.members.end());
        }
    }
}

TEST_CASE("search contracts") {
    const auto ds = fixture::random_dataset({120, 3, 3, 3, 0.15, 5});
    const auto original = parse_aspect("original");

    SUBCASE("empty filters equal the global representative ranking") {
        SearchQuery q;
        q.page_size = 500;
        const auto res = search(ds, q);
        const auto reps = pick_group_representatives(rank_all(ds, original, q.weights), ds);
        CHECK(ids(ds, res.hits) == ids(ds, reps));
        CHECK(res.total == static_cast<int>(reps.size()));
    }
    SUBCASE("face count filter") {
        SearchQuery q;
        q.filters.min_faces = 1;
        q.filters.max_faces = 1;
        q.page_size = 500;
        const auto res = search(ds, q);
        CHECK(res.total > 0);
        for (const auto& h : res.hits) CHECK(ds.candidates[h.index].faces.size() == 1);
    }
    SUBCASE("every hit passes every filter") {
        SearchQuery q;
        q.aspect = parse_aspect("2:3");
        q.filters.eyes_open_only = true;
        q.filters.emotions = {Emotion::fear, Emotion::happiness};
        q.filters.shot_scales = {ShotScale::medium, ShotScale::close_up};
        q.filters.clusters = {0, 1};
        q.page_size = 500;
        const auto res = search(ds, q);
        std::set<int> groups;
        for (const auto& h : res.hits) {
            const auto& c = ds.candidates[h.index];
            CHECK(passes(c, q.filters));
            CHECK(c.aspect.name == "2:3");
            CHECK(groups.insert(c.group_id).second);
        }
    }
    SUBCASE("isolating one weight orders by that column") {
        SearchQuery q;
        q.weights = {0, 0, 1, 0, 0};
        q.dedup_groups = false;
        q.page_size = 500;
        const auto res = search(ds, q);
        for (std::size_t i = 1; i < res.hits.size(); ++i)
            CHECK(ds.candidates[res.hits[i - 1].index].norm.logo >= ds.candidates[res.hits[i].index].norm.logo);
    }
    SUBCASE("scaling every weight keeps the ordering") {
        for (double c : {0.001, 0.5, 3.0, 1000.0}) {
            SearchQuery a, b;
            a.weights = {0.3, 0.7, 1.1, 0.2, 0.9};
            b.weights = {0.3 * c, 0.7 * c, 1.1 * c, 0.2 * c, 0.9 * c};
            a.page_size = b.page_size = 500;
            CHECK(ids(ds, search(ds, a).hits) == ids(ds, search(ds, b).hits));
        }
    }
    SUBCASE("face weights do not touch faceless finals") {
        SearchQuery a, b;
        b.weights.face_position = 40;
        b.weights.on_face_focus = 0;
        a.dedup_groups = b.dedup_groups = false;
        a.page_size = b.page_size = 500;
        std::map<std::string, double> fa, fb;
        for (const auto& h : search(ds, a).hits) fa[ds.candidates[h.index].id] = h.final;
        for (const auto& h : search(ds, b).hits) fb[ds.candidates[h.index].id] = h.final;
        int faceless = 0;
        for (const auto& [id, v] : fa)
            if (ds.find(id)->faces.empty()) {
                CHECK(fb.at(id) == v);
                ++faceless;
            }
        CHECK(faceless > 0);
    }
    SUBCASE("paging and reverse") {
        SearchQuery all;
        all.page_size = 500;
        const auto full = ids(ds, search(ds, all).hits);
        SearchQuery p;
        p.page_size = 7;
        p.page = 2;
        const auto page = ids(ds, search(ds, p).hits);
        CHECK(page == std::vector<std::string>(full.begin() + 14, full.begin() + 21));
        SearchQuery r = all;
        r.reverse = true;
        auto rev = ids(ds, search(ds, r).hits);
        std::reverse(rev.begin(), rev.end());
        CHECK(rev == full);
        p.page = 1000;
        CHECK(search(ds, p).hits.empty());
    }
    SUBCASE("facets count filtered candidates") {
        SearchQuery q;
        const auto res = search(ds, q);
        int total = 0;
        for (const auto& [k, n] : res.facets.at("faces")) total += n;
        CHECK(total == static_cast<int>(ds.candidates.size() / 3));
    }
    SUBCASE("errors") {
        SearchQuery q;
        q.keywords = {"nope"};
        CHECK_THROWS_AS((void)search(ds, q), ValidationError);
        SearchQuery z;
        z.weights = {0, 0, 0, 0, 0};
        CHECK_THROWS_AS((void)search(ds, z), ConfigError);
        SearchQuery bad;
        bad.page_size = 0;
        CHECK_THROWS_AS((void)search(ds, bad), ConfigError);
    }
    SUBCASE("user keywords join through the extra columns") {
        ExtraKeywords extra;
        std::vector<double> col(ds.candidates.size(), 0.0);
        col[ds.by_id.at("f500_original")] = 1.0;
        extra["harbour"] = col;
        SearchQuery q;
        q.keywords = {"harbour"};
        q.weights = {0, 1, 0, 0, 0};
        const auto res = search(ds, q, &extra);
        CHECK(ds.candidates[res.hits.at(0).index].id == "f500_original");
    }
}

namespace {

bool face_ready(const Candidate& c) {
    if (c.faces.empty() || c.shot_scale == ShotScale::long_shot) return false;
    for (const auto& f : c.faces)
        if (f.eyes_closed) return false;
    return true;
}

void check_section_invariants(const Dataset& ds, const ProposalSet& set, int k) {
    for (const auto& s : set.sections) {
        CHECK(static_cast<int>(s.entries.size()) <= k);
        std::set<int> groups;
        for (std::size_t i = 0; i < s.entries.size(); ++i) {
            CHECK(groups.insert(s.entries[i].group_id).second);
            const auto* c = ds.find(s.entries[i].candidate_id);
            REQUIRE(c);
            CHECK(c->aspect == set.aspect);
            if (i > 0) CHECK(s.entries[i - 1].final >= s.entries[i].final);
        }
    }
}

}  // namespace

TEST_CASE("preset invariants on random datasets") {
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
        const auto ds = fixture::random_dataset({90, 2, 3, 4, 0.2, seed});
        for (const char* tag : {"original", "16:9", "2:3"}) {
            const auto aspect = parse_aspect(tag);
            PresetConfig cfg;
            const auto main = preset_main_characters(ds, aspect, cfg);
            const auto emo = preset_per_emotion(ds, aspect, cfg);
            const auto kw = preset_per_keyword(ds, aspect, cfg);
            check_section_invariants(ds, main, 4);
            check_section_invariants(ds, emo, 4);
            check_section_invariants(ds, kw, 4);
            const auto main_ids = main_clusters(ds, cfg.main_cluster_coverage);
            for (const auto& s : main.sections)
                for (const auto& e : s.entries) {
                    const auto* c = ds.find(e.candidate_id);
                    CHECK(face_ready(*c));
                    bool has = false;
                    for (const auto& f : c->faces) {
                        if (s.key == "secondary")
                            has |= f.cluster_id >= 0 &&
                                   std::find(main_ids.begin(), main_ids.end(), f.cluster_id) == main_ids.end();
                        else
                            has |= std::to_string(f.cluster_id) == s.key;
                    }
                    CHECK(has);
                    CHECK_FALSE(e.scores.semantic.has_value());
                }
            for (const auto& s : emo.sections)
                for (const auto& e : s.entries) {
                    const auto* c = ds.find(e.candidate_id);
                    CHECK(face_ready(*c));
                    for (const auto& f : c->faces) CHECK(std::string(to_string(f.emotion)) == s.key);
                }
            CHECK(kw.sections.size() == ds.keywords.size());
            // Deterministic.
            CHECK(to_json(preset_main_characters(ds, aspect, cfg)) == to_json(main));
            CHECK(to_json(preset_per_keyword(ds, aspect, cfg)) == to_json(kw));
        }
    }
}

TEST_CASE("main characters on two planted identities") {
    fixture::DatasetSpec spec{80, 1, 2, 2, 0.0, 3};
    auto ds = fixture::random_dataset(spec);
    const auto set = preset_main_characters(ds, parse_aspect("original"));
    REQUIRE(set.sections.size() == 3);
    CHECK(set.sections[0].key != set.sections[1].key);
    CHECK(set.sections[2].key == "secondary");
    CHECK(set.sections[2].entries.empty());
    CHECK(set.sections[0].entries.size() == 4);
}

TEST_CASE("main characters with every eye closed") {
    auto ds = fixture::random_dataset({40, 2, 2, 2, 1.0, 4});
    const auto set = preset_main_characters(ds, parse_aspect("original"));
    CHECK(set.sections.empty());
    CHECK_FALSE(set.reason.empty());
    const auto emo = preset_per_emotion(ds, parse_aspect("original"));
    CHECK(emo.sections.empty());
}

TEST_CASE("per-emotion sections hold only matching faces") {
    auto ds = fixture::random_dataset({60, 1, 2, 2, 0.0, 8});
    for (auto& c : ds.candidates)
        for (auto& f : c.faces) f.emotion = (c.frame_id / 10) % 2 ? Emotion::fear : Emotion::happiness;
    const auto set = preset_per_emotion(ds, parse_aspect("2:3"));
    REQUIRE(set.sections.size() == 2);
    std::set<std::string> keys{set.sections[0].key, set.sections[1].key};
    CHECK(keys == std::set<std::string>{"fear", "happiness"});
    for (const auto& s : set.sections)
        for (const auto& e : s.entries)
            for (const auto& f : ds.find(e.candidate_id)->faces) CHECK(to_string(f.emotion) == s.key);

    for (auto& c : ds.candidates)
        for (auto& f : c.faces) f.emotion = Emotion::neutral;
    const auto neutral = preset_per_emotion(ds, parse_aspect("2:3"));
    REQUIRE(neutral.sections.size() == 1);
    CHECK(neutral.sections[0].key == "neutral");
}

TEST_CASE("per-keyword puts the matching frame first") {
    auto ds = fixture::random_dataset({30, 1, 2, 2, 0.0, 9});
    for (auto& c : ds.candidates) {
        c.raw.aesthetic = 0.5;
        c.raw.logo = 0.5;
        c.raw.semantic = {0.1, 0.1};
        if (c.frame_id == 120) c.raw.semantic[1] = 1.0;
    }
    normalize_scores(ds);
    const auto set = preset_per_keyword(ds, parse_aspect("16:9"));
    REQUIRE(set.sections.size() == 2);
    CHECK(set.sections[1].key == "kw1");
    CHECK(set.sections[1].entries.at(0).frame_id == 120);
    ds.keywords.clear();
    CHECK_THROWS_AS((void)preset_per_keyword(ds, parse_aspect("16:9")), ConfigError);
}

TEST_CASE("main cluster cutoff") {
    Dataset ds;
    ds.face_clusters = {{0, 50, {}}, {1, 30, {}}, {2, 15, {}}, {3, 5, {}}};
    CHECK(main_clusters(ds, 0.6) == std::vector<int>{0, 1});
    CHECK(main_clusters(ds, 0.5) == std::vector<int>{0});
    CHECK(main_clusters(ds, 0.1) == std::vector<int>{0});
    CHECK(main_clusters(ds, 1.0).size() == 4);
    CHECK_THROWS_AS((void)main_clusters(ds, 0.0), ConfigError);
}

TEST_CASE("reference matching") {
    const MatchThresholds defaults;
    CHECK(defaults.exact == 0.886);
    CHECK(defaults.similar == 0.799);
    std::vector<EmbeddedCandidate> cands{{"a", {1, 0, 0}}, {"b", {0, 1, 0}}};
    SUBCASE("identical") {
        const std::vector<float> ref{1, 0, 0};
        const auto r = evaluate_against_reference(cands, ref);
        CHECK(r.candidate_id == "a");
        CHECK(r.best_similarity == doctest::Approx(1.0));
        CHECK(r.tier == MatchTier::exact);
    }
    SUBCASE("similar") {
        // cos = 0.85 against b.
        const std::vector<float> ref{0, 0.85f, static_cast<float>(std::sqrt(1 - 0.85 * 0.85))};
        const auto r = evaluate_against_reference(cands, ref);
        CHECK(r.candidate_id == "b");
        CHECK(r.best_similarity == doctest::Approx(0.85).epsilon(1e-6));
        CHECK(r.tier == MatchTier::similar);
    }
    SUBCASE("orthogonal") {
        const std::vector<float> ref{0, 0, 1};
        const auto r = evaluate_against_reference(cands, ref);
        CHECK(std::abs(r.best_similarity) < 1e-9);
        CHECK(r.tier == MatchTier::none);
    }
    SUBCASE("empty") {
        const std::vector<float> ref{0, 0, 1};
        CHECK_THROWS_AS((void)evaluate_against_reference(std::vector<EmbeddedCandidate>{}, ref), ValidationError);
    }
}

TEST_CASE("dataset json round trip") {
    const auto ds = fixture::random_dataset({20, 2, 2, 2, 0.2, 6});
    const auto j = to_json(ds);
    const auto back = dataset_from_json(j);
    CHECK(to_json(back) == j);
    CHECK(back.candidates.size() == ds.candidates.size());
}
