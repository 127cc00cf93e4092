// SPDX-License-Identifier: Apache-2.0
// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "framepick/cropper.hpp"
#include "framepick/faceproc.hpp"
#include "framepick/grouping.hpp"
#include "framepick/keyframe.hpp"
#include "framepick/pipeline.hpp"
#include "framepick/scoring.hpp"
#include "framepick/selection.hpp"
#include "framepick/synth.hpp"
#include "oracles.hpp"
#include "service_checks.hpp"

using namespace framepick;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Collects failed checks of one criterion.
struct Checks {
    std::vector<std::string> failed;
    int total = 0;
    void operator()(bool ok, const std::string& what) {
        ++total;
        if (!ok) failed.push_back(what);
    }
};

struct Outcome {
    bool pass = false;
    std::string detail;
};

Outcome outcome(const Checks& c, std::string detail) {
    if (c.failed.empty()) return {true, std::to_string(c.total) + " checks; " + detail};
    std::string why = std::to_string(c.failed.size()) + "/" + std::to_string(c.total) + " checks failed:";
    for (std::size_t i = 0; i < c.failed.size() && i < 5; ++i) why += " [" + c.failed[i] + "]";
    return {false, why + "; " + detail};
}

std::string fmt(double v, int digits = 3) {
    std::ostringstream o;
    o << std::fixed << std::setprecision(digits) << v;
    return o.str();
}

Image solid(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    Image img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) img.set(x, y, r, g, b);
    return img;
}

EyeLandmarks eye(double h) {
    return {LandmarkScheme::six_point, {{0, 0}, {1, h}, {3, h}, {4, 0}, {3, -h}, {1, -h}}, std::nullopt};
}

Eigen::RowVector2d unit(double angle) { return {std::cos(angle), std::sin(angle)}; }

// ---------------------------------------------------------------------------

Outcome formula_suite() {
    const auto t0 = Clock::now();
    Checks ok;
    using keyframe::luminance;
    ok(std::abs(luminance(solid(8, 8, 255, 0, 0)) - 54.213) < 1e-6, "red luminance 54.213");
    ok(std::abs(luminance(solid(8, 8, 0, 255, 0)) - 182.376) < 1e-6, "green luminance 182.376");
    ok(std::abs(luminance(solid(8, 8, 0, 0, 255)) - 18.411) < 1e-6, "blue luminance 18.411");
    ok(std::abs(luminance(solid(8, 8, 255, 255, 255)) - 255.0) < 1e-6, "white luminance 255");
    ok(std::abs(luminance(solid(8, 8, 0, 0, 0))) < 1e-6, "black luminance 0");

    ok(faces::compute_ear(eye(1.0)) == 0.5, "EAR fixture 0.5");
    ok(faces::classify_eyes(eye(0.38), eye(0.38)).closed, "EAR 0.19 closed");
    ok(!faces::classify_eyes(eye(0.40), eye(0.40)).closed, "EAR 0.2 open");
    ok(faces::classify_eyes(eye(0.6), eye(0.2)).closed, "one closed eye closes the face");

    {
        Eigen::MatrixXd v(3, 2);
        v << 1, 0, 1, 0, 1, 0;
        ok(grouping::clustering_score(std::vector<int>{0, 0, 0}, v) == 3.0, "score 3.0");
    }
    {
        Eigen::MatrixXd v(2, 2);
        v << 1, 0, -1, 0;
        ok(grouping::clustering_score(std::vector<int>{0, 0}, v) == -2.0, "score -2.0");
    }
    {
        // Sizes 2 and 3 with min cosines 0.9 and 0.8 plus four noise points: 1.8 + 2.4 - 4.
        const double a9 = std::acos(0.9), a8 = std::acos(0.8);
        Eigen::MatrixXd v(9, 2);
        v.row(0) = unit(0.0);
        v.row(1) = unit(a9);
        v.row(2) = unit(2.0);
        v.row(3) = unit(2.0 + a8 / 2);
        v.row(4) = unit(2.0 + a8);
        for (int i = 5; i < 9; ++i) v.row(i) = unit(i);
        const double s = grouping::clustering_score(std::vector<int>{0, 0, 1, 1, 1, -1, -1, -1, -1}, v);
        ok(std::abs(s - 0.2) < 1e-12, "score 2*0.9 + 3*0.8 - 4 = 0.2 (got " + fmt(s, 12) + ")");
    }

    const Size frame{600, 600};
    ok(scoring::face_position_score({300, 270}, frame) == 1.0, "position 1.0");
    ok(scoring::face_position_score({30, 300}, frame) == 0.1, "position 0.1");
    ok(scoring::face_position_score({300, 570}, frame) == 0.25, "position 0.25");
    ok(scoring::face_position_score({300, 50}, frame) == 0.5, "position 0.5");
    ok(scoring::face_position_score({300, 150}, frame) == 0.75, "position 0.75");

    const double elapsed = seconds_since(t0);
    ok(elapsed < 1.0, "runtime under 1 s");
    return outcome(ok, fmt(elapsed, 4) + " s");
}

Outcome oracle_equivalence() {
    const auto t0 = Clock::now();
    Checks ok;
    std::mt19937_64 rng(2024);
    int largest = 0, largest_d = 0;
    for (int t = 0; t < 200; ++t) {
        const auto inst = oracle::random_dbscan_instance(rng, 500, 16);
        largest = std::max(largest, int(inst.points.rows()));
        largest_d = std::max(largest_d, int(inst.points.cols()));
        const auto got = grouping::dbscan(inst.points, inst.eps, inst.min_pts);
        const auto ref = oracle::naive_dbscan(inst.points, inst.eps, inst.min_pts);
        ok(oracle::same_partition(got, ref), "dbscan instance " + std::to_string(t));
    }
    double worst_angle = 0.0;
    for (int t = 0; t < 100; ++t) {
        const auto rows = oracle::random_pca_matrix(rng);
        const double target = std::uniform_real_distribution<double>(0.2, 1.0)(rng);
        const auto model = grouping::fit_pca(rows, target);
        Eigen::VectorXd values;
        Eigen::MatrixXd vectors;
        oracle::jacobi_eigen(oracle::covariance(rows), values, vectors);
        const double total = values.sum();
        int k = 0;
        double cum = 0.0;
        while (k < static_cast<int>(values.size())) {
            cum += values[k] / total;
            ++k;
            if (cum >= target - 1e-12) break;
        }
        ok(model.k == k, "pca matrix " + std::to_string(t) + " component count");
        const Eigen::MatrixXd expect = vectors.leftCols(k).transpose();
        const double angle = oracle::subspace_angle(model.components(), expect);
        worst_angle = std::max(worst_angle, angle);
        ok(angle < 1e-6, "pca matrix " + std::to_string(t) + " subspace angle");
    }
    const double elapsed = seconds_since(t0);
    ok(elapsed < 60.0, "runtime under 60 s");
    return outcome(ok, "200 dbscan (n<=" + std::to_string(largest) + ", d<=" + std::to_string(largest_d) +
                           "), 100 pca, worst angle " + fmt(worst_angle * 1e9, 3) + "e-9 rad, " + fmt(elapsed, 2) + " s");
}

std::vector<std::set<int>> group_sets(const grouping::GroupingResult& r) {
    std::vector<std::set<int>> out;
    for (const auto& g : r.groups) out.emplace_back(g.members.begin(), g.members.end());
    std::sort(out.begin(), out.end());
    return out;
}

Outcome planted_structure() {
    Checks ok;
    std::vector<int> truth;
    const auto emb = oracle::identity_blobs(3, 100, 16, 0.05, 12, &truth);
    const auto r = grouping::cluster_faces(emb);
    const double pur = oracle::purity(r.labels, truth);
    ok(r.clusters.size() == 3, "exactly 3 clusters (got " + std::to_string(r.clusters.size()) + ")");
    ok(pur >= 0.95, "purity >= 0.95");
    ok(std::abs(r.chosen_k - r.base_k) <= 10, "chosen k within +-10 of base");

    const std::vector<int> scene_of_shot{0, 0, 1, 0, 2, 2, 2, 3, 2, 3};
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    std::vector<int> frames, shots;
    Eigen::MatrixXd kf(20, 8);
    for (int s = 0; s < 10; ++s)
        for (int k = 0; k < 2; ++k) {
            const int row = s * 2 + k;
            frames.push_back(100 + row * 5);
            shots.push_back(s);
            for (int j = 0; j < 8; ++j) kf(row, j) = 0.01 * g(rng);
            kf(row, 0) += 10.0 * scene_of_shot[s];
        }
    auto f = [](int s, int k) { return 100 + (s * 2 + k) * 5; };
    std::vector<std::set<int>> want{{f(0, 0), f(0, 1), f(1, 0), f(1, 1)},
                                    {f(2, 0), f(2, 1)},
                                    {f(3, 0), f(3, 1)},
                                    {f(4, 0), f(4, 1), f(5, 0), f(5, 1), f(6, 0), f(6, 1)},
                                    {f(7, 0), f(7, 1)},
                                    {f(8, 0), f(8, 1)},
                                    {f(9, 0), f(9, 1)}};
    std::sort(want.begin(), want.end());
    const auto groups = grouping::group_keyframes(frames, shots, kf);
    ok(group_sets(groups) == want, "scripted 10-shot partition");
    return outcome(ok, "faces: k " + std::to_string(r.chosen_k) + " (base " + std::to_string(r.base_k) + "), purity " +
                           fmt(pur, 4) + "; keyframes: " + std::to_string(groups.groups.size()) + " groups");
}

std::map<std::string, std::string> out_files(const fs::path& root) {
    std::map<std::string, std::string> m;
    const auto dir = pipeline::output_paths(ingest::bundle_paths(root)).dataset.parent_path();
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) m[fs::relative(e.path(), dir).string()] = read_file(e.path());
    return m;
}

Outcome pipeline_determinism() {
    Checks ok;
    oracle::TempDir a("acc_pipe_a"), b("acc_pipe_b");
    synth::SyntheticSpec spec;  // 500 frames at 320x180
    synth::write_synthetic_bundle(a.path, spec);
    synth::write_synthetic_bundle(b.path, spec);
    const auto cfg = synth::synthetic_config();
    pipeline::RunOptions one, four;
    one.workers = 1;
    four.workers = 4;

    auto t0 = Clock::now();
    const auto first = pipeline::run_pipeline(a.path, cfg, one);
    const double first_s = seconds_since(t0);
    const auto files1 = out_files(a.path);
    t0 = Clock::now();
    const auto second = pipeline::run_pipeline(a.path, cfg, one);
    const double rerun_s = seconds_since(t0);
    const auto files2 = out_files(a.path);
    (void)pipeline::run_pipeline(b.path, cfg, four);
    const auto files4 = out_files(b.path);

    ok(first.ok(), "first run ok");
    ok(first_s < 60.0, "first run under 60 s");
    ok(second.cache_hits() == int(pipeline::kStages.size()), "rerun cache hits == stage count");
    ok(rerun_s < 0.05 * first_s, "rerun under 5% of first run");
    ok(!files1.empty() && files1 == files2, "outputs identical across reruns");
    ok(files1 == files4, "outputs identical for 1 vs 4 workers");
    const auto ds = pipeline::load_dataset(a.path);
    return outcome(ok, "first " + fmt(first_s, 2) + " s, rerun " + fmt(rerun_s, 3) + " s (" +
                           fmt(100.0 * rerun_s / first_s, 2) + "%), hits " + std::to_string(second.cache_hits()) +
                           "/" + std::to_string(pipeline::kStages.size()) + ", " + std::to_string(files1.size()) +
                           " output files, " + std::to_string(ds.frames.size()) + " keyframes, " +
                           std::to_string(ds.candidates.size()) + " candidates");
}

std::vector<int> table_order(const std::vector<std::vector<double>>& cols,
                             const std::vector<std::vector<std::optional<double>>>& face_cols,
                             const scoring::WeightConfig& w) {
    const auto a = scoring::normalize_column(cols[0]), s = scoring::normalize_column(cols[1]),
               l = scoring::normalize_column(cols[2]);
    const auto p = scoring::normalize_column(std::span<const std::optional<double>>(face_cols[0]));
    const auto f = scoring::normalize_column(std::span<const std::optional<double>>(face_cols[1]));
    std::vector<double> finals;
    for (std::size_t i = 0; i < a.size(); ++i) finals.push_back(scoring::final_score({a[i], s[i], l[i], p[i], f[i]}, w));
    std::vector<int> order(a.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return finals[x] > finals[y]; });
    return order;
}

Outcome ranking_invariances() {
    Checks ok;
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-3, 3), scale(0.01, 100), shift(-50, 50), wd(0.05, 2);
    int affine_cases = 0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 5 + rng() % 200;
        std::vector<std::vector<double>> cols(3, std::vector<double>(n));
        std::vector<std::vector<std::optional<double>>> face_cols(2, std::vector<std::optional<double>>(n));
        for (std::size_t i = 0; i < n; ++i) {
            for (auto& c : cols) c[i] = u(rng);
            const bool faces = rng() % 3 != 0;
            for (auto& c : face_cols) c[i] = faces ? std::optional<double>(u(rng)) : std::nullopt;
        }
        const scoring::WeightConfig w{wd(rng), wd(rng), wd(rng), wd(rng), wd(rng)};
        const auto base = table_order(cols, face_cols, w);
        for (int col = 0; col < 5; ++col) {
            auto c2 = cols;
            auto f2 = face_cols;
            const double a = scale(rng), b = shift(rng);
            if (col < 3)
                for (auto& v : c2[std::size_t(col)]) v = a * v + b;
            else
                for (auto& v : f2[std::size_t(col - 3)])
                    if (v) v = a * *v + b;
            ok(table_order(c2, f2, w) == base, "table " + std::to_string(t) + " column " + std::to_string(col));
            ++affine_cases;
        }
    }

    const auto ds = fixture::random_dataset({300, 3, 3, 3, 0.15, 11});
    int scaling_cases = 0;
    for (const char* aspect : {"original", "16:9", "2:3"})
        for (double c : {0.001, 0.5, 3.0, 1000.0}) {
            selection::SearchQuery q1, q2;
            q1.aspect = q2.aspect = parse_aspect(aspect);
            q1.weights = {0.3, 0.7, 1.1, 0.2, 0.9};
            q2.weights = {0.3 * c, 0.7 * c, 1.1 * c, 0.2 * c, 0.9 * c};
            q1.page_size = q2.page_size = 500;
            q1.dedup_groups = q2.dedup_groups = false;
            const auto h1 = selection::search(ds, q1).hits, h2 = selection::search(ds, q2).hits;
            bool same = h1.size() == h2.size();
            for (std::size_t i = 0; same && i < h1.size(); ++i) same = h1[i].index == h2[i].index;
            ok(same, std::string("weight scaling x") + fmt(c) + " on " + aspect);
            ++scaling_cases;
        }

    int faceless = 0;
    for (const char* aspect : {"original", "16:9", "2:3"}) {
        selection::SearchQuery plain, heavy;
        plain.aspect = heavy.aspect = parse_aspect(aspect);
        heavy.weights.face_position = 40;
        heavy.weights.on_face_focus = 9;
        plain.dedup_groups = heavy.dedup_groups = false;
        plain.page_size = heavy.page_size = 500;
        std::map<std::size_t, double> fa, fb;
        for (const auto& h : selection::search(ds, plain).hits) fa[h.index] = h.final;
        for (const auto& h : selection::search(ds, heavy).hits) fb[h.index] = h.final;
        for (const auto& [idx, v] : fa)
            if (ds.candidates[idx].faces.empty()) {
                ++faceless;
                ok(fb.count(idx) && fb.at(idx) == v, "faceless " + ds.candidates[idx].id);
            }
    }
    ok(faceless > 0, "fixture has faceless candidates");
    return outcome(ok, std::to_string(affine_cases) + " affine column rescalings over 100 tables, " +
                           std::to_string(scaling_cases) + " weight scalings, " + std::to_string(faceless) +
                           " faceless candidates");
}

Image letterboxed(int w, int h, int top, int bottom, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> u(40, 255);
    Image img(w, h);
    for (int y = top; y < h - bottom; ++y)
        for (int x = 0; x < w; ++x) img.set(x, y, std::uint8_t(u(rng)), std::uint8_t(u(rng)), std::uint8_t(u(rng)));
    return img;
}

Outcome cropper_suite() {
    using namespace cropping;
    Checks ok;
    for (auto [top, bottom] : std::vector<std::pair<int, int>>{{10, 10}, {0, 0}, {7, 3}, {20, 20}, {0, 12}}) {
        std::vector<Image> frames;
        for (int i = 0; i < 25; ++i) frames.push_back(letterboxed(64, 90, top, bottom, std::uint64_t(i)));
        frames.push_back(Image(64, 90));  // one black frame
        const auto e = detect_letterbox(frames);
        ok(e.top_rows == top && e.bottom_rows == bottom,
           "bars " + std::to_string(top) + "/" + std::to_string(bottom) + " got " + std::to_string(e.top_rows) + "/" +
               std::to_string(e.bottom_rows));
    }
    int candidates = 0;
    for (const Size sz : std::vector<Size>{{1920, 1080}, {320, 140}, {336, 597}, {100, 100}, {640, 480}, {17, 400}})
        for (const char* tag : {"16:9", "2:3", "9:16", "4:5", "1:1", "original"}) {
            const auto t = parse_aspect(tag);
            std::vector<CropCandidate> cands;
            try {
                cands = generate_crop_candidates(sz, t);
            } catch (const DomainError&) {
                continue;  // frame too small for any crop of this tag
            }
            for (const auto& c : cands) {
                ++candidates;
                ok(Rect{0, 0, sz.width, sz.height}.contains(c.rect) && !c.rect.empty(),
                   std::string("containment ") + tag);
                if (!t.is_original()) {
                    const double w_from_h = double(c.rect.h) * t.width_ratio / t.height_ratio;
                    const double h_from_w = double(c.rect.w) * t.height_ratio / t.width_ratio;
                    ok(std::abs(c.rect.w - w_from_h) <= 1.0 || std::abs(c.rect.h - h_from_w) <= 1.0,
                       std::string("aspect ") + tag);
                }
            }
        }
    const auto portrait = [](Rect r) { return CropCandidate{r, parse_aspect("2:3"), 0.0, false, std::nullopt}; };
    std::vector<CropCandidate> bisect{portrait({0, 0, 60, 90})};
    filter_crops(bisect, std::vector<Rect>{{50, 10, 20, 20}});
    ok(bisect[0].rejected == RejectReason::bisects_face, "face-bisecting crop rejected as bisects_face");
    std::vector<CropCandidate> edge{portrait({0, 0, 60, 90})};
    filter_crops(edge, std::vector<Rect>{{0, 10, 10, 10}});
    ok(edge[0].rejected == RejectReason::off_center_single_face, "edge face rejected as off_center_single_face");
    std::vector<CropCandidate> centred{portrait({0, 0, 60, 90})};
    filter_crops(centred, std::vector<Rect>{{25, 10, 10, 10}});
    ok(!centred[0].rejected, "centred face kept");
    return outcome(ok, "5 letterbox fixtures, " + std::to_string(candidates) + " candidates checked");
}

Outcome reference_tooling(std::string& report) {
    using namespace selection;
    Checks ok;
    const MatchThresholds defaults;
    ok(defaults.exact == 0.886, "default exact 0.886");
    ok(defaults.similar == 0.799, "default similar 0.799");
    ok(EngineConfig{}.reference.exact == 0.886 && EngineConfig{}.reference.similar == 0.799, "config defaults");
    const std::vector<EmbeddedCandidate> cands{{"a", {1, 0, 0}}, {"b", {0, 1, 0}}};
    auto at_cos = [](double c) {
        return std::vector<float>{0, static_cast<float>(c), static_cast<float>(std::sqrt(1 - c * c))};
    };
    const std::vector<float> same{1, 0, 0};
    const auto exact = evaluate_against_reference(cands, same);
    ok(exact.tier == MatchTier::exact && exact.candidate_id == "a", "exact fixture");
    ok(evaluate_against_reference(cands, at_cos(0.85)).tier == MatchTier::similar, "similar fixture (cos 0.85)");
    ok(evaluate_against_reference(cands, at_cos(0.89)).tier == MatchTier::exact, "exact fixture (cos 0.89)");
    ok(evaluate_against_reference(cands, at_cos(0.80)).tier == MatchTier::similar, "similar fixture (cos 0.80)");
    ok(evaluate_against_reference(cands, at_cos(0.79)).tier == MatchTier::none, "none fixture (cos 0.79)");
    const std::vector<float> orth{0, 0, 1};
    ok(evaluate_against_reference(cands, orth).tier == MatchTier::none, "none fixture (orthogonal)");

    // Corpus-level rates on synthetic videos: references are perturbed keyframe
    // embeddings. Reported, not asserted.
    oracle::TempDir dir("acc_ref");
    std::ostringstream rep;
    int refs_total = 0, kf_exact = 0, kf_similar = 0, pr_exact = 0, pr_similar = 0;
    for (std::uint64_t seed : {3u, 4u, 5u}) {
        const fs::path root = dir.path / ("video" + std::to_string(seed));
        synth::SyntheticSpec spec;
        spec.frames = 150;
        spec.shots = 5;
        spec.seed = seed;
        spec.video_id = "synthetic" + std::to_string(seed);
        synth::write_synthetic_bundle(root, spec);
        (void)pipeline::run_pipeline(root, synth::synthetic_config());
        const auto ds = pipeline::load_dataset(root);
        const auto frames = ingest::read_tensor_file(ingest::bundle_paths(root).frame_embeddings);
        ingest::TensorFile refs;
        refs.dim = frames.dim;
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> noise(0.0, 0.3);
        for (int r = 0; r < 6; ++r) {
            const auto row = frames.row(rng() % frames.rows());
            std::vector<float> v(row.begin(), row.end());
            for (auto& x : v) x += float(noise(rng));
            refs.append("ref" + std::to_string(r), v);
        }
        const auto j = pipeline::reference_report(root, refs, defaults);
        refs_total += 6;
        kf_exact += j["scopes"]["keyframes"]["counts"]["exact"].get<int>();
        kf_similar += j["scopes"]["keyframes"]["counts"]["similar"].get<int>();
        pr_exact += j["scopes"]["proposals"]["counts"]["exact"].get<int>();
        pr_similar += j["scopes"]["proposals"]["counts"]["similar"].get<int>();
    }
    rep << "REPORT reference-match corpus: " << refs_total << " references over 3 synthetic videos; keyframes exact "
        << fmt(double(kf_exact) / refs_total) << ", similar-or-better " << fmt(double(kf_exact + kf_similar) / refs_total)
        << "; proposals exact " << fmt(double(pr_exact) / refs_total) << ", similar-or-better "
        << fmt(double(pr_exact + pr_similar) / refs_total);
    report = rep.str();
    return outcome(ok, "defaults 0.886/0.799");
}

Outcome service_contract() {
    Checks ok;
    oracle::TempDir dir("acc_service");
    svc::make_served_bundle(dir.path);
    const auto requests = svc::scripted_session(dir.path);
    const auto recorded = svc::record_session(dir.path, requests);
    const fs::path file = dir.path / "recorded_session.json";
    atomic_write_file(file, recorded.dump(1));
    const auto diffs = svc::replay_session(dir.path, nlohmann::json::parse(read_file(file)));
    ok(diffs.empty(), std::to_string(diffs.size()) + " replayed responses differ");

    const auto crash = svc::crash_injection(dir.path, 20, 99);
    ok(crash.acknowledged > 0, "crash rounds acknowledged selections");
    ok(crash.lost == 0, std::to_string(crash.lost) + " acknowledged selections lost");
    ok(crash.duplicated == 0, "duplicate request ids");

    oracle::TempDir big("acc_latency");
    svc::make_served_bundle(big.path, 60, 3);
    const auto lat = svc::search_latency(big.path, 5000, 200, 5);
    ok(lat.p95_ms < 100.0, "search p95 under 100 ms");
    return outcome(ok, std::to_string(recorded.size()) + " replayed requests; " + std::to_string(crash.rounds) +
                           " crash rounds, " + std::to_string(crash.acknowledged) + " acks, " +
                           std::to_string(crash.lost) + " lost; search over " + std::to_string(lat.candidates) +
                           " candidates: p50 " + fmt(lat.p50_ms, 2) + " ms, p95 " + fmt(lat.p95_ms, 2) + " ms");
}

}  // namespace

int main() {
    std::string reference_report;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"formula-unit-suite", formula_suite},
        {"oracle-equivalence", oracle_equivalence},
        {"planted-structure-recovery", planted_structure},
        {"pipeline-determinism-and-caching", pipeline_determinism},
        {"ranking-invariances", ranking_invariances},
        {"cropper-suite", cropper_suite},
        {"reference-match-tooling", [&] { return reference_tooling(reference_report); }},
        {"service-contract", service_contract},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    }
    if (!reference_report.empty()) std::cout << reference_report << std::endl;
    std::cout << (failed == 0 ? "ALL PASS" : std::to_string(failed) + " FAILED") << std::endl;
    return failed == 0 ? 0 : 1;
}
