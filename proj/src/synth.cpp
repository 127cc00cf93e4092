// SPDX-License-Identifier: Apache-2.0
#include "framepick/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "framepick/image.hpp"
#include "framepick/ingest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace framepick::synth {
namespace {

using Vec = std::vector<float>;

struct Rng {
    std::mt19937_64 gen;
    explicit Rng(std::uint64_t seed) : gen(seed) {}
    double normal(double sigma = 1.0) { return std::normal_distribution<double>(0.0, sigma)(gen); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); }
};

double dot(const Vec& a, const Vec& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += double(a[i]) * b[i];
    return s;
}

Vec scaled(Vec v, double s) {
    for (auto& x : v) x = float(x * s);
    return v;
}

Vec add(Vec a, const Vec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

// Random unit vector orthogonal to every vector in `basis` (assumed orthonormal).
Vec orthogonal_unit(Rng& rng, int dim, const std::vector<Vec>& basis) {
    Vec v(static_cast<std::size_t>(dim));
    for (auto& x : v) x = float(rng.normal());
    for (const auto& b : basis) v = add(v, scaled(b, -dot(v, b)));
    return scaled(v, 1.0 / std::sqrt(dot(v, v)));
}

Vec jitter(Rng& rng, Vec v, double sigma) {
    for (auto& x : v) x = float(x + rng.normal(sigma));
    return v;
}

std::array<std::uint8_t, 3> hsv_to_rgb(double h, double s, double v) {
    const double c = v * s;
    const double hp = std::fmod(h, 360.0) / 60.0;
    const double x = c * (1 - std::fabs(std::fmod(hp, 2.0) - 1));
    double r = 0, g = 0, b = 0;
    if (hp < 1) r = c, g = x;
    else if (hp < 2) r = x, g = c;
    else if (hp < 3) g = c, b = x;
    else if (hp < 4) g = x, b = c;
    else if (hp < 5) r = x, b = c;
    else r = c, b = x;
    const double m = v - c;
    auto q = [&](double u) { return std::uint8_t(std::lround(std::clamp(u + m, 0.0, 1.0) * 255)); };
    return {q(r), q(g), q(b)};
}

struct PlantedFace {
    std::string id;
    int identity = 0;
    Rect bbox;  // original coordinates
    bool closed_eyes = false;
    bool landmarks = true;
};

}  // namespace

SyntheticTruth write_synthetic_bundle(const fs::path& root, const SyntheticSpec& spec) {
    if (spec.frames < spec.shots || spec.shots < 1) throw ConfigError("synthetic bundle needs frames >= shots >= 1");
    if (spec.height - 2 * spec.bar_rows < 60 || spec.width < 120)
        throw ConfigError("synthetic bundle needs at least 120x60 content pixels");
    SyntheticTruth truth;
    Rng rng(spec.seed);
    const auto paths = ingest::bundle_paths(root);
    fs::create_directories(paths.frames_dir);
    fs::create_directories(paths.saliency_dir);

    const int W = spec.width, H = spec.height, top = spec.bar_rows;
    const int content_h = H - 2 * top;
    const int per_shot = spec.frames / spec.shots;
    auto shot_of = [&](int f) { return std::min(spec.shots - 1, f / per_shot); };
    auto shot_start = [&](int s) { return s * per_shot; };

    // Scenes: shots 3 and 7 revisit one scene, shots 5 and 6 share another.
    std::vector<int> scene(std::size_t(spec.shots));
    for (int s = 0; s < spec.shots; ++s) scene[std::size_t(s)] = s;
    if (spec.shots >= 8) {
        scene[6] = 5;
        scene[7] = 3;
        truth.shared_scene_shots = {{3, 7}, {5, 6}};
    }
    if (spec.shots >= 10) truth.faceless_shots.push_back(9);

    // Frame embeddings: scene centres on one axis, per-shot phase offsets off it.
    const int D = spec.embedding_dim;
    const Vec axis = orthogonal_unit(rng, D, {});
    const Vec offset = scaled(orthogonal_unit(rng, D, {axis}), 2.0);
    std::vector<Vec> phase;
    for (int s = 0; s < spec.shots; ++s) phase.push_back(scaled(orthogonal_unit(rng, D, {axis}), 0.3));

    // Face identities.
    const int FD = spec.face_embedding_dim;
    std::vector<Vec> ids;
    for (int i = 0; i < spec.identities; ++i) ids.push_back(orthogonal_unit(rng, FD, ids));

    ingest::TensorFile frame_emb, crop_emb, face_emb, prompt_emb, keyword_emb;
    frame_emb.dim = crop_emb.dim = prompt_emb.dim = keyword_emb.dim = D;
    face_emb.dim = FD;
    std::ofstream index(paths.frames_index), faces_out(paths.faces), landmarks_out(paths.landmarks),
        emotions_out(paths.emotions);
    std::ofstream scales_out;
    if (spec.write_shot_scale) scales_out.open(paths.shot_scales);

    const std::array<Emotion, 4> emotions{Emotion::happiness, Emotion::neutral, Emotion::surprise, Emotion::sadness};
    const std::array<ShotScale, 3> scales{ShotScale::medium, ShotScale::close_up, ShotScale::long_shot};

    for (int f = 0; f < spec.frames; ++f) {
        const int s = shot_of(f);
        const int t = f - shot_start(s);
        const bool second_phase = t >= per_shot / 2;
        truth.shot_of_frame.push_back(s);
        const bool dark = spec.shots >= 5 && s == 4 && t < 5;
        if (dark) truth.dark_frames.push_back(f);

        // Faces present in this frame.
        std::vector<PlantedFace> faces;
        const bool faceless = std::find(truth.faceless_shots.begin(), truth.faceless_shots.end(), s) !=
                              truth.faceless_shots.end();
        if (!faceless && !dark) {
            const int fw = std::max(24, W / 6), fh = std::max(28, content_h * 3 / 7);
            const int drift = t / 5;
            const int x0 = (s % 2 == 0 ? W / 5 : W / 2) + drift - fw / 2;
            faces.push_back({"f" + std::to_string(f) + "_0", s % spec.identities,
                             {std::clamp(x0, 0, W - fw), top + content_h / 4, fw, fh}, false, s != 8});
            if (s % 2 == 0) {
                const int x1 = W * 3 / 4 - drift - fw / 2;
                faces.push_back({"f" + std::to_string(f) + "_1", (s + 1) % spec.identities,
                                 {std::clamp(x1, 0, W - fw), top + content_h / 5, fw, fh}, s == 2, true});
            }
        }

        // Pixels.
        Image img(W, H);
        // Brightness ramps across the shot so subshots follow time.
        const double hue = 360.0 * s / spec.shots;
        const double ramp = double(t) / std::max(1, per_shot - 1);
        const auto base = hsv_to_rgb(hue, 0.75, 0.55 + 0.4 * ramp);
        const auto alt = hsv_to_rgb(hue + 180.0, 0.5, (0.55 + 0.4 * ramp) * 0.4);
        const int period = 10;
        for (int y = top; y < top + content_h; ++y)
            for (int x = 0; x < W; ++x) {
                if (dark) {
                    img.set(x, y, 4, 4, 5);
                    continue;
                }
                const bool stripe = ((x + y / 2 + t / 2) / period) % 2 == 0;
                const double shade = 0.75 + 0.25 * double(y - top) / content_h;
                const auto& c = stripe ? base : alt;
                img.set(x, y, std::uint8_t(c[0] * shade), std::uint8_t(c[1] * shade), std::uint8_t(c[2] * shade));
            }
        Rect object{(20 + 3 * t) % std::max(1, W - 40), top + content_h - 40, 30, 30};
        if (!dark)
            for (int y = object.y; y < object.bottom() && y < top + content_h; ++y)
                for (int x = object.x; x < object.right() && x < W; ++x) img.set(x, y, 240, 240, 235);
        for (const auto& face : faces) {
            const Rect& b = face.bbox;
            const double cx = b.x + b.w / 2.0, cy = b.y + b.h / 2.0;
            for (int y = b.y; y < b.bottom(); ++y)
                for (int x = b.x; x < b.right(); ++x) {
                    const double dx = (x + 0.5 - cx) / (b.w / 2.0), dy = (y + 0.5 - cy) / (b.h / 2.0);
                    if (dx * dx + dy * dy <= 1.0) img.set(x, y, 224, 172, 140);
                }
            for (int e = 0; e < 2; ++e) {
                const int ex = b.x + b.w * (e == 0 ? 3 : 7) / 10, ey = b.y + b.h * 2 / 5;
                for (int y = ey - 1; y <= ey + (face.closed_eyes ? 0 : 1); ++y)
                    for (int x = ex - 2; x <= ex + 2; ++x) img.set(x, y, 30, 20, 20);
            }
        }
        write_png(paths.frames_dir / ("frame_" + std::to_string(f) + ".png"), img);
        index << json{{"frame_id", f}, {"timestamp_s", f / spec.fps}, {"file", "frame_" + std::to_string(f) + ".png"}}
                     .dump()
              << "\n";

        // Saliency over the full frame: face blobs, the moving object, a low floor.
        if (spec.write_saliency) {
            Grid sal(spec.saliency_width, spec.saliency_height);
            const double sx = double(W) / spec.saliency_width, sy = double(H) / spec.saliency_height;
            auto blob = [&](double cx, double cy, double sigma, double weight) {
                for (int y = 0; y < sal.height; ++y)
                    for (int x = 0; x < sal.width; ++x) {
                        const double dx = (x + 0.5) * sx - cx, dy = (y + 0.5) * sy - cy;
                        sal.at(x, y) += weight * std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
                    }
            };
            for (int y = 0; y < sal.height; ++y)
                for (int x = 0; x < sal.width; ++x) {
                    const double py = (y + 0.5) * sy;
                    if (py >= top && py < top + content_h) sal.at(x, y) = 0.05;
                }
            if (!dark) blob(object.x + 15, object.y + 15, 12, 0.7);
            for (const auto& face : faces) blob(face.bbox.x + face.bbox.w / 2.0, face.bbox.y + face.bbox.h / 2.0,
                                                face.bbox.w / 2.0, 1.0);
            const double mx = sal.max();
            for (auto& v : sal.cells) v = std::min(1.0, v / mx);
            write_pgm(paths.saliency_dir / ("frame_" + std::to_string(f) + ".pgm"), sal);
        }

        // Embeddings.
        Vec e = add(scaled(axis, 1.5 * scene[std::size_t(s)]), offset);
        if (second_phase) e = add(e, phase[std::size_t(s)]);
        e = jitter(rng, e, 0.01);
        frame_emb.append(std::to_string(f), e);
        for (const char* tag : {"16:9", "2:3"})
            crop_emb.append(std::to_string(f) + "@" + tag, jitter(rng, e, 0.05));

        // Face records.
        for (std::size_t k = 0; k < faces.size(); ++k) {
            const auto& face = faces[k];
            truth.identity_of[face.id] = face.identity;
            faces_out << json{{"face_id", face.id},
                              {"frame_id", f},
                              {"bbox", {face.bbox.x, face.bbox.y, face.bbox.w, face.bbox.h}},
                              {"detector_score", 0.99}}
                             .dump()
                      << "\n";
            emotions_out << json{{"face_id", face.id},
                                 {"emotion", to_string(emotions[std::size_t(s + face.identity) % emotions.size()])}}
                                .dump()
                         << "\n";
            if (face.landmarks) {
                json pts = json::array();
                const Rect& b = face.bbox;
                for (int eye = 0; eye < 2; ++eye) {
                    const double ex = b.x + b.w * (eye == 0 ? 0.3 : 0.7), ey = b.y + b.h * 0.4;
                    const double half = b.w * 0.1, open = (face.closed_eyes ? 0.05 : 0.15) * b.w;
                    // p1 left, p2/p3 upper lid, p4 right, p5/p6 lower lid
                    const double xs[6] = {ex - half, ex - half / 3, ex + half / 3, ex + half, ex + half / 3,
                                          ex - half / 3};
                    const double ys[6] = {ey, ey - open / 2, ey - open / 2, ey, ey + open / 2, ey + open / 2};
                    for (int i = 0; i < 6; ++i) {
                        pts.push_back(xs[i]);
                        pts.push_back(ys[i]);
                    }
                }
                landmarks_out << json{{"face_id", face.id}, {"frame_id", f}, {"scheme", "six-point"}, {"points", pts}}
                                     .dump()
                              << "\n";
            }
            const Vec centre = ids[std::size_t(face.identity)];
            face_emb.append(face.id, jitter(rng, centre, 0.04));
            for (int a = 1; a < spec.appearances; ++a)
                face_emb.append(face.id + "/" + std::to_string(a), jitter(rng, centre, 0.04));
        }

        if (spec.write_shot_scale) {
            ShotScale label = scales[std::size_t(s) % scales.size()];
            if (f % 7 == 3) label = scales[std::size_t(s + 1) % scales.size()];
            scales_out << json{{"frame_id", f}, {"label", to_string(label)}}.dump() << "\n";
        }
    }

    // Logo prior: crop-relative, heavy in the top-right corner.
    Grid prior(64, 36, 0.1);
    for (int y = 0; y < 10; ++y)
        for (int x = 48; x < 64; ++x) prior.at(x, y) = 1.0;
    write_pgm(paths.logo_prior, prior);

    prompt_emb.append("good", jitter(rng, add(offset, phase[0]), 0.2));
    prompt_emb.append("bad", jitter(rng, add(offset, scaled(phase[0], -1.0)), 0.2));
    const std::vector<std::string> keywords{"harbor", "crowd", "sunset"};
    for (std::size_t k = 0; k < keywords.size(); ++k)
        keyword_emb.append(keywords[k], jitter(rng, add(offset, phase[(k * 3) % phase.size()]), 0.3));

    ingest::write_tensor_file(paths.frame_embeddings, frame_emb);
    ingest::write_tensor_file(paths.crop_embeddings, crop_emb);
    ingest::write_tensor_file(paths.face_embeddings, face_emb);
    ingest::write_tensor_file(paths.prompt_embeddings, prompt_emb);
    ingest::write_tensor_file(paths.root / "artifacts" / "keyword_embeddings.fpk", keyword_emb);

    json manifest = {{"video_id", spec.video_id},
                     {"title", "Synthetic harbor story"},
                     {"summary", "A generated clip: people meet at the harbor, a crowd gathers, the sun sets."},
                     {"fps", spec.fps},
                     {"frame_count", spec.frames},
                     {"duration_s", spec.frames / spec.fps},
                     {"embedding_dim", D},
                     {"face_embedding_dim", FD},
                     {"keywords", keywords},
                     {"keyword_embeddings", "artifacts/keyword_embeddings.fpk"}};
    std::ofstream(paths.manifest) << manifest.dump(2) << "\n";
    return truth;
}

EngineConfig synthetic_config() {
    EngineConfig cfg;
    cfg.faces.cluster.min_pts = 8;
    return cfg;
}

}  // namespace framepick::synth
