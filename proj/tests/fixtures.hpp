// SPDX-License-Identifier: Apache-2.0
// In-memory datasets for selection, service and acceptance checks.
#pragma once

#include <algorithm>
#include <map>
#include <random>
#include <string>

#include "framepick/dataset.hpp"

namespace fixture {

using namespace framepick;

struct DatasetSpec {
    int frames = 60;
    int frames_per_group = 3;
    int keywords = 3;
    int clusters = 3;
    double closed_eye_rate = 0.15;
    std::uint64_t seed = 1;
};

// Random but valid dataset: one candidate per frame and aspect, random raw
// scores, zero to three faces per frame.
inline Dataset random_dataset(const DatasetSpec& spec) {
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> u(0, 1);
    Dataset ds;
    ds.video_id = "fixture";
    ds.title = "Fixture";
    ds.fps = 25;
    ds.frame_count = spec.frames * 10;
    ds.width = 320;
    ds.height = 140;
    ds.aspects = {parse_aspect("original"), parse_aspect("16:9"), parse_aspect("2:3")};
    for (int k = 0; k < spec.keywords; ++k)
        ds.keywords.push_back({"kw" + std::to_string(k), {}, KeywordSource::metadata});

    std::map<int, grouping::Group> groups;
    std::map<int, FaceClusterInfo> clusters;
    for (int f = 0; f < spec.frames; ++f) {
        FrameRecord fr;
        fr.frame_id = f * 10;
        fr.timestamp_s = f * 0.4;
        fr.width = 320;
        fr.height = 140;
        fr.shot_id = f / 4;
        fr.group_id = f / spec.frames_per_group;
        fr.is_keyframe = true;
        ds.frames.push_back(fr);
        auto& g = groups[fr.group_id];
        g.group_id = fr.group_id;
        g.members.push_back(fr.frame_id);

        const int nfaces = static_cast<int>(rng() % 4);
        std::vector<CandidateFace> faces;
        for (int i = 0; i < nfaces; ++i) {
            CandidateFace face;
            face.face_id = "face" + std::to_string(f) + "_" + std::to_string(i);
            face.bbox = {20 + 60 * i, 30, 40, 40};
            face.eyes_closed = u(rng) < spec.closed_eye_rate;
            face.emotion = static_cast<Emotion>(rng() % 4);
            face.cluster_id = spec.clusters > 0 ? static_cast<int>(rng() % (spec.clusters + 1)) - 1 : -1;
            faces.push_back(face);
            if (face.cluster_id >= 0) {
                auto& c = clusters[face.cluster_id];
                c.cluster_id = face.cluster_id;
                ++c.size;
                c.face_ids.push_back(face.face_id);
            }
        }
        const auto scale = static_cast<ShotScale>(rng() % 3);
        for (const auto& tag : ds.aspects) {
            Candidate c;
            c.id = "f" + std::to_string(fr.frame_id) + "_" + tag.slug();
            c.frame_id = fr.frame_id;
            c.timestamp_s = fr.timestamp_s;
            c.shot_id = fr.shot_id;
            c.group_id = fr.group_id;
            c.aspect = tag;
            c.rect = tag.is_original() ? Rect{0, 0, 320, 140} : tag.width_ratio == 16 ? Rect{36, 0, 248, 140}
                                                                                        : Rect{113, 0, 93, 140};
            c.shot_scale = scale;
            c.faces = faces;
            c.raw.aesthetic = u(rng);
            c.raw.logo = u(rng);
            for (int k = 0; k < spec.keywords; ++k) c.raw.semantic.push_back(u(rng) * 0.6 - 0.1);
            if (!faces.empty()) {
                double pmax = 0, psum = 0, fmax = 0, fsum = 0;
                for (auto& face : c.faces) {
                    face.position = std::vector<double>{0.1, 0.25, 0.5, 0.75, 1.0}[rng() % 5];
                    face.focus = u(rng) * 0.5;
                    pmax = std::max(pmax, face.position);
                    psum += face.position;
                    fmax = std::max(fmax, *face.focus);
                    fsum += *face.focus;
                }
                c.raw.position_max = pmax;
                c.raw.position_mean = psum / c.faces.size();
                c.raw.focus_max = fmax;
                c.raw.focus_mean = fsum / c.faces.size();
            }
            ds.candidates.push_back(std::move(c));
        }
    }
    for (auto& [id, g] : groups) ds.groups.push_back(g);
    for (auto& [id, c] : clusters) ds.face_clusters.push_back(c);
    std::stable_sort(ds.face_clusters.begin(), ds.face_clusters.end(),
                     [](const FaceClusterInfo& a, const FaceClusterInfo& b) { return a.size > b.size; });
    normalize_scores(ds);
    ds.reindex();
    return ds;
}

}  // namespace fixture
