// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "framepick/config.hpp"

// Deterministic synthetic dataset bundles for tests, benchmarks and demos.
namespace framepick::synth {

struct SyntheticSpec {
    std::string video_id = "synthetic";
    int frames = 500;
    int width = 320;
    int height = 180;
    int bar_rows = 20;  // black rows at top and bottom
    int shots = 10;
    double fps = 25.0;
    int embedding_dim = 32;
    int face_embedding_dim = 16;
    int identities = 3;
    int appearances = 4;  // embedding rows per face (face_id, face_id/1, ...)
    int saliency_width = 160;
    int saliency_height = 90;
    bool write_saliency = true;
    bool write_shot_scale = true;
    std::uint64_t seed = 7;
};

// What the generator planted.
struct SyntheticTruth {
    std::vector<int> shot_of_frame;
    std::vector<int> dark_frames;             // fail the luminance threshold
    std::map<std::string, int> identity_of;   // face id -> planted identity
    std::vector<int> faceless_shots;
    std::vector<std::pair<int, int>> shared_scene_shots;  // shot pairs with one embedding centre
};

SyntheticTruth write_synthetic_bundle(const std::filesystem::path& root, const SyntheticSpec& spec = {});

// Engine defaults with face clustering sized for the synthetic bundle.
[[nodiscard]] EngineConfig synthetic_config();

}  // namespace framepick::synth
