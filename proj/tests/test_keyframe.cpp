// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "framepick/keyframe.hpp"
#include "oracles.hpp"

using namespace framepick;
using namespace framepick::keyframe;

namespace {

Image solid(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    Image img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) img.set(x, y, r, g, b);
    return img;
}

Image noise_image(int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> u(0, 255);
    Image img(w, h);
    for (auto& v : img.rgb) v = static_cast<std::uint8_t>(u(rng));
    return img;
}

}  // namespace

TEST_CASE("luminance of pure colours") {
    CHECK(std::abs(luminance(solid(8, 8, 255, 0, 0)) - 0.2126 * 255) < 1e-6);
    CHECK(std::abs(luminance(solid(8, 8, 0, 255, 0)) - 0.7152 * 255) < 1e-6);
    CHECK(std::abs(luminance(solid(8, 8, 0, 0, 255)) - 0.0722 * 255) < 1e-6);
    CHECK(std::abs(luminance(solid(8, 8, 255, 255, 255)) - 255.0) < 1e-6);
    CHECK(std::abs(luminance(solid(8, 8, 255, 0, 0)) - 54.213) < 1e-6);
}

TEST_CASE("constant frame metrics") {
    const auto gray = solid(16, 16, 128, 128, 128);
    const auto m = compute_frame_metrics(gray, &gray);
    CHECK(m.sharpness == 0.0);
    CHECK(m.uniformity == 1.0);
    CHECK(m.stillness == 1.0);
    CHECK(compute_frame_metrics(gray, nullptr).stillness == 1.0);
    CHECK_THROWS_AS((void)compute_frame_metrics(Image{}, nullptr), DomainError);
}

TEST_CASE("uniformity of a full gray ramp matches the histogram oracle") {
    Image ramp(256, 1);
    std::vector<int> levels;
    for (int x = 0; x < 256; ++x) {
        ramp.set(x, 0, std::uint8_t(x), std::uint8_t(x), std::uint8_t(x));
        levels.push_back(x);
    }
    CHECK(uniformity(ramp) == doctest::Approx(13.0 / 256.0).epsilon(1e-12));
    CHECK(uniformity(ramp) == doctest::Approx(oracle::uniformity(levels, 0.05)));
}

TEST_CASE("uniformity matches the oracle on random gray images") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
        std::uniform_int_distribution<int> spread(1, 255);
        const int hi = spread(rng);
        std::uniform_int_distribution<int> u(0, hi);
        Image img(40, 30);
        std::vector<int> levels;
        for (int y = 0; y < 30; ++y)
            for (int x = 0; x < 40; ++x) {
                const int v = u(rng);
                img.set(x, y, std::uint8_t(v), std::uint8_t(v), std::uint8_t(v));
                levels.push_back(v);
            }
        CHECK(uniformity(img) == doctest::Approx(oracle::uniformity(levels, 0.05)).epsilon(1e-12));
    }
}

TEST_CASE("stillness uses mean squared difference") {
    const auto a = solid(4, 4, 10, 10, 10);
    const auto b = solid(4, 4, 12, 10, 10);
    // SSD per pixel = 4 over the three channels.
    CHECK(stillness(b, &a) == doctest::Approx(1.0 / (1.0 + 4.0)));
}

TEST_CASE("sharpness uses central differences") {
    Image img(5, 1);
    for (int x = 0; x < 5; ++x) img.set(x, 0, std::uint8_t(10 * x), std::uint8_t(10 * x), std::uint8_t(10 * x));
    // Interior gradient 10 per pixel; clamped border differences are 5.
    CHECK(sharpness(img) == doctest::Approx((5.0 + 10 + 10 + 10 + 5) / 5.0));
}

TEST_CASE("quality filter") {
    QualityThresholds t;
    const auto black = compute_frame_metrics(solid(16, 16, 0, 0, 0), nullptr);
    const auto gray = compute_frame_metrics(solid(16, 16, 128, 128, 128), nullptr);
    const auto textured = compute_frame_metrics(noise_image(64, 48, 5), nullptr);
    CHECK_FALSE(passes_quality(black, t));
    CHECK_FALSE(passes_quality(gray, t));
    CHECK(textured.luminance > t.min_luminance);
    CHECK(textured.sharpness > t.min_sharpness);
    CHECK(textured.uniformity < t.max_uniformity);
    CHECK(passes_quality(textured, t));
    std::vector<MeasuredFrame> frames{{1, black}, {2, textured}, {3, gray}};
    CHECK(filter_low_quality(frames, t) == std::vector<int>{2});
    QualityThresholds bad;
    bad.max_uniformity = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("shot detection fixtures") {
    auto run = [](const std::vector<Image>& imgs) {
        std::vector<std::vector<float>> h;
        std::vector<int> ids;
        for (std::size_t i = 0; i < imgs.size(); ++i) {
            h.push_back(rgb_histogram(imgs[i]));
            ids.push_back(static_cast<int>(i));
        }
        return detect_shots(h, ids);
    };
    const auto black = solid(8, 8, 0, 0, 0), white = solid(8, 8, 255, 255, 255);

    SUBCASE("identical frames") {
        const auto d = run(std::vector<Image>(20, black));
        CHECK(d.shots.size() == 1);
    }
    SUBCASE("black then white") {
        std::vector<Image> v(10, black);
        v.insert(v.end(), 10, white);
        const auto d = run(v);
        REQUIRE(d.shots.size() == 2);
        CHECK(d.shots[1].first_index == 10);
        CHECK(d.transition[9]);
        CHECK(d.transition[10]);
        CHECK_FALSE(d.transition[5]);
    }
    SUBCASE("alternating frames respect the minimum shot length") {
        std::vector<Image> v;
        for (int i = 0; i < 20; ++i) v.push_back(i % 2 ? white : black);
        const auto d = run(v);
        CHECK(d.shots.size() <= 10);
        for (const auto& s : d.shots) CHECK(s.length() >= 2);
    }
    SUBCASE("single frame") {
        const auto d = run({black});
        CHECK(d.shots.size() == 1);
    }
}

TEST_CASE("shots partition the kept frames") {
    std::mt19937_64 rng(9);
    std::vector<std::vector<float>> h;
    std::vector<int> ids;
    for (int s = 0; s < 6; ++s) {
        const auto base = noise_image(16, 16, rng());
        const int len = 3 + static_cast<int>(rng() % 10);
        for (int i = 0; i < len; ++i) {
            h.push_back(rgb_histogram(base));
            ids.push_back(static_cast<int>(ids.size()) * 2);
        }
    }
    const auto d = detect_shots(h, ids);
    int next = 0;
    for (const auto& s : d.shots) {
        CHECK(s.first_index == next);
        CHECK(s.length() >= 1);
        CHECK(s.first_id == ids[s.first_index]);
        CHECK(s.last_id == ids[s.last_index]);
        next = s.last_index + 1;
    }
    CHECK(next == static_cast<int>(ids.size()));
}

TEST_CASE("subshot segmentation") {
    auto frames_of = [](const std::vector<Image>& imgs, const std::vector<double>& still) {
        std::vector<ShotFrame> out;
        for (std::size_t i = 0; i < imgs.size(); ++i)
            out.push_back({static_cast<int>(i), hsv_histogram(imgs[i]), still[i], false});
        return out;
    };
    SubshotConfig cfg;

    SUBCASE("static shot keeps the first frame") {
        std::vector<Image> imgs(10, solid(8, 8, 40, 90, 200));
        const auto frames = frames_of(imgs, std::vector<double>(10, 0.5));
        Shot shot{0, 0, 9, 0, 9, 0.0};
        const auto subs = segment_subshots(shot, frames, cfg);
        REQUIRE(subs.size() == 1);
        CHECK(subs[0].keyframe == 0);
        CHECK(subs[0].members.size() == 10);
    }
    SUBCASE("red then blue splits at the change") {
        std::vector<Image> imgs(24, solid(8, 8, 220, 10, 10));
        imgs.insert(imgs.end(), 24, solid(8, 8, 10, 10, 220));
        const auto frames = frames_of(imgs, std::vector<double>(48, 0.5));
        Shot shot{0, 0, 47, 0, 47, 0.0};
        const auto subs = segment_subshots(shot, frames, cfg);
        REQUIRE(subs.size() == 2);
        CHECK(subs[0].members.back() == 23);
        CHECK(subs[1].members.front() == 24);
    }
    SUBCASE("a frame equal to its predecessor wins") {
        std::vector<Image> imgs;
        for (int i = 0; i < 8; ++i) imgs.push_back(noise_image(8, 8, 100 + static_cast<std::uint64_t>(i)));
        imgs[5] = imgs[4];
        std::vector<double> still{1.0};
        for (int i = 1; i < 8; ++i) still.push_back(stillness(imgs[i], &imgs[i - 1]));
        still[0] = still[1];  // first frame of a shot has a predecessor in the video
        CHECK(still[5] == 1.0);
        auto frames = frames_of(imgs, still);
        for (auto& f : frames) f.features = hsv_histogram(imgs[0]);  // one cluster
        Shot shot{0, 0, 7, 0, 7, 0.0};
        const auto subs = segment_subshots(shot, frames, cfg);
        REQUIRE(subs.size() == 1);
        CHECK(subs[0].keyframe == 5);
    }
}

TEST_CASE("subshot invariants and determinism") {
    std::mt19937_64 rng(21);
    for (int t = 0; t < 20; ++t) {
        const int len = 1 + static_cast<int>(rng() % 80);
        std::vector<ShotFrame> frames;
        for (int i = 0; i < len; ++i) {
            const int phase = (i / (1 + static_cast<int>(rng() % 20))) % 3;
            frames.push_back({1000 + i, hsv_histogram(solid(4, 4, std::uint8_t(phase * 100), 60, 30)),
                              std::uniform_real_distribution<double>(0.1, 1.0)(rng), false});
        }
        Shot shot{3, 0, len - 1, 1000, 1000 + len - 1, 0.0};
        SubshotConfig cfg;
        const auto a = segment_subshots(shot, frames, cfg, 7);
        const auto b = segment_subshots(shot, frames, cfg, 7);
        REQUIRE(a.size() == b.size());
        CHECK(a.size() >= 1);
        CHECK(static_cast<int>(a.size()) <= len);
        int expect = 1000;
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].members == b[i].members);
            CHECK(a[i].keyframe == b[i].keyframe);
            CHECK(a[i].subshot_id == 7 + static_cast<int>(i));
            for (int m : a[i].members) CHECK(m == expect++);
            CHECK(std::find(a[i].members.begin(), a[i].members.end(), a[i].keyframe) != a[i].members.end());
        }
        CHECK(expect == 1000 + len);
    }
}
