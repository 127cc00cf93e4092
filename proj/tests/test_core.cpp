// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "framepick/core.hpp"
#include "framepick/digest.hpp"
#include "framepick/fsio.hpp"
#include "framepick/image.hpp"
#include "oracles.hpp"

using namespace framepick;

TEST_CASE("cosine similarity on hand-checked vectors") {
    const std::vector<float> x{1, 0}, y{0, 1}, d{1, 1};
    CHECK(cosine_similarity(std::span<const float>(x), std::span<const float>(x)) == doctest::Approx(1.0));
    CHECK(cosine_similarity(std::span<const float>(x), std::span<const float>(y)) == doctest::Approx(0.0));
    CHECK(cosine_similarity(std::span<const float>(x), std::span<const float>(d)) ==
          doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
}

TEST_CASE("cosine similarity rejects bad operands") {
    const std::vector<float> a{1, 2}, z{0, 0}, b{1, 2, 3};
    CHECK_THROWS_AS((void)cosine_similarity(std::span<const float>(a), std::span<const float>(z)), DomainError);
    CHECK_THROWS_AS((void)cosine_similarity(std::span<const float>(a), std::span<const float>(b)), DomainError);
}

TEST_CASE("cosine similarity is symmetric and scale invariant") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    for (int t = 0; t < 200; ++t) {
        std::vector<double> a(8), b(8), a2(8);
        for (int i = 0; i < 8; ++i) a[i] = g(rng), b[i] = g(rng);
        const double s = 0.01 + std::abs(g(rng)) * 50;
        for (int i = 0; i < 8; ++i) a2[i] = a[i] * s;
        const double ab = cosine_similarity(std::span<const double>(a), std::span<const double>(b));
        CHECK(ab == doctest::Approx(cosine_similarity(std::span<const double>(b), std::span<const double>(a))));
        CHECK(ab == doctest::Approx(cosine_similarity(std::span<const double>(a2), std::span<const double>(b))));
        CHECK(ab <= 1.0 + 1e-12);
        CHECK(ab >= -1.0 - 1e-12);
    }
}

TEST_CASE("rect helpers") {
    const Rect a{0, 0, 10, 10}, b{5, 5, 10, 10};
    CHECK(intersect(a, b) == Rect{5, 5, 5, 5});
    CHECK(overlap_area(a, b) == 25);
    CHECK(overlap_area(a, Rect{20, 20, 3, 3}) == 0);
    CHECK(clamp_to(Rect{-5, -5, 20, 20}, 10, 8) == Rect{0, 0, 10, 8});
    CHECK(a.contains(Rect{1, 1, 9, 9}));
    CHECK_FALSE(a.contains(b));
}

TEST_CASE("aspect tags and enum spellings") {
    const auto t = parse_aspect("2:3");
    CHECK(t.width_ratio == 2);
    CHECK(t.height_ratio == 3);
    CHECK(t.slug() == "2x3");
    CHECK(parse_aspect("original").is_original());
    CHECK_THROWS((void)parse_aspect("wide"));
    for (auto e : {Emotion::neutral, Emotion::fear, Emotion::happiness, Emotion::contempt})
        CHECK(parse_emotion(to_string(e)) == e);
    for (auto s : {ShotScale::long_shot, ShotScale::medium, ShotScale::close_up, ShotScale::unknown})
        CHECK(parse_shot_scale(to_string(s)) == s);
    CHECK(to_string(ShotScale::close_up) == "close-up");
    CHECK(parse_landmark_scheme("nine-point") == LandmarkScheme::nine_point);
    CHECK(parse_keyword_source("user-added") == KeywordSource::user_added);
}

TEST_CASE("png and pgm round trips") {
    oracle::TempDir dir("img");
    Image img(7, 5);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 7; ++x) img.set(x, y, std::uint8_t(x * 30), std::uint8_t(y * 50), std::uint8_t(x + y));
    write_png(dir.path / "a.png", img);
    const auto back = read_image(dir.path / "a.png");
    CHECK(back.width == 7);
    CHECK(back.height == 5);
    CHECK(back.rgb == img.rgb);
    write_ppm(dir.path / "a.ppm", img);
    CHECK(read_image(dir.path / "a.ppm").rgb == img.rgb);

    Grid g(3, 2);
    g.at(0, 0) = 1.0;
    g.at(2, 1) = 0.5;
    write_pgm(dir.path / "g.pgm", g);
    const auto gb = read_pgm(dir.path / "g.pgm");
    CHECK(gb.width == 3);
    CHECK(gb.at(0, 0) == doctest::Approx(1.0));
    CHECK(gb.at(2, 1) == doctest::Approx(0.5).epsilon(0.01));
    CHECK(gb.at(1, 0) == 0.0);
}

TEST_CASE("crop, resize and nearest resample") {
    Image img(4, 4);
    img.set(3, 3, 255, 0, 0);
    const auto c = crop(img, Rect{2, 2, 2, 2});
    CHECK(c.width == 2);
    CHECK(c.px(1, 1)[0] == 255);
    const auto small = downscale_shortest_edge(img, 2);
    CHECK(small.width == 2);
    CHECK(downscale_shortest_edge(img, 16).width == 4);
    Grid g(2, 1);
    g.at(1, 0) = 1.0;
    const auto r = resample_nearest(g, 4, 2);
    CHECK(r.at(0, 1) == 0.0);
    CHECK(r.at(3, 1) == 1.0);
}

TEST_CASE("canonical json ignores key order and integral spelling") {
    const auto a = nlohmann::json::parse(R"({"b": 1.0, "a": [1, 2.5]})");
    const auto b = nlohmann::json::parse(R"({"a": [1.0, 2.5], "b": 1})");
    CHECK(canonical_json(a) == canonical_json(b));
    CHECK(config_digest(a) == config_digest(b));
    CHECK(config_digest(a) != config_digest(nlohmann::json::parse(R"({"a": [1, 2.5], "b": 2})")));
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(hex64(255) == "00000000000000ff");
}

TEST_CASE("atomic write leaves the old file when interrupted") {
    oracle::TempDir dir("fsio");
    const auto p = dir.path / "f.txt";
    atomic_write_file(p, "old");
    struct Boom {};
    CHECK_THROWS_AS(atomic_write_file(p, "new", [](const std::filesystem::path&) { throw Boom{}; }), Boom);
    CHECK(read_file(p) == "old");
    durable_append(p, "+x");
    CHECK(read_file(p) == "old+x");
    CHECK(utc_timestamp().size() == 24);
}
