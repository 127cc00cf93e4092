// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "framepick/faceproc.hpp"

using namespace framepick;
using namespace framepick::faces;

namespace {

EyeLandmarks six(std::vector<Point> pts) { return EyeLandmarks{LandmarkScheme::six_point, std::move(pts), std::nullopt}; }

// p1..p6 for an eye of half-width 2 and opening `h`.
EyeLandmarks open_eye(double h) { return six({{0, 0}, {1, h}, {3, h}, {4, 0}, {3, -h}, {1, -h}}); }

}  // namespace

TEST_CASE("bbox expansion") {
    CHECK(expand_bbox({100, 100, 100, 100}, {1000, 1000}) == Rect{90, 90, 120, 120});
    CHECK(expand_bbox({0, 0, 50, 50}, {100, 100}) == Rect{0, 0, 55, 55});
    CHECK(expand_bbox({60, 70, 40, 30}, {100, 100}) == Rect{56, 67, 44, 33});
    CHECK(expand_bbox({17, 23, 31, 9}, {100, 100}, 1.0) == Rect{17, 23, 31, 9});
}

TEST_CASE("expansion then shrinking restores the box when nothing is clamped") {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> ext(4, 200);
    for (int t = 0; t < 500; ++t) {
        const Rect b{300, 300, ext(rng), ext(rng)};
        const Size frame{1000, 1000};
        CHECK(expand_bbox(expand_bbox(b, frame, 1.2), frame, 1.0 / 1.2) == b);
    }
}

TEST_CASE("expansion never leaves the frame") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> px(0, 90), py(0, 70), ext(1, 30);
    for (int t = 0; t < 500; ++t) {
        const Rect b = clamp_to({px(rng), py(rng), ext(rng), ext(rng)}, 100, 80);
        const auto e = expand_bbox(b, {100, 80});
        CHECK(Rect{0, 0, 100, 80}.contains(e));
        CHECK(e.contains(b));
    }
}

TEST_CASE("eye aspect ratio") {
    const auto eye = six({{0, 0}, {1, 1}, {3, 1}, {4, 0}, {3, -1}, {1, -1}});
    CHECK(compute_ear(eye) == 0.5);
    CHECK(compute_ear(open_eye(0.0)) == 0.0);
    CHECK_THROWS_AS((void)compute_ear(six({{1, 1}, {1, 2}, {1, 2}, {1, 1}, {1, 0}, {1, 0}})), DomainError);

    // Nine-point: contour p1..p8 clockwise from the left extreme, plus pupil.
    EyeLandmarks nine{LandmarkScheme::nine_point,
                      {{0, 0}, {1, 1}, {2, 1.5}, {3, 1}, {4, 0}, {3, -1}, {2, -1.5}, {1, -1}},
                      Point{2, 0}};
    CHECK(compute_ear(nine) == doctest::Approx((2.0 + 3.0 + 2.0) / (3.0 * 4.0)));
}

TEST_CASE("eye aspect ratio ignores rotation, translation and scale") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-5, 5), ang(0, 6.283185307179586), sc(0.1, 20);
    for (int t = 0; t < 300; ++t) {
        std::vector<Point> pts;
        for (int i = 0; i < 6; ++i) pts.push_back({u(rng), u(rng)});
        pts[3] = {pts[0].x + 3 + std::abs(u(rng)), pts[0].y};
        const auto base = six(pts);
        const double a = ang(rng), s = sc(rng), tx = u(rng), ty = u(rng);
        std::vector<Point> moved;
        for (const auto& p : pts)
            moved.push_back({s * (std::cos(a) * p.x - std::sin(a) * p.y) + tx,
                             s * (std::sin(a) * p.x + std::cos(a) * p.y) + ty});
        CHECK(std::abs(compute_ear(six(moved)) - compute_ear(base)) < 1e-9);
    }
}

TEST_CASE("closed-eye classification") {
    // Openness h gives EAR h/2.
    const auto s = classify_eyes(open_eye(0.60), open_eye(0.62));
    CHECK_FALSE(s.closed);
    CHECK(*s.ear_left == doctest::Approx(0.30));
    CHECK(classify_eyes(open_eye(0.60), open_eye(0.20)).closed);
    CHECK(classify_eyes(open_eye(0.38), open_eye(0.38)).closed);  // 0.19 < 0.2
    CHECK_FALSE(classify_eyes(open_eye(0.40), open_eye(0.40)).closed);  // exactly 0.2 is open
    const auto one = classify_eyes(std::nullopt, open_eye(0.1));
    CHECK(one.closed);
    CHECK_FALSE(one.unknown);
    const auto none = classify_eyes(std::nullopt, std::nullopt);
    CHECK_FALSE(none.closed);
    CHECK(none.unknown);
    CHECK_FALSE(classify_eyes(open_eye(0.3), open_eye(0.3), 0.1).closed);
}

TEST_CASE("classification fills the face record") {
    FaceRecord f;
    f.left_eye = open_eye(0.6);
    f.right_eye = open_eye(0.1);
    classify_eyes(f);
    CHECK(f.eyes_closed);
    CHECK(f.ear_right.has_value());
    CHECK(*f.ear_right == doctest::Approx(0.05));
}

TEST_CASE("face centre") {
    FaceRecord f;
    f.bbox = {0, 0, 40, 20};
    f.left_eye = EyeLandmarks{LandmarkScheme::nine_point, std::vector<Point>(8), Point{10, 10}};
    f.right_eye = EyeLandmarks{LandmarkScheme::nine_point, std::vector<Point>(8), Point{20, 10}};
    const auto c = face_center(f);
    CHECK_FALSE(c.fallback);
    CHECK(c.point.x == 15.0);
    CHECK(c.point.y == 10.0);
    const auto in_crop = to_crop(c.point, Rect{5, 4, 30, 30});
    CHECK(in_crop.x == 10.0);
    CHECK(in_crop.y == 6.0);

    FaceRecord g;
    g.bbox = {10, 20, 30, 40};
    g.left_eye = open_eye(1.0);
    g.right_eye = open_eye(1.0);
    const auto gc = face_center(g);
    CHECK(gc.fallback);
    CHECK(gc.point.x == 25.0);
    CHECK(gc.point.y == 40.0);
}

TEST_CASE("shot-scale smoothing") {
    auto lf = [](int id, double t, int shot, ShotScale s) { return LabeledFrame{id, t, shot, s}; };
    const auto CU = ShotScale::close_up, MS = ShotScale::medium, LS = ShotScale::long_shot;

    SUBCASE("majority") {
        const std::vector<LabeledFrame> v{lf(1, 0, 0, CU), lf(2, 1, 0, CU), lf(3, 2, 0, MS)};
        const auto out = smooth_shot_scale(v);
        for (int id : {1, 2, 3}) CHECK(out.at(id) == CU);
    }
    SUBCASE("tie goes to the frame nearest the midpoint") {
        const std::vector<LabeledFrame> v{lf(1, 0.0, 0, CU), lf(2, 1.4, 0, MS), lf(3, 1.6, 0, MS), lf(4, 3.0, 0, CU)};
        const auto out = smooth_shot_scale(v);
        for (int id : {1, 2, 3, 4}) CHECK(out.at(id) == MS);
        const std::vector<LabeledFrame> w{lf(1, 0.0, 0, CU), lf(2, 1.0, 0, MS), lf(3, 4.0, 0, MS), lf(4, 2.2, 0, CU)};
        const auto out2 = smooth_shot_scale(w);
        CHECK(out2.at(1) == CU);
    }
    SUBCASE("single frame shot") {
        const std::vector<LabeledFrame> v{lf(9, 0, 5, LS)};
        CHECK(smooth_shot_scale(v).at(9) == LS);
    }
    SUBCASE("unlabeled frame") {
        std::vector<LabeledFrame> v{lf(1, 0, 0, CU), LabeledFrame{7, 1.0, 0, std::nullopt}};
        CHECK_THROWS_AS((void)smooth_shot_scale(v), ValidationError);
    }
}

TEST_CASE("after smoothing labels change only at shot boundaries") {
    std::mt19937_64 rng(12);
    for (int t = 0; t < 50; ++t) {
        std::vector<LabeledFrame> v;
        int shot = 0;
        for (int i = 0; i < 60; ++i) {
            if (rng() % 7 == 0) ++shot;
            v.push_back({i, i * 0.04, shot, static_cast<ShotScale>(rng() % 3)});
        }
        const auto out = smooth_shot_scale(v);
        for (std::size_t i = 1; i < v.size(); ++i)
            if (v[i].shot_id == v[i - 1].shot_id) CHECK(out.at(v[i].frame_id) == out.at(v[i - 1].frame_id));
    }
}
