// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "cineforge/metrics.hpp"

using namespace cineforge;
using namespace cineforge::metrics;

namespace {

FrameEval box_pair(int frame, Box2 pred, Box2 gt) { return {frame, pred, gt, std::nullopt, std::nullopt}; }
FrameEval depth_pair(int frame, double pred, double gt) { return {frame, std::nullopt, std::nullopt, pred, gt}; }

Box2 random_box(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 500.0), s(1.0, 100.0);
    const double x = u(rng), y = u(rng);
    return {x, y, x + s(rng), y + s(rng)};
}

Box2 shifted(Box2 b, double dx, double dy) { return {b.x0 + dx, b.y0 + dy, b.x1 + dx, b.y1 + dy}; }

} // namespace

TEST(Iou, Examples) {
    const Box2 a{0, 0, 2, 2};
    EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
    EXPECT_DOUBLE_EQ(iou(a, {5, 5, 6, 6}), 0.0);
    EXPECT_NEAR(iou(a, {1, 0, 3, 2}), 1.0 / 3.0, 1e-12);
    EXPECT_DOUBLE_EQ(iou(a, {2, 0, 4, 2}), 0.0);  // touching edges
}

TEST(Iou, SymmetryProperty) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 1000; ++i) {
        const Box2 a = random_box(rng), b = random_box(rng);
        EXPECT_EQ(iou(a, b), iou(b, a));
        EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
        EXPECT_GE(iou(a, b), 0.0);
        EXPECT_LE(iou(a, b), 1.0);
    }
}

TEST(Miou, Examples) {
    const Box2 a{0, 0, 2, 2};
    EXPECT_DOUBLE_EQ(miou({box_pair(0, a, a), box_pair(1, a, a)}), 1.0);
    EXPECT_DOUBLE_EQ(miou({box_pair(0, a, a), box_pair(1, a, {5, 5, 6, 6})}), 0.5);
    EXPECT_NEAR(miou({box_pair(0, a, a), box_pair(1, a, {1, 0, 3, 2}), box_pair(2, a, {9, 9, 10, 10})}),
                4.0 / 9.0, 1e-12);
}

TEST(Miou, MissingFramesExcludedAndCounted) {
    const Box2 a{0, 0, 2, 2};
    TrackEval t{box_pair(0, a, a), {1, std::nullopt, a, std::nullopt, std::nullopt}, {2, a, std::nullopt, 1.0, 1.0}};
    EXPECT_DOUBLE_EQ(miou(t), 1.0);
    const Coverage c = box_coverage(t);
    EXPECT_EQ(c.used, 1);
    EXPECT_EQ(c.total, 3);
    EXPECT_NEAR(c.fraction(), 1.0 / 3.0, 1e-15);
}

TEST(Metrics, NoValidPairs) {
    const TrackEval empty{{0, std::nullopt, Box2{0, 0, 1, 1}, std::nullopt, 2.0}};
    for (auto fn : {&miou, &traj_deviation, &depth_deviation}) {
        try {
            fn(empty);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::NoValidPairs);
        }
    }
}

TEST(TrajDeviation, Examples) {
    std::mt19937_64 rng(2);
    TrackEval same, offset;
    for (int f = 0; f < 20; ++f) {
        const Box2 b = random_box(rng);
        same.push_back(box_pair(f, b, b));
        offset.push_back(box_pair(f, shifted(b, 3, 4), b));
    }
    EXPECT_DOUBLE_EQ(traj_deviation(same), 0.0);
    EXPECT_NEAR(traj_deviation(offset), 5.0, 1e-12);
    EXPECT_DOUBLE_EQ(traj_deviation({box_pair(0, {-1, -1, 1, 1}, {-1, 1, 1, 3})}), 2.0);
}

TEST(MeanRegionDepth, Examples) {
    Mask m(4, 1, 1);
    DepthMap d(4, 1, 2.0);
    EXPECT_DOUBLE_EQ(mean_region_depth(m, d), 2.0);
    d.data = {1, 3, 1, 3};
    EXPECT_DOUBLE_EQ(mean_region_depth(m, d), 2.0);
    d.data = {1, 2, 6, 100};
    m.data = {1, 1, 1, 0};
    EXPECT_DOUBLE_EQ(mean_region_depth(m, d), 3.0);
    d.data = {1, 0, 5, 100};  // sentinel pixels are not valid depth
    EXPECT_DOUBLE_EQ(mean_region_depth(m, d), 3.0);
}

TEST(MeanRegionDepth, EmptyRegion) {
    Mask m(2, 2, 0);
    DepthMap d(2, 2, 1.0);
    try {
        mean_region_depth(m, d);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyRegion);
    }
    m.data[0] = 1;
    d.data[0] = kNoDepth;
    EXPECT_THROW(mean_region_depth(m, d), Error);
    EXPECT_THROW(mean_region_depth(Mask(3, 2, 1), d), Error);
}

TEST(DepthDeviation, Examples) {
    EXPECT_DOUBLE_EQ(depth_deviation({depth_pair(0, 2, 2), depth_pair(1, 5, 5)}), 0.0);
    EXPECT_NEAR(depth_deviation({depth_pair(0, 1, 2), depth_pair(1, 3, 2)}), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(depth_deviation({depth_pair(0, 2.5, 2)}), 0.5);
}

TEST(DepthDeviation, ScaleProperty) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.5, 20.0);
    TrackEval a, b;
    for (int f = 0; f < 30; ++f) {
        const double p = u(rng), g = u(rng);
        a.push_back(depth_pair(f, p, g));
        b.push_back(depth_pair(f, 4 * p, 4 * g));
    }
    EXPECT_NEAR(depth_deviation(b), 4 * depth_deviation(a), 1e-12);
}

TEST(Metrics, TranslationInvariance) {
    std::mt19937_64 rng(4);
    TrackEval a, b;
    for (int f = 0; f < 30; ++f) {
        const Box2 p = random_box(rng), g = random_box(rng);
        a.push_back(box_pair(f, p, g));
        b.push_back(box_pair(f, shifted(p, 64, -32), shifted(g, 64, -32)));
    }
    EXPECT_NEAR(miou(a), miou(b), 1e-12);
    EXPECT_NEAR(traj_deviation(a), traj_deviation(b), 1e-9);
}

TEST(Metrics, PermutationInvarianceIsExact) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.5, 20.0);
    TrackEval t;
    for (int f = 0; f < 200; ++f) {
        const Box2 p = random_box(rng);
        t.push_back({f, p, shifted(p, u(rng), -u(rng)), u(rng), u(rng)});
    }
    const MetricsReport base = evaluate(t);
    for (int k = 0; k < 20; ++k) {
        std::shuffle(t.begin(), t.end(), rng);
        const MetricsReport r = evaluate(t);
        EXPECT_EQ(*r.miou, *base.miou);
        EXPECT_EQ(*r.traj_d, *base.traj_d);
        EXPECT_EQ(*r.depth_d, *base.depth_d);
    }
}

TEST(Evaluate, PartialCoverage) {
    const TrackEval t{depth_pair(0, 1, 2)};
    const MetricsReport r = evaluate(t);
    EXPECT_FALSE(r.miou.has_value());
    EXPECT_FALSE(r.traj_d.has_value());
    EXPECT_DOUBLE_EQ(*r.depth_d, 1.0);
    EXPECT_EQ(r.box.used, 0);
    EXPECT_EQ(r.depth.used, 1);
}

TEST(BoxDepth, CenterAndNearestFace) {
    const Box3 b{{0, 0, 5}, {1, 1, 1}, {}};
    EXPECT_DOUBLE_EQ(box_depth(b, Pose::identity()), 5.0);
    EXPECT_DOUBLE_EQ(box_depth(b, Pose::identity(), BoxDepthMode::NearestFace), 4.0);
    const Pose moved{Rot3{}, {0, 0, 2}};
    EXPECT_DOUBLE_EQ(box_depth(b, moved), 7.0);
}

TEST(ProjectedBox, EnclosesCorners) {
    const Intrinsics k{100, 100, 50, 50, 100, 100};
    const auto b = projected_box(Box3{{0, 0, 4}, {1, 1, 1}, {}}, Pose::identity(), k);
    ASSERT_TRUE(b.has_value());
    // Nearest face at z = 3: u = 100 * (+-1 / 3) + 50.
    EXPECT_NEAR(b->x0, 50 - 100.0 / 3, 1e-12);
    EXPECT_NEAR(b->x1, 50 + 100.0 / 3, 1e-12);
    EXPECT_FALSE(projected_box(Box3{{0, 0, -4}, {1, 1, 1}, {}}, Pose::identity(), k).has_value());
}
