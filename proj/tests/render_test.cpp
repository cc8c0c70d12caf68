// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cineforge/render.hpp"
#include "oracles.hpp"

using namespace cineforge;

namespace {

const Intrinsics kCam = Intrinsics::from_fov(64, 64, 60.0);

SceneSample sample_with(std::map<EntityId, Box3> boxes, Pose cam = Pose::identity()) {
    SceneSample s;
    s.boxes = std::move(boxes);
    s.camera_pose = cam;
    return s;
}

/// Coverage of one camera-space triangle at z = 1 with fx = fy = 1, so screen
/// coordinates equal camera x, y exactly.
Mask triangle_coverage(Vec3 a, Vec3 b, Vec3 c) {
    const Intrinsics k{1.0, 1.0, 0.0, 0.0, 32, 32};
    detail::Rasterizer r(k, RenderSettings{});
    r.draw_triangle({a, b, c}, 1);
    return entity_mask(std::move(r).finish().ids, 1);
}

SceneSample random_sample(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    std::uniform_real_distribution<double> z(2.0, 8.0);
    std::uniform_real_distribution<double> h(0.2, 1.0);
    SceneSample s;
    const int n = 1 + static_cast<int>(rng() % 4);
    for (int id = 1; id <= n; ++id) {
        s.boxes[id] = Box3{{u(rng), u(rng), z(rng)}, {h(rng), h(rng), h(rng)}, oracle::random_rotation(rng)};
    }
    s.camera_pose = Pose{Rot3::from_axis_angle({u(rng), u(rng), u(rng)}, 0.2 * u(rng)), {0.3 * u(rng), 0.3 * u(rng), 0.0}};
    return s;
}

} // namespace

TEST(RenderFrame, EmptyScene) {
    const auto f = render_frame(sample_with({}), kCam);
    for (double d : f.depth.data) EXPECT_EQ(d, kNoDepth);
    for (auto id : f.ids.data) EXPECT_EQ(id, 0);
    EXPECT_EQ(f.depth.width, 64);
    EXPECT_EQ(f.depth.height, 64);
}

TEST(RenderFrame, FrontoParallelFace) {
    const auto f = render_frame(sample_with({{1, Box3{{0, 0, 2}, {0.5, 0.5, 0.5}, {}}}}), kCam);
    int covered = 0;
    for (int i = 0; i < 64 * 64; ++i) {
        if (f.ids.data[i] == 0) continue;
        ++covered;
        EXPECT_NEAR(f.depth.data[i], 1.5, 1e-4);
    }
    EXPECT_GT(covered, 100);
}

TEST(RenderFrame, NearerBoxWinsOverlap) {
    const SceneSample s = sample_with({{1, Box3{{0, 0, 2}, {0.5, 0.5, 0.5}, {}}}, {2, Box3{{0, 0, 4}, {1, 1, 1}, {}}}});
    const auto f = render_frame(s, kCam);
    const auto want = oracle::raycast_frame(s, kCam, 0.05, 1000.0);
    // Image center is covered by both; the nearer box (id 1) owns it.
    EXPECT_EQ(f.ids.at(32, 32), 1);
    EXPECT_NEAR(f.depth.at(32, 32), 1.5, 1e-9);
    int agree = 0;
    for (int i = 0; i < 64 * 64; ++i) agree += f.ids.data[i] == want.ids.data[i];
    EXPECT_GE(agree, 64 * 64 * 995 / 1000);
}

TEST(RenderFrame, BehindCameraContributesNothing) {
    const auto f = render_frame(sample_with({{1, Box3{{0, 0, -3}, {1, 1, 1}, {}}}}), kCam);
    for (auto id : f.ids.data) EXPECT_EQ(id, 0);
}

TEST(RenderFrame, CameraInsideBoxSeesBackFaces) {
    const SceneSample s = sample_with({{1, Box3{{0, 0, 0}, {2, 2, 2}, {}}}});
    const auto f = render_frame(s, kCam);
    for (int i = 0; i < 64 * 64; ++i) {
        ASSERT_EQ(f.ids.data[i], 1);
        EXPECT_NEAR(f.depth.data[i], 2.0, 1e-9);
    }
}

TEST(RenderFrame, FarPlaneDiscards) {
    RenderSettings s;
    s.far = 3.0;
    const auto f = render_frame(sample_with({{1, Box3{{0, 0, 5}, {1, 1, 1}, {}}}}), kCam, s);
    for (auto id : f.ids.data) EXPECT_EQ(id, 0);
}

TEST(RenderFrame, BadClipPlanes) {
    RenderSettings s;
    s.near = 2.0;
    s.far = 1.0;
    EXPECT_THROW(render_frame(sample_with({}), kCam, s), Error);
    s.near = 0.0;
    EXPECT_THROW(render_frame(sample_with({}), kCam, s), Error);
}

TEST(RenderFrame, SettingsResampleRaster) {
    RenderSettings s;
    s.width = 32;
    s.height = 16;
    const auto f = render_frame(sample_with({}), kCam, s);
    EXPECT_EQ(f.depth.width, 32);
    EXPECT_EQ(f.ids.height, 16);
}

TEST(FillRule, SharedDiagonalCoveredOnce) {
    // Square with every edge through pixel centers, split along its diagonal.
    const Vec3 p00{4.5, 4.5, 1}, p10{20.5, 4.5, 1}, p11{20.5, 20.5, 1}, p01{4.5, 20.5, 1};
    const Mask a = triangle_coverage(p00, p10, p11);
    const Mask b = triangle_coverage(p00, p11, p01);
    int total = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        EXPECT_LE(a.data[i] + b.data[i], 1) << i;
        total += a.data[i] + b.data[i];
    }
    // Top and left edges are owned, bottom and right are not: 16 x 16 pixels.
    EXPECT_EQ(total, 256);
}

TEST(FillRule, FanAroundCenterCoveredOnce) {
    const Vec3 c{16.5, 16.5, 1};
    const std::array<Vec3, 8> ring{{{8.5, 8.5, 1}, {16.5, 8.5, 1}, {24.5, 8.5, 1}, {24.5, 16.5, 1},
                                    {24.5, 24.5, 1}, {16.5, 24.5, 1}, {8.5, 24.5, 1}, {8.5, 16.5, 1}}};
    Raster<int> count(32, 32, 0);
    for (int i = 0; i < 8; ++i) {
        // Alternate windings; the rule must not depend on vertex order.
        const Mask m = (i % 2) ? triangle_coverage(c, ring[i], ring[(i + 1) % 8])
                               : triangle_coverage(ring[(i + 1) % 8], ring[i], c);
        for (std::size_t j = 0; j < m.data.size(); ++j) count.data[j] += m.data[j];
    }
    int total = 0;
    for (int v : count.data) {
        EXPECT_LE(v, 1);
        total += v;
    }
    EXPECT_EQ(total, 256);
}

TEST(RenderFrame, MatchesRayCastingOracle) {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 10; ++trial) {
        const SceneSample s = random_sample(rng);
        const auto got = render_frame(s, kCam);
        const auto want = oracle::raycast_frame(s, kCam, 0.05, 1000.0);
        int agree = 0;
        for (int i = 0; i < 64 * 64; ++i) {
            if (got.ids.data[i] != want.ids.data[i]) continue;
            ++agree;
            if (got.ids.data[i] != 0) EXPECT_NEAR(got.depth.data[i], want.depth.data[i], 1e-3);
        }
        EXPECT_GE(agree, 64 * 64 * 995 / 1000) << "trial " << trial;
    }
}

TEST(RenderFrame, DepthMapInvariants) {
    std::mt19937_64 rng(5);
    RenderSettings st;
    st.near = 0.5;
    st.far = 6.0;
    for (int trial = 0; trial < 10; ++trial) {
        const SceneSample s = random_sample(rng);
        const auto f = render_frame(s, kCam, st);
        for (int i = 0; i < 64 * 64; ++i) {
            const double d = f.depth.data[i];
            EXPECT_TRUE(std::isfinite(d));
            if (f.ids.data[i] == 0) {
                EXPECT_EQ(d, kNoDepth);
            } else {
                EXPECT_TRUE(s.boxes.contains(f.ids.data[i]));
                EXPECT_GE(d, st.near - 1e-9);
                EXPECT_LE(d, st.far);
            }
        }
    }
}

TEST(RenderFrame, VisibleCornerFootprint) {
    // A corner facing the camera projects inside (within a pixel) its box's footprint.
    const Box3 box{{0.2, -0.1, 4}, {0.6, 0.4, 0.5}, Rot3::from_axis_angle({1, 1, 0}, 0.6)};
    const auto f = render_frame(sample_with({{1, box}}), kCam);
    for (const Vec3& corner : box_corners(box)) {
        const auto p = project(corner, Pose::identity(), kCam);
        const double dz = oracle::ray_box_depth(box, Pose::identity(), kCam, static_cast<int>(p.u),
                                                static_cast<int>(p.v), 0.05);
        if (!(dz > p.depth - 1e-2)) continue;  // occluded by the box itself
        bool hit = false;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int x = static_cast<int>(std::floor(p.u)) + dx, y = static_cast<int>(std::floor(p.v)) + dy;
                if (x >= 0 && y >= 0 && x < 64 && y < 64 && f.ids.at(x, y) == 1) hit = true;
            }
        EXPECT_TRUE(hit);
    }
}

namespace {

Scene two_box_scene(int frames) {
    Scene s;
    s.frame_count = frames;
    s.camera.intrinsics = kCam;
    s.camera.keyframes[0] = Pose::identity();
    s.entities.push_back({1, "box", {{0, Box3{{0, 0, 5}, {0.5, 0.5, 0.5}, {}}}}});
    s.entities.push_back({2, "crate", {{0, Box3{{1, 0.5, 7}, {0.5, 0.5, 0.5}, {}}}}});
    return s;
}

} // namespace

TEST(RenderSequence, StaticSceneIdenticalFrames) {
    const auto frames = render_sequence(two_box_scene(3));
    ASSERT_EQ(frames.size(), 3u);
    EXPECT_EQ(frames[0].depth, frames[1].depth);
    EXPECT_EQ(frames[1].ids, frames[2].ids);
}

TEST(RenderSequence, DollyInDecreasesDepth) {
    Scene s = two_box_scene(8);
    // World-to-camera translation -c for a camera at c = (0, 0, 3).
    s.camera.keyframes[7] = Pose{Rot3{}, {0, 0, -3}};
    const auto frames = render_sequence(s);
    for (int f = 1; f < 8; ++f) EXPECT_LT(frames[f].depth.at(32, 32), frames[f - 1].depth.at(32, 32));
}

TEST(RenderSequence, SeventySevenFramesMatchRenderFrame) {
    Scene s = two_box_scene(77);
    s.camera.keyframes[76] = Pose{Rot3::about_y(0.2), {0.5, 0, 0}};
    const auto frames = render_sequence(s, {}, 4);
    ASSERT_EQ(frames.size(), 77u);
    for (int f : {0, 38, 76}) {
        const auto want = render_frame(resolve(s, f), s.camera.intrinsics);
        EXPECT_EQ(frames[f].depth, want.depth);
        EXPECT_EQ(frames[f].ids, want.ids);
    }
}
