// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "cineforge/autolabel.hpp"
#include "cineforge/synth.hpp"
#include "oracles.hpp"

using namespace cineforge;
using namespace cineforge::autolabel;

namespace {

template <typename F>
void expect_code(ErrorCode code, F&& fn) {
    try {
        fn();
        FAIL() << "expected " << to_string(code);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
    }
}

Mask mask_of(int w, int h, std::size_t area) {
    Mask m(w, h, 0);
    for (std::size_t i = 0; i < area; ++i) m.data[i] = 1;
    return m;
}

const Intrinsics kCam{100.0, 100.0, 32.0, 24.0, 64, 48};

} // namespace

TEST(FilterOverlappingBoxes, Examples) {
    const metrics::Box2 a{0, 0, 2, 2};
    std::vector<Detection2D> same{{"car", a, std::nullopt}, {"car", a, std::nullopt}};
    auto kept = filter_overlapping_boxes(same, 0.5);
    ASSERT_EQ(kept.size(), 1u);

    std::vector<Detection2D> disjoint{{"car", a, 0.9}, {"dog", {5, 5, 6, 6}, 0.8}};
    EXPECT_EQ(filter_overlapping_boxes(disjoint, 0.5).size(), 2u);

    std::vector<Detection2D> third{{"a", a, std::nullopt}, {"b", {1, 0, 3, 2}, std::nullopt}};
    kept = filter_overlapping_boxes(third, 0.3);
    ASSERT_EQ(kept.size(), 1u);
    EXPECT_EQ(kept[0].label, "a");
}

TEST(FilterOverlappingBoxes, ScoreOrderAndFloor) {
    const metrics::Box2 a{0, 0, 2, 2};
    std::vector<Detection2D> d{{"low", a, 0.2}, {"high", a, 0.9}, {"tiny", {10, 10, 11, 11}, 0.05}};
    const auto kept = filter_overlapping_boxes(d, 0.5, 0.1);
    ASSERT_EQ(kept.size(), 1u);
    EXPECT_EQ(kept[0].label, "high");
}

TEST(FilterOverlappingBoxes, KeptPairsBelowThreshold) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 50), s(2, 20), sc(0, 1);
    std::vector<Detection2D> d;
    for (int i = 0; i < 200; ++i) {
        const double x = u(rng), y = u(rng);
        d.push_back({"x", {x, y, x + s(rng), y + s(rng)}, sc(rng)});
    }
    const auto kept = filter_overlapping_boxes(d, 0.4);
    for (std::size_t i = 0; i < kept.size(); ++i)
        for (std::size_t j = i + 1; j < kept.size(); ++j) EXPECT_LT(metrics::iou(kept[i].box, kept[j].box), 0.4);
}

TEST(SelectOptimalFrame, Examples) {
    EXPECT_EQ(select_optimal_frame(std::vector<std::size_t>{10, 50, 30}), 1);
    EXPECT_EQ(select_optimal_frame(std::vector<std::size_t>{20, 20, 20}), 0);
    expect_code(ErrorCode::EntityNeverVisible, [] { select_optimal_frame(std::vector<std::size_t>{0, 0, 0}); });
    const std::vector<Mask> masks{mask_of(4, 4, 3), mask_of(4, 4, 7), mask_of(4, 4, 7)};
    EXPECT_EQ(select_optimal_frame(masks), 1);
}

TEST(SelectOptimalFrame, AppendingEmptyMasksDoesNotChangeAnswer) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::size_t> areas(1 + rng() % 10);
        for (auto& a : areas) a = rng() % 5;
        areas[rng() % areas.size()] = 1 + rng() % 5;
        const int base = select_optimal_frame(areas);
        areas.insert(areas.end(), 1 + rng() % 5, 0);
        EXPECT_EQ(select_optimal_frame(areas), base);
    }
}

TEST(EntityPointCloud, SinglePixelAtPrincipalPoint) {
    // Pixel (31, 23) has its center at the principal point (32, 24) minus half a pixel,
    // so use a principal point on a pixel center.
    const Intrinsics k{100.0, 100.0, 31.5, 23.5, 64, 48};
    Mask m(64, 48, 0);
    m.at(31, 23) = 1;
    DepthMap d(64, 48, 0.0);
    d.at(31, 23) = 2.0;
    const PointCloud c = entity_point_cloud(m, d, Pose::identity(), k);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_NEAR((c[0] - Vec3{0, 0, 2}).norm(), 0.0, 1e-12);
}

TEST(EntityPointCloud, FrontoParallelPlaneAndPoseTransform) {
    Mask m(64, 48, 0);
    DepthMap d(64, 48, 3.0);
    for (int y = 10; y < 30; ++y)
        for (int x = 5; x < 50; ++x) m.at(x, y) = 1;
    d.at(0, 0) = 0.0;
    const PointCloud id_cloud = entity_point_cloud(m, d, Pose::identity(), kCam);
    EXPECT_EQ(id_cloud.size(), 20u * 45u);
    for (const Vec3& p : id_cloud) EXPECT_NEAR(p.z, 3.0, 1e-6);

    const Pose t{Rot3::from_axis_angle({1, 2, 0.5}, 0.7), {0.3, -1, 2}};
    const PointCloud moved = entity_point_cloud(m, d, t, kCam);
    const Pose tinv = invert(t);
    ASSERT_EQ(moved.size(), id_cloud.size());
    for (std::size_t i = 0; i < moved.size(); ++i) EXPECT_NEAR((moved[i] - tinv.apply(id_cloud[i])).norm(), 0.0, 1e-6);
}

TEST(EntityPointCloud, Errors) {
    expect_code(ErrorCode::EmptyCloud, [] { entity_point_cloud(Mask(4, 4, 1), DepthMap(4, 4, 0.0), Pose::identity(), kCam); });
    expect_code(ErrorCode::ConsistencyError, [] { entity_point_cloud(Mask(4, 4, 1), DepthMap(5, 4, 1.0), Pose::identity(), kCam); });
}

TEST(EntityPointCloud, RejectsDepthOutliers) {
    Mask m(10, 10, 1);
    DepthMap d(10, 10, 0.0);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(4.9, 5.1);
    for (double& v : d.data) v = u(rng);
    d.at(0, 0) = 40.0;  // bleed from the background
    const PointCloud kept = entity_point_cloud(m, d, Pose::identity(), kCam);
    EXPECT_EQ(kept.size(), 99u);
    CloudOptions all;
    all.reject_outliers = false;
    EXPECT_EQ(entity_point_cloud(m, d, Pose::identity(), kCam, all).size(), 100u);
}

TEST(EntityPointCloud, KeepsContinuousSurfaceBeyondFence) {
    // A dense core (5.0 to 5.3 m) and a sparser but gapless tail out to 6.5 m:
    // the tail runs past 3 MAD yet is kept. Pixel 100 is background bleed.
    Mask m(101, 1, 1);
    DepthMap d(101, 1, 0.0);
    for (int x = 0; x < 60; ++x) d.at(x, 0) = 5.0 + 0.005 * x;
    for (int x = 60; x < 100; ++x) d.at(x, 0) = 5.3 + 0.03 * (x - 59);
    d.at(100, 0) = 9.0;
    EXPECT_EQ(entity_point_cloud(m, d, Pose::identity(), kCam).size(), 100u);
    CloudOptions fence;
    fence.gap_factor = 0.0;
    EXPECT_LT(entity_point_cloud(m, d, Pose::identity(), kCam, fence).size(), 90u);
}

TEST(PropagateBoxes, Examples) {
    const Box3 anchor{{1, 2, 3}, {0.5, 0.4, 0.3}, Rot3::about_y(0.3)};
    std::vector<Track> still{{0, {{0, {1, 1, 1}}, {1, {1, 1, 1}}, {2, {1, 1, 1}}}}};
    auto p = propagate_boxes(anchor, 0, still, 3);
    for (const auto& [f, b] : p.boxes) EXPECT_EQ(b, anchor);

    std::vector<Track> shifted{{0, {{0, {0, 0, 0}}, {1, {1, 0, 0}}}}, {1, {{0, {5, 5, 5}}, {1, {6, 5, 5}}}}};
    p = propagate_boxes(anchor, 0, shifted, 2);
    EXPECT_NEAR((p.boxes.at(1).center - (anchor.center + Vec3{1, 0, 0})).norm(), 0.0, 1e-15);

    std::vector<Track> three{{0, {{0, {0, 0, 0}}, {1, {1, 0, 0}}}}, {1, {{0, {0, 0, 0}}, {1, {2, 0, 0}}}},
                             {2, {{0, {0, 0, 0}}, {1, {3, 0, 0}}}}};
    p = propagate_boxes(anchor, 0, three, 2);
    EXPECT_NEAR((p.boxes.at(1).center - (anchor.center + Vec3{2, 0, 0})).norm(), 0.0, 1e-15);
    EXPECT_EQ(p.boxes.at(1).half_extents, anchor.half_extents);
    EXPECT_EQ(p.boxes.at(1).rotation, anchor.rotation);
}

TEST(PropagateBoxes, MissingFramesFlagged) {
    const Box3 anchor;
    std::vector<Track> t{{0, {{1, {0, 0, 0}}, {2, {1, 0, 0}}}}, {1, {{3, {0, 0, 0}}}}};
    const auto p = propagate_boxes(anchor, 1, t, 5);
    EXPECT_EQ(p.missing, (std::vector<int>{0, 3, 4}));
    EXPECT_EQ(p.boxes.size(), 2u);
}

TEST(PropagateBoxes, RigidTranslationIsExact) {
    const Box3 anchor{{0.5, 0.25, 4}, {1, 0.5, 0.5}, {}};
    std::vector<Track> tracks;
    for (int i = 0; i < 8; ++i) {
        // Grid points with exactly representable coordinates and shifts.
        const Vec3 p{0.25 * i, 0.5, 4.0};
        Track t{i, {}};
        for (int f = 0; f < 6; ++f) t.points.emplace(f, p + Vec3{0.125 * f, 0.0, -0.25 * f});
        tracks.push_back(t);
    }
    const auto prop = propagate_boxes(anchor, 2, tracks, 6);
    for (int f = 0; f < 6; ++f) {
        const Vec3 want = anchor.center + Vec3{0.125 * (f - 2), 0.0, -0.25 * (f - 2)};
        EXPECT_EQ(prop.boxes.at(f).center, want);
    }
}

TEST(ToWorld, CameraFrameTracks) {
    const std::vector<Pose> poses{Pose::identity(), Pose{Rot3::about_y(0.4), {1, 0, 2}}};
    TrackSet ts;
    ts.frame_of_reference = FrameOfReference::Camera;
    const Vec3 w{0.3, -0.2, 5};
    ts.tracks[1].push_back({0, {{0, poses[0].apply(w)}, {1, poses[1].apply(w)}}});
    const TrackSet out = to_world(ts, poses);
    EXPECT_EQ(out.frame_of_reference, FrameOfReference::World);
    for (const auto& [f, p] : out.tracks.at(1)[0].points) EXPECT_NEAR((p - w).norm(), 0.0, 1e-12);
    ts.tracks[1][0].points.emplace(5, Vec3{});
    expect_code(ErrorCode::ConsistencyError, [&] { to_world(ts, poses); });
}

TEST(LabelClip, StaticEntityStaticCamera) {
    Scene s;
    s.frame_count = 3;
    s.camera.intrinsics = Intrinsics::from_fov(160, 120);
    s.camera.keyframes[0] = look_at({0, -2, 0}, {0, 0, 5});
    s.entities.push_back({1, "crate", {{0, Box3{{0.3, -0.4, 5}, {0.5, 0.4, 0.6}, Rot3::about_y(0.7)}}}});
    std::vector<FrameObservation> obs;
    std::vector<Pose> poses;
    const auto frames = render_sequence(s);
    for (int f = 0; f < 3; ++f) {
        obs.push_back({f, masks_from_ids(frames[f].ids), frames[f].depth});
        poses.push_back(resolve(s, f).camera_pose);
    }
    TrackSet tracks;
    tracks.tracks[1].push_back({0, {{0, {0.3, -0.4, 5}}, {1, {0.3, -0.4, 5}}, {2, {0.3, -0.4, 5}}}});
    const LabelResult r = label_clip(obs, tracks, poses, s.camera.intrinsics, {{1, "crate"}});
    ASSERT_EQ(r.scene.entities.size(), 1u);
    const auto& track = r.scene.entities[0].track;
    ASSERT_EQ(track.size(), 3u);
    EXPECT_EQ(track.at(0), track.at(1));
    EXPECT_EQ(track.at(1), track.at(2));
    EXPECT_TRUE(validate(r.scene).empty());
}

TEST(LabelClip, AnchorOnlyVisibility) {
    Scene s;
    s.frame_count = 3;
    s.camera.intrinsics = Intrinsics::from_fov(160, 120);
    s.camera.keyframes[0] = look_at({0, -2, 0}, {0, 0, 5});
    s.entities.push_back({1, "crate", {{0, Box3{{0.3, -0.4, 5}, {0.5, 0.4, 0.6}, Rot3::about_y(0.7)}}}});
    const auto frame0 = render_frame(resolve(s, 0), s.camera.intrinsics);
    std::vector<FrameObservation> obs{{0, masks_from_ids(frame0.ids), frame0.depth},
                                      {1, {}, DepthMap(160, 120, 0.0)},
                                      {2, {}, DepthMap(160, 120, 0.0)}};
    const std::vector<Pose> poses(3, s.camera.keyframes.at(0));
    TrackSet tracks;
    tracks.tracks[1].push_back({0, {{0, {0, 0, 5}}, {1, {0.5, 0, 5}}, {2, {1.0, 0, 5}}}});
    const LabelResult r = label_clip(obs, tracks, poses, s.camera.intrinsics, {{1, "crate"}, {2, "ghost"}});
    ASSERT_EQ(r.scene.entities.size(), 1u);
    const auto& track = r.scene.entities[0].track;
    ASSERT_EQ(track.size(), 3u);
    EXPECT_NEAR(track.at(2).center.x - track.at(0).center.x, 1.0, 1e-12);
    ASSERT_EQ(r.entities.size(), 2u);
    EXPECT_FALSE(r.entities[1].recovered);
    EXPECT_EQ(r.entities[1].reason, "EntityNeverVisible");
}

TEST(LabelClip, ConsistencyErrors) {
    const std::vector<FrameObservation> obs{{0, {}, DepthMap(4, 4, 1.0)}};
    const std::vector<Pose> two(2);
    expect_code(ErrorCode::ConsistencyError, [&] { label_clip(obs, {}, two, kCam, {}); });
    const std::vector<FrameObservation> misnumbered{{3, {}, DepthMap(4, 4, 1.0)}};
    const std::vector<Pose> one(1);
    expect_code(ErrorCode::ConsistencyError, [&] { label_clip(misnumbered, {}, one, kCam, {}); });
}

TEST(LabelClip, SyntheticRoundTrip) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        synth::SynthOptions o;
        o.frame_count = 6;
        o.camera_frame_tracks = seed == 2;
        const synth::SynthClip clip = synth::make_clip(seed, o);
        LabelOptions lo;
        lo.jobs = 2;
        const LabelResult r = label_clip(clip.observations, clip.tracks, clip.poses, clip.truth.camera.intrinsics,
                                         clip.labels, lo);
        ASSERT_EQ(r.scene.entities.size(), clip.truth.entities.size());
        for (const Entity& e : r.scene.entities) {
            const Entity* gt = clip.truth.find(e.id);
            ASSERT_NE(gt, nullptr);
            EXPECT_EQ(e.label, gt->label);
            const double v0 = e.track.begin()->second.volume();
            for (int f = 0; f < o.frame_count; ++f) {
                const Box3 want = sample_track(gt->track, f);
                const Box3& got = e.track.at(f);
                EXPECT_LT((got.center - want.center).norm(), 0.02) << "seed " << seed << " frame " << f;
                EXPECT_NEAR(got.volume() / want.volume(), 1.0, 0.05);
                EXPECT_EQ(got.volume(), v0);
            }
        }
    }
}

TEST(Synth, Deterministic) {
    synth::SynthOptions o;
    o.frame_count = 3;
    o.width = 160;
    o.height = 120;
    const auto a = synth::make_clip(9, o), b = synth::make_clip(9, o);
    EXPECT_EQ(a.truth, b.truth);
    EXPECT_EQ(a.frames[2].depth, b.frames[2].depth);
}
