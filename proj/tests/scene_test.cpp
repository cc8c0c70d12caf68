// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cineforge/scene.hpp"
#include "oracles.hpp"

using namespace cineforge;

namespace {

Scene base_scene(int frames = 11) {
    Scene s;
    s.frame_count = frames;
    s.camera.intrinsics = Intrinsics::from_fov(64, 48);
    s.camera.keyframes[0] = Pose::identity();
    Entity e;
    e.id = 1;
    e.label = "car";
    e.track[0] = Box3{{0, 0, 5}, {1, 0.5, 0.5}, {}};
    s.entities.push_back(e);
    return s;
}

template <typename F>
void expect_code(ErrorCode code, F&& fn) {
    try {
        fn();
        FAIL() << "expected " << to_string(code);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
    }
}

bool has_kind(const std::vector<Violation>& v, ViolationKind k) {
    for (const auto& x : v)
        if (x.kind == k) return true;
    return false;
}

} // namespace

TEST(SetKeyframe, AddAndOverwrite) {
    Scene s = base_scene();
    s = set_keyframe(s, 1, 4, Box3{{1, 0, 5}, {1, 1, 1}, {}});
    EXPECT_EQ(s.find(1)->track.size(), 2u);
    s = set_keyframe(s, 1, 4, Box3{{2, 0, 5}, {1, 1, 1}, {}});
    EXPECT_EQ(s.find(1)->track.size(), 2u);
    EXPECT_EQ(s.find(1)->track.at(4).center.x, 2.0);
    s = set_keyframe(s, CameraTarget{}, 10, Pose{Rot3{}, {0, 0, 1}});
    EXPECT_EQ(s.camera.keyframes.size(), 2u);
}

TEST(SetKeyframe, OtherKeyframesUntouched) {
    const Scene s0 = base_scene();
    const Scene s1 = set_keyframe(s0, 1, 7, Box3{{3, 3, 3}, {1, 1, 1}, {}});
    EXPECT_EQ(s1.find(1)->track.at(0), s0.find(1)->track.at(0));
    EXPECT_EQ(s0.find(1)->track.size(), 1u);
}

TEST(SetKeyframe, Errors) {
    const Scene s = base_scene();
    expect_code(ErrorCode::FrameOutOfRange, [&] { set_keyframe(s, 1, 11, Box3{}); });
    expect_code(ErrorCode::FrameOutOfRange, [&] { set_keyframe(s, 1, -1, Box3{}); });
    expect_code(ErrorCode::UnknownEntity, [&] { set_keyframe(s, 9, 0, Box3{}); });
    expect_code(ErrorCode::InvalidArgument, [&] { set_keyframe(s, CameraTarget{}, 0, Box3{}); });
}

TEST(RemoveKeyframe, SoleKeyframe) {
    const Scene s = base_scene();
    expect_code(ErrorCode::LastKeyframeRemoval, [&] { remove_keyframe(s, 1, 0); });
    expect_code(ErrorCode::LastKeyframeRemoval, [&] { remove_keyframe(s, CameraTarget{}, 0); });
    const Scene two = set_keyframe(s, 1, 3, Box3{});
    EXPECT_EQ(remove_keyframe(two, 1, 3).find(1)->track.size(), 1u);
}

TEST(Resolve, LinearMidpoint) {
    Scene s = base_scene();
    s = set_keyframe(s, 1, 0, Box3{{0, 0, 0}, {1, 1, 1}, {}});
    s = set_keyframe(s, 1, 10, Box3{{2, 0, 0}, {1, 1, 1}, {}});
    const auto c = resolve(s, 5).boxes.at(1).center;
    EXPECT_DOUBLE_EQ(c.x, 1.0);
    EXPECT_DOUBLE_EQ(c.y, 0.0);
    EXPECT_DOUBLE_EQ(c.z, 0.0);
}

TEST(Resolve, SingleKeyframeClamps) {
    Scene s = base_scene();
    s = set_keyframe(s, 1, 6, Box3{{4, 4, 4}, {1, 1, 1}, {}});
    s = remove_keyframe(s, 1, 0);
    for (int f = 0; f < s.frame_count; ++f) EXPECT_EQ(resolve(s, f).boxes.at(1), s.find(1)->track.at(6));
}

TEST(Resolve, CameraSlerpHalfway) {
    Scene s = base_scene();
    s = set_keyframe(s, CameraTarget{}, 10, Pose{Rot3::about_z(std::numbers::pi / 2), {}});
    const Rot3 mid = resolve(s, 5).camera_pose.rotation;
    // Independent check: matrix of a 45 degree rotation about z.
    const Mat3 want = oracle::rot_z_matrix(std::numbers::pi / 4);
    const Mat3 got = mid.matrix();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) EXPECT_NEAR(got[r][c], want[r][c], 1e-6);
}

TEST(Resolve, FrameOutOfRange) {
    const Scene s = base_scene();
    expect_code(ErrorCode::FrameOutOfRange, [&] { resolve(s, 11); });
    expect_code(ErrorCode::FrameOutOfRange, [&] { resolve(s, -1); });
}

TEST(Resolve, KeyframeFidelityAndSlerpNorm) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::uniform_real_distribution<double> h(0.1, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        Scene s = base_scene(40);
        for (int k = 0; k < 6; ++k) {
            const int f = static_cast<int>(rng() % 40);
            s = set_keyframe(s, 1, f, Box3{{u(rng), u(rng), u(rng)}, {h(rng), h(rng), h(rng)}, oracle::random_rotation(rng)});
            s = set_keyframe(s, CameraTarget{}, f, Pose{oracle::random_rotation(rng), {u(rng), u(rng), u(rng)}});
        }
        for (const auto& [f, box] : s.find(1)->track) EXPECT_EQ(resolve(s, f).boxes.at(1), box);
        for (const auto& [f, pose] : s.camera.keyframes) EXPECT_EQ(resolve(s, f).camera_pose, pose);
        for (int f = 0; f < 40; ++f) {
            const auto smp = resolve(s, f);
            EXPECT_NEAR(smp.boxes.at(1).rotation.norm(), 1.0, 1e-9);
            EXPECT_NEAR(smp.camera_pose.rotation.norm(), 1.0, 1e-9);
        }
    }
}

TEST(Interpolate, ContinuityBetweenKeys) {
    // Lipschitz bound from the adjacent keys: |dc/dt| <= |c1 - c0|.
    const Box3 a{{0, 0, 0}, {1, 1, 1}, Rot3::about_x(0.2)};
    const Box3 b{{3, -1, 2}, {2, 1, 0.5}, Rot3::about_y(2.5)};
    const double bound = (b.center - a.center).norm();
    const double angle = a.rotation.angle_to(b.rotation);
    for (double t = 0.0; t < 1.0; t += 0.01) {
        const double dt = 1e-4;
        const Box3 p = interpolate(a, b, t), q = interpolate(a, b, t + dt);
        EXPECT_LE((q.center - p.center).norm(), bound * dt * (1 + 1e-9));
        EXPECT_LE(p.rotation.angle_to(q.rotation), angle * dt * (1 + 1e-6) + 1e-9);
    }
}

TEST(Slerp, ShortestArc) {
    const Rot3 a = Rot3::about_z(0.1);
    const Rot3 b = Rot3::from_unit_quaternion(-Rot3::about_z(0.3).w(), 0, 0, -Rot3::about_z(0.3).z());
    const Rot3 m = slerp(a, b, 0.5);
    EXPECT_NEAR(m.angle_to(Rot3::about_z(0.2)), 0.0, 1e-9);
}

TEST(ExportCameraRt, StaticIdentity) {
    Scene s = base_scene(4);
    const auto rows = export_camera_rt(s);
    ASSERT_EQ(rows.size(), 4u);
    const CameraRow want{1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0};
    for (const auto& r : rows) EXPECT_EQ(r, want);
}

TEST(ExportCameraRt, PureTranslation) {
    Scene s = base_scene(4);
    s = set_keyframe(s, CameraTarget{}, 3, Pose{Rot3{}, {0, 0, 3}});
    const auto rows = export_camera_rt(s);
    for (int f = 0; f < 4; ++f) EXPECT_DOUBLE_EQ(rows[f][11], static_cast<double>(f));
}

TEST(ExportCameraRt, SeventySevenFrames) {
    EXPECT_EQ(export_camera_rt(base_scene(77)).size(), 77u);
}

TEST(ExportCameraRt, RowsRoundTripToResolvedPose) {
    std::mt19937_64 rng(23);
    Scene s = base_scene(30);
    for (int f : {0, 7, 19, 29}) s = set_keyframe(s, CameraTarget{}, f, Pose{oracle::random_rotation(rng), {1.0 * f, 2, -3}});
    const auto rows = export_camera_rt(s);
    for (int f = 0; f < 30; ++f) {
        const Pose want = resolve(s, f).camera_pose;
        const Pose got = row_to_pose(rows[f]);
        EXPECT_NEAR(got.rotation.angle_to(want.rotation), 0.0, 1e-7);
        EXPECT_EQ(got.translation, want.translation);
        const CameraRow again = pose_to_row(got);
        for (int i = 0; i < 12; ++i) EXPECT_NEAR(again[i], rows[f][i], 1e-12);
    }
}

TEST(Validate, WellFormed) {
    EXPECT_TRUE(validate(base_scene()).empty());
}

TEST(Validate, DuplicateId) {
    Scene s = base_scene();
    s.entities.push_back(s.entities.front());
    const auto v = validate(s);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].kind, ViolationKind::DuplicateId);
    EXPECT_EQ(v[0].subject, "entity 1");
}

TEST(Validate, KeyframeAtFrameCount) {
    Scene s = base_scene();
    s.entities[0].track[s.frame_count] = Box3{{0, 0, 5}, {1, 0.5, 0.5}, {}};
    const auto v = validate(s);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].kind, ViolationKind::FrameOutOfRange);
    EXPECT_EQ(v[0].frame, s.frame_count);
}

TEST(Validate, OtherInvariants) {
    Scene s = base_scene();
    s.entities[0].id = 0;
    s.entities[0].label.clear();
    s.fps = 0;
    const auto v = validate(s);
    EXPECT_TRUE(has_kind(v, ViolationKind::InvalidId));
    EXPECT_TRUE(has_kind(v, ViolationKind::EmptyLabel));
    EXPECT_TRUE(has_kind(v, ViolationKind::InvalidFps));

    Scene t = base_scene();
    t.entities[0].track.clear();
    t.camera.keyframes.clear();
    EXPECT_EQ(validate(t).size(), 2u);
}

TEST(Validate, VolumeChangeIsAWarningOnly) {
    Scene s = base_scene();
    s = set_keyframe(s, 1, 5, Box3{{0, 0, 5}, {2, 2, 2}, {}});
    const auto rep = validate_report(s);
    EXPECT_TRUE(rep.errors.empty());
    ASSERT_EQ(rep.warnings.size(), 1u);
    EXPECT_EQ(rep.warnings[0].kind, ViolationKind::VolumeVaries);
}
