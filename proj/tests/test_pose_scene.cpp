// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include "test_util.hpp"

#include <gskit/core/error.hpp>
#include <gskit/demo/demo_scene.hpp>
#include <gskit/kinematics/pose_scene.hpp>
#include <gskit/render/rasterizer.hpp>

#include <gtest/gtest.h>

#include <map>

using namespace gskit;

namespace {

std::shared_ptr<const LoadedScene>
demoScene(const std::string &task) {
    static std::map<std::string, std::shared_ptr<const LoadedScene>> cache;
    auto &slot = cache[task];
    if (!slot) {
        DemoSceneOptions opts;
        opts.task = task;
        slot = loadScene(writeDemoScene(test::scratchDir("pose_scene_" + task), opts));
    }
    return slot;
}

std::vector<RigidTransform>
restPoses(const LoadedScene &scene) {
    std::vector<RigidTransform> poses;
    for (const auto &o : scene.objects) poses.push_back(o.restPose);
    return poses;
}

} // namespace

TEST(PoseScene, CapturedPoseReproducesScan)
{
    const auto scene = demoScene("place_box");
    const auto cache = std::make_shared<const StaticSplatCache>(scene);
    const std::vector<JointConfig> q{scene->robots[0].capturedQ};
    const PosedSplats posed = poseScene(cache, q, restPoses(*scene));
    const auto groups = posed.groups();
    // Background, six links, one object.
    ASSERT_EQ(groups.size(), 8u);
    const LoadedRobot &robot = scene->robots[0];
    for (std::size_t l = 0; l < robot.tree.links.size(); ++l) {
        const GaussianSet &set = *groups[1 + l].splats;
        std::size_t j = 0;
        for (std::size_t i = 0; i < robot.scan.size(); ++i) {
            if (robot.labels[i] != static_cast<int>(l)) continue;
            EXPECT_LT((set.centroids[j] - robot.scan.centroids[i]).norm(), 1e-12);
            EXPECT_LT(rotationDistance(set.rotations[j], robot.scan.rotations[i]), 1e-6);
            ++j;
        }
        EXPECT_EQ(j, set.size());
        EXPECT_LT(rotationDistance(groups[1 + l].shToWorld, Quat::Identity()), 1e-6);
    }
    // Unlabelled scan splats stay in the static background.
    EXPECT_EQ(posed.background().size(), scene->background.size() + 24u);
}

TEST(PoseScene, CachedMatchesRecompute)
{
    for (const char *task : {"place_box", "stack_cans"}) {
        const auto scene = demoScene(task);
        const auto cache = std::make_shared<const StaticSplatCache>(scene);
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const KinematicTree &tree = scene->robots[0].tree;
        for (int trial = 0; trial < 5; ++trial) {
            JointConfig q = tree.lowerLimits() + (tree.upperLimits() - tree.lowerLimits()).cwiseProduct(
                                                     JointConfig::NullaryExpr(5, [&]() { return u(rng); }));
            std::vector<RigidTransform> poses = restPoses(*scene);
            for (auto &p : poses) {
                p = RigidTransform::fromAxisAngle(Vec3::UnitZ(), 3.0 * u(rng), Vec3(0.2 * u(rng) - 0.1, 0.2 * u(rng) - 0.1, p.translation.z()));
            }
            const std::vector<JointConfig> qs{q};
            const PosedSplats cached = poseScene(cache, qs, poses);
            const PosedSplats fresh = poseSceneUncached(*scene, qs, poses);
            EXPECT_TRUE(cached.borrowsBackground());
            EXPECT_FALSE(fresh.borrowsBackground());
            for (const auto &camera : scene->description.cameras) {
                const Camera cam = resolveCamera(camera, *scene, qs);
                const auto g1 = cached.groups();
                const auto g2 = fresh.groups();
                const RenderOutput a = rasterize(g1, cam, Vec3::Zero());
                const RenderOutput b = rasterize(g2, cam, Vec3::Zero());
                float diff = 0.0f;
                for (std::size_t i = 0; i < a.color.size(); ++i) diff = std::max(diff, std::abs(a.color[i] - b.color[i]));
                EXPECT_LE(diff, 1e-6f) << task << " camera " << camera.name;
            }
        }
    }
}

TEST(PoseScene, StaticMemoryIndependentOfEnvironmentCount)
{
    const auto scene = demoScene("place_box");
    const std::size_t before = StaticSplatCache::liveStaticBytes();
    std::size_t perCache = 0;
    {
        const auto cache = std::make_shared<const StaticSplatCache>(scene);
        perCache = StaticSplatCache::liveStaticBytes() - before;
        EXPECT_GT(perCache, 0u);
        for (std::size_t n : {1u, 8u, 64u}) {
            std::vector<PosedSplats> envs;
            const std::vector<JointConfig> q{scene->robots[0].homeQ};
            for (std::size_t i = 0; i < n; ++i) envs.push_back(poseScene(cache, q, restPoses(*scene)));
            EXPECT_EQ(StaticSplatCache::liveStaticBytes() - before, perCache) << n;
            for (const auto &e : envs) EXPECT_EQ(&e.background(), &cache->background());
        }
    }
    EXPECT_EQ(StaticSplatCache::liveStaticBytes(), before);
}

TEST(PoseScene, RejectsMissingObjectPose)
{
    const auto scene = demoScene("stack_cans");
    const auto cache = std::make_shared<const StaticSplatCache>(scene);
    const std::vector<JointConfig> q{scene->robots[0].homeQ};
    std::vector<RigidTransform> poses = restPoses(*scene);
    poses.pop_back();
    EXPECT_THROW(poseScene(cache, q, poses), EnvError);
}

TEST(PoseScene, WristCameraFollowsKinematics)
{
    const auto scene = demoScene("place_box");
    const Camera &wrist = *scene->description.camera("wrist");
    const LoadedRobot &robot = scene->robots[0];
    for (double shoulder : {-0.5, 0.4}) {
        JointConfig q = robot.homeQ;
        q[1] = shoulder;
        const std::vector<JointConfig> qs{q};
        const Camera cam = resolveCamera(wrist, *scene, qs);
        const RigidTransform hand = robotLinkWorldPoses(robot, q)[static_cast<std::size_t>(robot.eeLink)];
        // A point straight below the camera projects to the principal point.
        const Vec3 eye = (hand * wrist.mount->cameraInLink).translation;
        const Vec3 below = eye + 0.1 * hand.applyRotation(-Vec3::UnitZ());
        const Vec3 t = cam.worldToCamera.apply(below);
        EXPECT_NEAR(cam.fx * t.x() / t.z() + cam.cx, cam.cx, 1e-9);
        EXPECT_NEAR(cam.fy * t.y() / t.z() + cam.cy, cam.cy, 1e-9);
        EXPECT_NEAR(t.z(), 0.1, 1e-12);
    }
}
