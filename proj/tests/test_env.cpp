// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include "test_util.hpp"

#include <gskit/core/error.hpp>
#include <gskit/env/policy.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace gskit;

namespace {

struct Fixture {
    std::shared_ptr<const LoadedScene> scene;
    std::shared_ptr<const StaticSplatCache> cache;
    TaskSpec task;
};

Fixture
fixture(const std::string &taskName = "place_box") {
    static std::map<std::string, Fixture> cache;
    auto &f = cache[taskName];
    if (!f.scene) {
        f.scene = test::demoScene(taskName);
        f.cache = std::make_shared<StaticSplatCache>(f.scene);
        f.task = makeTask(taskName, f.scene);
    }
    return f;
}

EnvOptions
noRender() {
    EnvOptions o;
    o.render = false;
    return o;
}

/// Drive the gripper to `grasp` (world) with the gripper at `finger`, enough steps to settle.
void
moveTo(Environment &env, const Vec3 &grasp, double finger) {
    for (int i = 0; i < 60; ++i) {
        const LoadedRobot &r = env.robot();
        JointConfig target = env.state().q;
        const Vec3 cur = env.graspPose(target).translation;
        if ((cur - grasp).norm() < 1e-9 && std::abs(target[r.gripperDof] - finger) < 1e-12) break;
        Eigen::VectorXd mask = Eigen::VectorXd::Ones(target.size());
        mask[r.gripperDof] = 0.0;
        for (int k = 0; k < 100; ++k) {
            const Vec3 p = env.graspPose(target).translation;
            const Eigen::MatrixXd j = pointJacobian(r.tree, target, r.eeLink, r.graspOffset.translation).topRows(3);
            target += dampedLeastSquares(j, r.base.inverse().rotation * (grasp - p), 1e-3, mask);
            r.tree.clampToLimits(target);
        }
        target[r.gripperDof] = finger;
        env.step(target);
    }
}

} // namespace

TEST(Env, ResetIsDeterministic) {
    const Fixture f = fixture();
    Environment a(f.cache, f.task), b(f.cache, f.task);
    const Observation oa = a.reset(42);
    const Observation ob = b.reset(42);
    EXPECT_EQ(a.state(), b.state());
    ASSERT_EQ(oa.images.size(), 2u);
    for (std::size_t i = 0; i < oa.images.size(); ++i) EXPECT_EQ(oa.images[i], ob.images[i]);
    a.reset(43);
    EXPECT_NE(a.state().objectPoses, b.state().objectPoses);
    EXPECT_EQ(a.state().stepIndex, 0);
}

TEST(Env, ZeroAreaRegionPutsObjectAtCentre) {
    Fixture f = fixture();
    TaskSpec t = f.task;
    t.region = {Eigen::Vector2d(0.03, -0.05), Eigen::Vector2d(0.03, -0.05)};
    Environment env(f.cache, t, noRender());
    env.reset(9);
    const Vec3 p = env.state().objectPoses[static_cast<std::size_t>(t.goal.pickObject)].translation;
    EXPECT_EQ(p.x(), 0.03);
    EXPECT_EQ(p.y(), -0.05);
    EXPECT_NEAR(objectBottom(*f.scene, t.goal.pickObject, env.state().objectPoses[0]), 0.0, 1e-12);
}

TEST(Env, ResetPositionsAreUniform) {
    Fixture f = fixture();
    TaskSpec t = f.task;
    t.region = {Eigen::Vector2d(-0.225, -0.225), Eigen::Vector2d(0.225, 0.225)};
    Environment env(f.cache, t, noRender());
    std::vector<std::size_t> cells(81, 0);
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        env.reset(seed);
        const Vec3 p = env.state().objectPoses[static_cast<std::size_t>(t.goal.pickObject)].translation;
        const int i = std::min(8, static_cast<int>((p.x() + 0.225) / 0.05));
        const int j = std::min(8, static_cast<int>((p.y() + 0.225) / 0.05));
        ++cells[static_cast<std::size_t>(9 * j + i)];
    }
    EXPECT_GT(test::chiSquareUniformPValue(cells), 0.01);
}

TEST(Env, ResetKeepsClearance) {
    const Fixture f = fixture("stack_cans");
    Environment env(f.cache, f.task, noRender());
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        env.reset(seed);
        const auto &p = env.state().objectPoses;
        const double gap = (p[0].translation - p[1].translation).head<2>().norm() - objectFootprintRadius(*f.scene, 0) -
                           objectFootprintRadius(*f.scene, 1);
        EXPECT_GE(gap, f.task.clearance);
    }
    TaskSpec tight = f.task;
    tight.region = {Eigen::Vector2d(0, 0), Eigen::Vector2d(0.01, 0.01)};
    Environment bad(f.cache, tight, noRender());
    EXPECT_THROW(bad.reset(1), EnvError);
}

TEST(Env, HoldingStillOnlyAdvancesTheStep) {
    const Fixture f = fixture();
    Environment env(f.cache, f.task, noRender());
    env.reset(3);
    EnvState before = env.state();
    const StepResult r = env.step(before.q);
    before.stepIndex += 1;
    EXPECT_EQ(env.state(), before);
    EXPECT_EQ(r.info, before);
    EXPECT_FALSE(r.terminated);
}

TEST(Env, VelocityAndJointLimits) {
    const Fixture f = fixture();
    Environment env(f.cache, f.task, noRender());
    env.reset(3);
    const KinematicTree &tree = env.robot().tree;
    JointConfig far = tree.upperLimits() + JointConfig::Constant(tree.dof(), 5.0);
    EXPECT_DOUBLE_EQ(env.stepLimits()[1], 1.5 / 20.0);
    JointConfig prev = env.state().q;
    for (int i = 0; i < 200; ++i) {
        env.step(far);
        EXPECT_LE(((env.state().q - prev).cwiseAbs() - env.stepLimits()).maxCoeff(), 1e-12);
        prev = env.state().q;
    }
    EXPECT_EQ(env.state().q, tree.upperLimits());
    EXPECT_THROW(env.step(JointConfig::Zero(2)), EnvError);
    JointConfig nan = env.state().q;
    nan[0] = std::nan("");
    EXPECT_THROW(env.step(nan), EnvError);
}

TEST(Env, ExpertSolvesBothTasks) {
    for (const std::string name : {"place_box", "stack_cans"}) {
        const Fixture f = fixture(name);
        Environment env(f.cache, f.task, noRender());
        ScriptedExpert expert(f.scene, f.task);
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            Observation obs = env.reset(seed);
            StepResult r;
            bool partialSeen = false;
            do {
                r = env.step(expert.act(obs, env.state()));
                obs = r.observation;
                EXPECT_TRUE(r.reward == 0.0 || r.reward == 0.5 || r.reward == 1.0);
                partialSeen |= r.reward == 0.5;
            } while (!r.terminated && !r.truncated);
            EXPECT_TRUE(r.terminated) << name << " seed " << seed;
            EXPECT_EQ(r.reward, 1.0);
            EXPECT_TRUE(partialSeen);
        }
    }
}

TEST(Env, InvariantsAlongTrajectories) {
    const Fixture f = fixture("stack_cans");
    Environment env(f.cache, f.task, noRender());
    ScriptedExpert expert(f.scene, f.task);
    RandomPolicy random(env.robot().tree, 5);
    for (Policy *policy : std::vector<Policy *>{&expert, &random}) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            policy->reset(seed);
            Observation obs = env.reset(seed);
            for (int t = 0; t < 120; ++t) {
                const StepResult r = env.step(policy->act(obs, env.state()));
                obs = r.observation;
                const EnvState &s = r.info;
                if (r.terminated) EXPECT_EQ(r.reward, 1.0);
                for (int k = 0; k < 2; ++k) {
                    if (s.attached == k) {
                        const RigidTransform rel = env.graspPose(s.q).inverse() * s.objectPoses[static_cast<std::size_t>(k)];
                        EXPECT_LE((rel.translation - s.attachOffset.translation).norm(), 1e-9);
                        EXPECT_LE(test::rotationErrorDeg(rel.rotation, s.attachOffset.rotation), 1e-6);
                    } else {
                        EXPECT_TRUE(restsOnPlane(*f.scene, s, k) || restsOn(*f.scene, s, k, 1 - k));
                    }
                }
                if (r.terminated) break;
            }
        }
    }
}

TEST(KinematicLite, NoAttachWhenFar) {
    const Fixture f = fixture();
    TaskSpec t = f.task;
    t.region = {Eigen::Vector2d(0.05, 0.15), Eigen::Vector2d(0.05, 0.15)};
    Environment env(f.cache, t, noRender());
    env.reset(0);
    const LoadedRobot &r = env.robot();
    moveTo(env, Vec3(-0.05, 0.0, 0.02), r.gripperOpen);
    moveTo(env, Vec3(-0.05, 0.0, 0.02), r.gripperClosed);
    EXPECT_TRUE(r.gripperIsClosed(env.state().q));
    EXPECT_FALSE(env.state().attached.has_value());
}

TEST(KinematicLite, AttachFollowAndDrop) {
    const Fixture f = fixture();
    TaskSpec t = f.task;
    t.region = {Eigen::Vector2d(0.0, 0.1), Eigen::Vector2d(0.0, 0.1)};
    Environment env(f.cache, t, noRender());
    env.reset(0);
    const LoadedRobot &r = env.robot();
    const auto box = static_cast<std::size_t>(t.goal.pickObject);
    const Vec3 boxCentre = env.state().objectPoses[box].translation;
    moveTo(env, boxCentre + Vec3(0.005, 0, 0), r.gripperOpen);
    moveTo(env, boxCentre + Vec3(0.005, 0, 0), r.gripperClosed);
    ASSERT_EQ(env.state().attached, t.goal.pickObject);
    const RigidTransform graspAtAttach = env.graspPose(env.state().q);
    const RigidTransform poseAtAttach = env.state().objectPoses[box];

    moveTo(env, Vec3(-0.02, -0.05, 0.15), r.gripperClosed);
    const RigidTransform graspNow = env.graspPose(env.state().q);
    const RigidTransform motion = graspNow * graspAtAttach.inverse();
    const RigidTransform expected = motion * poseAtAttach;
    EXPECT_LE((env.state().objectPoses[box].translation - expected.translation).norm(), 1e-9);
    EXPECT_LE(test::rotationErrorDeg(env.state().objectPoses[box].rotation, expected.rotation), 1e-7);

    const Vec3 before = env.state().objectPoses[box].translation;
    JointConfig open = env.state().q;
    open[r.gripperDof] = r.gripperOpen;
    env.step(open);
    EXPECT_FALSE(env.state().attached.has_value());
    const Vec3 after = env.state().objectPoses[box].translation;
    EXPECT_DOUBLE_EQ(after.x(), before.x());
    EXPECT_DOUBLE_EQ(after.y(), before.y());
    EXPECT_NEAR(objectBottom(*f.scene, t.goal.pickObject, env.state().objectPoses[box]), 0.0, 1e-12);
}

TEST(Render, SameStateSameImage) {
    const Fixture f = fixture();
    Environment env(f.cache, f.task);
    env.reset(5);
    const Observation a = env.observe();
    const Observation b = env.observe();
    ASSERT_EQ(a.images.size(), b.images.size());
    for (std::size_t i = 0; i < a.images.size(); ++i) EXPECT_EQ(a.images[i], b.images[i]);
    EXPECT_THROW(env.renderObservation({"nope"}), EnvError);
    EXPECT_EQ(a.image("front").width, 64);
    EXPECT_EQ(a.image("front").height, 48);
}

TEST(Render, JointOutsideViewLeavesImageUnchanged) {
    const Fixture f = fixture();
    auto scene = std::make_shared<LoadedScene>(*f.scene);
    Camera corner = scene->description.cameras.front();
    corner.name = "corner";
    corner.mount.reset();
    corner.fx = corner.fy = 200.0;
    corner.worldToCamera = lookAt(Vec3(0.4, 0.3, 0.3), Vec3(0.4, 0.3, 0.0), Vec3::UnitX());
    scene->description.cameras.push_back(corner);
    auto cache = std::make_shared<StaticSplatCache>(scene);
    TaskSpec t = makeTask("place_box", scene);
    t.cameras = {"corner"};
    Environment env(cache, t);
    env.reset(1);
    const Observation a = env.observe();
    EnvState s = env.state();
    s.q[1] += 0.8; // shoulder
    env.restore(s);
    const Observation b = env.observe();
    const auto &ca = a.images[0].color, &cb = b.images[0].color;
    float worst = 0.0f;
    for (std::size_t i = 0; i < ca.size(); ++i) worst = std::max(worst, std::abs(ca[i] - cb[i]));
    EXPECT_LE(worst, 1.0f / 255.0f);
    // The corner view is not empty, and the front view does see the arm move.
    EXPECT_GT(*std::max_element(ca.begin(), ca.end()), 0.05f);
    env.reset(1);
    const RenderOutput frontBefore = env.renderCamera("front");
    env.restore(s);
    EXPECT_NE(env.renderCamera("front").color, frontBefore.color);
}

TEST(Render, WristCameraFollowsKinematics) {
    const Fixture f = fixture();
    Environment env(f.cache, f.task);
    env.reset(2);
    const Camera &wrist = *f.scene->description.camera("wrist");
    const auto box = static_cast<std::size_t>(f.task.goal.pickObject);
    EnvState s = env.state();
    // Look straight down at the box from two heights and two wrist angles.
    const Vec3 boxCentre = s.objectPoses[box].translation;
    for (const double wristAngle : {0.0, 0.7}) {
        const LoadedRobot &r = env.robot();
        JointConfig q = s.q;
        Eigen::VectorXd mask = Eigen::VectorXd::Ones(q.size());
        mask[r.gripperDof] = 0.0;
        mask[3] = 0.0;
        q[3] = wristAngle;
        for (int k = 0; k < 200; ++k) {
            const Vec3 p = env.graspPose(q).translation;
            const Vec3 target(boxCentre.x() - 0.03, boxCentre.y() + 0.02, 0.2);
            const Eigen::MatrixXd j = pointJacobian(r.tree, q, r.eeLink, r.graspOffset.translation).topRows(3);
            q += dampedLeastSquares(j, target - p, 1e-3, mask);
        }
        EnvState st = s;
        st.q = q;
        env.restore(st);
        const Observation obs = env.renderObservation({"wrist"});
        // Camera posed from FK by hand.
        const std::vector<JointConfig> qs = {q};
        const Camera cam = resolveCamera(wrist, *f.scene, qs);
        const LinkPoses poses = robotLinkWorldPoses(r, q);
        const int link = r.tree.linkIndex(wrist.mount->link);
        const RigidTransform expectedWorldToCam = (poses[static_cast<std::size_t>(link)] * wrist.mount->cameraInLink).inverse();
        EXPECT_LE((cam.worldToCamera.translation - expectedWorldToCam.translation).norm(), 1e-12);
        // Render the box alone and compare its image centroid with the analytic projection.
        const PosedSplats posed = poseScene(f.cache, qs, st.objectPoses);
        const auto groups = posed.groups();
        const std::vector<SplatGroup> boxOnly = {groups[groups.size() - f.scene->objects.size() + box]};
        const RenderOutput img = rasterize(boxOnly, cam, Vec3::Zero());
        double sw = 0, sx = 0, sy = 0;
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x) {
                const double a = img.alpha[static_cast<std::size_t>(y * img.width + x)];
                sw += a;
                sx += a * x;
                sy += a * y;
            }
        }
        ASSERT_GT(sw, 1.0);
        const Vec3 pc = cam.worldToCamera.apply(boxCentre);
        EXPECT_NEAR(sx / sw, cam.fx * pc.x() / pc.z() + cam.cx, 1.0);
        EXPECT_NEAR(sy / sw, cam.fy * pc.y() / pc.z() + cam.cy, 1.0);
        // The observation path uses exactly that camera.
        const RenderOutput full = rasterize(groups, cam, env.options().background);
        EXPECT_EQ(obs.images[0].color, full.color);
    }
}

TEST(Render, ColorJitterIsPerEpisode) {
    const Fixture f = fixture();
    EnvOptions jitter;
    jitter.colorJitter = true;
    Environment plain(f.cache, f.task), a(f.cache, f.task, jitter), b(f.cache, f.task, jitter);
    const Observation p = plain.reset(11);
    const Observation oa = a.reset(11);
    const Observation ob = b.reset(11);
    EXPECT_EQ(oa.images[0], ob.images[0]);
    EXPECT_NE(oa.images[0].color, p.images[0].color);
    const Observation other = b.reset(12);
    EXPECT_NE(other.images[0].color, oa.images[0].color);
    EnvState s = b.state();
    s.q = a.state().q;
    s.episodeSeed = 11;
    s.objectPoses = a.state().objectPoses;
    b.restore(s);
    EXPECT_EQ(b.observe().images[0], oa.images[0]);
}

TEST(Batch, MatchesSerialEnvironments) {
    const Fixture f = fixture();
    for (const int threads : {1, 4}) {
        EnvBatch batch(f.cache, f.task, 8, {}, threads);
        std::vector<std::uint64_t> seeds;
        for (std::uint64_t i = 0; i < 8; ++i) seeds.push_back(100 + i);
        std::vector<Observation> obs = batch.reset(seeds);
        std::vector<Environment> serial;
        std::vector<Observation> serialObs;
        for (std::size_t i = 0; i < 8; ++i) {
            serial.emplace_back(f.cache, f.task);
            serialObs.push_back(serial.back().reset(seeds[i]));
        }
        ScriptedExpert expert(f.scene, f.task);
        for (int t = 0; t < 25; ++t) {
            std::vector<JointConfig> actions;
            for (std::size_t i = 0; i < 8; ++i) actions.push_back(expert.act(batch[i].state()));
            const auto results = batch.step(actions);
            for (std::size_t i = 0; i < 8; ++i) {
                const StepResult r = serial[i].step(actions[i]);
                ASSERT_EQ(results[i].info, r.info);
                ASSERT_EQ(results[i].reward, r.reward);
                ASSERT_EQ(results[i].observation.images, r.observation.images);
            }
        }
    }
}

TEST(Batch, StaticMemoryIndependentOfSize) {
    const Fixture f = fixture();
    const std::size_t before = StaticSplatCache::liveStaticBytes();
    std::size_t one = 0;
    {
        EnvBatch batch(f.cache, f.task, 1, noRender());
        one = StaticSplatCache::liveStaticBytes();
    }
    EnvBatch big(f.cache, f.task, 64, noRender());
    EXPECT_EQ(StaticSplatCache::liveStaticBytes(), one);
    EXPECT_EQ(one, before);
    EXPECT_EQ(big[63].cache().get(), f.cache.get());
}

TEST(Tasks, UnknownTaskAndCamera) {
    const Fixture f = fixture();
    EXPECT_THROW(makeTask("pour_sauce", f.scene), EnvError);
    EXPECT_THROW(makeTask("stack_cans", f.scene), EnvError); // place_box scene has no cans
    TaskSpec t = f.task;
    t.cameras = {"missing"};
    EXPECT_THROW(Environment(f.cache, t), EnvError);
    t = f.task;
    t.region = {Eigen::Vector2d(-0.6, 0), Eigen::Vector2d(0, 0.1)};
    EXPECT_THROW(Environment(f.cache, t), EnvError);
}
