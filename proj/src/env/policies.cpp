// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gskit/core/error.hpp>
#include <gskit/env/policy.hpp>
#include <gskit/kinematics/ik.hpp>

#include <numbers>

namespace gskit {

namespace {

int
eeLinkOf(const LoadedRobot &r) {
    return r.eeLink >= 0 ? r.eeLink : static_cast<int>(r.tree.links.size()) - 1;
}

} // namespace

ScriptedExpert::ScriptedExpert(std::shared_ptr<const LoadedScene> scene, TaskSpec task, ExpertParams params)
    : mScene(std::move(scene)), mTask(std::move(task)), mParams(params) {
    if (!mScene || mScene->robots.empty()) throw EnvError("the scripted expert needs a scene with a robot");
}

JointConfig
ScriptedExpert::reach(const JointConfig &q, const Vec3 &graspTarget, double gripper) const {
    const LoadedRobot &r = mScene->robots.front();
    Eigen::VectorXd mask = Eigen::VectorXd::Ones(q.size());
    if (r.gripperDof >= 0) mask[r.gripperDof] = 0.0;
    JointConfig target = solvePositionIk(r.tree, q, eeLinkOf(r), r.graspOffset.translation,
                                         r.base.inverse().apply(graspTarget), mask)
                             .q;
    if (r.gripperDof >= 0) target[r.gripperDof] = gripper;
    return target;
}

ScriptedExpert::Decision
ScriptedExpert::decide(const EnvState &s) const {
    const LoadedScene &sc = *mScene;
    const LoadedRobot &r = sc.robots.front();
    const SupportPlane &plane = sc.supportPlane();
    const Vec3 n = plane.normal.normalized();
    auto height = [&](const Vec3 &p) { return n.dot(p - plane.point); };
    auto at = [&](const Vec3 &p, double h) { return p + (h - height(p)) * n; };
    auto inPlane = [&](const Vec3 &a, const Vec3 &b) { return (planeCoords(plane, a) - planeCoords(plane, b)).norm(); };

    const double open = r.gripperOpen, closed = r.gripperClosed;
    JointConfig hold = s.q;
    const int pick = mTask.goal.pickObject;
    const Vec3 grasp = (robotLinkWorldPoses(r, s.q)[static_cast<std::size_t>(eeLinkOf(r))] * r.graspOffset).translation;

    if (mTask.success && mTask.success(s)) {
        if (r.gripperDof >= 0) hold[r.gripperDof] = open;
        return {"done", hold};
    }
    if (s.attached && *s.attached != pick) {
        if (r.gripperDof >= 0) hold[r.gripperDof] = open;
        return {"release-wrong", hold};
    }

    if (!s.attached) {
        if (r.gripperIsClosed(s.q)) {
            if (r.gripperDof >= 0) hold[r.gripperDof] = open;
            return {"open", hold};
        }
        const Vec3 obj = s.objectPoses[static_cast<std::size_t>(pick)].translation;
        if (inPlane(grasp, obj) > mParams.xyTolerance) {
            if (height(grasp) < mParams.carryHeight - 0.01) return {"raise", reach(s.q, at(grasp, mParams.carryHeight), open)};
            return {"approach", reach(s.q, at(obj, mParams.carryHeight), open)};
        }
        if (height(grasp) > height(obj) + mParams.zTolerance) return {"descend", reach(s.q, obj, open)};
        JointConfig close = s.q;
        if (r.gripperDof >= 0) close[r.gripperDof] = closed;
        return {"close", close};
    }

    // Holding the object: carry it over the goal and set it down.
    const RigidTransform &objPose = s.objectPoses[static_cast<std::size_t>(pick)];
    double supportTop = 0.0;
    Vec3 goal = mTask.goal.placePoint;
    if (mTask.goal.placeOnObject >= 0) {
        const auto b = static_cast<std::size_t>(mTask.goal.placeOnObject);
        goal = s.objectPoses[b].translation;
        supportTop = objectTop(sc, mTask.goal.placeOnObject, s.objectPoses[b]);
    }
    goal += mPlaceOffset;
    const double graspAboveBottom = height(grasp) - objectBottom(sc, pick, objPose);
    const double release = supportTop + mParams.releaseClearance + graspAboveBottom;
    const double carry = std::max(mParams.carryHeight, release + 0.03);
    const Vec3 heldOffset = grasp - objPose.translation;
    if (inPlane(objPose.translation, goal) > mParams.xyTolerance) {
        if (height(grasp) < carry - 0.01) return {"lift", reach(s.q, at(grasp, carry), closed)};
        return {"carry", reach(s.q, at(goal + heldOffset, carry), closed)};
    }
    if (height(grasp) > release + mParams.zTolerance) return {"lower", reach(s.q, at(grasp, release), closed)};
    if (r.gripperDof >= 0) hold[r.gripperDof] = open;
    return {"release", hold};
}

JointConfig
ScriptedExpert::act(const Observation &, const EnvState &state) {
    return decide(state).target;
}

JointConfig
ScriptedExpert::act(const EnvState &state) {
    return decide(state).target;
}

std::string
ScriptedExpert::phase(const EnvState &state) const {
    return decide(state).phase;
}

JointConfig
ReplayPolicy::act(const Observation &, const EnvState &state) {
    if (mNext >= mActions.size()) return state.q;
    return mActions[mNext++];
}

RandomPolicy::RandomPolicy(const KinematicTree &tree, std::uint64_t seed)
    : mLower(tree.lowerLimits()), mUpper(tree.upperLimits()), mSeed(seed), mRng(seed) {}

void
RandomPolicy::reset(std::uint64_t episodeSeed) {
    mRng.seed(mSeed * 0x9e3779b97f4a7c15ULL + episodeSeed);
}

JointConfig
RandomPolicy::act(const Observation &, const EnvState &) {
    JointConfig a(mLower.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        a[i] = std::uniform_real_distribution<double>(mLower[i], mUpper[i])(mRng);
    }
    return a;
}

PerturbedExpert::PerturbedExpert(std::shared_ptr<const LoadedScene> scene, TaskSpec task, PerturbationParams params)
    : mExpert(scene, std::move(task)), mParams(params), mGripperDof(scene->robots.front().gripperDof) {}

void
PerturbedExpert::reset(std::uint64_t episodeSeed) {
    mRng.seed(mParams.seed * 0x9e3779b97f4a7c15ULL + episodeSeed);
    std::uniform_real_distribution<double> u01;
    mBiased = u01(mRng) < mParams.failureProbability;
    Vec3 offset = Vec3::Zero();
    if (mBiased) {
        const double angle = 2.0 * std::numbers::pi * u01(mRng);
        const double length = mParams.minBias + (mParams.maxBias - mParams.minBias) * u01(mRng);
        offset = Vec3(std::cos(angle), std::sin(angle), 0.0) * length;
    }
    mExpert.setPlaceOffset(offset);
}

JointConfig
PerturbedExpert::act(const Observation &obs, const EnvState &state) {
    JointConfig a = mExpert.act(obs, state);
    std::normal_distribution<double> noise(0.0, mParams.actionNoise);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (i != mGripperDof && mParams.actionNoise > 0.0) a[i] += noise(mRng);
    }
    return a;
}

} // namespace gskit
