// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gskit/core/error.hpp>
#include <gskit/kinematics/pose_scene.hpp>
#include <gskit/kinematics/transform_gaussians.hpp>

namespace gskit {

std::atomic<std::size_t> StaticSplatCache::sLiveBytes{0};

namespace {

std::vector<std::vector<std::size_t>>
splatsByLink(const LoadedRobot &robot, std::vector<std::size_t> *unlabeled) {
    std::vector<std::vector<std::size_t>> byLink(robot.tree.links.size());
    for (std::size_t i = 0; i < robot.labels.size(); ++i) {
        const int label = robot.labels[i];
        if (label < 0) {
            if (unlabeled) unlabeled->push_back(i);
        } else {
            byLink[static_cast<std::size_t>(label)].push_back(i);
        }
    }
    return byLink;
}

GaussianSet
buildBackground(const LoadedScene &scene) {
    GaussianSet background = scene.background;
    for (const auto &robot : scene.robots) {
        std::vector<std::size_t> unlabeled;
        splatsByLink(robot, &unlabeled);
        if (!unlabeled.empty()) {
            background = concatGaussians(background, selectSplats(robot.scan, unlabeled));
        }
    }
    background.centroids.shrink_to_fit();
    return background;
}

void
checkState(const LoadedScene &scene, std::span<const JointConfig> robotQ, std::span<const RigidTransform> objectPoses) {
    if (robotQ.size() != scene.robots.size()) {
        throw EnvError("poseScene: expected " + std::to_string(scene.robots.size()) + " joint configurations, got " +
                       std::to_string(robotQ.size()));
    }
    for (std::size_t r = 0; r < robotQ.size(); ++r) {
        if (static_cast<std::size_t>(robotQ[r].size()) != scene.robots[r].tree.dof()) {
            throw EnvError("poseScene: joint vector for robot '" + scene.robots[r].name + "' has wrong length");
        }
        if (scene.robots[r].labels.size() != scene.robots[r].scan.size()) {
            throw EnvError("poseScene: label/splat count mismatch for robot '" + scene.robots[r].name + "'");
        }
    }
    if (objectPoses.size() != scene.objects.size()) {
        throw EnvError("poseScene: missing object pose (expected " + std::to_string(scene.objects.size()) +
                       ", got " + std::to_string(objectPoses.size()) + ")");
    }
}

} // namespace

StaticSplatCache::StaticSplatCache(std::shared_ptr<const LoadedScene> scene)
    : mScene(std::move(scene)), mBackground(buildBackground(*mScene)) {
    for (const auto &robot : mScene->robots) {
        const auto byLink = splatsByLink(robot, nullptr);
        const LinkPoses captured = robotLinkWorldPoses(robot, robot.capturedQ);
        std::vector<GaussianSet> local;
        std::vector<Quat> shFrames;
        for (std::size_t l = 0; l < byLink.size(); ++l) {
            const RigidTransform toLocal = captured[l].inverse();
            local.push_back(transformGaussians(selectSplats(robot.scan, byLink[l]), toLocal));
            shFrames.push_back(toLocal.rotation);
        }
        mLinkSplats.push_back(std::move(local));
        mLinkShFrames.push_back(std::move(shFrames));
    }
    mAccountedBytes = staticBytes();
    sLiveBytes += mAccountedBytes;
}

StaticSplatCache::~StaticSplatCache() { sLiveBytes -= mAccountedBytes; }

std::size_t
StaticSplatCache::liveStaticBytes() {
    return sLiveBytes.load();
}

LinkPoses
robotLinkWorldPoses(const LoadedRobot &robot, const JointConfig &q) {
    LinkPoses poses = forwardKinematics(robot.tree, q);
    for (auto &p : poses) {
        p = robot.base * p;
    }
    return poses;
}

std::vector<SplatGroup>
PosedSplats::groups() const {
    std::vector<SplatGroup> out;
    out.reserve(1 + mMoving.size());
    out.push_back({&background(), Quat::Identity()});
    for (std::size_t i = 0; i < mMoving.size(); ++i) {
        out.push_back({&mMoving[i], mMovingShToWorld[i]});
    }
    return out;
}

const GaussianSet &
PosedSplats::background() const {
    return mCache ? mCache->background() : *mOwnedBackground;
}

std::size_t
PosedSplats::totalSplats() const {
    std::size_t n = background().size();
    for (const auto &m : mMoving) n += m.size();
    return n;
}

PosedSplats
poseScene(const std::shared_ptr<const StaticSplatCache> &cache, std::span<const JointConfig> robotQ,
          std::span<const RigidTransform> objectPoses) {
    const LoadedScene &scene = cache->scene();
    checkState(scene, robotQ, objectPoses);
    PosedSplats out;
    out.mCache = cache;
    for (std::size_t r = 0; r < scene.robots.size(); ++r) {
        const LinkPoses poses = robotLinkWorldPoses(scene.robots[r], robotQ[r]);
        for (std::size_t l = 0; l < poses.size(); ++l) {
            out.mMoving.push_back(transformGaussians(cache->linkSplats(r, l), poses[l]));
            out.mMovingShToWorld.push_back((poses[l].rotation * cache->linkShFrame(r, l)).normalized());
        }
    }
    for (std::size_t k = 0; k < scene.objects.size(); ++k) {
        const RigidTransform t = objectPoses[k] * scene.objects[k].splatToObject;
        out.mMoving.push_back(transformGaussians(scene.objects[k].splats, t));
        out.mMovingShToWorld.push_back(t.rotation);
    }
    return out;
}

PosedSplats
poseSceneUncached(const LoadedScene &scene, std::span<const JointConfig> robotQ,
                  std::span<const RigidTransform> objectPoses) {
    checkState(scene, robotQ, objectPoses);
    PosedSplats out;
    out.mOwnedBackground = buildBackground(scene);
    for (std::size_t r = 0; r < scene.robots.size(); ++r) {
        const LoadedRobot &robot = scene.robots[r];
        const auto byLink = splatsByLink(robot, nullptr);
        const LinkPoses captured = robotLinkWorldPoses(robot, robot.capturedQ);
        const LinkPoses current = robotLinkWorldPoses(robot, robotQ[r]);
        for (std::size_t l = 0; l < current.size(); ++l) {
            const RigidTransform delta = current[l] * captured[l].inverse();
            out.mMoving.push_back(transformGaussians(selectSplats(robot.scan, byLink[l]), delta));
            out.mMovingShToWorld.push_back(delta.rotation);
        }
    }
    for (std::size_t k = 0; k < scene.objects.size(); ++k) {
        const RigidTransform t = objectPoses[k] * scene.objects[k].splatToObject;
        out.mMoving.push_back(transformGaussians(scene.objects[k].splats, t));
        out.mMovingShToWorld.push_back(t.rotation);
    }
    return out;
}

} // namespace gskit
