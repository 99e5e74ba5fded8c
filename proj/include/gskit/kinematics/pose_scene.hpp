// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gskit/asset/loaded_scene.hpp>
#include <gskit/kinematics/forward_kinematics.hpp>

#include <atomic>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace gskit {

/// One contiguous block of world-posed splats plus the rotation taking the block's SH frame
/// into the world (view directions are back-rotated by its inverse before SH evaluation).
struct SplatGroup {
    const GaussianSet *splats = nullptr;
    Quat shToWorld = Quat::Identity();
};

/// Everything that does not move with the state, built once per scene and shared read-only by
/// any number of environments.
class StaticSplatCache {
  public:
    explicit StaticSplatCache(std::shared_ptr<const LoadedScene> scene);
    ~StaticSplatCache();

    StaticSplatCache(const StaticSplatCache &) = delete;
    StaticSplatCache &operator=(const StaticSplatCache &) = delete;

    const LoadedScene &scene() const { return *mScene; }
    const std::shared_ptr<const LoadedScene> &scenePtr() const { return mScene; }

    /// World-frame static splats: the background plus unlabeled robot-scan splats.
    const GaussianSet &background() const { return mBackground; }

    /// Link-local splats for robot `r`, link `l`, and the rotation from their SH frame into the
    /// link frame.
    const GaussianSet &linkSplats(std::size_t r, std::size_t l) const { return mLinkSplats[r][l]; }
    const Quat &linkShFrame(std::size_t r, std::size_t l) const { return mLinkShFrames[r][l]; }

    std::size_t staticBytes() const { return mBackground.byteSize(); }

    /// Static-splat bytes currently held by all live caches in the process.
    static std::size_t liveStaticBytes();

  private:
    std::shared_ptr<const LoadedScene> mScene;
    GaussianSet mBackground;
    std::vector<std::vector<GaussianSet>> mLinkSplats;
    std::vector<std::vector<Quat>> mLinkShFrames;
    std::size_t mAccountedBytes = 0;

    static std::atomic<std::size_t> sLiveBytes;
};

/// World pose of every link of robot `r` at configuration `q` (base transform applied).
LinkPoses robotLinkWorldPoses(const LoadedRobot &robot, const JointConfig &q);

/// Scene splats posed for one state. The background is borrowed from the cache when one was
/// used; moving splats are owned. Immutable once built.
class PosedSplats {
  public:
    /// Groups in the fixed order background, robot links (tree order), objects (scene order).
    std::vector<SplatGroup> groups() const;

    const GaussianSet &background() const;
    bool borrowsBackground() const { return static_cast<bool>(mCache); }
    const std::shared_ptr<const StaticSplatCache> &cache() const { return mCache; }
    std::size_t totalSplats() const;

  private:
    friend PosedSplats poseScene(const std::shared_ptr<const StaticSplatCache> &, std::span<const JointConfig>,
                                 std::span<const RigidTransform>);
    friend PosedSplats poseSceneUncached(const LoadedScene &, std::span<const JointConfig>,
                                         std::span<const RigidTransform>);

    std::shared_ptr<const StaticSplatCache> mCache;
    std::optional<GaussianSet> mOwnedBackground;
    std::vector<GaussianSet> mMoving;
    std::vector<Quat> mMovingShToWorld;
};

/// Pose the scene from the shared cache. `robotQ` holds one configuration per robot;
/// `objectPoses` one pose per object.
PosedSplats poseScene(const std::shared_ptr<const StaticSplatCache> &cache, std::span<const JointConfig> robotQ,
                      std::span<const RigidTransform> objectPoses);

/// Same result computed from the raw assets without any cache (full recompute path).
PosedSplats poseSceneUncached(const LoadedScene &scene, std::span<const JointConfig> robotQ,
                              std::span<const RigidTransform> objectPoses);

} // namespace gskit
