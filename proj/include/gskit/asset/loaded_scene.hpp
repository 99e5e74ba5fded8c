// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gskit/asset/gaussian_set.hpp>
#include <gskit/asset/kinematic_tree.hpp>
#include <gskit/asset/mesh.hpp>
#include <gskit/asset/scene.hpp>

#include <filesystem>
#include <memory>
#include <vector>

namespace gskit {

struct LoadedRobot {
    std::string name;
    KinematicTree tree;
    GaussianSet scan;        ///< reconstruction-frame splats, already metric-scaled
    std::vector<int> labels; ///< per scan splat: link index or -1
    RigidTransform base;
    JointConfig capturedQ;
    JointConfig homeQ;
    int eeLink = -1;
    RigidTransform graspOffset;
    int gripperDof = -1;
    double gripperOpen = 0.0;
    double gripperClosed = 0.0;
    std::vector<TriangleMesh> linkMeshes; ///< visual geometry per link in the link frame

    bool gripperIsClosed(const JointConfig &q) const;
};

struct LoadedObject {
    std::string name;
    GaussianSet splats;
    TriangleMesh mesh;          ///< object frame
    RigidTransform splatToObject;
    RigidTransform restPose;
    double massKg = 1.0;
    bool stackable = false;
};

/// A validated scene with every referenced asset resident in memory. Immutable after load
/// and shared read-only between environments.
struct LoadedScene {
    SceneDescription description;
    GaussianSet background; ///< metric-scaled reconstruction background
    std::vector<LoadedRobot> robots;
    std::vector<LoadedObject> objects;

    const SupportPlane &supportPlane() const { return description.supportPlane; }
    const Vec3 &gravity() const { return description.gravityDir; }
};

/// Validate and load every asset; throws SceneError carrying the full report on failure.
std::shared_ptr<const LoadedScene> loadScene(const SceneDescription &description);
std::shared_ptr<const LoadedScene> loadScene(const std::filesystem::path &gsdfPath);

} // namespace gskit
