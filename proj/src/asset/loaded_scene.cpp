// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gskit/asset/loaded_scene.hpp>
#include <gskit/asset/splat_file.hpp>
#include <gskit/core/error.hpp>

namespace gskit {

bool
LoadedRobot::gripperIsClosed(const JointConfig &q) const {
    if (gripperDof < 0) return false;
    const double mid = 0.5 * (gripperOpen + gripperClosed);
    const double v = q[gripperDof];
    return gripperClosed < gripperOpen ? v <= mid : v >= mid;
}

namespace {

JointConfig
toConfig(const std::vector<double> &v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

} // namespace

std::shared_ptr<const LoadedScene>
loadScene(const SceneDescription &description) {
    const auto report = validateScene(description, description.baseDir);
    if (!report.empty()) {
        throw SceneError("scene failed validation:\n" + report.toString());
    }
    auto scene = std::make_shared<LoadedScene>();
    scene->description = description;
    scene->background = scaleGaussians(loadSplatFile(description.resolve(description.background)),
                                       description.metricScale);
    for (const auto &entry : description.robots) {
        LoadedRobot robot;
        robot.name = entry.name;
        robot.tree = loadKinematicTree(description.resolve(entry.urdf));
        robot.scan = scaleGaussians(loadSplatFile(description.resolve(entry.splats)), description.metricScale);
        robot.labels = entry.linkLabels;
        robot.base = entry.baseTransform;
        robot.capturedQ = toConfig(entry.capturedQ);
        robot.homeQ = entry.homeQ.empty() ? robot.capturedQ : toConfig(entry.homeQ);
        robot.eeLink = entry.eeLink.empty() ? static_cast<int>(robot.tree.links.size()) - 1
                                            : robot.tree.linkIndex(entry.eeLink);
        robot.graspOffset = entry.graspOffset;
        if (entry.gripper) {
            robot.gripperDof = robot.tree.dofIndex(entry.gripper->joint);
            robot.gripperOpen = entry.gripper->open;
            robot.gripperClosed = entry.gripper->closed;
        }
        for (const auto &link : robot.tree.links) {
            robot.linkMeshes.push_back(link.visual ? geometryMesh(*link.visual) : TriangleMesh{});
        }
        scene->robots.push_back(std::move(robot));
    }
    for (const auto &entry : description.objects) {
        LoadedObject object;
        object.name = entry.name;
        object.splats = loadSplatFile(description.resolve(entry.splats));
        object.mesh = loadObj(description.resolve(entry.mesh));
        object.splatToObject = entry.transform;
        object.restPose = entry.restPose;
        object.massKg = entry.massKg;
        object.stackable = entry.stackable;
        scene->objects.push_back(std::move(object));
    }
    return scene;
}

std::shared_ptr<const LoadedScene>
loadScene(const std::filesystem::path &gsdfPath) {
    return loadScene(loadGsdf(gsdfPath));
}

} // namespace gskit
