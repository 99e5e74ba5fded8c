// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gskit/core/rigid_transform.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace gskit {

/// Procedural stand-in for a captured tabletop: a four-axis SCARA arm with a one-finger
/// gripper on a textured table, plus the task objects. Everything is written as real asset
/// files (PLY, URDF, OBJ, GSDF) so the full loading path is exercised.
struct DemoSceneOptions {
    std::string task = "place_box"; ///< "place_box" or "stack_cans"
    int imageWidth = 64;
    int imageHeight = 48;
    double tableSpacing = 0.02;     ///< background splat grid pitch in metres
    int splatsPerLink = 160;
    int splatsPerObject = 240;
    int unlabeledRobotSplats = 24;  ///< scan splats left without a link label
    double metricScale = 1.0;       ///< reconstruction units per metre = 1 / metricScale
    std::uint64_t seed = 1;
};

/// Centre and radius of the green target zone drawn for the place_box task.
inline const Vec3 kDemoTargetZone{0.0, -0.2, 0.0};
inline constexpr double kDemoTargetRadius = 0.05;

/// Robot base position in the world.
inline const Vec3 kDemoRobotBase{-0.3, 0.0, 0.0};

std::string demoRobotUrdf();

/// Write every asset under `dir` and return the path of the scene file.
std::filesystem::path writeDemoScene(const std::filesystem::path &dir, const DemoSceneOptions &options = {});

} // namespace gskit
