// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gskit/kinematics/forward_kinematics.hpp>

namespace gskit {

struct PositionIkParams {
    int maxIterations = 100;
    double damping = 1e-2;
    double tolerance = 1e-6;
};

struct IkSolution {
    JointConfig q;
    double residual = 0.0; ///< distance left to the target (metres)
    int iterations = 0;
};

/// Iterated damped least squares that moves `pointInLink` on `link` to `target` (root frame).
/// Joints with mask 0 keep their value; every iterate is clamped to the joint limits.
IkSolution solvePositionIk(const KinematicTree &tree, const JointConfig &q0, int link, const Vec3 &pointInLink,
                           const Vec3 &target, const Eigen::VectorXd &mask, const PositionIkParams &params = {});

} // namespace gskit
