// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gskit/asset/kinematic_tree.hpp>
#include <gskit/core/rigid_transform.hpp>

#include <Eigen/Core>

#include <map>
#include <string>
#include <vector>

namespace gskit {

/// Link poses in the robot root frame, indexed like KinematicTree::links.
using LinkPoses = std::vector<RigidTransform>;

/// Forward kinematics. `q` must have tree.dof() entries; out-of-limit values are clamped
/// (with a warning) before use. The root link maps to identity.
LinkPoses forwardKinematics(const KinematicTree &tree, const JointConfig &q);

std::map<std::string, RigidTransform> forwardKinematicsByName(const KinematicTree &tree, const JointConfig &q);

/// Geometric Jacobian (6 x dof) of a point rigidly attached to `link`, expressed in the root
/// frame. Rows 0-2: linear velocity of the point; rows 3-5: angular velocity.
Eigen::MatrixXd pointJacobian(const KinematicTree &tree, const JointConfig &q, int link, const Vec3 &pointInLink);

/// Damped least-squares step: dq = J^T (J J^T + damping^2 I)^-1 dx, with `mask` zeroing
/// joints that must not move (mask.size() == dof, 1 = free).
Eigen::VectorXd dampedLeastSquares(const Eigen::MatrixXd &jacobian, const Eigen::VectorXd &dx, double damping,
                                   const Eigen::VectorXd &mask);

} // namespace gskit
