// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gskit/core/error.hpp>
#include <gskit/core/log.hpp>
#include <gskit/kinematics/forward_kinematics.hpp>

#include <Eigen/Dense>

namespace gskit {

namespace {

RigidTransform
jointMotion(const Joint &joint, double value) {
    switch (joint.type) {
    case JointType::Revolute: return {Quat(Eigen::AngleAxisd(value, joint.axis)), Vec3::Zero()};
    case JointType::Prismatic: return RigidTransform::fromTranslation(joint.axis * value);
    case JointType::Fixed: break;
    }
    return {};
}

} // namespace

LinkPoses
forwardKinematics(const KinematicTree &tree, const JointConfig &q) {
    if (static_cast<std::size_t>(q.size()) != tree.dof()) {
        throw KinematicTreeError("joint configuration has " + std::to_string(q.size()) + " values, tree '" +
                                 tree.name + "' expects " + std::to_string(tree.dof()));
    }
    JointConfig clamped = q;
    if (const int moved = tree.clampToLimits(clamped); moved > 0) {
        logWarning("forwardKinematics: clamped " + std::to_string(moved) + " joint value(s) to limits");
    }
    LinkPoses poses(tree.links.size());
    for (std::size_t j = 0; j < tree.joints.size(); ++j) {
        const Joint &joint = tree.joints[j];
        const int d = tree.dofIndex(static_cast<int>(j));
        const double value = d < 0 ? 0.0 : clamped[d];
        poses[j + 1] = poses[static_cast<std::size_t>(joint.parentLink)] * joint.origin * jointMotion(joint, value);
    }
    return poses;
}

std::map<std::string, RigidTransform>
forwardKinematicsByName(const KinematicTree &tree, const JointConfig &q) {
    const auto poses = forwardKinematics(tree, q);
    std::map<std::string, RigidTransform> out;
    for (std::size_t i = 0; i < poses.size(); ++i) {
        out.emplace(tree.links[i].name, poses[i]);
    }
    return out;
}

Eigen::MatrixXd
pointJacobian(const KinematicTree &tree, const JointConfig &q, int link, const Vec3 &pointInLink) {
    const auto poses = forwardKinematics(tree, q);
    const Vec3 p = poses[static_cast<std::size_t>(link)].apply(pointInLink);
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(6, static_cast<Eigen::Index>(tree.dof()));
    // Walk from the link up to the root; link i (> 0) is the child of joint i - 1.
    for (int l = link; l > 0; l = tree.joints[static_cast<std::size_t>(l - 1)].parentLink) {
        const int j = l - 1;
        const Joint &joint = tree.joints[static_cast<std::size_t>(j)];
        const int d = tree.dofIndex(j);
        if (d < 0) continue;
        const RigidTransform frame = poses[static_cast<std::size_t>(joint.parentLink)] * joint.origin;
        const Vec3 axis = frame.applyRotation(joint.axis);
        if (joint.type == JointType::Revolute) {
            jac.block<3, 1>(0, d) = axis.cross(p - frame.translation);
            jac.block<3, 1>(3, d) = axis;
        } else {
            jac.block<3, 1>(0, d) = axis;
        }
    }
    return jac;
}

Eigen::VectorXd
dampedLeastSquares(const Eigen::MatrixXd &jacobian, const Eigen::VectorXd &dx, double damping,
                   const Eigen::VectorXd &mask) {
    const Eigen::MatrixXd j = jacobian * mask.asDiagonal();
    const Eigen::MatrixXd jjt = j * j.transpose() +
                                damping * damping * Eigen::MatrixXd::Identity(j.rows(), j.rows());
    return j.transpose() * jjt.ldlt().solve(dx);
}

} // namespace gskit
