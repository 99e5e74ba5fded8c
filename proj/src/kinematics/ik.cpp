// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gskit/kinematics/ik.hpp>

namespace gskit {

IkSolution
solvePositionIk(const KinematicTree &tree, const JointConfig &q0, int link, const Vec3 &pointInLink,
                const Vec3 &target, const Eigen::VectorXd &mask, const PositionIkParams &params) {
    IkSolution out;
    out.q = q0;
    tree.clampToLimits(out.q);
    const auto l = static_cast<std::size_t>(link);
    for (;;) {
        const Vec3 p = forwardKinematics(tree, out.q)[l].apply(pointInLink);
        const Vec3 err = target - p;
        out.residual = err.norm();
        if (out.residual < params.tolerance || out.iterations >= params.maxIterations) break;
        const Eigen::MatrixXd j = pointJacobian(tree, out.q, link, pointInLink).topRows(3);
        out.q += dampedLeastSquares(j, err, params.damping, mask);
        tree.clampToLimits(out.q);
        ++out.iterations;
    }
    return out;
}

} // namespace gskit
