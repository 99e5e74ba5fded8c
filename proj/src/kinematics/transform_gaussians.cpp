// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gskit/core/error.hpp>
#include <gskit/kinematics/transform_gaussians.hpp>

#include <Eigen/Dense>

namespace gskit {

void
transformGaussiansInto(const GaussianSet &set, const RigidTransform &transform, GaussianSet &out) {
    if (std::abs(transform.rotation.norm() - 1.0) > 1e-9) {
        throw Error("transformGaussians: transform rotation is not unit length");
    }
    out.shDegree = set.shDegree;
    out.featureDim = set.featureDim;
    out.shCoeffs = set.shCoeffs;
    out.features = set.features;
    out.scalesLog = set.scalesLog;
    out.opacitiesLogit = set.opacitiesLogit;
    out.centroids.resize(set.size());
    out.rotations.resize(set.size());
    const Mat3 r = transform.rotationMatrix();
    for (std::size_t i = 0; i < set.size(); ++i) {
        out.centroids[i] = r * set.centroids[i] + transform.translation;
        out.rotations[i] = (transform.rotation * set.rotations[i]).normalized();
    }
}

GaussianSet
transformGaussians(const GaussianSet &set, const RigidTransform &transform) {
    GaussianSet out;
    transformGaussiansInto(set, transform, out);
    return out;
}

} // namespace gskit
