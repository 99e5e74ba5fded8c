// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gskit/asset/gaussian_set.hpp>
#include <gskit/core/rigid_transform.hpp>

namespace gskit {

/// Rigidly move a splat set: centroids c -> R c + t, rotations q -> q_T * q (renormalized).
/// Scales, opacities, SH coefficients and features are copied unchanged; view-dependent color
/// is corrected at evaluation time by back-rotating the view direction.
///
/// Throws gskit::Error if the transform's quaternion deviates from unit length by > 1e-9.
GaussianSet transformGaussians(const GaussianSet &set, const RigidTransform &transform);

/// In-place variant writing into `out` (resized as needed); avoids reallocation in hot loops.
void transformGaussiansInto(const GaussianSet &set, const RigidTransform &transform, GaussianSet &out);

} // namespace gskit
