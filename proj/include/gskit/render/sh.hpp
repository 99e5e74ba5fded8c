// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gskit/core/rigid_transform.hpp>

#include <span>

namespace gskit {

/// Highest supported spherical-harmonic degree.
inline constexpr int kMaxShDegree = 3;

/// Real SH basis values Y_k(dir) for k < (degree+1)^2, in the ordering and sign convention
/// used by common splatting asset tools. `dir` must be unit length.
void shBasis(int degree, const Vec3 &dir, std::span<double> out);

/// Colour of one splat seen along `dir`. `coeffs` is channel-major: coeffs[c*K + k].
/// Returns sum_k Y_k(dir) coeffs + 0.5 clamped to [0, 1].
Vec3 evaluateSh(int degree, std::span<const double> coeffs, const Vec3 &dir);

} // namespace gskit
