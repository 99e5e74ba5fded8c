// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gskit/core/rigid_transform.hpp>

#include <cstddef>
#include <span>
#include <vector>

namespace gskit {

/// Number of SH coefficients per color channel for a given degree.
constexpr int shCoeffsPerChannel(int degree) { return (degree + 1) * (degree + 1); }

/// Raw (pre-activation) splat parameters. Opacity is stored as a logit and scale as log-meters,
/// matching the reference PLY convention; activation happens at render time.
///
/// SH coefficients are laid out splat-major, then channel (R, G, B), then coefficient index,
/// with coefficient 0 being the DC term.
struct GaussianSet {
    std::vector<Vec3> centroids;
    std::vector<Quat> rotations;
    std::vector<Vec3> scalesLog;
    std::vector<double> opacitiesLogit;
    int shDegree = 0;
    std::vector<double> shCoeffs;
    int featureDim = 0;
    std::vector<double> features;

    std::size_t size() const { return centroids.size(); }
    bool empty() const { return centroids.empty(); }

    int coeffsPerChannel() const { return shCoeffsPerChannel(shDegree); }

    std::span<const double> sh(std::size_t i) const {
        const std::size_t n = 3 * static_cast<std::size_t>(coeffsPerChannel());
        return {shCoeffs.data() + i * n, n};
    }
    std::span<double> sh(std::size_t i) {
        const std::size_t n = 3 * static_cast<std::size_t>(coeffsPerChannel());
        return {shCoeffs.data() + i * n, n};
    }

    std::span<const double> feature(std::size_t i) const {
        return {features.data() + i * static_cast<std::size_t>(featureDim),
                static_cast<std::size_t>(featureDim)};
    }

    /// Resize every per-splat array to `n` splats with the current degree and feature width.
    void resize(std::size_t n);

    /// Append splat `i` of `other`; degree and feature width must match.
    void append(const GaussianSet &other, std::size_t i);

    /// Throws gskit::Error if array lengths disagree or any invariant is broken.
    void checkInvariants() const;

    /// Heap bytes held by the splat arrays (capacity, not size).
    std::size_t byteSize() const;

    /// Field-by-field exact comparison.
    bool operator==(const GaussianSet &other) const;
};

/// Activated opacity sigmoid(logit).
inline double activateOpacity(double logit) { return 1.0 / (1.0 + std::exp(-logit)); }

/// Covariance R S S^T R^T for splat `i`.
Mat3 splatCovariance(const GaussianSet &set, std::size_t i);

/// Copy the splats whose index appears in `indices`, in that order.
GaussianSet selectSplats(const GaussianSet &set, std::span<const std::size_t> indices);

/// Zero-pad SH coefficients and features up to `shDegree` / `featureDim` (must not shrink).
GaussianSet promoteGaussians(const GaussianSet &set, int shDegree, int featureDim);

/// Concatenate two sets, promoting both to the larger degree and feature width.
GaussianSet concatGaussians(const GaussianSet &a, const GaussianSet &b);

/// Uniformly scale positions and extents by `factor` (> 0).
GaussianSet scaleGaussians(const GaussianSet &set, double factor);

} // namespace gskit
