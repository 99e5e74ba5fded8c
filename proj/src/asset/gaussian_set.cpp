// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gskit/asset/gaussian_set.hpp>
#include <gskit/core/error.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace gskit {

void
GaussianSet::resize(std::size_t n) {
    centroids.resize(n, Vec3::Zero());
    rotations.resize(n, Quat::Identity());
    scalesLog.resize(n, Vec3::Zero());
    opacitiesLogit.resize(n, 0.0);
    shCoeffs.resize(n * 3 * static_cast<std::size_t>(coeffsPerChannel()), 0.0);
    features.resize(n * static_cast<std::size_t>(featureDim), 0.0);
}

void
GaussianSet::append(const GaussianSet &other, std::size_t i) {
    if (other.shDegree != shDegree || other.featureDim != featureDim) {
        throw Error("GaussianSet::append: degree or feature width mismatch");
    }
    centroids.push_back(other.centroids[i]);
    rotations.push_back(other.rotations[i]);
    scalesLog.push_back(other.scalesLog[i]);
    opacitiesLogit.push_back(other.opacitiesLogit[i]);
    const auto s = other.sh(i);
    shCoeffs.insert(shCoeffs.end(), s.begin(), s.end());
    const auto f = other.feature(i);
    features.insert(features.end(), f.begin(), f.end());
}

void
GaussianSet::checkInvariants() const {
    const std::size_t n = centroids.size();
    if (rotations.size() != n || scalesLog.size() != n || opacitiesLogit.size() != n) {
        throw Error("GaussianSet: per-splat array lengths disagree");
    }
    if (shDegree < 0 || shDegree > 3) {
        throw Error("GaussianSet: SH degree must be in [0, 3], got " + std::to_string(shDegree));
    }
    if (shCoeffs.size() != n * 3 * static_cast<std::size_t>(coeffsPerChannel())) {
        throw Error("GaussianSet: SH coefficient array has wrong length");
    }
    if (featureDim < 0 || features.size() != n * static_cast<std::size_t>(featureDim)) {
        throw Error("GaussianSet: feature array has wrong length");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(rotations[i].norm() - 1.0) > 1e-6) {
            throw Error("GaussianSet: rotation of splat " + std::to_string(i) + " is not unit length");
        }
    }
}

std::size_t
GaussianSet::byteSize() const {
    return centroids.capacity() * sizeof(Vec3) + rotations.capacity() * sizeof(Quat) +
           scalesLog.capacity() * sizeof(Vec3) + opacitiesLogit.capacity() * sizeof(double) +
           shCoeffs.capacity() * sizeof(double) + features.capacity() * sizeof(double);
}

bool
GaussianSet::operator==(const GaussianSet &other) const {
    if (size() != other.size() || shDegree != other.shDegree || featureDim != other.featureDim) {
        return false;
    }
    for (std::size_t i = 0; i < size(); ++i) {
        if (centroids[i] != other.centroids[i] || scalesLog[i] != other.scalesLog[i] ||
            rotations[i].coeffs() != other.rotations[i].coeffs()) {
            return false;
        }
    }
    return opacitiesLogit == other.opacitiesLogit && shCoeffs == other.shCoeffs &&
           features == other.features;
}

Mat3
splatCovariance(const GaussianSet &set, std::size_t i) {
    const Mat3 r = set.rotations[i].normalized().toRotationMatrix();
    const Vec3 s = set.scalesLog[i].array().exp();
    const Mat3 m = r * s.asDiagonal();
    return m * m.transpose();
}

GaussianSet
selectSplats(const GaussianSet &set, std::span<const std::size_t> indices) {
    GaussianSet out;
    out.shDegree = set.shDegree;
    out.featureDim = set.featureDim;
    out.centroids.reserve(indices.size());
    out.rotations.reserve(indices.size());
    out.scalesLog.reserve(indices.size());
    out.opacitiesLogit.reserve(indices.size());
    out.shCoeffs.reserve(indices.size() * 3 * static_cast<std::size_t>(set.coeffsPerChannel()));
    out.features.reserve(indices.size() * static_cast<std::size_t>(set.featureDim));
    for (const std::size_t i : indices) {
        out.append(set, i);
    }
    return out;
}

GaussianSet
promoteGaussians(const GaussianSet &set, int shDegree, int featureDim) {
    if (shDegree < set.shDegree || featureDim < set.featureDim) {
        throw Error("promoteGaussians: cannot reduce SH degree or feature width");
    }
    if (shDegree == set.shDegree && featureDim == set.featureDim) {
        return set;
    }
    GaussianSet out = set;
    out.shDegree = shDegree;
    out.featureDim = featureDim;
    const int kIn = set.coeffsPerChannel();
    const int kOut = out.coeffsPerChannel();
    out.shCoeffs.assign(set.size() * 3 * static_cast<std::size_t>(kOut), 0.0);
    out.features.assign(set.size() * static_cast<std::size_t>(featureDim), 0.0);
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto src = set.sh(i);
        auto dst = out.sh(i);
        for (int c = 0; c < 3; ++c) {
            for (int k = 0; k < kIn; ++k) {
                dst[static_cast<std::size_t>(c * kOut + k)] = src[static_cast<std::size_t>(c * kIn + k)];
            }
        }
        const auto f = set.feature(i);
        std::copy(f.begin(), f.end(), out.features.begin() + static_cast<std::ptrdiff_t>(i * static_cast<std::size_t>(featureDim)));
    }
    return out;
}

GaussianSet
concatGaussians(const GaussianSet &a, const GaussianSet &b) {
    const int degree = std::max(a.shDegree, b.shDegree);
    const int width = std::max(a.featureDim, b.featureDim);
    GaussianSet out = promoteGaussians(a, degree, width);
    const GaussianSet tail = promoteGaussians(b, degree, width);
    for (std::size_t i = 0; i < tail.size(); ++i) {
        out.append(tail, i);
    }
    return out;
}

GaussianSet
scaleGaussians(const GaussianSet &set, double factor) {
    if (!(factor > 0.0) || !std::isfinite(factor)) {
        throw Error("scaleGaussians: factor must be positive and finite");
    }
    GaussianSet out = set;
    const double logFactor = std::log(factor);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.centroids[i] *= factor;
        out.scalesLog[i].array() += logFactor;
    }
    return out;
}

} // namespace gskit
