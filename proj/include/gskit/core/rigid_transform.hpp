// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gskit {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// Proper rigid motion: rotation (unit quaternion) followed by translation, metric units.
struct RigidTransform {
    Quat rotation = Quat::Identity();
    Vec3 translation = Vec3::Zero();

    static RigidTransform identity() { return {}; }

    static RigidTransform fromTranslation(const Vec3 &t) { return {Quat::Identity(), t}; }

    static RigidTransform fromAxisAngle(const Vec3 &axis, double angle, const Vec3 &t = Vec3::Zero()) {
        return {Quat(Eigen::AngleAxisd(angle, axis.normalized())), t};
    }

    static RigidTransform fromMatrix(const Mat3 &r, const Vec3 &t) {
        Quat q(r);
        q.normalize();
        return {q, t};
    }

    Mat3 rotationMatrix() const { return rotation.toRotationMatrix(); }

    Vec3 apply(const Vec3 &p) const { return rotation * p + translation; }

    Vec3 applyRotation(const Vec3 &v) const { return rotation * v; }

    /// this ∘ other: apply `other` first, then this.
    RigidTransform operator*(const RigidTransform &other) const {
        Quat q = rotation * other.rotation;
        q.normalize();
        return {q, rotation * other.translation + translation};
    }

    /// Exact coefficient equality.
    bool operator==(const RigidTransform &other) const {
        return rotation.coeffs() == other.rotation.coeffs() && translation == other.translation;
    }

    RigidTransform inverse() const {
        const Quat qi = rotation.conjugate();
        return {qi, -(qi * translation)};
    }

    Eigen::Matrix4d matrix() const {
        Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
        m.topLeftCorner<3, 3>() = rotationMatrix();
        m.topRightCorner<3, 1>() = translation;
        return m;
    }

    bool isFinite() const {
        return rotation.coeffs().allFinite() && translation.allFinite();
    }
};

inline double rotationNormError(const RigidTransform &t) { return std::abs(t.rotation.norm() - 1.0); }

/// Angle (radians) of the relative rotation a^-1 b.
inline double rotationDistance(const Quat &a, const Quat &b) {
    const double d = std::abs(a.normalized().dot(b.normalized()));
    return 2.0 * std::acos(std::min(1.0, d));
}

} // namespace gskit
