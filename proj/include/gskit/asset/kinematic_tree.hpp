// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gskit/asset/mesh.hpp>
#include <gskit/core/rigid_transform.hpp>

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gskit {

/// One scalar per non-fixed joint, in joint (topological) order. Radians or meters.
using JointConfig = Eigen::VectorXd;

enum class JointType { Revolute, Prismatic, Fixed };

const char *toString(JointType type);

struct Geometry {
    enum class Kind { Mesh, Box, Cylinder, Sphere };
    Kind kind = Kind::Box;
    std::string meshFile; ///< as written in the document
    std::filesystem::path meshPath; ///< resolved against the document directory
    Vec3 meshScale = Vec3::Ones();
    Vec3 boxSize = Vec3::Zero();
    double radius = 0.0;
    double length = 0.0;
    RigidTransform origin; ///< geometry frame in the link frame
};

struct Link {
    std::string name;
    std::optional<Geometry> visual;
    std::optional<Geometry> collision;
};

struct Joint {
    std::string name;
    std::string parent;
    std::string child;
    JointType type = JointType::Fixed;
    RigidTransform origin; ///< child frame in the parent frame at zero motion
    Vec3 axis = Vec3::UnitX();
    double lower = 0.0;
    double upper = 0.0;
    double velocity = 0.0; ///< 0 when unspecified
    int parentLink = -1;   ///< index into KinematicTree::links
};

/// Rooted kinematic tree. Links are stored root-first; `joints[i]` always has
/// `links[i + 1]` as its child, so link order equals joint topological order.
struct KinematicTree {
    std::string name;
    std::vector<Link> links;
    std::vector<Joint> joints;

    const std::string &root() const { return links.front().name; }
    std::size_t dof() const { return dofJoints.size(); }

    int linkIndex(const std::string &name) const;
    int jointIndex(const std::string &name) const;
    /// Position of joint `j` in a JointConfig, or -1 for fixed joints.
    int dofIndex(int joint) const { return jointDof[static_cast<std::size_t>(joint)]; }
    int dofIndex(const std::string &jointName) const;

    JointConfig lowerLimits() const;
    JointConfig upperLimits() const;
    JointConfig velocityLimits(double fallback) const;

    /// Clamp into [lower, upper]; returns how many entries moved.
    int clampToLimits(JointConfig &q) const;

    /// Rebuild derived indices after editing links/joints; validates the tree.
    void finalize();

    std::vector<int> dofJoints; ///< joint index for each dof
    std::vector<int> jointDof;  ///< dof index for each joint (-1 for fixed)
};

/// Parse the accepted URDF subset: revolute, prismatic and fixed joints; a single root;
/// no mimic joints and no transmissions. Mesh references resolve against `baseDir`.
KinematicTree parseKinematicTree(const std::string &text, const std::filesystem::path &baseDir = {});
KinematicTree loadKinematicTree(const std::filesystem::path &path);

/// Geometry as a triangle soup in the link frame.
TriangleMesh geometryMesh(const Geometry &geometry);

} // namespace gskit
