// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gskit/core/rigid_transform.hpp>

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gskit {

/// Rigid mount of a camera on a robot link (wrist cameras).
struct CameraMount {
    int robot = 0;
    std::string link;
    RigidTransform cameraInLink; ///< camera pose expressed in the link frame
};

/// Pinhole camera, OpenCV convention (+x right, +y down, +z forward). Pixel centers sit at
/// integer coordinates.
struct Camera {
    std::string name;
    int width = 1;
    int height = 1;
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    RigidTransform worldToCamera;
    double near = 0.01;
    double far = 100.0;
    std::optional<CameraMount> mount;

    Vec3 center() const { return worldToCamera.inverse().translation; }
    /// Empty when valid, otherwise a description of the first violated invariant.
    std::string invalidReason() const;
};

/// Builds a world-to-camera transform looking from `eye` toward `target`; `up` is the world
/// direction that should appear at the top of the image.
RigidTransform lookAt(const Vec3 &eye, const Vec3 &target, const Vec3 &up);

struct GripperSpec {
    std::string joint;
    double open = 0.0;
    double closed = 0.0;
};

struct RobotEntry {
    std::string name;
    std::string urdf;
    std::string splats;
    RigidTransform baseTransform;   ///< simulation robot frame to reconstruction frame
    std::vector<int> linkLabels;    ///< per splat; -1 for unlabeled (kept as static background)
    std::vector<double> capturedQ;  ///< joint pose recorded at scan time
    std::vector<double> homeQ;      ///< defaults to capturedQ when empty
    std::string eeLink;
    RigidTransform graspOffset;     ///< grasp frame in the end-effector link
    std::optional<GripperSpec> gripper;
};

struct ObjectEntry {
    std::string name;
    std::string splats;
    std::string mesh;
    RigidTransform transform; ///< splat-file frame to object frame
    RigidTransform restPose;  ///< object pose in the captured scene
    double massKg = 1.0;
    bool stackable = false;
    std::string materialsJson = "{}"; ///< opaque, preserved verbatim
};

struct SupportPlane {
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ(); ///< points away from gravity
    std::optional<Eigen::Vector2d> halfExtents;
};

/// In-memory form of a GSDF document. File references are stored as written and resolved
/// against `baseDir`.
struct SceneDescription {
    int version = 1;
    double metricScale = 1.0;
    std::string background;
    std::vector<RobotEntry> robots;
    std::vector<ObjectEntry> objects;
    SupportPlane supportPlane;
    Vec3 gravityDir = -Vec3::UnitZ();
    std::vector<Camera> cameras;

    std::filesystem::path baseDir;

    std::filesystem::path resolve(const std::string &ref) const;
    const Camera *camera(const std::string &name) const;
    int objectIndex(const std::string &name) const;
};

struct ValidationIssue {
    enum class Kind { Value, Reference, Label, Schema };
    Kind kind;
    std::string field;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;

    bool empty() const { return issues.empty(); }
    std::size_t count(ValidationIssue::Kind kind) const;
    std::string toString() const;
};

/// Report every violated invariant and every unresolvable file reference (resolved against
/// `assetRoot`). An empty report means the scene can be loaded.
ValidationReport validateScene(const SceneDescription &scene, const std::filesystem::path &assetRoot);

struct GsdfParseOptions {
    /// Run validateScene after the schema pass and throw if it reports anything.
    bool validate = true;
};

/// Parse a GSDF document. Schema violations always throw SceneError; with `validate` the
/// full ValidationReport is attached to the error message.
SceneDescription parseGsdf(const std::string &text, const std::filesystem::path &baseDir,
                           GsdfParseOptions options = {});
std::string writeGsdf(const SceneDescription &scene);

SceneDescription loadGsdf(const std::filesystem::path &path, GsdfParseOptions options = {});
void saveGsdf(const std::filesystem::path &path, const SceneDescription &scene);

/// 64-bit FNV-1a digest, used for scene and manifest hashes.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hexDigest(std::uint64_t value);

} // namespace gskit
