// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gskit/asset/gaussian_set.hpp>
#include <gskit/asset/kinematic_tree.hpp>
#include <gskit/asset/mesh.hpp>
#include <gskit/asset/scene.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

namespace gskit {

using PointCloud = std::vector<Vec3>;

/// Four marker corners, in order around the square, in reconstruction units.
struct MarkerObservation {
    std::array<Vec3, 4> corners;
    double edgeLengthM = 0.0;
};

/// Parse the sidecar format: four "x y z" lines then "edge_length_m <value>".
MarkerObservation parseMarkerFile(const std::string &text);
MarkerObservation loadMarkerFile(const std::filesystem::path &path);

struct ScaleEstimate {
    double scale = 1.0;          ///< metres per reconstruction unit
    SupportPlane supportPlane;   ///< metric frame (corners multiplied by scale)
    Vec3 gravityDir = -Vec3::UnitZ();
    std::array<double, 4> edgeLengths{}; ///< reconstructed edges, reconstruction units
};

/// Metric scale, support plane and gravity from a marker lying on the support surface.
/// `cloudCentroid` (reconstruction units) decides which side of the plane is "up".
ScaleEstimate estimateScale(const MarkerObservation &marker, const Vec3 &cloudCentroid);

/// Exactly `count` area-weighted uniform samples, deterministic for a given seed.
PointCloud sampleSurfacePoints(const TriangleMesh &mesh, std::size_t count, std::uint64_t seed);

/// Centroids of splats whose activated opacity exceeds `minOpacity`.
PointCloud splatCloud(const GaussianSet &splats, double minOpacity = 0.3);

struct IcpParams {
    int maxIterations = 50;
    double cutoff = 0.05;          ///< correspondence distance limit (metres)
    double convergence = 1e-7;     ///< stop when the rms changes by less than this
};

struct IcpIteration {
    double rmsBefore = 0.0; ///< on this iteration's correspondences, before the fit
    double rmsAfter = 0.0;  ///< same correspondences after the fit
    std::size_t inliers = 0;
};

struct AlignmentResult {
    RigidTransform transform;    ///< maps source into target
    double rmsResidual = 0.0;
    double inlierFraction = 0.0;
    int iterationsUsed = 0;
    std::vector<IcpIteration> history;
};

/// Least-squares rigid fit (Kabsch) of pairs src[i] -> dst[i]; always a proper rotation.
RigidTransform fitRigid(const PointCloud &src, const PointCloud &dst);

AlignmentResult icpAlign(const PointCloud &source, const PointCloud &target, const RigidTransform &init,
                         const IcpParams &params = {});

struct RobotAlignParams {
    std::size_t surfacePoints = 200000;
    std::uint64_t seed = 1;
    /// Cut-offs tried in order, each warm-started from the previous result; the last should
    /// be the fine cut-off.
    std::vector<double> cutoffSchedule = {0.25, 0.1, 0.05};
    int maxIterations = 50;
    double convergence = 1e-7;
};

/// Surface cloud of every link visual at configuration q, in the robot base frame.
PointCloud robotSurfaceCloud(const KinematicTree &tree, const JointConfig &q, std::size_t count,
                             std::uint64_t seed);

/// Rigid transform from the robot base frame into the reconstruction frame, found by ICP
/// between the splat cloud and the robot surface at the captured pose. `init` is a guess of
/// that same transform.
AlignmentResult alignRobot(const PointCloud &sceneCloud, const KinematicTree &tree, const JointConfig &capturedQ,
                           const RigidTransform &init, const RobotAlignParams &params = {});

/// Per-splat link label by k-NN majority vote over posed link clouds; -1 (background) when
/// the nearest link point is further than `cutoff`. Vote ties go to the label with the
/// smallest mean neighbour distance, then the smaller label.
std::vector<int> segmentLinksKnn(const PointCloud &splatCentroids, const std::vector<PointCloud> &linkClouds,
                                 std::size_t k = 5, double cutoff = 0.02);

} // namespace gskit
