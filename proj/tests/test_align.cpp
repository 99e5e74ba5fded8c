// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include "test_util.hpp"

#include <gskit/align/align.hpp>
#include <gskit/core/error.hpp>
#include <gskit/kinematics/forward_kinematics.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace gskit;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

MarkerObservation
squareMarker(double edge, double edgeMetres, const RigidTransform &pose = {}) {
    MarkerObservation m;
    m.corners = {pose.apply(Vec3(0, 0, 0)), pose.apply(Vec3(edge, 0, 0)), pose.apply(Vec3(edge, edge, 0)),
                 pose.apply(Vec3(0, edge, 0))};
    m.edgeLengthM = edgeMetres;
    return m;
}

PointCloud
transformed(const PointCloud &c, const RigidTransform &t) {
    PointCloud out;
    for (const auto &p : c) out.push_back(t.apply(p));
    return out;
}

} // namespace

TEST(EstimateScale, RatioDefinition) {
    const ScaleEstimate s = estimateScale(squareMarker(0.2, 0.1), Vec3(0.1, 0.1, 1.0));
    EXPECT_NEAR(s.scale, 0.5, 1e-15);
    EXPECT_NEAR(s.gravityDir.z(), -1.0, 1e-12);
    EXPECT_NEAR(s.supportPlane.normal.z(), 1.0, 1e-12);
    EXPECT_NEAR(s.supportPlane.point.x(), 0.05, 1e-12);
}

TEST(EstimateScale, GravityPointsAwayFromScene) {
    const ScaleEstimate s = estimateScale(squareMarker(0.2, 0.1), Vec3(0.1, 0.1, -3.0));
    EXPECT_NEAR(s.gravityDir.z(), 1.0, 1e-12);
}

TEST(EstimateScale, HomogeneityIsExactForPowersOfTwo) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        const RigidTransform pose{test::randomRotation(rng), Vec3(u(rng), u(rng), u(rng))};
        MarkerObservation m = squareMarker(0.1 + 0.1 * std::abs(u(rng)), 0.1, pose);
        const double base = estimateScale(m, Vec3::Zero()).scale;
        for (int e : {-3, -1, 1, 4}) {
            const double s = std::ldexp(1.0, e);
            MarkerObservation scaled = m;
            for (auto &c : scaled.corners) c *= s;
            EXPECT_EQ(estimateScale(scaled, Vec3::Zero()).scale, base / s);
        }
    }
}

TEST(EstimateScale, NoiseFreeArbitraryPose) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 20; ++t) {
        const RigidTransform pose{test::randomRotation(rng), Vec3(0.3, -0.2, 1.0)};
        const ScaleEstimate s = estimateScale(squareMarker(0.37, 0.1, pose), Vec3::Zero());
        EXPECT_LE(std::abs(s.scale / (0.1 / 0.37) - 1.0), 1e-6);
    }
}

TEST(EstimateScale, TwoMillimetreNoiseMonteCarlo) {
    // Reconstruction at half metric scale: the true scale factor is 2.
    std::normal_distribution<double> noise(0.0, 0.002 / 2.0);
    double sumRel = 0.0, maxRel = 0.0;
    for (int seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
        MarkerObservation m = squareMarker(0.05, 0.1, {test::randomRotation(rng), Vec3(0.1, 0.2, 0.3)});
        for (auto &c : m.corners) c += Vec3(noise(rng), noise(rng), noise(rng));
        const double rel = estimateScale(m, Vec3::Zero()).scale / 2.0 - 1.0;
        sumRel += rel;
        maxRel = std::max(maxRel, std::abs(rel));
    }
    EXPECT_LT(std::abs(sumRel / 100.0), 0.01);
    RecordProperty("max_abs_relative_error", std::to_string(maxRel));
}

TEST(EstimateScale, Errors) {
    MarkerObservation m = squareMarker(0.2, 0.1);
    m.corners[3] = m.corners[0];
    EXPECT_THROW(estimateScale(m, Vec3::Zero()), AlignmentError);
    MarkerObservation line;
    line.corners = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0), Vec3(3, 0, 0)};
    line.edgeLengthM = 0.1;
    EXPECT_THROW(estimateScale(line, Vec3::Zero()), AlignmentError);
    MarkerObservation rect;
    rect.corners = {Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(2, 1, 0), Vec3(0, 1, 0)};
    rect.edgeLengthM = 0.1;
    EXPECT_THROW(estimateScale(rect, Vec3::Zero()), AlignmentError);
}

TEST(MarkerFile, ParsesAndRejects) {
    const auto m = parseMarkerFile("# corners\n0 0 0\n0.2 0 0\n0.2 0.2 0\n0 0.2 0\nedge_length_m 0.1\n");
    EXPECT_EQ(m.corners[2], Vec3(0.2, 0.2, 0));
    EXPECT_EQ(m.edgeLengthM, 0.1);
    EXPECT_THROW(parseMarkerFile("0 0 0\n1 0 0\n1 1 0\nedge_length_m 0.1\n"), AlignmentError);
    EXPECT_THROW(parseMarkerFile("0 0 0\n1 0 0\n1 1 0\n0 1\nedge_length_m 0.1\n"), AlignmentError);
    EXPECT_THROW(parseMarkerFile("0 0 0\n1 0 0\n1 1 0\n0 1 0\n"), AlignmentError);
}

TEST(SampleSurface, InsideSingleTriangle) {
    TriangleMesh tri;
    tri.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 2, 0)};
    tri.faces = {{0, 1, 2}};
    const PointCloud pts = sampleSurfacePoints(tri, 1000, 7);
    ASSERT_EQ(pts.size(), 1000u);
    for (const auto &p : pts) {
        // Barycentric coordinates of p with respect to the triangle.
        const double b1 = p.x(), b2 = p.y() / 2.0;
        EXPECT_GE(b1, -1e-12);
        EXPECT_GE(b2, -1e-12);
        EXPECT_LE(b1 + b2, 1.0 + 1e-12);
        EXPECT_EQ(p.z(), 0.0);
    }
    EXPECT_EQ(sampleSurfacePoints(tri, 50, 9), sampleSurfacePoints(tri, 50, 9));
}

TEST(SampleSurface, QuadrantCountsAreBinomial) {
    TriangleMesh sq;
    sq.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(0, 1, 0)};
    sq.faces = {{0, 1, 2}, {0, 2, 3}};
    const PointCloud pts = sampleSurfacePoints(sq, 10000, 3);
    int counts[4] = {};
    for (const auto &p : pts) counts[(p.x() >= 0.5 ? 1 : 0) + (p.y() >= 0.5 ? 2 : 0)]++;
    const double sigma = std::sqrt(10000 * 0.25 * 0.75);
    for (int c : counts) EXPECT_LE(std::abs(c - 2500), 3 * sigma);
}

TEST(SampleSurface, AreaWeighting) {
    TriangleMesh two;
    two.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(5, 0, 0), Vec3(8, 0, 0), Vec3(5, 1, 0)};
    two.faces = {{0, 1, 2}, {3, 4, 5}};
    const PointCloud pts = sampleSurfacePoints(two, 20000, 4);
    int small = 0;
    for (const auto &p : pts) small += p.x() < 2.0 ? 1 : 0;
    const double sigma = std::sqrt(20000 * 0.25 * 0.75);
    EXPECT_LE(std::abs(small - 5000), 3 * sigma);
    EXPECT_THROW(sampleSurfacePoints(TriangleMesh{}, 10, 1), AlignmentError);
}

TEST(FitRigid, ProperRotationEvenForMirroredInput) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n01;
    PointCloud a, b;
    for (int i = 0; i < 50; ++i) {
        a.emplace_back(n01(rng), n01(rng), n01(rng));
        b.emplace_back(a.back().x(), a.back().y(), -a.back().z());
    }
    const RigidTransform t = fitRigid(a, b);
    EXPECT_NEAR(t.rotationMatrix().determinant(), 1.0, 1e-9);
}

TEST(Icp, IdentityFixpoint) {
    const PointCloud cloud = test::asymmetricCloud(2000, 1);
    const AlignmentResult r = icpAlign(cloud, cloud, RigidTransform::identity());
    EXPECT_LE(r.transform.translation.norm(), 1e-9);
    EXPECT_LE(test::rotationErrorDeg(r.transform.rotation, Quat::Identity()) * kDeg, 1e-9);
    EXPECT_LE(r.rmsResidual, 1e-12);
    EXPECT_EQ(r.inlierFraction, 1.0);
}

TEST(Icp, RecoversBoundedMotions) {
    IcpParams params;
    params.cutoff = 1.0;
    params.maxIterations = 200;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        std::mt19937_64 rng(seed);
        const PointCloud src = test::asymmetricCloud(2000, seed + 100);
        const RigidTransform truth = test::randomBoundedTransform(rng, 30 * kDeg, 0.2);
        const AlignmentResult r = icpAlign(src, transformed(src, truth), RigidTransform::identity(), params);
        EXPECT_LT(test::rotationErrorDeg(r.transform.rotation, truth.rotation), 0.5) << "seed " << seed;
        EXPECT_LT((r.transform.translation - truth.translation).norm(), 0.002) << "seed " << seed;
        EXPECT_NEAR(r.transform.rotationMatrix().determinant(), 1.0, 1e-9);
        for (const auto &it : r.history) EXPECT_LE(it.rmsAfter, it.rmsBefore * (1 + 1e-9) + 1e-15);
    }
}

TEST(Icp, ResidualTracksNoise) {
    IcpParams params;
    params.cutoff = 1.0;
    params.maxIterations = 200;
    std::mt19937_64 rng(77);
    std::normal_distribution<double> noise(0.0, 0.001);
    const PointCloud src = test::asymmetricCloud(2000, 5);
    const RigidTransform truth = test::randomBoundedTransform(rng, 30 * kDeg, 0.2);
    PointCloud dst = transformed(src, truth);
    for (auto &p : dst) p += Vec3(noise(rng), noise(rng), noise(rng));
    const AlignmentResult r = icpAlign(src, dst, RigidTransform::identity(), params);
    // Per-point 3-D noise of 1 mm per axis: the residual lands between 0.5 and 2 mm.
    EXPECT_GT(r.rmsResidual, 0.0005);
    EXPECT_LT(r.rmsResidual, 0.002);
}

TEST(Icp, Errors) {
    const PointCloud cloud = test::asymmetricCloud(200, 1);
    const PointCloud line = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0), Vec3(3, 0, 0)};
    EXPECT_THROW(icpAlign(line, cloud, {}), AlignmentError);
    EXPECT_THROW(icpAlign(cloud, line, {}), AlignmentError);
    EXPECT_THROW(icpAlign(cloud, cloud, RigidTransform::fromTranslation(Vec3(10, 0, 0))), AlignmentError);
}

TEST(AlignRobot, RecoversSyntheticTwin) {
    const KinematicTree tree = parseKinematicTree(R"(<robot name="arm">
  <link name="base"><visual><geometry><box size="0.2 0.2 0.1"/></geometry></visual></link>
  <link name="upper"><visual><origin xyz="0.15 0 0" rpy="0 0 0"/><geometry><box size="0.3 0.06 0.06"/></geometry></visual></link>
  <link name="fore"><visual><origin xyz="0.1 0 0" rpy="0 1.5708 0"/><geometry><cylinder radius="0.03" length="0.2"/></geometry></visual></link>
  <joint name="j1" type="revolute"><parent link="base"/><child link="upper"/><origin xyz="0 0 0.08" rpy="0 0 0"/><axis xyz="0 0 1"/><limit lower="-3" upper="3" effort="1" velocity="1"/></joint>
  <joint name="j2" type="revolute"><parent link="upper"/><child link="fore"/><origin xyz="0.3 0 0" rpy="0 0 0"/><axis xyz="0 1 0"/><limit lower="-3" upper="3" effort="1" velocity="1"/></joint>
</robot>)");
    JointConfig q(2);
    q << 0.6, -0.4;
    const RigidTransform truth = RigidTransform::fromAxisAngle(Vec3(0.2, 0.1, 1), 0.7, Vec3(0.4, -0.3, 0.8));
    const PointCloud scene = transformed(robotSurfaceCloud(tree, q, 4000, 99), truth);

    RobotAlignParams params;
    params.surfacePoints = 100000;
    const RigidTransform offset = RigidTransform::fromAxisAngle(Vec3(1, -1, 0.5), 15 * kDeg, Vec3(0.06, -0.06, 0.05));
    ASSERT_NEAR(offset.translation.norm(), 0.0994, 1e-3);
    for (const RigidTransform &init : {truth, truth * offset, offset * truth}) {
        const AlignmentResult r = alignRobot(scene, tree, q, init, params);
        EXPECT_LT((r.transform.translation - truth.translation).norm(), 1e-3);
        EXPECT_LT(test::rotationErrorDeg(r.transform.rotation, truth.rotation), 0.1);
    }
    EXPECT_THROW(alignRobot({}, tree, q, truth, params), AlignmentError);
}

TEST(Segmentation, TrivialCases) {
    const std::vector<PointCloud> links = {{Vec3(0, 0, 0), Vec3(0.1, 0, 0)}, {Vec3(0, 0, 1)}};
    const auto labels = segmentLinksKnn({Vec3(0, 0, 1), Vec3(0.1, 0, 0), Vec3(5, 5, 5)}, links, 1, 0.02);
    EXPECT_EQ(labels, (std::vector<int>{1, 0, -1}));
    EXPECT_THROW(segmentLinksKnn({Vec3::Zero()}, {{}, {}}), AlignmentError);
    EXPECT_THROW(segmentLinksKnn({Vec3::Zero()}, links, 0), AlignmentError);
}

TEST(Segmentation, TieBreaksOnMeanDistance) {
    // k = 2 with one neighbour from each link: the closer link wins.
    const std::vector<PointCloud> links = {{Vec3(0.010, 0, 0)}, {Vec3(-0.005, 0, 0)}};
    EXPECT_EQ(segmentLinksKnn({Vec3::Zero()}, links, 2, 0.02), std::vector<int>{1});
}

TEST(Segmentation, TwoParallelSurfaces) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    std::normal_distribution<double> noise(0.0, 0.001);
    std::vector<PointCloud> links(2);
    for (int i = 0; i < 4000; ++i) {
        links[0].emplace_back(u(rng), u(rng), 0.0);
        links[1].emplace_back(u(rng), u(rng), 0.05);
    }
    PointCloud splats;
    std::vector<int> truth;
    for (int i = 0; i < 2000; ++i) {
        const int l = i % 2;
        splats.emplace_back(u(rng) + noise(rng), u(rng) + noise(rng), 0.05 * l + noise(rng));
        truth.push_back(l);
    }
    const auto labels = segmentLinksKnn(splats, links);
    int correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) correct += labels[i] == truth[i] ? 1 : 0;
    EXPECT_GE(correct, 1980);
}
