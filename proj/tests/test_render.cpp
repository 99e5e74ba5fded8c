// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include "test_util.hpp"

#include <gskit/asset/splat_file.hpp>
#include <gskit/core/error.hpp>
#include <gskit/kinematics/transform_gaussians.hpp>
#include <gskit/render/image_io.hpp>
#include <gskit/render/rasterizer.hpp>
#include <gskit/render/sh.hpp>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <array>
#include <numbers>

using namespace gskit;

namespace {

GaussianSet
singleSplat(const Vec3 &center, double sigma, double opacity, const Vec3 &rgb) {
    GaussianSet set;
    set.resize(1);
    set.centroids[0] = center;
    set.scalesLog[0] = Vec3::Constant(std::log(sigma));
    set.opacitiesLogit[0] = std::log(opacity / (1.0 - opacity));
    for (int c = 0; c < 3; ++c) set.shCoeffs[static_cast<std::size_t>(c)] = (rgb[c] - 0.5) / 0.28209479177387814;
    return set;
}

Vec3
randomUnit(std::mt19937_64 &rng) {
    std::normal_distribution<double> n;
    return Vec3(n(rng), n(rng), n(rng)).normalized();
}

float
maxAbsDiff(const std::vector<float> &a, const std::vector<float> &b) {
    float m = 0.0f;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace

TEST(SphericalHarmonics, BasisMatchesLegendreOracle)
{
    std::mt19937_64 rng(1);
    std::array<double, 16> basis{};
    for (int trial = 0; trial < 500; ++trial) {
        const Vec3 d = randomUnit(rng);
        shBasis(3, d, basis);
        for (int l = 0; l <= 3; ++l) {
            for (int m = -l; m <= l; ++m) {
                EXPECT_NEAR(basis[static_cast<std::size_t>(l * l + l + m)], test::realSphericalHarmonic(l, m, d), 1e-12)
                    << "l=" << l << " m=" << m;
            }
        }
    }
}

TEST(SphericalHarmonics, DcTermAndZeroCoefficients)
{
    const double y00 = 1.0 / (2.0 * std::sqrt(std::numbers::pi));
    std::vector<double> coeffs = {0.3, -0.2, 1.1};
    const Vec3 rgb = evaluateSh(0, coeffs, Vec3::UnitX());
    EXPECT_NEAR(rgb.x(), y00 * 0.3 + 0.5, 1e-15);
    EXPECT_NEAR(rgb.y(), y00 * -0.2 + 0.5, 1e-15);
    EXPECT_DOUBLE_EQ(rgb.z(), std::min(1.0, y00 * 1.1 + 0.5));
    std::vector<double> zeros(48, 0.0);
    EXPECT_EQ(evaluateSh(3, zeros, Vec3::UnitY()), Vec3::Constant(0.5));
}

TEST(SphericalHarmonics, DegreeOneParity)
{
    std::vector<double> coeffs(12, 0.0);
    for (int c = 0; c < 3; ++c) coeffs[static_cast<std::size_t>(4 * c + 2)] = 0.4; // the z-aligned term
    const Vec3 up = evaluateSh(1, coeffs, Vec3::UnitZ());
    const Vec3 down = evaluateSh(1, coeffs, -Vec3::UnitZ());
    EXPECT_NEAR(up.x() - 0.5, 0.5 - down.x(), 1e-15);
    EXPECT_GT(up.x(), 0.5);
}

TEST(Projection, IsotropicOnAxis)
{
    const Camera cam = test::axisCamera(64, 64, 80.0);
    for (double z : {1.0, 2.0, 4.0}) {
        const double sigma = 0.05;
        const auto s = projectGaussian(singleSplat(Vec3(0, 0, z), sigma, 0.5, Vec3::Constant(0.5)), 0, cam);
        ASSERT_TRUE(s);
        const double expected = std::pow(80.0 * sigma / z, 2) + 0.3;
        EXPECT_NEAR(s->cov(0, 0), expected, 1e-9);
        EXPECT_NEAR(s->cov(1, 1), expected, 1e-9);
        EXPECT_NEAR(s->cov(0, 1), 0.0, 1e-12);
        EXPECT_FLOAT_EQ(s->depth, static_cast<float>(z));
    }
}

TEST(Projection, DoublingDepthHalvesFootprint)
{
    const Camera cam = test::axisCamera(64, 64, 70.0);
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        GaussianSet set = test::randomGaussians(rng, 1, 0);
        const Vec3 p(0.3 * std::uniform_real_distribution<double>(-1, 1)(rng), 0.2, 2.0);
        set.centroids[0] = p;
        GaussianSet far = set;
        far.centroids[0] = 2.0 * p; // same ray, twice the depth
        const auto a = projectGaussian(set, 0, cam);
        const auto b = projectGaussian(far, 0, cam);
        ASSERT_TRUE(a && b);
        const Eigen::Matrix2d ca = a->cov - 0.3 * Eigen::Matrix2d::Identity();
        const Eigen::Matrix2d cb = b->cov - 0.3 * Eigen::Matrix2d::Identity();
        EXPECT_LE((cb * 4.0 - ca).cwiseAbs().maxCoeff(), 1e-9 * (1.0 + ca.norm()));
    }
}

TEST(Projection, Culling)
{
    const Camera cam = test::axisCamera(64, 64, 80.0);
    EXPECT_FALSE(projectGaussian(singleSplat(Vec3(0, 0, -1), 0.05, 0.5, Vec3::Zero()), 0, cam));
    EXPECT_FALSE(projectGaussian(singleSplat(Vec3(0, 0, 0.05), 0.05, 0.5, Vec3::Zero()), 0, cam));
    EXPECT_FALSE(projectGaussian(singleSplat(Vec3(0, 0, 60), 0.05, 0.5, Vec3::Zero()), 0, cam));
    EXPECT_FALSE(projectGaussian(singleSplat(Vec3(5, 0, 2), 0.01, 0.5, Vec3::Zero()), 0, cam));
    EXPECT_TRUE(projectGaussian(singleSplat(Vec3(0.42, 0, 1), 0.01, 0.5, Vec3::Zero()), 0, cam));
}

TEST(Rasterize, EmptySceneIsBackground)
{
    const Camera cam = test::axisCamera(20, 10, 30.0);
    const Vec3 bg(0.1, 0.2, 0.3);
    const RenderOutput out = rasterize(std::span<const SplatGroup>{}, cam, bg);
    for (int y = 0; y < 10; ++y) {
        for (int x = 0; x < 20; ++x) {
            EXPECT_EQ(out.pixel(x, y), bg.cast<float>());
        }
    }
    for (float a : out.alpha) EXPECT_EQ(a, 0.0f);
    for (float d : out.depth) EXPECT_EQ(d, 0.0f);
}

TEST(Rasterize, SingleSplatCenteredOnPixel)
{
    // Focal 64 with cx = 31.5 puts a splat at x = 0.5/64 m on pixel 32.
    const Camera cam = test::axisCamera(64, 64, 64.0);
    for (double a : {0.3, 0.7, 0.999}) {
        const Vec3 rgb(0.8, 0.4, 0.1);
        const GaussianSet set = singleSplat(Vec3(0.5 / 64.0, 0.5 / 64.0, 1.0), 0.02, a, rgb);
        const SplatGroup group{&set};
        const RenderOutput out = rasterize(std::span(&group, 1), cam, Vec3::Zero());
        const ProjectedScene proj = projectScene(std::span(&group, 1), cam);
        ASSERT_EQ(proj.splats.size(), 1u);
        const float alpha = std::min(0.99f, static_cast<float>(activateOpacity(set.opacitiesLogit[0])));
        for (int c = 0; c < 3; ++c) {
            EXPECT_EQ(out.pixel(32, 32)[c], proj.splats[0].color[static_cast<std::size_t>(c)] * alpha);
            EXPECT_NEAR(out.pixel(32, 32)[c], std::min(0.99, a) * rgb[c], 1e-6);
        }
        EXPECT_EQ(out.alpha[32 * 64 + 32], alpha);
        EXPECT_FLOAT_EQ(out.depth[32 * 64 + 32], 1.0f);
    }
}

TEST(Rasterize, OpaqueSplatSaturatesAtClamp)
{
    const Camera cam = test::axisCamera(32, 32, 32.0);
    const GaussianSet set = singleSplat(Vec3(0, 0, 1), 5.0, 0.9999, Vec3::Constant(1.0));
    const SplatGroup group{&set};
    const RenderOutput out = referenceRasterize(std::span(&group, 1), cam, Vec3::Zero());
    EXPECT_NEAR(out.alpha[16 * 32 + 16], 0.99f, 1e-6);
}

TEST(Rasterize, MatchesReferenceAndIsDeterministic)
{
    std::mt19937_64 rng(42);
    const Camera cam = test::axisCamera(64, 64, 60.0);
    const Vec3 bg(0.2, 0.3, 0.4);
    for (int scene = 0; scene < 20; ++scene) {
        const GaussianSet set = test::randomRenderScene(rng, 500);
        const SplatGroup group{&set};
        const ProjectedScene proj = projectScene(std::span(&group, 1), cam);
        const RenderOutput tiled = rasterize(proj, bg);
        const RenderOutput reference = referenceRasterize(proj, bg);
        EXPECT_LE(maxAbsDiff(tiled.color, reference.color), 1e-5f);
        EXPECT_LE(maxAbsDiff(tiled.feature, reference.feature), 1e-5f);
        EXPECT_LE(maxAbsDiff(tiled.alpha, reference.alpha), 1e-5f);
        RenderOptions threaded;
        threaded.threads = 4;
        EXPECT_TRUE(rasterize(proj, bg, threaded) == tiled);
        EXPECT_TRUE(rasterize(proj, bg) == tiled);
    }
}

TEST(Rasterize, CompositingInvariants)
{
    std::mt19937_64 rng(8);
    const Camera cam = test::axisCamera(32, 32, 30.0);
    for (int scene = 0; scene < 5; ++scene) {
        const GaussianSet set = test::randomRenderScene(rng, 400);
        const SplatGroup group{&set};
        const ProjectedScene proj = projectScene(std::span(&group, 1), cam);
        for (const auto &s : proj.splats) {
            EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(s.cov).eigenvalues().minCoeff(), 0.3 - 1e-9);
        }
        const RenderOutput out = rasterize(proj, Vec3::Zero());
        for (int y = 0; y < 32; ++y) {
            for (int x = 0; x < 32; ++x) {
                const auto trace = pixelTransmittance(proj, x, y);
                for (std::size_t k = 1; k < trace.size(); ++k) EXPECT_LE(trace[k], trace[k - 1]);
                const float a = out.alpha[static_cast<std::size_t>(y * 32 + x)];
                EXPECT_GE(a, 0.0f);
                EXPECT_LE(a, 1.0f);
                EXPECT_NEAR(a, 1.0f - trace.back(), 1e-5f);
            }
        }
    }
}

TEST(Rasterize, EqualDepthDisjointPermutation)
{
    const Camera cam = test::axisCamera(64, 64, 64.0);
    GaussianSet a = singleSplat(Vec3(-0.2, 0, 1), 0.02, 0.8, Vec3(1, 0, 0));
    const GaussianSet b = singleSplat(Vec3(0.2, 0, 1), 0.02, 0.8, Vec3(0, 1, 0));
    GaussianSet ab = concatGaussians(a, b);
    GaussianSet ba = concatGaussians(b, a);
    const SplatGroup g1{&ab}, g2{&ba};
    EXPECT_TRUE(rasterize(std::span(&g1, 1), cam, Vec3::Zero()) == rasterize(std::span(&g2, 1), cam, Vec3::Zero()));
}

TEST(Rasterize, CullingIsSound)
{
    const Camera cam = test::axisCamera(32, 32, 32.0);
    std::mt19937_64 rng(4);
    GaussianSet set = test::randomRenderScene(rng, 50);
    // A splat far outside the frame but in front of the camera.
    const GaussianSet outside = singleSplat(Vec3(3.0, 0.0, 1.0), 0.01, 0.9, Vec3::Ones());
    const GaussianSet with = concatGaussians(set, outside);
    const SplatGroup g1{&set}, g2{&with};
    const RenderOutput r1 = rasterize(std::span(&g1, 1), cam, Vec3::Zero());
    const RenderOutput r2 = rasterize(std::span(&g2, 1), cam, Vec3::Zero());
    EXPECT_LE(maxAbsDiff(r1.color, r2.color), 1.0f / 255.0f);
}

TEST(Rasterize, RejectsNonFiniteInputNamingSplat)
{
    const Camera cam = test::axisCamera(16, 16, 16.0);
    std::mt19937_64 rng(4);
    GaussianSet a = test::randomRenderScene(rng, 10);
    GaussianSet b = test::randomRenderScene(rng, 10);
    b.opacitiesLogit[2] = std::nan("");
    b.shDegree = a.shDegree;
    b.featureDim = a.featureDim;
    b = promoteGaussians(b, a.shDegree, a.featureDim);
    const SplatGroup groups[] = {{&a}, {&b}};
    try {
        rasterize(groups, cam, Vec3::Zero());
        FAIL();
    } catch (const Error &e) {
        EXPECT_NE(std::string(e.what()).find("splat " + std::to_string(a.size() + 2)), std::string::npos) << e.what();
    }
}

TEST(Rasterize, ViewDependentColourFollowsRigidMotion)
{
    // Moving both the scene and the camera by the same rigid transform, with the SH frame
    // carried along, must not change the image.
    std::mt19937_64 rng(12);
    const Camera cam = test::axisCamera(48, 48, 50.0);
    GaussianSet set = test::randomRenderScene(rng, 200);
    set = promoteGaussians(set, 3, set.featureDim);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    for (auto &c : set.shCoeffs) c = u(rng);
    const RigidTransform motion{test::randomRotation(rng), Vec3(0.3, -0.2, 1.0)};
    const GaussianSet moved = transformGaussians(set, motion);
    Camera movedCam = cam;
    movedCam.worldToCamera = cam.worldToCamera * motion.inverse();
    const SplatGroup g1{&set};
    const SplatGroup g2{&moved, motion.rotation};
    const RenderOutput a = rasterize(std::span(&g1, 1), cam, Vec3::Zero());
    const RenderOutput b = rasterize(std::span(&g2, 1), movedCam, Vec3::Zero());
    EXPECT_LE(maxAbsDiff(a.color, b.color), 2e-4f);
}

TEST(ImageIo, PngAndFloatRoundTrip)
{
    const auto dir = test::scratchDir("image_io");
    std::vector<std::uint8_t> rgb(7 * 5 * 3);
    for (std::size_t i = 0; i < rgb.size(); ++i) rgb[i] = static_cast<std::uint8_t>(i * 13);
    writePng(dir / "a.png", rgb, 7, 5);
    const Rgb8Image back = readPng(dir / "a.png");
    EXPECT_EQ(back.width, 7);
    EXPECT_EQ(back.height, 5);
    EXPECT_EQ(back.pixels, rgb);

    FloatImage f{3, 4, 2, {}};
    for (int i = 0; i < 24; ++i) f.data.push_back(0.1f * i - 1.0f);
    writeFloatImage(dir / "a.bin", f);
    const FloatImage g = readFloatImage(dir / "a.bin");
    EXPECT_EQ(g.height, 3);
    EXPECT_EQ(g.width, 4);
    EXPECT_EQ(g.channels, 2);
    EXPECT_EQ(g.data, f.data);
    const auto bytes = readBinaryFile(dir / "a.bin");
    EXPECT_EQ(bytes.size(), 16u + 24u * 4u);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "GSFI");
    EXPECT_THROW(decodeFloatImage(std::span(bytes.data(), 20)), Error);
}
