// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include "test_util.hpp"

#include <gskit/demo/demo_scene.hpp>

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

namespace gskit::test {

Quat
randomRotation(std::mt19937_64 &rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Quat q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    return q;
}

GaussianSet
randomGaussians(std::mt19937_64 &rng, std::size_t n, int shDegree, int featureDim, bool floatExact) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto f = [&](double v) { return floatExact ? static_cast<double>(static_cast<float>(v)) : v; };
    GaussianSet set;
    set.shDegree = shDegree;
    set.featureDim = featureDim;
    set.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        set.centroids[i] = Vec3(f(u(rng)), f(u(rng)), f(u(rng)));
        Quat q = randomRotation(rng);
        if (floatExact) {
            q = Quat(f(q.w()), f(q.x()), f(q.y()), f(q.z()));
        }
        set.rotations[i] = q;
        set.scalesLog[i] = Vec3(f(-4.0 + u(rng)), f(-4.0 + u(rng)), f(-4.0 + u(rng)));
        set.opacitiesLogit[i] = f(2.0 * u(rng));
    }
    for (auto &c : set.shCoeffs) c = f(0.5 * u(rng));
    for (auto &c : set.features) c = f(u(rng));
    return set;
}

Camera
axisCamera(int width, int height, double focal) {
    Camera c;
    c.name = "axis";
    c.width = width;
    c.height = height;
    c.fx = c.fy = focal;
    c.cx = 0.5 * (width - 1);
    c.cy = 0.5 * (height - 1);
    c.near = 0.1;
    c.far = 50.0;
    return c;
}

GaussianSet
randomRenderScene(std::mt19937_64 &rng, std::size_t maxSplats) {
    std::uniform_int_distribution<std::size_t> count(1, maxSplats);
    std::uniform_int_distribution<int> degree(0, 3);
    std::uniform_int_distribution<int> features(0, 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t n = count(rng);
    GaussianSet set = randomGaussians(rng, n, degree(rng), features(rng) ? 3 : 0);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = 1.5 + 4.5 * u(rng);
        set.centroids[i] = Vec3((2.0 * u(rng) - 1.0) * 0.7 * z, (2.0 * u(rng) - 1.0) * 0.7 * z, z);
        set.scalesLog[i] = Vec3(-4.5 + 3.0 * u(rng), -4.5 + 3.0 * u(rng), -4.5 + 3.0 * u(rng));
        set.opacitiesLogit[i] = -2.0 + 7.0 * u(rng);
    }
    // Every tenth scene gets a few exact depth ties to exercise the index tie-break.
    if (n > 4 && u(rng) < 0.1) {
        set.centroids[1].z() = set.centroids[0].z();
        set.centroids[3].z() = set.centroids[2].z();
    }
    return set;
}

double
realSphericalHarmonic(int l, int m, const Vec3 &dir) {
    const int am = std::abs(m);
    const double x = dir.z();
    const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
    // P_m^m, then upward in l.
    double pmm = 1.0;
    for (int i = 1; i <= am; ++i) pmm *= -(2.0 * i - 1.0) * s;
    double plm = pmm;
    if (l > am) {
        double prev = pmm;
        double cur = x * (2.0 * am + 1.0) * pmm;
        for (int ll = am + 2; ll <= l; ++ll) {
            const double next = ((2.0 * ll - 1.0) * x * cur - (ll + am - 1.0) * prev) / (ll - am);
            prev = cur;
            cur = next;
        }
        plm = cur;
    }
    double ratio = 1.0; // (l-|m|)! / (l+|m|)!
    for (int i = l - am + 1; i <= l + am; ++i) ratio /= i;
    const double k = std::sqrt((2.0 * l + 1.0) / (4.0 * std::numbers::pi) * ratio);
    const double phi = std::atan2(dir.y(), dir.x());
    if (m == 0) return k * plm;
    if (m > 0) return std::sqrt(2.0) * k * std::cos(m * phi) * plm;
    return std::sqrt(2.0) * k * std::sin(am * phi) * plm;
}

std::filesystem::path
scratchDir(const std::string &name) {
    const std::filesystem::path dir = std::filesystem::path(GSKIT_TEST_TMP) / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string
twoLinkUrdf(double l1, double l2) {
    std::ostringstream s;
    s.precision(17);
    s << "<robot name=\"two_link\">\n"
      << "  <link name=\"base\"/>\n  <link name=\"upper\"/>\n  <link name=\"fore\"/>\n  <link name=\"tip\"/>\n"
      << "  <joint name=\"j1\" type=\"revolute\"><parent link=\"base\"/><child link=\"upper\"/>"
      << "<origin xyz=\"0 0 0\" rpy=\"0 0 0\"/><axis xyz=\"0 0 1\"/>"
      << "<limit lower=\"-3.14\" upper=\"3.14\" effort=\"1\" velocity=\"1\"/></joint>\n"
      << "  <joint name=\"j2\" type=\"revolute\"><parent link=\"upper\"/><child link=\"fore\"/>"
      << "<origin xyz=\"" << l1 << " 0 0\" rpy=\"0 0 0\"/><axis xyz=\"0 0 1\"/>"
      << "<limit lower=\"-3.14\" upper=\"3.14\" effort=\"1\" velocity=\"1\"/></joint>\n"
      << "  <joint name=\"tip_fixed\" type=\"fixed\"><parent link=\"fore\"/><child link=\"tip\"/>"
      << "<origin xyz=\"" << l2 << " 0 0\" rpy=\"0 0 0\"/></joint>\n"
      << "</robot>\n";
    return s.str();
}

RigidTransform
randomBoundedTransform(std::mt19937_64 &rng, double maxAngle, double maxTranslation) {
    std::normal_distribution<double> n01;
    std::uniform_real_distribution<double> u01;
    Vec3 axis(n01(rng), n01(rng), n01(rng));
    Vec3 dir(n01(rng), n01(rng), n01(rng));
    const double angle = maxAngle * u01(rng);
    const double length = maxTranslation * u01(rng);
    return RigidTransform::fromAxisAngle(axis, angle, length * dir.normalized());
}

PointCloud
asymmetricCloud(std::size_t count, std::uint64_t seed) {
    TriangleMesh mesh = makeBox(Vec3(0.6, 0.3, 0.2));
    mesh.append(makeCylinder(0.05, 0.5).transformed(
        RigidTransform::fromAxisAngle(Vec3(1, 1, 0), 0.9, Vec3(0.4, 0.3, 0.15))));
    mesh.append(makeSphere(0.12).transformed(RigidTransform::fromTranslation(Vec3(-0.2, -0.25, 0.25))));
    return sampleSurfacePoints(mesh, count, seed);
}

double
rotationErrorDeg(const Quat &a, const Quat &b) {
    return rotationDistance(a, b) * 180.0 / std::numbers::pi;
}

std::shared_ptr<const LoadedScene>
demoScene(const std::string &task) {
    static std::mutex mutex;
    static std::map<std::string, std::shared_ptr<const LoadedScene>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto &slot = cache[task];
    if (!slot) {
        DemoSceneOptions opts;
        opts.task = task;
        slot = loadScene(writeDemoScene(scratchDir("demo_scene_" + task), opts));
    }
    return slot;
}

double
chiSquareUniformPValue(const std::vector<std::size_t> &counts) {
    double total = 0.0;
    for (auto c : counts) total += static_cast<double>(c);
    const double expected = total / static_cast<double>(counts.size());
    double stat = 0.0;
    for (auto c : counts) stat += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
    const boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
    return boost::math::cdf(boost::math::complement(dist, stat));
}

} // namespace gskit::test
