// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gskit/core/error.hpp>
#include <gskit/render/sh.hpp>

#include <algorithm>
#include <array>

namespace gskit {

namespace {

constexpr double kC0 = 0.28209479177387814;
constexpr double kC1 = 0.4886025119029199;
constexpr std::array<double, 5> kC2 = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                                       -1.0925484305920792, 0.5462742152960396};
constexpr std::array<double, 7> kC3 = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
                                       0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                                       -0.5900435899266435};

} // namespace

void
shBasis(int degree, const Vec3 &dir, std::span<double> out) {
    if (degree < 0 || degree > kMaxShDegree) throw Error("SH degree out of range");
    out[0] = kC0;
    if (degree < 1) return;
    const double x = dir.x(), y = dir.y(), z = dir.z();
    out[1] = -kC1 * y;
    out[2] = kC1 * z;
    out[3] = -kC1 * x;
    if (degree < 2) return;
    const double xx = x * x, yy = y * y, zz = z * z;
    const double xy = x * y, yz = y * z, xz = x * z;
    out[4] = kC2[0] * xy;
    out[5] = kC2[1] * yz;
    out[6] = kC2[2] * (2.0 * zz - xx - yy);
    out[7] = kC2[3] * xz;
    out[8] = kC2[4] * (xx - yy);
    if (degree < 3) return;
    out[9] = kC3[0] * y * (3.0 * xx - yy);
    out[10] = kC3[1] * xy * z;
    out[11] = kC3[2] * y * (4.0 * zz - xx - yy);
    out[12] = kC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
    out[13] = kC3[4] * x * (4.0 * zz - xx - yy);
    out[14] = kC3[5] * z * (xx - yy);
    out[15] = kC3[6] * x * (xx - 3.0 * yy);
}

Vec3
evaluateSh(int degree, std::span<const double> coeffs, const Vec3 &dir) {
    std::array<double, 16> basis{};
    shBasis(degree, dir, basis);
    const std::size_t k = static_cast<std::size_t>((degree + 1) * (degree + 1));
    Vec3 rgb;
    for (std::size_t c = 0; c < 3; ++c) {
        double v = 0.5;
        for (std::size_t j = 0; j < k; ++j) {
            v += basis[j] * coeffs[c * k + j];
        }
        rgb[static_cast<Eigen::Index>(c)] = std::clamp(v, 0.0, 1.0);
    }
    return rgb;
}

} // namespace gskit
