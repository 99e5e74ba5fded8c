// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gskit/asset/scene.hpp>
#include <gskit/kinematics/pose_scene.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace gskit {

inline constexpr int kTileSize = 16;
inline constexpr double kLowPassDilation = 0.3;  ///< px^2 added to every projected covariance
inline constexpr float kMaxAlpha = 0.99f;
inline constexpr float kMinAlpha = 1.0f / 255.0f;
inline constexpr float kMinTransmittance = 1e-4f;
/// Footprint cut-off: half the squared Mahalanobis radius (3 sigma).
inline constexpr float kMaxPower = 4.5f;

/// A splat after projection to the image plane.
struct Splat2D {
    Eigen::Vector2f mean;      ///< pixel coordinates; pixel (x, y) has its centre at (x, y)
    Eigen::Matrix2d cov;       ///< pixel^2, dilated
    std::array<float, 3> conic; ///< inverse covariance (xx, xy, yy)
    float depth = 0.0f;        ///< camera-space z
    std::array<float, 3> color{};
    float opacity = 0.0f;      ///< activated, before the Gaussian falloff
    std::uint32_t index = 0;   ///< position in the concatenated input
    std::uint32_t featureOffset = 0;
    int radiusX = 0, radiusY = 0; ///< conservative half-extent of the footprint in pixels
};

/// Opacity of splat `s` at pixel centre (x, y). Zero outside the 3-sigma ellipse and below the
/// skip threshold. Shared by every rasterizer so they agree bit for bit.
inline float
splatAlpha(const Splat2D &s, float x, float y) {
    const float dx = x - s.mean.x();
    const float dy = y - s.mean.y();
    const float power = 0.5f * (s.conic[0] * dx * dx + s.conic[2] * dy * dy) + s.conic[1] * dx * dy;
    if (!(power <= kMaxPower)) return 0.0f;
    const float alpha = std::min(kMaxAlpha, s.opacity * std::exp(-power));
    return alpha < kMinAlpha ? 0.0f : alpha;
}

/// Projected splats in compositing order (ascending depth, ties by input index).
struct ProjectedScene {
    int width = 0;
    int height = 0;
    int featureDim = 0;
    std::vector<Splat2D> splats;
    std::vector<float> features; ///< featureDim floats per splat, indexed by Splat2D::featureOffset
    std::size_t inputCount = 0;
};

/// Project one world-space splat; std::nullopt when culled by the near/far planes or the
/// image rectangle. `shToWorld` rotates the splat's SH frame into the world.
std::optional<Splat2D> projectGaussian(const GaussianSet &set, std::size_t i, const Camera &camera,
                                       const Quat &shToWorld = Quat::Identity());

/// Project every group, reject non-finite input (naming the splat) and depth-sort.
ProjectedScene projectScene(std::span<const SplatGroup> groups, const Camera &camera);

struct RenderOptions {
    int threads = 1; ///< tile workers for one frame
};

struct RenderOutput {
    int width = 0;
    int height = 0;
    int featureDim = 0;
    std::vector<float> color;   ///< H*W*3
    std::vector<float> depth;   ///< H*W
    std::vector<float> alpha;   ///< H*W
    std::vector<float> feature; ///< H*W*featureDim

    Eigen::Vector3f pixel(int x, int y) const {
        const std::size_t o = 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                                   static_cast<std::size_t>(x));
        return {color[o], color[o + 1], color[o + 2]};
    }
    bool operator==(const RenderOutput &) const = default;
};

/// Tile-based rasterizer.
RenderOutput rasterize(const ProjectedScene &scene, const Vec3 &background, const RenderOptions &options = {});
RenderOutput rasterize(std::span<const SplatGroup> groups, const Camera &camera, const Vec3 &background,
                       const RenderOptions &options = {});

/// Brute-force oracle: every pixel visits every projected splat in global depth order.
RenderOutput referenceRasterize(const ProjectedScene &scene, const Vec3 &background);
RenderOutput referenceRasterize(std::span<const SplatGroup> groups, const Camera &camera, const Vec3 &background);

/// Transmittance after each contributing splat along pixel (x, y), starting with 1.
std::vector<float> pixelTransmittance(const ProjectedScene &scene, int x, int y);

/// Copy of `camera` with its pose recomputed from forward kinematics when it is link-mounted.
Camera resolveCamera(const Camera &camera, const LoadedScene &scene, std::span<const JointConfig> robotQ);

} // namespace gskit
