// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gskit/core/error.hpp>
#include <gskit/render/rasterizer.hpp>
#include <gskit/render/sh.hpp>

#include <atomic>
#include <thread>

namespace gskit {

namespace {

constexpr float kDepthEpsilon = 1e-8f;

bool
splatIsFinite(const GaussianSet &set, std::size_t i) {
    if (!set.centroids[i].allFinite() || !set.rotations[i].coeffs().allFinite() || !set.scalesLog[i].allFinite() ||
        !std::isfinite(set.opacitiesLogit[i])) {
        return false;
    }
    for (double c : set.sh(i)) {
        if (!std::isfinite(c)) return false;
    }
    if (set.featureDim > 0) {
        for (double f : set.feature(i)) {
            if (!std::isfinite(f)) return false;
        }
    }
    return true;
}

struct PixelResult {
    std::array<float, 3> color{};
    float depth = 0.0f;
    float weight = 0.0f;
    float transmittance = 1.0f;
};

/// Front-to-back compositing of the splats listed in `order` at pixel (x, y).
template <typename Order>
PixelResult
compositePixel(const ProjectedScene &scene, const Order &order, int x, int y, float *feature) {
    PixelResult r;
    const float fx = static_cast<float>(x);
    const float fy = static_cast<float>(y);
    const std::size_t d = static_cast<std::size_t>(scene.featureDim);
    for (const std::uint32_t k : order) {
        const Splat2D &s = scene.splats[k];
        const float alpha = splatAlpha(s, fx, fy);
        if (alpha == 0.0f) continue;
        const float nextT = r.transmittance * (1.0f - alpha);
        if (nextT < kMinTransmittance) break;
        const float w = alpha * r.transmittance;
        for (int c = 0; c < 3; ++c) r.color[c] += s.color[c] * w;
        r.depth += s.depth * w;
        r.weight += w;
        for (std::size_t j = 0; j < d; ++j) feature[j] += scene.features[s.featureOffset + j] * w;
        r.transmittance = nextT;
    }
    return r;
}

void
storePixel(RenderOutput &out, int x, int y, const PixelResult &r, const Vec3 &background) {
    const std::size_t p = static_cast<std::size_t>(y) * static_cast<std::size_t>(out.width) +
                          static_cast<std::size_t>(x);
    for (int c = 0; c < 3; ++c) {
        out.color[3 * p + static_cast<std::size_t>(c)] =
            r.color[c] + r.transmittance * static_cast<float>(background[c]);
    }
    out.alpha[p] = std::clamp(r.weight, 0.0f, 1.0f);
    out.depth[p] = r.weight > 0.0f ? r.depth / std::max(r.weight, kDepthEpsilon) : 0.0f;
}

RenderOutput
blankOutput(const ProjectedScene &scene) {
    RenderOutput out;
    out.width = scene.width;
    out.height = scene.height;
    out.featureDim = scene.featureDim;
    const std::size_t n = static_cast<std::size_t>(scene.width) * static_cast<std::size_t>(scene.height);
    out.color.assign(3 * n, 0.0f);
    out.depth.assign(n, 0.0f);
    out.alpha.assign(n, 0.0f);
    out.feature.assign(n * static_cast<std::size_t>(scene.featureDim), 0.0f);
    return out;
}

float *
featureAt(RenderOutput &out, int x, int y) {
    const std::size_t p = static_cast<std::size_t>(y) * static_cast<std::size_t>(out.width) +
                          static_cast<std::size_t>(x);
    return out.feature.data() + p * static_cast<std::size_t>(out.featureDim);
}

/// Ascending 0..n-1 without materialising the list.
struct IotaRange {
    std::uint32_t n;
    struct iterator {
        std::uint32_t v;
        std::uint32_t operator*() const { return v; }
        iterator &operator++() {
            ++v;
            return *this;
        }
        bool operator!=(const iterator &o) const { return v != o.v; }
    };
    iterator begin() const { return {0}; }
    iterator end() const { return {n}; }
};

} // namespace

std::optional<Splat2D>
projectGaussian(const GaussianSet &set, std::size_t i, const Camera &camera, const Quat &shToWorld) {
    const Vec3 &centroid = set.centroids[i];
    const Vec3 t = camera.worldToCamera.apply(centroid);
    if (t.z() <= camera.near || t.z() >= camera.far) return std::nullopt;

    const Mat3 w = camera.worldToCamera.rotationMatrix();
    const double invZ = 1.0 / t.z();
    Eigen::Matrix<double, 2, 3> j;
    j << camera.fx * invZ, 0.0, -camera.fx * t.x() * invZ * invZ,
         0.0, camera.fy * invZ, -camera.fy * t.y() * invZ * invZ;
    const Eigen::Matrix<double, 2, 3> jw = j * w;
    Eigen::Matrix2d cov = jw * splatCovariance(set, i) * jw.transpose();
    cov(0, 1) = cov(1, 0) = 0.5 * (cov(0, 1) + cov(1, 0));
    cov(0, 0) += kLowPassDilation;
    cov(1, 1) += kLowPassDilation;
    if (!cov.allFinite()) {
        throw Error("projected covariance of splat " + std::to_string(i) + " is not finite");
    }

    const Eigen::Vector2d mean(camera.fx * t.x() * invZ + camera.cx, camera.fy * t.y() * invZ + camera.cy);
    const double sx = std::sqrt(cov(0, 0));
    const double sy = std::sqrt(cov(1, 1));
    if (mean.x() + 3.0 * sx < -0.5 || mean.x() - 3.0 * sx > camera.width - 0.5 || mean.y() + 3.0 * sy < -0.5 ||
        mean.y() - 3.0 * sy > camera.height - 0.5) {
        return std::nullopt;
    }

    Splat2D s;
    s.mean = mean.cast<float>();
    s.cov = cov;
    const double det = cov.determinant();
    s.conic = {static_cast<float>(cov(1, 1) / det), static_cast<float>(-cov(0, 1) / det),
               static_cast<float>(cov(0, 0) / det)};
    s.depth = static_cast<float>(t.z());
    // One extra pixel keeps the bounding box conservative against float rounding in splatAlpha.
    s.radiusX = static_cast<int>(std::ceil(3.0 * sx)) + 1;
    s.radiusY = static_cast<int>(std::ceil(3.0 * sy)) + 1;
    s.opacity = static_cast<float>(activateOpacity(set.opacitiesLogit[i]));

    const Vec3 dir = (centroid - camera.center()).normalized();
    const Vec3 rgb = evaluateSh(set.shDegree, set.sh(i), shToWorld.conjugate() * dir);
    s.color = {static_cast<float>(rgb.x()), static_cast<float>(rgb.y()), static_cast<float>(rgb.z())};
    return s;
}

ProjectedScene
projectScene(std::span<const SplatGroup> groups, const Camera &camera) {
    if (const auto why = camera.invalidReason(); !why.empty()) {
        throw Error("invalid camera '" + camera.name + "': " + why);
    }
    ProjectedScene scene;
    scene.width = camera.width;
    scene.height = camera.height;
    for (const auto &g : groups) scene.featureDim = std::max(scene.featureDim, g.splats->featureDim);

    std::size_t base = 0;
    for (const auto &g : groups) {
        const GaussianSet &set = *g.splats;
        for (std::size_t i = 0; i < set.size(); ++i) {
            const std::size_t index = base + i;
            if (!splatIsFinite(set, i)) {
                throw Error("non-finite parameters in splat " + std::to_string(index));
            }
            std::optional<Splat2D> s;
            try {
                s = projectGaussian(set, i, camera, g.shToWorld);
            } catch (const Error &) {
                throw Error("projected covariance of splat " + std::to_string(index) + " is not finite");
            }
            if (!s) continue;
            s->index = static_cast<std::uint32_t>(index);
            s->featureOffset = static_cast<std::uint32_t>(scene.features.size());
            for (int k = 0; k < scene.featureDim; ++k) {
                scene.features.push_back(k < set.featureDim ? static_cast<float>(set.feature(i)[static_cast<std::size_t>(k)])
                                                            : 0.0f);
            }
            scene.splats.push_back(*s);
        }
        base += set.size();
    }
    scene.inputCount = base;
    std::sort(scene.splats.begin(), scene.splats.end(), [](const Splat2D &a, const Splat2D &b) {
        return a.depth < b.depth || (a.depth == b.depth && a.index < b.index);
    });
    return scene;
}

RenderOutput
rasterize(const ProjectedScene &scene, const Vec3 &background, const RenderOptions &options) {
    RenderOutput out = blankOutput(scene);
    const int tilesX = (scene.width + kTileSize - 1) / kTileSize;
    const int tilesY = (scene.height + kTileSize - 1) / kTileSize;
    std::vector<std::vector<std::uint32_t>> bins(static_cast<std::size_t>(tilesX * tilesY));

    // Splats arrive depth-sorted, so appending keeps every bin in compositing order.
    for (std::uint32_t k = 0; k < scene.splats.size(); ++k) {
        const Splat2D &s = scene.splats[k];
        const int x0 = std::max(0, static_cast<int>(std::floor(s.mean.x() - s.radiusX)) / kTileSize);
        const int x1 = std::min(tilesX - 1, static_cast<int>(std::floor(s.mean.x() + s.radiusX)) / kTileSize);
        const int y0 = std::max(0, static_cast<int>(std::floor(s.mean.y() - s.radiusY)) / kTileSize);
        const int y1 = std::min(tilesY - 1, static_cast<int>(std::floor(s.mean.y() + s.radiusY)) / kTileSize);
        for (int ty = y0; ty <= y1; ++ty) {
            for (int tx = x0; tx <= x1; ++tx) {
                bins[static_cast<std::size_t>(ty * tilesX + tx)].push_back(k);
            }
        }
    }

    std::atomic<int> nextTile{0};
    auto worker = [&]() {
        for (int tile = nextTile++; tile < tilesX * tilesY; tile = nextTile++) {
            const auto &bin = bins[static_cast<std::size_t>(tile)];
            const int tx = tile % tilesX, ty = tile / tilesX;
            const int xEnd = std::min(scene.width, (tx + 1) * kTileSize);
            const int yEnd = std::min(scene.height, (ty + 1) * kTileSize);
            for (int y = ty * kTileSize; y < yEnd; ++y) {
                for (int x = tx * kTileSize; x < xEnd; ++x) {
                    storePixel(out, x, y, compositePixel(scene, bin, x, y, featureAt(out, x, y)), background);
                }
            }
        }
    };
    const int threads = std::clamp(options.threads, 1, std::max(1, tilesX * tilesY));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto &t : pool) t.join();
    }
    return out;
}

RenderOutput
rasterize(std::span<const SplatGroup> groups, const Camera &camera, const Vec3 &background,
          const RenderOptions &options) {
    return rasterize(projectScene(groups, camera), background, options);
}

RenderOutput
referenceRasterize(const ProjectedScene &scene, const Vec3 &background) {
    RenderOutput out = blankOutput(scene);
    const IotaRange all{static_cast<std::uint32_t>(scene.splats.size())};
    for (int y = 0; y < scene.height; ++y) {
        for (int x = 0; x < scene.width; ++x) {
            storePixel(out, x, y, compositePixel(scene, all, x, y, featureAt(out, x, y)), background);
        }
    }
    return out;
}

RenderOutput
referenceRasterize(std::span<const SplatGroup> groups, const Camera &camera, const Vec3 &background) {
    return referenceRasterize(projectScene(groups, camera), background);
}

std::vector<float>
pixelTransmittance(const ProjectedScene &scene, int x, int y) {
    std::vector<float> trace{1.0f};
    float t = 1.0f;
    for (const Splat2D &s : scene.splats) {
        const float alpha = splatAlpha(s, static_cast<float>(x), static_cast<float>(y));
        if (alpha == 0.0f) continue;
        const float next = t * (1.0f - alpha);
        if (next < kMinTransmittance) break;
        t = next;
        trace.push_back(t);
    }
    return trace;
}

Camera
resolveCamera(const Camera &camera, const LoadedScene &scene, std::span<const JointConfig> robotQ) {
    if (!camera.mount) return camera;
    const CameraMount &m = *camera.mount;
    if (m.robot < 0 || static_cast<std::size_t>(m.robot) >= scene.robots.size() ||
        static_cast<std::size_t>(m.robot) >= robotQ.size()) {
        throw Error("camera '" + camera.name + "' is mounted on a missing robot");
    }
    const LoadedRobot &robot = scene.robots[static_cast<std::size_t>(m.robot)];
    const int link = robot.tree.linkIndex(m.link);
    if (link < 0) throw Error("camera '" + camera.name + "' is mounted on unknown link '" + m.link + "'");
    const RigidTransform linkPose =
        robotLinkWorldPoses(robot, robotQ[static_cast<std::size_t>(m.robot)])[static_cast<std::size_t>(link)];
    Camera out = camera;
    out.worldToCamera = (linkPose * m.cameraInLink).inverse();
    return out;
}

} // namespace gskit
