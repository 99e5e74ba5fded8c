// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gskit/core/rigid_transform.hpp>

#include <array>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace gskit {

/// Triangle soup: shared vertex list plus index triples.
struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;

    bool empty() const { return faces.empty(); }
    double area() const;
    Eigen::AlignedBox3d bounds() const;

    TriangleMesh transformed(const RigidTransform &t) const;
    void append(const TriangleMesh &other);
};

/// Minimal Wavefront OBJ reader: `v` and `f` records only; polygons are fan-triangulated.
TriangleMesh parseObj(const std::string &text);
TriangleMesh loadObj(const std::filesystem::path &path);
std::string writeObj(const TriangleMesh &mesh);

struct SurfaceSample {
    Vec3 point;
    Vec3 normal; ///< unit face normal (winding order)
    int face = 0;
};

/// Area-weighted uniform samples on the surface. Degenerate faces are never chosen.
std::vector<SurfaceSample> sampleSurface(const TriangleMesh &mesh, std::size_t count, std::mt19937_64 &rng);

TriangleMesh makeBox(const Vec3 &size);
/// Cylinder along +z, centered at the origin.
TriangleMesh makeCylinder(double radius, double length, int segments = 24);
TriangleMesh makeSphere(double radius, int rings = 12, int segments = 24);

} // namespace gskit
