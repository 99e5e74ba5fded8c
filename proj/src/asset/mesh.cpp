// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gskit/asset/mesh.hpp>
#include <gskit/core/error.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace gskit {

double
TriangleMesh::area() const {
    double total = 0.0;
    for (const auto &f : faces) {
        const Vec3 &a = vertices[static_cast<std::size_t>(f[0])];
        const Vec3 &b = vertices[static_cast<std::size_t>(f[1])];
        const Vec3 &c = vertices[static_cast<std::size_t>(f[2])];
        total += 0.5 * (b - a).cross(c - a).norm();
    }
    return total;
}

Eigen::AlignedBox3d
TriangleMesh::bounds() const {
    Eigen::AlignedBox3d box;
    for (const auto &v : vertices) {
        box.extend(v);
    }
    return box;
}

TriangleMesh
TriangleMesh::transformed(const RigidTransform &t) const {
    TriangleMesh out = *this;
    for (auto &v : out.vertices) {
        v = t.apply(v);
    }
    return out;
}

void
TriangleMesh::append(const TriangleMesh &other) {
    const int base = static_cast<int>(vertices.size());
    vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
    for (const auto &f : other.faces) {
        faces.push_back({f[0] + base, f[1] + base, f[2] + base});
    }
}

std::vector<SurfaceSample>
sampleSurface(const TriangleMesh &mesh, std::size_t count, std::mt19937_64 &rng) {
    std::vector<double> areas;
    areas.reserve(mesh.faces.size());
    for (const auto &f : mesh.faces) {
        const Vec3 &a = mesh.vertices[static_cast<std::size_t>(f[0])];
        areas.push_back(0.5 * (mesh.vertices[static_cast<std::size_t>(f[1])] - a)
                                  .cross(mesh.vertices[static_cast<std::size_t>(f[2])] - a)
                                  .norm());
    }
    double total = 0.0;
    for (double a : areas) total += a;
    if (count > 0 && !(total > 0.0)) {
        throw Error("sampleSurface: mesh has no surface area");
    }
    std::discrete_distribution<int> pickFace(areas.begin(), areas.end());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<SurfaceSample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const int face = pickFace(rng);
        const auto &f = mesh.faces[static_cast<std::size_t>(face)];
        const Vec3 &a = mesh.vertices[static_cast<std::size_t>(f[0])];
        const Vec3 &b = mesh.vertices[static_cast<std::size_t>(f[1])];
        const Vec3 &c = mesh.vertices[static_cast<std::size_t>(f[2])];
        // Square-root warp gives a uniform density over the triangle.
        const double r1 = std::sqrt(unit(rng));
        const double r2 = unit(rng);
        SurfaceSample s;
        s.point = (1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c;
        s.normal = (b - a).cross(c - a).normalized();
        s.face = face;
        out.push_back(s);
    }
    return out;
}

TriangleMesh
parseObj(const std::string &text) {
    TriangleMesh mesh;
    std::istringstream in(text);
    std::string line;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        std::istringstream words(line);
        std::string tag;
        words >> tag;
        if (tag == "v") {
            Vec3 v;
            if (!(words >> v.x() >> v.y() >> v.z())) {
                throw Error("OBJ line " + std::to_string(lineNo) + ": malformed vertex");
            }
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string token;
            while (words >> token) {
                const int i = std::stoi(token.substr(0, token.find('/')));
                const int resolved = i > 0 ? i - 1 : static_cast<int>(mesh.vertices.size()) + i;
                if (resolved < 0 || resolved >= static_cast<int>(mesh.vertices.size())) {
                    throw Error("OBJ line " + std::to_string(lineNo) + ": vertex index out of range");
                }
                idx.push_back(resolved);
            }
            if (idx.size() < 3) {
                throw Error("OBJ line " + std::to_string(lineNo) + ": face with fewer than 3 vertices");
            }
            for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
                mesh.faces.push_back({idx[0], idx[k], idx[k + 1]});
            }
        }
    }
    return mesh;
}

TriangleMesh
loadObj(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open mesh '" + path.string() + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parseObj(ss.str());
}

std::string
writeObj(const TriangleMesh &mesh) {
    std::ostringstream out;
    out.precision(17);
    for (const auto &v : mesh.vertices) {
        out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    }
    for (const auto &f : mesh.faces) {
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    }
    return out.str();
}

TriangleMesh
makeBox(const Vec3 &size) {
    const Vec3 h = 0.5 * size;
    TriangleMesh m;
    for (int i = 0; i < 8; ++i) {
        m.vertices.emplace_back((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(), (i & 4) ? h.z() : -h.z());
    }
    // Outward-facing quads split into triangles.
    const int quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
    for (const auto &q : quads) {
        m.faces.push_back({q[0], q[1], q[2]});
        m.faces.push_back({q[0], q[2], q[3]});
    }
    return m;
}

TriangleMesh
makeCylinder(double radius, double length, int segments) {
    TriangleMesh m;
    const double h = 0.5 * length;
    m.vertices.emplace_back(0.0, 0.0, -h);
    m.vertices.emplace_back(0.0, 0.0, h);
    for (int i = 0; i < segments; ++i) {
        const double a = 2.0 * std::numbers::pi * i / segments;
        m.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), -h);
        m.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), h);
    }
    for (int i = 0; i < segments; ++i) {
        const int j = (i + 1) % segments;
        const int b0 = 2 + 2 * i, t0 = b0 + 1, b1 = 2 + 2 * j, t1 = b1 + 1;
        m.faces.push_back({0, b1, b0});
        m.faces.push_back({1, t0, t1});
        m.faces.push_back({b0, b1, t1});
        m.faces.push_back({b0, t1, t0});
    }
    return m;
}

TriangleMesh
makeSphere(double radius, int rings, int segments) {
    TriangleMesh m;
    for (int r = 0; r <= rings; ++r) {
        const double theta = std::numbers::pi * r / rings;
        for (int s = 0; s < segments; ++s) {
            const double phi = 2.0 * std::numbers::pi * s / segments;
            m.vertices.emplace_back(radius * std::sin(theta) * std::cos(phi),
                                    radius * std::sin(theta) * std::sin(phi), radius * std::cos(theta));
        }
    }
    for (int r = 0; r < rings; ++r) {
        for (int s = 0; s < segments; ++s) {
            const int a = r * segments + s;
            const int b = r * segments + (s + 1) % segments;
            const int c = a + segments;
            const int d = b + segments;
            if (r > 0) m.faces.push_back({a, b, d});
            if (r + 1 < rings) m.faces.push_back({a, d, c});
        }
    }
    return m;
}

} // namespace gskit
