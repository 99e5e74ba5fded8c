// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gskit/align/align.hpp>
#include <gskit/core/error.hpp>
#include <gskit/core/kd_tree.hpp>
#include <gskit/kinematics/forward_kinematics.hpp>

#include <Eigen/SVD>

#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace gskit {

namespace {

std::span<const double>
coords(const Vec3 &v) {
    return {v.data(), 3};
}

KdTree
buildTree(const PointCloud &cloud) {
    std::vector<double> flat;
    flat.reserve(cloud.size() * 3);
    for (const auto &p : cloud) flat.insert(flat.end(), p.data(), p.data() + 3);
    return KdTree(flat, 3);
}

Vec3
centroidOf(const PointCloud &cloud) {
    Vec3 c = Vec3::Zero();
    for (const auto &p : cloud) c += p;
    return c / static_cast<double>(cloud.size());
}

/// Singular values of the centred cloud, largest first.
Vec3
spread(const PointCloud &cloud) {
    const Vec3 c = centroidOf(cloud);
    Mat3 cov = Mat3::Zero();
    for (const auto &p : cloud) cov += (p - c) * (p - c).transpose();
    return Eigen::JacobiSVD<Mat3>(cov).singularValues();
}

void
requireNonCollinear(const PointCloud &cloud, const char *which) {
    if (cloud.size() < 3) {
        throw AlignmentError(std::string("icp: ") + which + " cloud needs at least 3 points");
    }
    const Vec3 s = spread(cloud);
    if (!(s[1] > 1e-12 * s[0])) {
        throw AlignmentError(std::string("icp: ") + which + " cloud is collinear");
    }
}

double
rmsOf(const PointCloud &a, const PointCloud &b, const RigidTransform &t) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += (t.apply(a[i]) - b[i]).squaredNorm();
    return std::sqrt(sum / static_cast<double>(a.size()));
}

} // namespace

MarkerObservation
parseMarkerFile(const std::string &text) {
    MarkerObservation marker;
    std::istringstream in(text);
    std::string line;
    int corners = 0;
    bool haveEdge = false;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        std::string first;
        if (!(fields >> first)) continue;
        if (first == "edge_length_m") {
            if (!(fields >> marker.edgeLengthM) || !(marker.edgeLengthM > 0.0)) {
                throw AlignmentError("marker file line " + std::to_string(lineNo) + ": bad edge_length_m");
            }
            haveEdge = true;
            continue;
        }
        if (corners == 4) throw AlignmentError("marker file line " + std::to_string(lineNo) + ": extra corner");
        Vec3 &c = marker.corners[static_cast<std::size_t>(corners)];
        try {
            c.x() = std::stod(first);
        } catch (const std::exception &) {
            throw AlignmentError("marker file line " + std::to_string(lineNo) + ": expected 'x y z'");
        }
        std::string rest;
        if (!(fields >> c.y() >> c.z()) || (fields >> rest)) {
            throw AlignmentError("marker file line " + std::to_string(lineNo) + ": expected 'x y z'");
        }
        ++corners;
    }
    if (corners != 4 || !haveEdge) {
        throw AlignmentError("marker file needs four corner lines and one edge_length_m line");
    }
    return marker;
}

MarkerObservation
loadMarkerFile(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw AlignmentError("cannot open marker file '" + path.string() + "'");
    std::stringstream s;
    s << in.rdbuf();
    return parseMarkerFile(s.str());
}

ScaleEstimate
estimateScale(const MarkerObservation &marker, const Vec3 &cloudCentroid) {
    if (!(marker.edgeLengthM > 0.0)) throw AlignmentError("marker edge length must be positive");
    for (std::size_t i = 0; i < 4; ++i) {
        if (!marker.corners[i].allFinite()) throw AlignmentError("marker corner is not finite");
        for (std::size_t j = i + 1; j < 4; ++j) {
            if (marker.corners[i] == marker.corners[j]) throw AlignmentError("marker corners are not distinct");
        }
    }
    const PointCloud corners(marker.corners.begin(), marker.corners.end());
    const Vec3 center = centroidOf(corners);
    Eigen::Matrix<double, 4, 3> centred;
    for (int i = 0; i < 4; ++i) centred.row(i) = (corners[static_cast<std::size_t>(i)] - center).transpose();
    const Eigen::JacobiSVD<Eigen::Matrix<double, 4, 3>> svd(centred, Eigen::ComputeFullV);
    const Vec3 sv = svd.singularValues();
    if (!(sv[1] > 1e-9 * sv[0])) throw AlignmentError("degenerate marker: corners are collinear");

    ScaleEstimate out;
    double sum = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        out.edgeLengths[i] = (corners[(i + 1) % 4] - corners[i]).norm();
        sum += out.edgeLengths[i];
    }
    for (std::size_t i = 0; i < 4; ++i) {
        const double a = out.edgeLengths[i], b = out.edgeLengths[(i + 1) % 4];
        if (std::abs(a - b) > 0.2 * std::max(a, b)) {
            throw AlignmentError("marker edges differ by more than 20%: not a square");
        }
    }
    out.scale = marker.edgeLengthM / (sum / 4.0);

    Vec3 normal = svd.matrixV().col(2).normalized();
    // Gravity points away from the bulk of the scene, which sits above the table.
    if (normal.dot(cloudCentroid - center) > 0.0) normal = -normal;
    out.gravityDir = normal;
    out.supportPlane.normal = -normal;
    out.supportPlane.point = out.scale * center;
    return out;
}

PointCloud
sampleSurfacePoints(const TriangleMesh &mesh, std::size_t count, std::uint64_t seed) {
    if (mesh.faces.empty()) throw AlignmentError("cannot sample an empty mesh");
    std::mt19937_64 rng(seed);
    PointCloud out;
    out.reserve(count);
    for (const auto &s : sampleSurface(mesh, count, rng)) out.push_back(s.point);
    return out;
}

PointCloud
splatCloud(const GaussianSet &splats, double minOpacity) {
    PointCloud out;
    for (std::size_t i = 0; i < splats.size(); ++i) {
        if (activateOpacity(splats.opacitiesLogit[i]) > minOpacity) out.push_back(splats.centroids[i]);
    }
    return out;
}

RigidTransform
fitRigid(const PointCloud &src, const PointCloud &dst) {
    if (src.size() != dst.size() || src.empty()) throw AlignmentError("fitRigid: need matching non-empty sets");
    const Vec3 cs = centroidOf(src);
    const Vec3 cd = centroidOf(dst);
    Mat3 h = Mat3::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) h += (src[i] - cs) * (dst[i] - cd).transpose();
    const Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec3 sv = svd.singularValues();
    if (!(sv[1] > 1e-12 * sv[0])) {
        throw AlignmentError("degenerate rigid fit: correspondences are collinear");
    }
    Mat3 d = Mat3::Identity();
    if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
    const Mat3 r = svd.matrixV() * d * svd.matrixU().transpose();
    return RigidTransform::fromMatrix(r, cd - r * cs);
}

AlignmentResult
icpAlign(const PointCloud &source, const PointCloud &target, const RigidTransform &init, const IcpParams &params) {
    requireNonCollinear(source, "source");
    requireNonCollinear(target, "target");
    if (params.maxIterations < 1 || !(params.cutoff > 0.0)) throw AlignmentError("icp: invalid parameters");
    const KdTree tree = buildTree(target);
    const double cutoff2 = params.cutoff * params.cutoff;

    auto correspondences = [&](const RigidTransform &t, PointCloud &src, PointCloud &dst) {
        src.clear();
        dst.clear();
        for (const auto &p : source) {
            const Vec3 moved = t.apply(p);
            const Neighbor n = tree.nearestOne(coords(moved));
            if (n.distanceSquared <= cutoff2) {
                src.push_back(moved);
                dst.push_back(target[n.index]);
            }
        }
    };

    AlignmentResult result;
    RigidTransform current = init;
    PointCloud src, dst;
    double previous = std::numeric_limits<double>::infinity();
    for (int it = 0; it < params.maxIterations; ++it) {
        correspondences(current, src, dst);
        if (src.empty()) {
            throw AlignmentError("icp: no correspondences within " + std::to_string(params.cutoff) + " m");
        }
        IcpIteration step;
        step.inliers = src.size();
        step.rmsBefore = rmsOf(src, dst, RigidTransform::identity());
        RigidTransform delta;
        if (src.size() >= 3 && spread(src)[1] > 1e-12 * spread(src)[0]) {
            delta = fitRigid(src, dst);
        }
        step.rmsAfter = rmsOf(src, dst, delta);
        // The least-squares step can never raise the rms on fixed correspondences.
        if (step.rmsAfter > step.rmsBefore * (1.0 + 1e-9) + 1e-15) {
            throw AlignmentError("icp: fit increased the residual (numerical breakdown)");
        }
        current = delta * current;
        result.history.push_back(step);
        result.iterationsUsed = it + 1;
        if (std::abs(previous - step.rmsAfter) < params.convergence) break;
        previous = step.rmsAfter;
    }
    correspondences(current, src, dst);
    if (src.empty()) throw AlignmentError("icp: no correspondences at the final estimate");
    result.transform = current;
    result.rmsResidual = rmsOf(src, dst, RigidTransform::identity());
    result.inlierFraction = static_cast<double>(src.size()) / static_cast<double>(source.size());
    return result;
}

PointCloud
robotSurfaceCloud(const KinematicTree &tree, const JointConfig &q, std::size_t count, std::uint64_t seed) {
    const LinkPoses poses = forwardKinematics(tree, q);
    TriangleMesh all;
    for (std::size_t l = 0; l < tree.links.size(); ++l) {
        if (tree.links[l].visual) all.append(geometryMesh(*tree.links[l].visual).transformed(poses[l]));
    }
    if (all.faces.empty()) throw AlignmentError("robot has no visual geometry to sample");
    return sampleSurfacePoints(all, count, seed);
}

AlignmentResult
alignRobot(const PointCloud &sceneCloud, const KinematicTree &tree, const JointConfig &capturedQ,
           const RigidTransform &init, const RobotAlignParams &params) {
    if (sceneCloud.empty()) throw AlignmentError("alignRobot: the splat cloud is empty");
    if (params.cutoffSchedule.empty()) throw AlignmentError("alignRobot: empty cut-off schedule");
    const PointCloud robot = robotSurfaceCloud(tree, capturedQ, params.surfacePoints, params.seed);
    // Sparse splats are matched into the dense surface cloud, which approximates
    // point-to-surface distances; the result is inverted at the end.
    AlignmentResult total;
    RigidTransform current = init.inverse();
    for (const double cutoff : params.cutoffSchedule) {
        IcpParams p;
        p.cutoff = cutoff;
        p.maxIterations = params.maxIterations;
        p.convergence = params.convergence;
        AlignmentResult stage = icpAlign(sceneCloud, robot, current, p);
        current = stage.transform;
        total.history.insert(total.history.end(), stage.history.begin(), stage.history.end());
        total.iterationsUsed += stage.iterationsUsed;
        total.rmsResidual = stage.rmsResidual;
        total.inlierFraction = stage.inlierFraction;
    }
    total.transform = current.inverse();
    return total;
}

std::vector<int>
segmentLinksKnn(const PointCloud &splatCentroids, const std::vector<PointCloud> &linkClouds, std::size_t k,
                double cutoff) {
    if (k < 1) throw AlignmentError("segmentation: k must be at least 1");
    if (!(cutoff > 0.0)) throw AlignmentError("segmentation: cutoff must be positive");
    PointCloud points;
    std::vector<int> labels;
    for (std::size_t l = 0; l < linkClouds.size(); ++l) {
        for (const auto &p : linkClouds[l]) {
            points.push_back(p);
            labels.push_back(static_cast<int>(l));
        }
    }
    if (points.empty()) throw AlignmentError("segmentation: link clouds are empty");
    const KdTree tree = buildTree(points);
    std::vector<int> out(splatCentroids.size(), -1);
    for (std::size_t i = 0; i < splatCentroids.size(); ++i) {
        const auto nn = tree.nearest(coords(splatCentroids[i]), k);
        if (nn.front().distanceSquared > cutoff * cutoff) continue;
        std::map<int, std::pair<int, double>> votes; // label -> (count, summed distance)
        for (const auto &n : nn) {
            auto &v = votes[labels[n.index]];
            v.first += 1;
            v.second += std::sqrt(n.distanceSquared);
        }
        int best = -1;
        int bestCount = 0;
        double bestMean = 0.0;
        for (const auto &[label, v] : votes) {
            const double mean = v.second / v.first;
            if (v.first > bestCount || (v.first == bestCount && mean < bestMean)) {
                best = label;
                bestCount = v.first;
                bestMean = mean;
            }
        }
        out[i] = best;
    }
    return out;
}

} // namespace gskit
