// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

// Python bindings for the core library. Arrays cross the boundary as NumPy arrays; point
// clouds are (N, 3) float64 and transforms are 4x4 homogeneous matrices.

#include <gskit/align/align.hpp>
#include <gskit/asset/splat_file.hpp>
#include <gskit/core/error.hpp>
#include <gskit/demo/demo_scene.hpp>
#include <gskit/env/environment.hpp>
#include <gskit/env/policy.hpp>
#include <gskit/kinematics/forward_kinematics.hpp>
#include <gskit/kinematics/transform_gaussians.hpp>
#include <gskit/render/rasterizer.hpp>
#include <gskit/render/sh.hpp>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace gskit;

namespace {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

PointCloud
toCloud(const Points &m) {
    PointCloud out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m.row(i).transpose();
    return out;
}

Points
fromVec3s(const std::vector<Vec3> &v) {
    Points m(static_cast<Eigen::Index>(v.size()), 3);
    for (std::size_t i = 0; i < v.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = v[i].transpose();
    return m;
}

RigidTransform
toTransform(const Eigen::Matrix4d &m) {
    return RigidTransform::fromMatrix(m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>());
}

py::array_t<float>
imageArray(const std::vector<float> &data, int height, int width, int channels) {
    std::vector<py::ssize_t> shape = {height, width};
    if (channels > 1) shape.push_back(channels);
    py::array_t<float> out(shape);
    std::copy(data.begin(), data.end(), out.mutable_data());
    return out;
}

py::dict
renderDict(const RenderOutput &r) {
    py::dict d;
    d["color"] = imageArray(r.color, r.height, r.width, 3);
    d["depth"] = imageArray(r.depth, r.height, r.width, 1);
    d["alpha"] = imageArray(r.alpha, r.height, r.width, 1);
    if (r.featureDim > 0) d["feature"] = imageArray(r.feature, r.height, r.width, r.featureDim);
    return d;
}

py::dict
observationDict(const Observation &obs) {
    py::dict images;
    for (const auto &img : obs.images) images[py::str(img.camera)] = imageArray(img.color, img.height, img.width, 3);
    py::dict d;
    d["images"] = images;
    d["proprio"] = Eigen::VectorXd(obs.proprio);
    return d;
}

py::dict
stateDict(const EnvState &s) {
    py::list poses;
    for (const auto &p : s.objectPoses) poses.append(p.matrix());
    py::dict d;
    d["q"] = Eigen::VectorXd(s.q);
    d["object_poses"] = poses;
    d["attached"] = s.attached ? py::object(py::int_(*s.attached)) : py::object(py::none());
    d["step_index"] = s.stepIndex;
    d["episode_seed"] = s.episodeSeed;
    return d;
}

/// A single environment built from a GSDF file, with the scripted expert on hand.
class PyEnv {
  public:
    PyEnv(const std::filesystem::path &gsdf, const std::string &task, bool render, bool colorJitter)
        : mScene(loadScene(gsdf)), mTask(makeTask(task, mScene)), mEnv(makeEnv(render, colorJitter)),
          mExpert(mScene, mTask) {}

    py::dict reset(std::uint64_t seed) { return observationDict(mEnv.reset(seed)); }

    py::tuple step(const Eigen::VectorXd &action) {
        const StepResult r = mEnv.step(action);
        return py::make_tuple(observationDict(r.observation), r.reward, r.terminated, r.truncated, stateDict(r.info));
    }

    py::dict state() const { return stateDict(mEnv.state()); }
    Eigen::VectorXd expertAction() { return mExpert.act(mEnv.state()); }
    Eigen::VectorXd homeQ() const { return mEnv.homeQ(); }
    std::vector<std::string> cameras() const { return mTask.cameras; }
    int maxSteps() const { return mTask.maxSteps; }
    bool success() const { return mTask.success(mEnv.state()); }

  private:
    Environment makeEnv(bool render, bool colorJitter) {
        EnvOptions o;
        o.render = render;
        o.colorJitter = colorJitter;
        return Environment(std::make_shared<StaticSplatCache>(mScene), mTask, o);
    }

    std::shared_ptr<const LoadedScene> mScene;
    TaskSpec mTask;
    Environment mEnv;
    ScriptedExpert mExpert;
};

} // namespace

PYBIND11_MODULE(_gskit, m) {
    m.doc() = "Gaussian-splat robot simulation toolkit";

    py::register_exception<Error>(m, "GskitError");

    py::class_<GaussianSet>(m, "GaussianSet")
        .def(py::init<>())
        .def("__len__", &GaussianSet::size)
        .def("__eq__", &GaussianSet::operator==)
        .def_readonly("sh_degree", &GaussianSet::shDegree)
        .def_readonly("feature_dim", &GaussianSet::featureDim)
        .def_property_readonly("centroids", [](const GaussianSet &s) { return fromVec3s(s.centroids); })
        .def_property_readonly("scales_log", [](const GaussianSet &s) { return fromVec3s(s.scalesLog); })
        .def_property_readonly("opacities_logit", [](const GaussianSet &s) { return s.opacitiesLogit; })
        .def_property_readonly("rotations_wxyz",
                               [](const GaussianSet &s) {
                                   Eigen::Matrix<double, Eigen::Dynamic, 4, Eigen::RowMajor> q(
                                       static_cast<Eigen::Index>(s.size()), 4);
                                   for (std::size_t i = 0; i < s.size(); ++i) {
                                       const auto r = static_cast<Eigen::Index>(i);
                                       q.row(r) << s.rotations[i].w(), s.rotations[i].x(), s.rotations[i].y(),
                                           s.rotations[i].z();
                                   }
                                   return q;
                               })
        .def("covariance", &splatCovariance, py::arg("index"));

    m.def("parse_splat_file", [](py::bytes data) {
        const std::string s = data;
        return parseSplatFile(std::span(reinterpret_cast<const std::uint8_t *>(s.data()), s.size()));
    });
    m.def("write_splat_file", [](const GaussianSet &set) {
        const auto bytes = writeSplatFile(set);
        return py::bytes(reinterpret_cast<const char *>(bytes.data()), bytes.size());
    });
    m.def("load_splat_file", &loadSplatFile, py::arg("path"));
    m.def("save_splat_file", &saveSplatFile, py::arg("path"), py::arg("set"));
    m.def("transform_gaussians",
          [](const GaussianSet &set, const Eigen::Matrix4d &t) { return transformGaussians(set, toTransform(t)); },
          py::arg("set"), py::arg("transform"));

    m.def("evaluate_sh",
          [](int degree, const std::vector<double> &coeffs, const Vec3 &dir) {
              return evaluateSh(degree, coeffs, dir.normalized());
          },
          py::arg("degree"), py::arg("coeffs"), py::arg("direction"));

    py::class_<Camera>(m, "Camera")
        .def(py::init([](int width, int height, double fx, double fy, double cx, double cy,
                         const Eigen::Matrix4d &worldToCamera) {
                 Camera c;
                 c.name = "camera";
                 c.width = width;
                 c.height = height;
                 c.fx = fx;
                 c.fy = fy;
                 c.cx = cx;
                 c.cy = cy;
                 c.worldToCamera = toTransform(worldToCamera);
                 if (const std::string why = c.invalidReason(); !why.empty()) throw Error("invalid camera: " + why);
                 return c;
             }),
             py::arg("width"), py::arg("height"), py::arg("fx"), py::arg("fy"), py::arg("cx"), py::arg("cy"),
             py::arg("world_to_camera") = Eigen::Matrix4d::Identity())
        .def_readonly("width", &Camera::width)
        .def_readonly("height", &Camera::height);

    m.def("rasterize",
          [](const GaussianSet &set, const Camera &camera, const Vec3 &background, int threads) {
              const SplatGroup group{&set};
              RenderOptions o;
              o.threads = threads;
              return renderDict(rasterize(std::span(&group, 1), camera, background, o));
          },
          py::arg("set"), py::arg("camera"), py::arg("background") = Vec3::Zero(), py::arg("threads") = 1);
    m.def("reference_rasterize",
          [](const GaussianSet &set, const Camera &camera, const Vec3 &background) {
              const SplatGroup group{&set};
              return renderDict(referenceRasterize(std::span(&group, 1), camera, background));
          },
          py::arg("set"), py::arg("camera"), py::arg("background") = Vec3::Zero());

    py::class_<KinematicTree>(m, "KinematicTree")
        .def_property_readonly("dof", &KinematicTree::dof)
        .def_property_readonly("link_names",
                               [](const KinematicTree &t) {
                                   std::vector<std::string> names;
                                   for (const auto &l : t.links) names.push_back(l.name);
                                   return names;
                               });
    m.def("parse_kinematic_tree", [](const std::string &urdf) { return parseKinematicTree(urdf); }, py::arg("urdf"));
    m.def("forward_kinematics",
          [](const KinematicTree &tree, const Eigen::VectorXd &q) {
              const LinkPoses poses = forwardKinematics(tree, q);
              py::dict out;
              for (std::size_t i = 0; i < poses.size(); ++i) out[py::str(tree.links[i].name)] = poses[i].matrix();
              return out;
          },
          py::arg("tree"), py::arg("q"));

    m.def("estimate_scale",
          [](const Eigen::Matrix<double, 4, 3, Eigen::RowMajor> &corners, double edgeLengthM, const Vec3 &cloudCentroid) {
              MarkerObservation marker;
              for (int i = 0; i < 4; ++i) marker.corners[static_cast<std::size_t>(i)] = corners.row(i).transpose();
              marker.edgeLengthM = edgeLengthM;
              const ScaleEstimate s = estimateScale(marker, cloudCentroid);
              py::dict d;
              d["scale"] = s.scale;
              d["gravity_dir"] = s.gravityDir;
              d["plane_point"] = s.supportPlane.point;
              d["plane_normal"] = s.supportPlane.normal;
              return d;
          },
          py::arg("corners"), py::arg("edge_length_m"), py::arg("cloud_centroid"));
    m.def("icp_align",
          [](const Points &source, const Points &target, const Eigen::Matrix4d &init, double cutoff, int maxIterations) {
              IcpParams p;
              p.cutoff = cutoff;
              p.maxIterations = maxIterations;
              const AlignmentResult r = icpAlign(toCloud(source), toCloud(target), toTransform(init), p);
              py::dict d;
              d["transform"] = r.transform.matrix();
              d["rms_residual"] = r.rmsResidual;
              d["inlier_fraction"] = r.inlierFraction;
              d["iterations"] = r.iterationsUsed;
              return d;
          },
          py::arg("source"), py::arg("target"), py::arg("init") = Eigen::Matrix4d::Identity(), py::arg("cutoff") = 0.05,
          py::arg("max_iterations") = 50);
    m.def("segment_links_knn",
          [](const Points &splats, const std::vector<Points> &links, std::size_t k, double cutoff) {
              std::vector<PointCloud> clouds;
              for (const auto &l : links) clouds.push_back(toCloud(l));
              return segmentLinksKnn(toCloud(splats), clouds, k, cutoff);
          },
          py::arg("splats"), py::arg("link_clouds"), py::arg("k") = 5, py::arg("cutoff") = 0.02);

    m.def("write_demo_scene",
          [](const std::filesystem::path &dir, const std::string &task, int width, int height, std::uint64_t seed) {
              DemoSceneOptions o;
              o.task = task;
              o.imageWidth = width;
              o.imageHeight = height;
              o.seed = seed;
              return writeDemoScene(dir, o);
          },
          py::arg("dir"), py::arg("task") = "place_box", py::arg("width") = 64, py::arg("height") = 48,
          py::arg("seed") = 1);
    m.def("task_names", &taskNames);

    py::class_<PyEnv>(m, "Env")
        .def(py::init<const std::filesystem::path &, const std::string &, bool, bool>(), py::arg("gsdf"),
             py::arg("task") = "place_box", py::arg("render") = true, py::arg("color_jitter") = false)
        .def("reset", &PyEnv::reset, py::arg("seed"))
        .def("step", &PyEnv::step, py::arg("action"))
        .def_property_readonly("state", &PyEnv::state)
        .def_property_readonly("home_q", &PyEnv::homeQ)
        .def_property_readonly("cameras", &PyEnv::cameras)
        .def_property_readonly("max_steps", &PyEnv::maxSteps)
        .def("expert_action", &PyEnv::expertAction)
        .def("success", &PyEnv::success);
}
