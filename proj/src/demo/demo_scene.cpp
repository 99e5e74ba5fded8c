// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gskit/asset/kinematic_tree.hpp>
#include <gskit/asset/mesh.hpp>
#include <gskit/asset/scene.hpp>
#include <gskit/asset/splat_file.hpp>
#include <gskit/core/error.hpp>
#include <gskit/demo/demo_scene.hpp>
#include <gskit/kinematics/forward_kinematics.hpp>
#include <gskit/kinematics/transform_gaussians.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace gskit {

namespace {

constexpr double kShC0 = 0.28209479177387814;

struct SplatBrush {
    std::mt19937_64 &rng;
    int shDegree = 0;
    double colorJitter = 0.03;
    double viewDependence = 0.0; ///< amplitude of random degree >= 1 terms

    void add(GaussianSet &set, const Vec3 &p, const Vec3 &normal, const Vec3 &rgb, double size,
             double opacity = 0.95) {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        const std::size_t i = set.size();
        set.resize(i + 1);
        set.centroids[i] = p;
        set.rotations[i] = Quat::FromTwoVectors(Vec3::UnitZ(), normal.normalized());
        set.scalesLog[i] = Vec3(std::log(size), std::log(size), std::log(0.25 * size));
        set.opacitiesLogit[i] = std::log(opacity / (1.0 - opacity));
        auto sh = set.sh(i);
        const std::size_t k = static_cast<std::size_t>(set.coeffsPerChannel());
        for (std::size_t c = 0; c < 3; ++c) {
            const double v = std::clamp(rgb[static_cast<Eigen::Index>(c)] + colorJitter * u(rng), 0.0, 1.0);
            sh[c * k] = (v - 0.5) / kShC0;
            for (std::size_t j = 1; j < k; ++j) {
                sh[c * k + j] = viewDependence * u(rng);
            }
        }
    }
};

GaussianSet
emptySet(int degree) {
    GaussianSet s;
    s.shDegree = degree;
    return s;
}

void
writeText(const std::filesystem::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw Error("cannot write '" + path.string() + "'");
}

// Link name, visual colour. Order matches the tree order of demoRobotUrdf().
struct LinkStyle {
    const char *name;
    Vec3 rgb;
};

const LinkStyle kLinkStyles[] = {
    {"base", {0.25, 0.25, 0.28}},    {"carriage", {0.85, 0.55, 0.1}}, {"upper_arm", {0.9, 0.9, 0.92}},
    {"forearm", {0.9, 0.9, 0.92}},   {"hand", {0.2, 0.2, 0.22}},     {"finger", {0.75, 0.1, 0.1}},
};

} // namespace

std::string
demoRobotUrdf() {
    return R"(<?xml version="1.0"?>
<robot name="demo_scara">
  <link name="base">
    <visual><origin xyz="0 0 0.25" rpy="0 0 0"/><geometry><cylinder radius="0.04" length="0.5"/></geometry></visual>
  </link>
  <link name="carriage">
    <visual><geometry><box size="0.08 0.08 0.04"/></geometry></visual>
  </link>
  <link name="upper_arm">
    <visual><origin xyz="0.125 0 0" rpy="0 0 0"/><geometry><mesh filename="meshes/upper_arm.obj"/></geometry></visual>
  </link>
  <link name="forearm">
    <visual><origin xyz="0.1 0 0" rpy="0 0 0"/><geometry><box size="0.2 0.04 0.03"/></geometry></visual>
  </link>
  <link name="hand">
    <visual><origin xyz="0 0 -0.045" rpy="0 0 0"/><geometry><box size="0.03 0.03 0.09"/></geometry></visual>
  </link>
  <link name="finger">
    <visual><origin xyz="0 0.012 -0.08" rpy="0 0 0"/><geometry><box size="0.012 0.008 0.03"/></geometry></visual>
  </link>
  <joint name="lift" type="prismatic">
    <parent link="base"/><child link="carriage"/>
    <origin xyz="0 0 0.1" rpy="0 0 0"/><axis xyz="0 0 1"/>
    <limit lower="0" upper="0.35" effort="50" velocity="0.3"/>
  </joint>
  <joint name="shoulder" type="revolute">
    <parent link="carriage"/><child link="upper_arm"/>
    <origin xyz="0 0 0" rpy="0 0 0"/><axis xyz="0 0 1"/>
    <limit lower="-2.5" upper="2.5" effort="20" velocity="1.5"/>
  </joint>
  <joint name="elbow" type="revolute">
    <parent link="upper_arm"/><child link="forearm"/>
    <origin xyz="0.25 0 0" rpy="0 0 0"/><axis xyz="0 0 1"/>
    <limit lower="-2.6" upper="2.6" effort="20" velocity="1.5"/>
  </joint>
  <joint name="wrist" type="revolute">
    <parent link="forearm"/><child link="hand"/>
    <origin xyz="0.2 0 0" rpy="0 0 0"/><axis xyz="0 0 1"/>
    <limit lower="-3.1" upper="3.1" effort="5" velocity="2.0"/>
  </joint>
  <joint name="finger" type="prismatic">
    <parent link="hand"/><child link="finger"/>
    <origin xyz="0 0 0" rpy="0 0 0"/><axis xyz="0 1 0"/>
    <limit lower="0" upper="0.04" effort="5" velocity="1.0"/>
  </joint>
</robot>
)";
}

std::filesystem::path
writeDemoScene(const std::filesystem::path &dir, const DemoSceneOptions &options) {
    if (options.task != "place_box" && options.task != "stack_cans") {
        throw Error("unknown demo task '" + options.task + "'");
    }
    if (!(options.metricScale > 0.0)) throw Error("metric scale must be positive");
    std::filesystem::create_directories(dir / "meshes");
    std::mt19937_64 rng(options.seed);
    const double toRecon = 1.0 / options.metricScale;

    // Table top with a checker texture, back wall, and the place target.
    GaussianSet background = emptySet(1);
    {
        SplatBrush brush{rng, 1, 0.03, 0.04};
        const double pitch = options.tableSpacing;
        const int nx = static_cast<int>(std::lround(1.0 / pitch));
        const int ny = static_cast<int>(std::lround(0.8 / pitch));
        for (int ix = 0; ix <= nx; ++ix) {
            for (int iy = 0; iy <= ny; ++iy) {
                const Vec3 p(-0.5 + ix * pitch, -0.4 + iy * pitch, -0.002);
                const bool dark = ((static_cast<int>(std::floor((p.x() + 0.5) / 0.1)) +
                                    static_cast<int>(std::floor((p.y() + 0.4) / 0.1))) & 1) != 0;
                Vec3 rgb = dark ? Vec3(0.55, 0.4, 0.28) : Vec3(0.7, 0.55, 0.38);
                if (options.task == "place_box" &&
                    (p - kDemoTargetZone).head<2>().norm() <= kDemoTargetRadius) {
                    rgb = Vec3(0.15, 0.7, 0.2);
                }
                brush.add(background, p, Vec3::UnitZ(), rgb, 0.6 * pitch);
            }
        }
        const double wallPitch = 2.0 * pitch;
        for (double y = -0.5; y <= 0.5 + 1e-9; y += wallPitch) {
            for (double z = 0.0; z <= 0.6 + 1e-9; z += wallPitch) {
                brush.add(background, Vec3(-0.55, y, z), Vec3::UnitX(), Vec3(0.45, 0.5, 0.6), 0.6 * wallPitch);
            }
        }
    }
    saveSplatFile(dir / "background.ply", scaleGaussians(background, toRecon));

    // Robot: visual geometry sampled at the capture pose, labelled by link.
    writeText(dir / "meshes" / "upper_arm.obj", writeObj(makeBox(Vec3(0.25, 0.05, 0.03))));
    writeText(dir / "demo_scara.urdf", demoRobotUrdf());
    const KinematicTree tree = loadKinematicTree(dir / "demo_scara.urdf");
    JointConfig capturedQ(5);
    capturedQ << 0.1, -0.4, 1.0, 0.3, 0.04;
    const std::vector<double> homeQ = {0.15, 0.0, 1.5, 0.0, 0.04};
    const RigidTransform robotBase = RigidTransform::fromTranslation(kDemoRobotBase);
    const LinkPoses captured = forwardKinematics(tree, capturedQ);

    GaussianSet scan = emptySet(0);
    std::vector<int> labels;
    {
        SplatBrush brush{rng, 0, 0.03, 0.0};
        for (std::size_t l = 0; l < tree.links.size(); ++l) {
            const TriangleMesh mesh = geometryMesh(*tree.links[l].visual).transformed(robotBase * captured[l]);
            for (const auto &s : sampleSurface(mesh, static_cast<std::size_t>(options.splatsPerLink), rng)) {
                brush.add(scan, s.point, s.normal, kLinkStyles[l].rgb, 0.008);
                labels.push_back(static_cast<int>(l));
            }
        }
        // A cable lying on the table behind the base: part of the scan but of no link.
        for (int i = 0; i < options.unlabeledRobotSplats; ++i) {
            const double t = (i + 0.5) / std::max(1, options.unlabeledRobotSplats);
            const Vec3 p = kDemoRobotBase + Vec3(-0.02 - 0.15 * t, 0.05 + 0.25 * t, 0.004);
            brush.add(scan, p, Vec3::UnitZ(), Vec3(0.1, 0.1, 0.1), 0.008);
            labels.push_back(-1);
        }
    }
    saveSplatFile(dir / "robot.ply", scaleGaussians(scan, toRecon));

    SceneDescription scene;
    scene.metricScale = options.metricScale;
    scene.background = "background.ply";
    RobotEntry robot;
    robot.name = "scara";
    robot.urdf = "demo_scara.urdf";
    robot.splats = "robot.ply";
    robot.baseTransform = robotBase;
    robot.linkLabels = labels;
    robot.capturedQ.assign(capturedQ.data(), capturedQ.data() + capturedQ.size());
    robot.homeQ = homeQ;
    robot.eeLink = "hand";
    robot.graspOffset = RigidTransform::fromTranslation(Vec3(0.0, 0.0, -0.1));
    robot.gripper = GripperSpec{"finger", 0.04, 0.0};
    scene.robots.push_back(robot);

    // Objects. Splat files live in a frame rotated and shifted from the object frame so the
    // splat-to-object transform is exercised.
    struct ObjectStyle {
        std::string name;
        TriangleMesh mesh;
        Vec3 rgb;
        Vec3 rest;
        bool stackable;
        double mass;
    };
    std::vector<ObjectStyle> styles;
    if (options.task == "place_box") {
        styles.push_back({"box", makeBox(Vec3::Constant(0.04)), Vec3(0.85, 0.12, 0.1), Vec3(0.05, 0.1, 0.02), false,
                          0.1});
    } else {
        styles.push_back({"can_a", makeCylinder(0.025, 0.06), Vec3(0.1, 0.25, 0.85), Vec3(0.05, 0.12, 0.03), true,
                          0.15});
        styles.push_back({"can_b", makeCylinder(0.025, 0.06), Vec3(0.95, 0.8, 0.1), Vec3(0.0, -0.15, 0.03), true,
                          0.15});
    }
    for (const auto &style : styles) {
        const RigidTransform splatToObject =
            RigidTransform::fromAxisAngle(Vec3::UnitZ(), 0.5 * std::numbers::pi, Vec3(0.0, 0.0, 0.01));
        GaussianSet splats = emptySet(1);
        SplatBrush brush{rng, 1, 0.04, 0.03};
        for (const auto &s : sampleSurface(style.mesh, static_cast<std::size_t>(options.splatsPerObject), rng)) {
            brush.add(splats, s.point, s.normal, style.rgb, 0.006, 0.97);
        }
        saveSplatFile(dir / (style.name + ".ply"), transformGaussians(splats, splatToObject.inverse()));
        writeText(dir / "meshes" / (style.name + ".obj"), writeObj(style.mesh));
        ObjectEntry entry;
        entry.name = style.name;
        entry.splats = style.name + ".ply";
        entry.mesh = "meshes/" + style.name + ".obj";
        entry.transform = splatToObject;
        entry.restPose = RigidTransform::fromTranslation(style.rest);
        entry.massKg = style.mass;
        entry.stackable = style.stackable;
        scene.objects.push_back(entry);
    }

    scene.supportPlane.point = Vec3::Zero();
    scene.supportPlane.normal = Vec3::UnitZ();
    scene.supportPlane.halfExtents = Eigen::Vector2d(0.5, 0.4);
    scene.gravityDir = -Vec3::UnitZ();

    Camera front;
    front.name = "front";
    front.width = options.imageWidth;
    front.height = options.imageHeight;
    front.fx = front.fy = 0.9 * options.imageWidth;
    front.cx = 0.5 * (options.imageWidth - 1);
    front.cy = 0.5 * (options.imageHeight - 1);
    front.worldToCamera = lookAt(Vec3(0.45, 0.0, 0.5), Vec3(-0.1, 0.0, 0.0), Vec3::UnitZ());
    scene.cameras.push_back(front);

    Camera wrist = front;
    wrist.name = "wrist";
    wrist.fx = wrist.fy = 0.6 * options.imageWidth;
    wrist.worldToCamera = RigidTransform::identity();
    Mat3 axes;
    axes.col(0) = Vec3::UnitY();
    axes.col(1) = Vec3::UnitX();
    axes.col(2) = -Vec3::UnitZ();
    wrist.mount = CameraMount{0, "hand", RigidTransform::fromMatrix(axes, Vec3(0.04, 0.0, -0.02))};
    scene.cameras.push_back(wrist);

    const std::filesystem::path gsdf = dir / (options.task + ".gsdf");
    saveGsdf(gsdf, scene);
    return gsdf;
}

} // namespace gskit
