// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gskit/asset/kinematic_tree.hpp>
#include <gskit/asset/scene.hpp>
#include <gskit/asset/splat_file.hpp>
#include <gskit/core/error.hpp>

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace gskit {

using nlohmann::json;

std::string
Camera::invalidReason() const {
    if (width < 1 || height < 1) return "width and height must be at least 1";
    if (!(fx > 0.0) || !(fy > 0.0)) return "fx and fy must be positive";
    if (!(near > 0.0) || !(near < far)) return "require 0 < near < far";
    if (!std::isfinite(cx) || !std::isfinite(cy) || !worldToCamera.isFinite()) return "non-finite intrinsics or pose";
    return {};
}

RigidTransform
lookAt(const Vec3 &eye, const Vec3 &target, const Vec3 &up) {
    const Vec3 forward = (target - eye).normalized();
    const Vec3 down = -(up - up.dot(forward) * forward).normalized();
    const Vec3 right = down.cross(forward);
    Mat3 camToWorld;
    camToWorld.col(0) = right;
    camToWorld.col(1) = down;
    camToWorld.col(2) = forward;
    return RigidTransform::fromMatrix(camToWorld, eye).inverse();
}

std::filesystem::path
SceneDescription::resolve(const std::string &ref) const {
    const std::filesystem::path p(ref);
    return p.is_absolute() ? p : baseDir / p;
}

const Camera *
SceneDescription::camera(const std::string &n) const {
    for (const auto &c : cameras) {
        if (c.name == n) return &c;
    }
    return nullptr;
}

int
SceneDescription::objectIndex(const std::string &n) const {
    for (std::size_t i = 0; i < objects.size(); ++i) {
        if (objects[i].name == n) return static_cast<int>(i);
    }
    return -1;
}

std::size_t
ValidationReport::count(ValidationIssue::Kind kind) const {
    std::size_t n = 0;
    for (const auto &i : issues) n += i.kind == kind ? 1 : 0;
    return n;
}

std::string
ValidationReport::toString() const {
    std::string out;
    for (const auto &i : issues) {
        out += i.field + ": " + i.message + "\n";
    }
    return out;
}

std::uint64_t
fnv1a64(std::string_view data, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (const unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string
hexDigest(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

namespace {

class Schema {
  public:
    [[noreturn]] void fail(const std::string &field, const std::string &message) const {
        throw SceneError("GSDF schema violation at '" + field + "': " + message);
    }

    const json &require(const json &obj, const std::string &key, const std::string &path) const {
        if (!obj.is_object()) fail(path, "expected an object");
        const auto it = obj.find(key);
        if (it == obj.end()) fail(path + "." + key, "missing field");
        return *it;
    }

    double number(const json &v, const std::string &path) const {
        if (!v.is_number()) fail(path, "expected a number");
        return v.get<double>();
    }

    std::string string(const json &v, const std::string &path) const {
        if (!v.is_string()) fail(path, "expected a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const json &v, const std::string &path, std::size_t arity) const {
        if (!v.is_array()) fail(path, "expected an array");
        if (arity != 0 && v.size() != arity) {
            fail(path, "expected " + std::to_string(arity) + " values, got " + std::to_string(v.size()));
        }
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
        return out;
    }

    Vec3 vec3(const json &v, const std::string &path) const {
        const auto n = numbers(v, path, 3);
        return {n[0], n[1], n[2]};
    }

    RigidTransform transform(const json &v, const std::string &path) const {
        if (!v.is_object()) fail(path, "expected a transform object");
        RigidTransform t;
        if (v.contains("rotation")) {
            const auto q = numbers(v["rotation"], path + ".rotation", 4);
            Quat r(q[0], q[1], q[2], q[3]);
            if (!(r.norm() > 0.0)) fail(path + ".rotation", "zero quaternion");
            // Keep near-unit input untouched so documents round-trip exactly.
            t.rotation = std::abs(r.norm() - 1.0) > 1e-9 ? r.normalized() : r;
        }
        if (v.contains("translation")) t.translation = vec3(v["translation"], path + ".translation");
        return t;
    }

    RigidTransform optionalTransform(const json &obj, const std::string &key, const std::string &path) const {
        return obj.contains(key) ? transform(obj[key], path + "." + key) : RigidTransform{};
    }
};

json
toJson(const RigidTransform &t) {
    const Quat &q = t.rotation;
    return json{{"rotation", {q.w(), q.x(), q.y(), q.z()}},
                {"translation", {t.translation.x(), t.translation.y(), t.translation.z()}}};
}

json
toJson(const Vec3 &v) {
    return json::array({v.x(), v.y(), v.z()});
}

Camera
parseCamera(const Schema &s, const json &c, const std::string &path) {
    Camera cam;
    cam.name = s.string(s.require(c, "name", path), path + ".name");
    cam.width = static_cast<int>(s.number(s.require(c, "width", path), path + ".width"));
    cam.height = static_cast<int>(s.number(s.require(c, "height", path), path + ".height"));
    cam.fx = s.number(s.require(c, "fx", path), path + ".fx");
    cam.fy = s.number(s.require(c, "fy", path), path + ".fy");
    cam.cx = s.number(s.require(c, "cx", path), path + ".cx");
    cam.cy = s.number(s.require(c, "cy", path), path + ".cy");
    cam.near = s.number(s.require(c, "near", path), path + ".near");
    cam.far = s.number(s.require(c, "far", path), path + ".far");
    cam.worldToCamera = s.optionalTransform(c, "world_to_camera", path);
    if (c.contains("mount")) {
        const json &m = c["mount"];
        CameraMount mount;
        mount.robot = m.contains("robot") ? static_cast<int>(s.number(m["robot"], path + ".mount.robot")) : 0;
        mount.link = s.string(s.require(m, "link", path + ".mount"), path + ".mount.link");
        mount.cameraInLink = s.optionalTransform(m, "camera_in_link", path + ".mount");
        cam.mount = mount;
    }
    return cam;
}

} // namespace

SceneDescription
parseGsdf(const std::string &text, const std::filesystem::path &baseDir, GsdfParseOptions options) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error &e) {
        throw SceneError(std::string("GSDF is not a well-formed document: ") + e.what());
    }
    const Schema s;
    SceneDescription scene;
    scene.baseDir = baseDir;
    scene.version = static_cast<int>(s.number(s.require(doc, "gsdf_version", "$"), "gsdf_version"));
    scene.metricScale = s.number(s.require(doc, "metric_scale", "$"), "metric_scale");
    scene.background = s.string(s.require(doc, "background", "$"), "background");
    scene.gravityDir = s.vec3(s.require(doc, "gravity_dir", "$"), "gravity_dir");

    const json &plane = s.require(doc, "support_plane", "$");
    scene.supportPlane.point = s.vec3(s.require(plane, "point", "support_plane"), "support_plane.point");
    scene.supportPlane.normal = s.vec3(s.require(plane, "normal", "support_plane"), "support_plane.normal");
    if (plane.contains("half_extents")) {
        const auto e = s.numbers(plane["half_extents"], "support_plane.half_extents", 2);
        scene.supportPlane.halfExtents = Eigen::Vector2d(e[0], e[1]);
    }

    const json &robots = s.require(doc, "robots", "$");
    if (!robots.is_array()) s.fail("robots", "expected an array");
    for (std::size_t i = 0; i < robots.size(); ++i) {
        const std::string p = "robots[" + std::to_string(i) + "]";
        const json &r = robots[i];
        RobotEntry e;
        e.name = r.contains("name") ? s.string(r["name"], p + ".name") : "robot" + std::to_string(i);
        e.urdf = s.string(s.require(r, "urdf", p), p + ".urdf");
        e.splats = s.string(s.require(r, "splats", p), p + ".splats");
        e.baseTransform = s.transform(s.require(r, "base_transform", p), p + ".base_transform");
        const json &labels = s.require(r, "link_labels", p);
        if (!labels.is_array()) s.fail(p + ".link_labels", "expected an array");
        e.linkLabels.reserve(labels.size());
        for (std::size_t k = 0; k < labels.size(); ++k) {
            if (!labels[k].is_number_integer()) s.fail(p + ".link_labels[" + std::to_string(k) + "]", "expected an integer");
            e.linkLabels.push_back(labels[k].get<int>());
        }
        if (r.contains("captured_q")) e.capturedQ = s.numbers(r["captured_q"], p + ".captured_q", 0);
        if (r.contains("home_q")) e.homeQ = s.numbers(r["home_q"], p + ".home_q", 0);
        if (r.contains("ee_link")) e.eeLink = s.string(r["ee_link"], p + ".ee_link");
        e.graspOffset = s.optionalTransform(r, "grasp_offset", p);
        if (r.contains("gripper")) {
            const json &g = r["gripper"];
            GripperSpec spec;
            spec.joint = s.string(s.require(g, "joint", p + ".gripper"), p + ".gripper.joint");
            spec.open = s.number(s.require(g, "open", p + ".gripper"), p + ".gripper.open");
            spec.closed = s.number(s.require(g, "closed", p + ".gripper"), p + ".gripper.closed");
            e.gripper = spec;
        }
        scene.robots.push_back(std::move(e));
    }

    const json &objects = s.require(doc, "objects", "$");
    if (!objects.is_array()) s.fail("objects", "expected an array");
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const std::string p = "objects[" + std::to_string(i) + "]";
        const json &o = objects[i];
        ObjectEntry e;
        e.name = o.contains("name") ? s.string(o["name"], p + ".name") : "object" + std::to_string(i);
        e.splats = s.string(s.require(o, "splats", p), p + ".splats");
        e.mesh = s.string(s.require(o, "mesh", p), p + ".mesh");
        e.transform = s.transform(s.require(o, "transform", p), p + ".transform");
        e.restPose = s.optionalTransform(o, "rest_pose", p);
        e.massKg = s.number(s.require(o, "mass_kg", p), p + ".mass_kg");
        if (o.contains("stackable")) {
            if (!o["stackable"].is_boolean()) s.fail(p + ".stackable", "expected a boolean");
            e.stackable = o["stackable"].get<bool>();
        }
        if (o.contains("materials")) {
            if (!o["materials"].is_object()) s.fail(p + ".materials", "expected an object");
            e.materialsJson = o["materials"].dump();
        }
        scene.objects.push_back(std::move(e));
    }

    const json &cameras = s.require(doc, "cameras", "$");
    if (!cameras.is_array()) s.fail("cameras", "expected an array");
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        scene.cameras.push_back(parseCamera(s, cameras[i], "cameras[" + std::to_string(i) + "]"));
    }

    if (options.validate) {
        const auto report = validateScene(scene, baseDir);
        if (!report.empty()) {
            throw SceneError("GSDF validation failed:\n" + report.toString());
        }
    }
    return scene;
}

std::string
writeGsdf(const SceneDescription &scene) {
    // Label arrays are emitted on one line; everything else is indented.
    constexpr std::string_view kLabelToken = "@@labels:";
    json doc;
    doc["gsdf_version"] = scene.version;
    doc["metric_scale"] = scene.metricScale;
    doc["background"] = scene.background;
    doc["robots"] = json::array();
    std::vector<std::string> labelDumps;
    for (const auto &r : scene.robots) {
        json e;
        e["name"] = r.name;
        e["urdf"] = r.urdf;
        e["splats"] = r.splats;
        e["base_transform"] = toJson(r.baseTransform);
        labelDumps.push_back(json(r.linkLabels).dump());
        e["link_labels"] = std::string(kLabelToken) + std::to_string(labelDumps.size() - 1);
        e["captured_q"] = r.capturedQ;
        e["home_q"] = r.homeQ;
        e["ee_link"] = r.eeLink;
        e["grasp_offset"] = toJson(r.graspOffset);
        if (r.gripper) {
            e["gripper"] = {{"joint", r.gripper->joint}, {"open", r.gripper->open}, {"closed", r.gripper->closed}};
        }
        doc["robots"].push_back(e);
    }
    doc["objects"] = json::array();
    for (const auto &o : scene.objects) {
        json e;
        e["name"] = o.name;
        e["splats"] = o.splats;
        e["mesh"] = o.mesh;
        e["transform"] = toJson(o.transform);
        e["rest_pose"] = toJson(o.restPose);
        e["mass_kg"] = o.massKg;
        e["stackable"] = o.stackable;
        e["materials"] = json::parse(o.materialsJson);
        doc["objects"].push_back(e);
    }
    json plane{{"point", toJson(scene.supportPlane.point)}, {"normal", toJson(scene.supportPlane.normal)}};
    if (scene.supportPlane.halfExtents) {
        plane["half_extents"] = {scene.supportPlane.halfExtents->x(), scene.supportPlane.halfExtents->y()};
    }
    doc["support_plane"] = plane;
    doc["gravity_dir"] = toJson(scene.gravityDir);
    doc["cameras"] = json::array();
    for (const auto &c : scene.cameras) {
        json e{{"name", c.name}, {"width", c.width}, {"height", c.height}, {"fx", c.fx}, {"fy", c.fy},
               {"cx", c.cx}, {"cy", c.cy}, {"near", c.near}, {"far", c.far},
               {"world_to_camera", toJson(c.worldToCamera)}};
        if (c.mount) {
            e["mount"] = {{"robot", c.mount->robot}, {"link", c.mount->link},
                          {"camera_in_link", toJson(c.mount->cameraInLink)}};
        }
        doc["cameras"].push_back(e);
    }
    std::string text = doc.dump(2);
    for (std::size_t i = 0; i < labelDumps.size(); ++i) {
        const std::string token = "\"" + std::string(kLabelToken) + std::to_string(i) + "\"";
        const auto pos = text.find(token);
        text.replace(pos, token.size(), labelDumps[i]);
    }
    return text + "\n";
}

SceneDescription
loadGsdf(const std::filesystem::path &path, GsdfParseOptions options) {
    std::ifstream in(path);
    if (!in) {
        throw SceneError("cannot open '" + path.string() + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parseGsdf(ss.str(), path.parent_path(), options);
}

void
saveGsdf(const std::filesystem::path &path, const SceneDescription &scene) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) {
        throw SceneError("cannot write '" + path.string() + "'");
    }
    out << writeGsdf(scene);
}

ValidationReport
validateScene(const SceneDescription &scene, const std::filesystem::path &assetRoot) {
    ValidationReport report;
    using Kind = ValidationIssue::Kind;
    auto add = [&](Kind k, std::string field, std::string msg) {
        report.issues.push_back({k, std::move(field), std::move(msg)});
    };
    auto resolve = [&](const std::string &ref) {
        const std::filesystem::path p(ref);
        return p.is_absolute() ? p : assetRoot / p;
    };
    auto checkFile = [&](const std::string &ref, const std::string &field) {
        if (ref.empty()) {
            add(Kind::Reference, field, "empty file reference");
            return false;
        }
        if (!std::filesystem::is_regular_file(resolve(ref))) {
            add(Kind::Reference, field, "unresolved reference '" + resolve(ref).string() + "'");
            return false;
        }
        return true;
    };
    auto checkUnit = [&](const Vec3 &v, const std::string &field) {
        if (!v.allFinite() || std::abs(v.norm() - 1.0) > 1e-6) add(Kind::Value, field, "must be unit length");
    };

    if (scene.version != 1) add(Kind::Value, "gsdf_version", "unsupported version " + std::to_string(scene.version));
    if (!(scene.metricScale > 0.0) || !std::isfinite(scene.metricScale)) {
        add(Kind::Value, "metric_scale", "must be positive");
    }
    checkFile(scene.background, "background");
    checkUnit(scene.supportPlane.normal, "support_plane.normal");
    checkUnit(scene.gravityDir, "gravity_dir");
    if (scene.supportPlane.halfExtents && !(scene.supportPlane.halfExtents->minCoeff() > 0.0)) {
        add(Kind::Value, "support_plane.half_extents", "must be positive");
    }

    std::vector<std::optional<KinematicTree>> trees;
    for (std::size_t i = 0; i < scene.robots.size(); ++i) {
        const RobotEntry &r = scene.robots[i];
        const std::string p = "robots[" + std::to_string(i) + "]";
        std::optional<KinematicTree> tree;
        if (checkFile(r.urdf, p + ".urdf")) {
            try {
                tree = loadKinematicTree(resolve(r.urdf));
                for (const auto &link : tree->links) {
                    for (const auto *g : {link.visual ? &*link.visual : nullptr, link.collision ? &*link.collision : nullptr}) {
                        if (g && g->kind == Geometry::Kind::Mesh && !std::filesystem::is_regular_file(g->meshPath)) {
                            add(Kind::Reference, p + ".urdf", "unresolved mesh '" + g->meshPath.string() + "' on link '" + link.name + "'");
                        }
                    }
                }
            } catch (const Error &e) {
                add(Kind::Value, p + ".urdf", e.what());
            }
        }
        trees.push_back(tree);
        if (checkFile(r.splats, p + ".splats")) {
            try {
                const auto set = loadSplatFile(resolve(r.splats));
                if (set.size() != r.linkLabels.size()) {
                    add(Kind::Label, p + ".link_labels",
                        "expected " + std::to_string(set.size()) + " labels, got " + std::to_string(r.linkLabels.size()));
                }
            } catch (const Error &e) {
                add(Kind::Value, p + ".splats", e.what());
            }
        }
        if (tree) {
            const int links = static_cast<int>(tree->links.size());
            for (std::size_t k = 0; k < r.linkLabels.size(); ++k) {
                if (r.linkLabels[k] < -1 || r.linkLabels[k] >= links) {
                    add(Kind::Label, p + ".link_labels[" + std::to_string(k) + "]",
                        "label out of range: " + std::to_string(r.linkLabels[k]) + " (robot has " +
                            std::to_string(links) + " links)");
                    break;
                }
            }
            if (r.capturedQ.size() != tree->dof()) {
                add(Kind::Value, p + ".captured_q", "expected " + std::to_string(tree->dof()) + " values");
            }
            if (!r.homeQ.empty() && r.homeQ.size() != tree->dof()) {
                add(Kind::Value, p + ".home_q", "expected " + std::to_string(tree->dof()) + " values");
            }
            if (!r.eeLink.empty() && tree->linkIndex(r.eeLink) < 0) {
                add(Kind::Value, p + ".ee_link", "unknown link '" + r.eeLink + "'");
            }
            if (r.gripper && tree->dofIndex(r.gripper->joint) < 0) {
                add(Kind::Value, p + ".gripper.joint", "unknown or fixed joint '" + r.gripper->joint + "'");
            }
        }
    }

    std::set<std::string> objectNames;
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        const ObjectEntry &o = scene.objects[i];
        const std::string p = "objects[" + std::to_string(i) + "]";
        if (!objectNames.insert(o.name).second) add(Kind::Value, p + ".name", "duplicate object name");
        checkFile(o.splats, p + ".splats");
        checkFile(o.mesh, p + ".mesh");
        if (!(o.massKg > 0.0) || !std::isfinite(o.massKg)) add(Kind::Value, p + ".mass_kg", "mass must be positive");
    }

    std::set<std::string> cameraNames;
    for (std::size_t i = 0; i < scene.cameras.size(); ++i) {
        const Camera &c = scene.cameras[i];
        const std::string p = "cameras[" + std::to_string(i) + "]";
        if (!cameraNames.insert(c.name).second) add(Kind::Value, p + ".name", "duplicate camera name");
        if (const auto why = c.invalidReason(); !why.empty()) add(Kind::Value, p, why);
        if (c.mount) {
            if (c.mount->robot < 0 || c.mount->robot >= static_cast<int>(scene.robots.size())) {
                add(Kind::Value, p + ".mount.robot", "robot index out of range");
            } else if (const auto &t = trees[static_cast<std::size_t>(c.mount->robot)]; t && t->linkIndex(c.mount->link) < 0) {
                add(Kind::Value, p + ".mount.link", "unknown link '" + c.mount->link + "'");
            }
        }
    }
    return report;
}

} // namespace gskit
