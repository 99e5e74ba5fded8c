// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gskit/asset/kinematic_tree.hpp>
#include <gskit/core/error.hpp>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <deque>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace gskit {

namespace pt = boost::property_tree;

const char *
toString(JointType type) {
    switch (type) {
    case JointType::Revolute: return "revolute";
    case JointType::Prismatic: return "prismatic";
    case JointType::Fixed: return "fixed";
    }
    return "?";
}

int
KinematicTree::linkIndex(const std::string &n) const {
    for (std::size_t i = 0; i < links.size(); ++i) {
        if (links[i].name == n) return static_cast<int>(i);
    }
    return -1;
}

int
KinematicTree::jointIndex(const std::string &n) const {
    for (std::size_t i = 0; i < joints.size(); ++i) {
        if (joints[i].name == n) return static_cast<int>(i);
    }
    return -1;
}

int
KinematicTree::dofIndex(const std::string &jointName) const {
    const int j = jointIndex(jointName);
    return j < 0 ? -1 : dofIndex(j);
}

JointConfig
KinematicTree::lowerLimits() const {
    JointConfig q(static_cast<Eigen::Index>(dof()));
    for (std::size_t d = 0; d < dof(); ++d) q[static_cast<Eigen::Index>(d)] = joints[static_cast<std::size_t>(dofJoints[d])].lower;
    return q;
}

JointConfig
KinematicTree::upperLimits() const {
    JointConfig q(static_cast<Eigen::Index>(dof()));
    for (std::size_t d = 0; d < dof(); ++d) q[static_cast<Eigen::Index>(d)] = joints[static_cast<std::size_t>(dofJoints[d])].upper;
    return q;
}

JointConfig
KinematicTree::velocityLimits(double fallback) const {
    JointConfig v(static_cast<Eigen::Index>(dof()));
    for (std::size_t d = 0; d < dof(); ++d) {
        const double lim = joints[static_cast<std::size_t>(dofJoints[d])].velocity;
        v[static_cast<Eigen::Index>(d)] = lim > 0.0 ? lim : fallback;
    }
    return v;
}

int
KinematicTree::clampToLimits(JointConfig &q) const {
    int moved = 0;
    for (std::size_t d = 0; d < dof(); ++d) {
        const Joint &j = joints[static_cast<std::size_t>(dofJoints[d])];
        double &v = q[static_cast<Eigen::Index>(d)];
        if (v < j.lower) {
            v = j.lower;
            ++moved;
        } else if (v > j.upper) {
            v = j.upper;
            ++moved;
        }
    }
    return moved;
}

void
KinematicTree::finalize() {
    if (links.empty()) {
        throw KinematicTreeError("kinematic tree has no links");
    }
    std::map<std::string, int> linkByName;
    for (std::size_t i = 0; i < links.size(); ++i) {
        if (!linkByName.emplace(links[i].name, static_cast<int>(i)).second) {
            throw KinematicTreeError("duplicate link '" + links[i].name + "'");
        }
    }
    std::map<std::string, int> parentJointOf;
    for (std::size_t j = 0; j < joints.size(); ++j) {
        const Joint &jt = joints[j];
        if (!linkByName.contains(jt.parent)) {
            throw KinematicTreeError("joint '" + jt.name + "' references unknown parent link '" + jt.parent + "'");
        }
        if (!linkByName.contains(jt.child)) {
            throw KinematicTreeError("joint '" + jt.name + "' references unknown child link '" + jt.child + "'");
        }
        if (!parentJointOf.emplace(jt.child, static_cast<int>(j)).second) {
            throw KinematicTreeError("cycle detected: link '" + jt.child + "' has more than one parent joint");
        }
        if (jt.type != JointType::Fixed) {
            if (std::abs(jt.axis.norm() - 1.0) > 1e-9) {
                throw KinematicTreeError("joint '" + jt.name + "' axis is not unit length");
            }
            if (jt.lower > jt.upper) {
                throw KinematicTreeError("joint '" + jt.name + "' has lower limit above upper limit");
            }
        }
    }
    std::vector<std::string> roots;
    for (const auto &l : links) {
        if (!parentJointOf.contains(l.name)) roots.push_back(l.name);
    }
    if (roots.empty()) {
        throw KinematicTreeError("cycle detected: every link has a parent joint");
    }
    if (roots.size() > 1) {
        std::string names;
        for (const auto &r : roots) names += (names.empty() ? "" : ", ") + r;
        throw KinematicTreeError("multiple roots: " + names);
    }

    // Breadth-first from the root; children visited in declaration order.
    std::vector<Link> orderedLinks;
    std::vector<Joint> orderedJoints;
    orderedLinks.push_back(links[static_cast<std::size_t>(linkByName[roots.front()])]);
    std::deque<std::string> frontier{roots.front()};
    std::map<std::string, int> newIndex{{roots.front(), 0}};
    while (!frontier.empty()) {
        const std::string parent = frontier.front();
        frontier.pop_front();
        for (const Joint &jt : joints) {
            if (jt.parent != parent) continue;
            Joint copy = jt;
            copy.parentLink = newIndex[parent];
            newIndex[jt.child] = static_cast<int>(orderedLinks.size());
            orderedLinks.push_back(links[static_cast<std::size_t>(linkByName[jt.child])]);
            orderedJoints.push_back(copy);
            frontier.push_back(jt.child);
        }
    }
    if (orderedLinks.size() != links.size()) {
        throw KinematicTreeError("cycle detected: " + std::to_string(links.size() - orderedLinks.size()) +
                                 " link(s) unreachable from root '" + roots.front() + "'");
    }
    links = std::move(orderedLinks);
    joints = std::move(orderedJoints);
    dofJoints.clear();
    jointDof.assign(joints.size(), -1);
    for (std::size_t j = 0; j < joints.size(); ++j) {
        if (joints[j].type != JointType::Fixed) {
            jointDof[j] = static_cast<int>(dofJoints.size());
            dofJoints.push_back(static_cast<int>(j));
        }
    }
}

namespace {

Vec3
parseVec3(const std::string &text, const std::string &what) {
    std::istringstream in(text);
    Vec3 v;
    if (!(in >> v.x() >> v.y() >> v.z())) {
        throw KinematicTreeError("malformed " + what + " '" + text + "'");
    }
    return v;
}

RigidTransform
parseOrigin(const pt::ptree &node) {
    const auto origin = node.get_child_optional("origin");
    if (!origin) return {};
    const Vec3 xyz = parseVec3(origin->get<std::string>("<xmlattr>.xyz", "0 0 0"), "origin xyz");
    const Vec3 rpy = parseVec3(origin->get<std::string>("<xmlattr>.rpy", "0 0 0"), "origin rpy");
    Quat q = Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
             Eigen::AngleAxisd(rpy.x(), Vec3::UnitX());
    q.normalize();
    return {q, xyz};
}

std::optional<Geometry>
parseGeometry(const pt::ptree &node, const std::filesystem::path &baseDir) {
    Geometry g;
    g.origin = parseOrigin(node);
    const auto geom = node.get_child_optional("geometry");
    if (!geom) {
        throw KinematicTreeError("visual/collision element without geometry");
    }
    if (const auto box = geom->get_child_optional("box")) {
        g.kind = Geometry::Kind::Box;
        g.boxSize = parseVec3(box->get<std::string>("<xmlattr>.size"), "box size");
    } else if (const auto cyl = geom->get_child_optional("cylinder")) {
        g.kind = Geometry::Kind::Cylinder;
        g.radius = cyl->get<double>("<xmlattr>.radius");
        g.length = cyl->get<double>("<xmlattr>.length");
    } else if (const auto sph = geom->get_child_optional("sphere")) {
        g.kind = Geometry::Kind::Sphere;
        g.radius = sph->get<double>("<xmlattr>.radius");
    } else if (const auto mesh = geom->get_child_optional("mesh")) {
        g.kind = Geometry::Kind::Mesh;
        g.meshFile = mesh->get<std::string>("<xmlattr>.filename");
        g.meshPath = baseDir / g.meshFile;
        if (const auto scale = mesh->get_optional<std::string>("<xmlattr>.scale")) {
            g.meshScale = parseVec3(*scale, "mesh scale");
        }
    } else {
        throw KinematicTreeError("unsupported geometry element");
    }
    return g;
}

} // namespace

KinematicTree
parseKinematicTree(const std::string &text, const std::filesystem::path &baseDir) {
    pt::ptree doc;
    try {
        std::istringstream in(text);
        pt::read_xml(in, doc);
    } catch (const pt::xml_parser_error &e) {
        throw KinematicTreeError(std::string("malformed robot description: ") + e.what());
    }
    const auto robot = doc.get_child_optional("robot");
    if (!robot) {
        throw KinematicTreeError("missing <robot> element");
    }
    KinematicTree tree;
    tree.name = robot->get<std::string>("<xmlattr>.name", "");
    try {
        for (const auto &[tag, node] : *robot) {
            if (tag == "<xmlattr>" || tag == "<xmlcomment>" || tag == "material") {
                continue;
            }
            if (tag == "link") {
                Link link;
                link.name = node.get<std::string>("<xmlattr>.name");
                if (const auto v = node.get_child_optional("visual")) link.visual = parseGeometry(*v, baseDir);
                if (const auto c = node.get_child_optional("collision")) link.collision = parseGeometry(*c, baseDir);
                tree.links.push_back(std::move(link));
            } else if (tag == "joint") {
                Joint joint;
                joint.name = node.get<std::string>("<xmlattr>.name");
                const std::string type = node.get<std::string>("<xmlattr>.type");
                if (type == "revolute") {
                    joint.type = JointType::Revolute;
                } else if (type == "prismatic") {
                    joint.type = JointType::Prismatic;
                } else if (type == "fixed") {
                    joint.type = JointType::Fixed;
                } else {
                    throw KinematicTreeError("joint '" + joint.name + "': unsupported joint type '" + type + "'");
                }
                if (node.get_child_optional("mimic")) {
                    throw KinematicTreeError("joint '" + joint.name + "': mimic joints are not supported");
                }
                joint.parent = node.get<std::string>("parent.<xmlattr>.link");
                joint.child = node.get<std::string>("child.<xmlattr>.link");
                joint.origin = parseOrigin(node);
                if (joint.type != JointType::Fixed) {
                    const auto axis = node.get_optional<std::string>("axis.<xmlattr>.xyz");
                    if (!axis) {
                        throw KinematicTreeError("joint '" + joint.name + "': missing axis on non-fixed joint");
                    }
                    const Vec3 a = parseVec3(*axis, "axis");
                    if (a.norm() < 1e-12) {
                        throw KinematicTreeError("joint '" + joint.name + "': zero-length axis");
                    }
                    joint.axis = a.normalized();
                    const auto limit = node.get_child_optional("limit");
                    if (!limit) {
                        throw KinematicTreeError("joint '" + joint.name + "': missing limit on non-fixed joint");
                    }
                    joint.lower = limit->get<double>("<xmlattr>.lower", 0.0);
                    joint.upper = limit->get<double>("<xmlattr>.upper", 0.0);
                    joint.velocity = limit->get<double>("<xmlattr>.velocity", 0.0);
                    if (joint.lower > joint.upper) {
                        throw KinematicTreeError("joint '" + joint.name + "': limit inversion (lower " +
                                                 std::to_string(joint.lower) + " > upper " +
                                                 std::to_string(joint.upper) + ")");
                    }
                }
                tree.joints.push_back(std::move(joint));
            } else if (tag == "transmission") {
                throw KinematicTreeError("transmission elements are not supported");
            } else {
                throw KinematicTreeError("unsupported element <" + tag + ">");
            }
        }
    } catch (const pt::ptree_error &e) {
        throw KinematicTreeError(std::string("malformed robot description: ") + e.what());
    }
    tree.finalize();
    return tree;
}

KinematicTree
loadKinematicTree(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw KinematicTreeError("cannot open '" + path.string() + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parseKinematicTree(ss.str(), path.parent_path());
}

TriangleMesh
geometryMesh(const Geometry &g) {
    TriangleMesh mesh;
    switch (g.kind) {
    case Geometry::Kind::Box: mesh = makeBox(g.boxSize); break;
    case Geometry::Kind::Cylinder: mesh = makeCylinder(g.radius, g.length); break;
    case Geometry::Kind::Sphere: mesh = makeSphere(g.radius); break;
    case Geometry::Kind::Mesh:
        mesh = loadObj(g.meshPath);
        for (auto &v : mesh.vertices) v = v.cwiseProduct(g.meshScale);
        break;
    }
    return mesh.transformed(g.origin);
}

} // namespace gskit
