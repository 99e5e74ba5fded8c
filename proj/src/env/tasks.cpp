// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gskit/core/error.hpp>
#include <gskit/env/environment.hpp>
#include <gskit/kinematics/ik.hpp>

namespace gskit {

namespace {

int
requireObject(const LoadedScene &scene, const std::string &name, const std::string &task) {
    const int k = scene.description.objectIndex(name);
    if (k < 0) throw EnvError("task '" + task + "' needs an object named '" + name + "'");
    return k;
}

std::vector<std::string>
availableCameras(const LoadedScene &scene) {
    std::vector<std::string> out;
    for (const char *name : {"front", "wrist"}) {
        if (scene.description.camera(name)) out.emplace_back(name);
    }
    if (out.empty() && !scene.description.cameras.empty()) out.push_back(scene.description.cameras.front().name);
    return out;
}

bool
withinTable(const LoadedScene &scene, const Vec3 &p) {
    const auto &half = scene.supportPlane().halfExtents;
    if (!half) return true;
    const Eigen::Vector2d uv = planeCoords(scene.supportPlane(), p);
    return std::abs(uv.x()) <= half->x() && std::abs(uv.y()) <= half->y();
}

/// The grasp point of object k can be reached by the end effector.
bool
reachable(const LoadedScene &scene, const Vec3 &target) {
    const LoadedRobot &r = scene.robots.front();
    const int ee = r.eeLink >= 0 ? r.eeLink : static_cast<int>(r.tree.links.size()) - 1;
    Eigen::VectorXd mask = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(r.tree.dof()));
    if (r.gripperDof >= 0) mask[r.gripperDof] = 0.0;
    const IkSolution ik = solvePositionIk(r.tree, r.homeQ, ee, r.graspOffset.translation,
                                          r.base.inverse().apply(target), mask);
    return ik.residual < 2e-3;
}

/// Shipped default: every object on the table and resting or held, a consistent grasp, and
/// the object to pick within reach.
std::function<bool(const EnvState &)>
defaultSolvable(std::shared_ptr<const LoadedScene> scene, TaskGoal goal) {
    return [scene, goal](const EnvState &s) {
        const LoadedScene &sc = *scene;
        const LoadedRobot &r = sc.robots.front();
        if (s.attached) {
            if (*s.attached != goal.pickObject || !r.gripperIsClosed(s.q)) return false;
        }
        for (std::size_t k = 0; k < s.objectPoses.size(); ++k) {
            if (!withinTable(sc, s.objectPoses[k].translation)) return false;
        }
        if (goal.placeOnObject >= 0) {
            // The base of the stack must stand on the table, not on the object to pick.
            if (s.attached == goal.placeOnObject || !restsOnPlane(sc, s, goal.placeOnObject, 1e-6)) return false;
        }
        if (s.attached) return true;
        return reachable(sc, s.objectPoses[static_cast<std::size_t>(goal.pickObject)].translation);
    };
}

} // namespace

std::vector<std::string>
taskNames() {
    return {"place_box", "stack_cans"};
}

TaskSpec
makeTask(const std::string &name, std::shared_ptr<const LoadedScene> scene) {
    if (!scene) throw EnvError("makeTask needs a scene");
    if (scene->robots.empty()) throw EnvError("task '" + name + "' needs a robot");
    TaskSpec t;
    t.name = name;
    t.cameras = availableCameras(*scene);
    if (name == "place_box") {
        const int box = requireObject(*scene, "box", name);
        t.region = {Eigen::Vector2d(-0.12, 0.0), Eigen::Vector2d(0.06, 0.18)};
        t.randomized = {box};
        t.maxSteps = 200;
        t.goal.pickObject = box;
        t.goal.placePoint = Vec3(0.0, -0.2, 0.0);
        t.goal.placeRadius = 0.05;
        const TaskGoal goal = t.goal;
        t.success = [scene, goal](const EnvState &s) {
            if (s.attached == goal.pickObject || !restsOnPlane(*scene, s, goal.pickObject)) return false;
            const Vec3 &p = s.objectPoses[static_cast<std::size_t>(goal.pickObject)].translation;
            const SupportPlane &plane = scene->supportPlane();
            return (planeCoords(plane, p) - planeCoords(plane, goal.placePoint)).norm() <= goal.placeRadius;
        };
    } else if (name == "stack_cans") {
        const int a = requireObject(*scene, "can_a", name);
        const int b = requireObject(*scene, "can_b", name);
        t.region = {Eigen::Vector2d(-0.12, -0.18), Eigen::Vector2d(0.06, 0.18)};
        t.randomized = {a, b};
        t.maxSteps = 250;
        t.goal.pickObject = a;
        t.goal.placeOnObject = b;
        const TaskGoal goal = t.goal;
        t.success = [scene, goal](const EnvState &s) {
            return !s.attached && restsOnPlane(*scene, s, goal.placeOnObject) &&
                   restsOn(*scene, s, goal.pickObject, goal.placeOnObject);
        };
    } else {
        throw EnvError("unknown task '" + name + "'");
    }
    const int pick = t.goal.pickObject;
    t.partial = [pick](const EnvState &s) { return s.attached == pick; };
    t.solvable = defaultSolvable(scene, t.goal);
    return t;
}

} // namespace gskit
