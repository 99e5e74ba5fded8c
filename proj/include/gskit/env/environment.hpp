// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gskit/kinematics/pose_scene.hpp>
#include <gskit/render/rasterizer.hpp>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace gskit {

/// Full privileged simulation state. Restoring an EnvState reproduces every later step and
/// frame exactly.
struct EnvState {
    JointConfig q;                           ///< controlled robot (robot 0)
    std::vector<RigidTransform> objectPoses; ///< object frame in the world, scene order
    std::optional<int> attached;             ///< object held by the gripper
    RigidTransform attachOffset;             ///< held object pose in the grasp frame
    int stepIndex = 0;
    std::uint64_t episodeSeed = 0;           ///< drives per-episode colour jitter

    /// Exact equality of every field.
    bool operator==(const EnvState &other) const;
};

/// Largest absolute difference over every numeric field; infinity when the structure differs.
double stateDistance(const EnvState &a, const EnvState &b);

/// Rectangle on the support plane, in plane coordinates (metres from the plane point along
/// the plane's in-plane axes; for a z-up plane these are world x and y offsets).
struct PlaneRegion {
    Eigen::Vector2d min = Eigen::Vector2d::Zero();
    Eigen::Vector2d max = Eigen::Vector2d::Zero();
};

/// What the scripted expert does and what counts as success.
struct TaskGoal {
    int pickObject = 0;
    int placeOnObject = -1;                ///< stack on this object when >= 0
    Vec3 placePoint = Vec3::Zero();        ///< otherwise put it down here (world)
    double placeRadius = 0.05;
};

struct TaskSpec {
    std::string name;
    PlaneRegion region;             ///< where reset scatters the randomized objects
    std::vector<int> randomized;    ///< objects placed by reset; the rest stay at rest pose
    double clearance = 0.03;        ///< minimum gap between randomized objects
    int maxSteps = 200;
    std::vector<std::string> cameras;
    std::optional<JointConfig> homeQ; ///< defaults to the robot's home pose
    TaskGoal goal;

    std::function<bool(const EnvState &)> success;
    std::function<bool(const EnvState &)> partial;
    std::function<bool(const EnvState &)> solvable;
};

/// Names accepted by makeTask.
std::vector<std::string> taskNames();

/// Build one of the shipped tasks ("place_box", "stack_cans") for a loaded scene. Throws
/// EnvError for an unknown name or when the scene lacks the task's objects.
TaskSpec makeTask(const std::string &name, std::shared_ptr<const LoadedScene> scene);

struct CameraImage {
    std::string camera;
    int width = 0;
    int height = 0;
    std::vector<float> color; ///< H*W*3 in [0, 1]

    bool operator==(const CameraImage &) const = default;
};

struct Observation {
    std::vector<CameraImage> images;
    JointConfig proprio;

    const CameraImage &image(const std::string &camera) const;
};

struct EnvOptions {
    double controlHz = 20.0;
    double defaultVelocity = 1.5;  ///< joint speed limit when the tree leaves it unspecified
    double graspRadius = 0.02;
    bool render = true;            ///< false: observations carry proprioception only
    bool colorJitter = false;
    double jitterBrightness = 0.1; ///< brightness factor drawn from [1 - b, 1 + b]
    double jitterHue = 0.08;       ///< hue rotation angle drawn from [-h, h] radians
    Vec3 background = Vec3::Zero();
    RenderOptions renderOptions;
};

struct StepResult {
    Observation observation;
    double reward = 0.0;
    bool terminated = false;
    bool truncated = false;
    EnvState info; ///< privileged state after the step
};

/// One steppable environment. Strictly sequential; distinct instances are independent and
/// can share a StaticSplatCache across threads.
class Environment {
  public:
    Environment(std::shared_ptr<const StaticSplatCache> cache, TaskSpec task, EnvOptions options = {});

    const LoadedScene &scene() const { return mCache->scene(); }
    const std::shared_ptr<const StaticSplatCache> &cache() const { return mCache; }
    const LoadedRobot &robot() const { return scene().robots.front(); }
    const TaskSpec &task() const { return mTask; }
    const EnvOptions &options() const { return mOptions; }
    const EnvState &state() const { return mState; }
    JointConfig homeQ() const;

    /// Scatter the task objects and move the robot home; deterministic per seed.
    Observation reset(std::uint64_t seed);
    StepResult step(const JointConfig &action);
    /// Set the state directly (used to relive recorded states).
    void restore(const EnvState &state);

    Observation observe() const;
    Observation renderObservation(const std::vector<std::string> &cameras) const;
    RenderOutput renderCamera(const std::string &camera) const;

    double reward(const EnvState &state) const;
    /// Grasp frame of the end effector in the world.
    RigidTransform graspPose(const JointConfig &q) const;
    /// Per-joint step limit, already multiplied by the control period.
    const JointConfig &stepLimits() const { return mStepLimits; }

  private:
    void kinematicLite(EnvState &state, bool wasClosed) const;

    std::shared_ptr<const StaticSplatCache> mCache;
    TaskSpec mTask;
    EnvOptions mOptions;
    JointConfig mStepLimits;
    EnvState mState;
};

/// N environments sharing one static cache. Batched calls fan out over `threads` workers
/// and are equivalent to running each environment on its own.
class EnvBatch {
  public:
    EnvBatch(std::shared_ptr<const StaticSplatCache> cache, const TaskSpec &task, std::size_t count,
             EnvOptions options = {}, int threads = 1);

    std::size_t size() const { return mEnvs.size(); }
    int threads() const { return mThreads; }
    Environment &operator[](std::size_t i) { return mEnvs[i]; }
    const Environment &operator[](std::size_t i) const { return mEnvs[i]; }

    std::vector<Observation> reset(const std::vector<std::uint64_t> &seeds);
    std::vector<StepResult> step(const std::vector<JointConfig> &actions);

  private:
    std::vector<Environment> mEnvs;
    int mThreads;
};

/// Run fn(i) for i in [0, n) on up to `threads` workers.
void parallelFor(std::size_t n, int threads, const std::function<void(std::size_t)> &fn);

// Geometry helpers shared with the task predicates and the expert.

/// In-plane axes (u, v) of the support plane.
std::pair<Vec3, Vec3> planeAxes(const SupportPlane &plane);
Vec3 planePoint(const SupportPlane &plane, const Eigen::Vector2d &uv);
Eigen::Vector2d planeCoords(const SupportPlane &plane, const Vec3 &world);
/// Height of the lowest / highest mesh vertex of object `k` above the support plane.
double objectBottom(const LoadedScene &scene, int k, const RigidTransform &pose);
double objectTop(const LoadedScene &scene, int k, const RigidTransform &pose);
/// Largest in-plane distance from the object origin to a mesh vertex.
double objectFootprintRadius(const LoadedScene &scene, int k);
/// Pose of object `k` dropped along gravity onto the plane or a stackable object beneath it.
RigidTransform dropObject(const LoadedScene &scene, const EnvState &state, int k, const RigidTransform &pose);
/// Object `k` rests on object `j` (lowest point on its top within `tol`, centred over it).
bool restsOn(const LoadedScene &scene, const EnvState &state, int k, int j, double tol = 1e-6);
bool restsOnPlane(const LoadedScene &scene, const EnvState &state, int k, double tol = 1e-6);

} // namespace gskit
