// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gskit/core/error.hpp>
#include <gskit/env/environment.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

namespace gskit {

namespace {

double
maxAbs(const Eigen::VectorXd &a, const Eigen::VectorXd &b) {
    return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

double
poseDistance(const RigidTransform &a, const RigidTransform &b) {
    return std::max((a.rotation.coeffs() - b.rotation.coeffs()).cwiseAbs().maxCoeff(),
                    (a.translation - b.translation).cwiseAbs().maxCoeff());
}

/// Deterministic brightness and hue perturbation for one episode.
void
applyJitter(std::vector<float> &color, std::uint64_t episodeSeed, const EnvOptions &options) {
    std::mt19937_64 rng(episodeSeed ^ 0x5851f42d4c957f2dULL);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double brightness = 1.0 + options.jitterBrightness * unit(rng);
    const double angle = options.jitterHue * unit(rng);
    // Rotation about the grey axis shifts hue while keeping luminance roughly fixed.
    const Mat3 rot = Eigen::AngleAxisd(angle, Vec3::Ones().normalized()).toRotationMatrix() * brightness;
    const Eigen::Matrix3f m = rot.cast<float>();
    for (std::size_t i = 0; i + 2 < color.size(); i += 3) {
        const Eigen::Vector3f c(color[i], color[i + 1], color[i + 2]);
        const Eigen::Vector3f o = (m * c).cwiseMax(0.0f).cwiseMin(1.0f);
        color[i] = o.x();
        color[i + 1] = o.y();
        color[i + 2] = o.z();
    }
}

} // namespace

bool
EnvState::operator==(const EnvState &other) const {
    return q.size() == other.q.size() && q == other.q && objectPoses == other.objectPoses && attached == other.attached &&
           attachOffset == other.attachOffset && stepIndex == other.stepIndex && episodeSeed == other.episodeSeed;
}

double
stateDistance(const EnvState &a, const EnvState &b) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (a.q.size() != b.q.size() || a.objectPoses.size() != b.objectPoses.size() || a.attached != b.attached) {
        return inf;
    }
    double d = maxAbs(a.q, b.q);
    for (std::size_t i = 0; i < a.objectPoses.size(); ++i) d = std::max(d, poseDistance(a.objectPoses[i], b.objectPoses[i]));
    d = std::max(d, poseDistance(a.attachOffset, b.attachOffset));
    d = std::max(d, std::abs(static_cast<double>(a.stepIndex - b.stepIndex)));
    if (a.episodeSeed != b.episodeSeed) return inf;
    return d;
}

const CameraImage &
Observation::image(const std::string &camera) const {
    for (const auto &img : images) {
        if (img.camera == camera) return img;
    }
    throw EnvError("observation has no image for camera '" + camera + "'");
}

// ---- plane geometry ----------------------------------------------------------------------

std::pair<Vec3, Vec3>
planeAxes(const SupportPlane &plane) {
    const Vec3 n = plane.normal.normalized();
    const Vec3 a = std::abs(n.x()) > 0.9 ? Vec3::UnitY() : Vec3::UnitX();
    const Vec3 u = (a - a.dot(n) * n).normalized();
    return {u, n.cross(u)};
}

Vec3
planePoint(const SupportPlane &plane, const Eigen::Vector2d &uv) {
    const auto [u, v] = planeAxes(plane);
    return plane.point + uv.x() * u + uv.y() * v;
}

Eigen::Vector2d
planeCoords(const SupportPlane &plane, const Vec3 &world) {
    const auto [u, v] = planeAxes(plane);
    const Vec3 d = world - plane.point;
    return {d.dot(u), d.dot(v)};
}

namespace {

template <typename Reduce>
double
heightOverVertices(const LoadedScene &scene, int k, const RigidTransform &pose, double init, Reduce reduce) {
    const SupportPlane &plane = scene.supportPlane();
    const Vec3 n = plane.normal.normalized();
    const auto &verts = scene.objects[static_cast<std::size_t>(k)].mesh.vertices;
    if (verts.empty()) return n.dot(pose.translation - plane.point);
    double h = init;
    for (const auto &v : verts) h = reduce(h, n.dot(pose.apply(v) - plane.point));
    return h;
}

} // namespace

double
objectBottom(const LoadedScene &scene, int k, const RigidTransform &pose) {
    return heightOverVertices(scene, k, pose, std::numeric_limits<double>::infinity(),
                              [](double a, double b) { return std::min(a, b); });
}

double
objectTop(const LoadedScene &scene, int k, const RigidTransform &pose) {
    return heightOverVertices(scene, k, pose, -std::numeric_limits<double>::infinity(),
                              [](double a, double b) { return std::max(a, b); });
}

double
objectFootprintRadius(const LoadedScene &scene, int k) {
    const auto &obj = scene.objects[static_cast<std::size_t>(k)];
    const Vec3 n = scene.supportPlane().normal.normalized();
    const Vec3 up = obj.restPose.rotation.conjugate() * n; // plane normal in the object frame
    double r = 0.0;
    for (const auto &v : obj.mesh.vertices) r = std::max(r, (v - v.dot(up) * up).norm());
    return r;
}

namespace {

double
inPlaneDistance(const SupportPlane &plane, const Vec3 &a, const Vec3 &b) {
    return (planeCoords(plane, a) - planeCoords(plane, b)).norm();
}

} // namespace

RigidTransform
dropObject(const LoadedScene &scene, const EnvState &state, int k, const RigidTransform &pose) {
    const SupportPlane &plane = scene.supportPlane();
    const double bottom = objectBottom(scene, k, pose);
    double support = 0.0;
    for (std::size_t j = 0; j < scene.objects.size(); ++j) {
        const int jj = static_cast<int>(j);
        if (jj == k || !scene.objects[j].stackable || state.attached == jj) continue;
        const RigidTransform &other = state.objectPoses[j];
        if (inPlaneDistance(plane, pose.translation, other.translation) > objectFootprintRadius(scene, jj)) continue;
        const double top = objectTop(scene, jj, other);
        if (top <= bottom + 1e-9) support = std::max(support, top);
    }
    RigidTransform out = pose;
    out.translation += (support - bottom) * plane.normal.normalized();
    return out;
}

bool
restsOn(const LoadedScene &scene, const EnvState &state, int k, int j, double tol) {
    const RigidTransform &pk = state.objectPoses[static_cast<std::size_t>(k)];
    const RigidTransform &pj = state.objectPoses[static_cast<std::size_t>(j)];
    return std::abs(objectBottom(scene, k, pk) - objectTop(scene, j, pj)) <= tol &&
           inPlaneDistance(scene.supportPlane(), pk.translation, pj.translation) <= objectFootprintRadius(scene, j);
}

bool
restsOnPlane(const LoadedScene &scene, const EnvState &state, int k, double tol) {
    return std::abs(objectBottom(scene, k, state.objectPoses[static_cast<std::size_t>(k)])) <= tol;
}

// ---- Environment -------------------------------------------------------------------------

Environment::Environment(std::shared_ptr<const StaticSplatCache> cache, TaskSpec task, EnvOptions options)
    : mCache(std::move(cache)), mTask(std::move(task)), mOptions(options) {
    if (!mCache) throw EnvError("environment needs a scene cache");
    const LoadedScene &s = scene();
    if (s.robots.empty()) throw EnvError("scene has no robot to control");
    if (mTask.maxSteps < 1) throw EnvError("task max_steps must be at least 1");
    if (!(mOptions.controlHz > 0.0)) throw EnvError("control rate must be positive");
    if ((mTask.region.max - mTask.region.min).minCoeff() < 0.0) throw EnvError("task region is inverted");
    if (const auto &half = s.supportPlane().halfExtents) {
        const Eigen::Vector2d lo = mTask.region.min, hi = mTask.region.max;
        if (lo.x() < -half->x() || lo.y() < -half->y() || hi.x() > half->x() || hi.y() > half->y()) {
            throw EnvError("task region exceeds the table bounds");
        }
    }
    const auto nObj = static_cast<int>(s.objects.size());
    for (int k : mTask.randomized) {
        if (k < 0 || k >= nObj) throw EnvError("task randomizes unknown object " + std::to_string(k));
    }
    if (mTask.goal.pickObject >= nObj || mTask.goal.placeOnObject >= nObj) throw EnvError("task goal names an unknown object");
    for (const auto &cam : mTask.cameras) {
        if (!s.description.camera(cam)) throw EnvError("unknown camera '" + cam + "'");
    }
    mStepLimits = robot().tree.velocityLimits(mOptions.defaultVelocity) / mOptions.controlHz;
    if (homeQ().size() != static_cast<Eigen::Index>(robot().tree.dof())) throw EnvError("home pose has the wrong length");
    mState.q = homeQ();
    for (const auto &o : s.objects) mState.objectPoses.push_back(o.restPose);
}

JointConfig
Environment::homeQ() const {
    return mTask.homeQ ? *mTask.homeQ : robot().homeQ;
}

RigidTransform
Environment::graspPose(const JointConfig &q) const {
    const LoadedRobot &r = robot();
    const int ee = r.eeLink >= 0 ? r.eeLink : static_cast<int>(r.tree.links.size()) - 1;
    return robotLinkWorldPoses(r, q)[static_cast<std::size_t>(ee)] * r.graspOffset;
}

Observation
Environment::reset(std::uint64_t seed) {
    const LoadedScene &s = scene();
    const SupportPlane &plane = s.supportPlane();
    const Vec3 n = plane.normal.normalized();
    std::mt19937_64 rng(seed);
    auto draw = [&](double lo, double hi) {
        return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
    };

    EnvState st;
    st.q = homeQ();
    robot().tree.clampToLimits(st.q);
    st.episodeSeed = seed;
    for (const auto &o : s.objects) st.objectPoses.push_back(o.restPose);

    std::vector<double> radius;
    for (int k : mTask.randomized) radius.push_back(objectFootprintRadius(s, k));
    bool placed = mTask.randomized.empty();
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
        std::vector<Eigen::Vector2d> uv;
        for (std::size_t i = 0; i < mTask.randomized.size(); ++i) {
            uv.emplace_back(draw(mTask.region.min.x(), mTask.region.max.x()),
                            draw(mTask.region.min.y(), mTask.region.max.y()));
        }
        placed = true;
        for (std::size_t i = 0; i < uv.size() && placed; ++i) {
            for (std::size_t j = i + 1; j < uv.size() && placed; ++j) {
                placed = (uv[i] - uv[j]).norm() - radius[i] - radius[j] >= mTask.clearance;
            }
        }
        if (!placed) continue;
        for (std::size_t i = 0; i < uv.size(); ++i) {
            const auto k = static_cast<std::size_t>(mTask.randomized[i]);
            RigidTransform pose{s.objects[k].restPose.rotation, planePoint(plane, uv[i])};
            pose.translation -= objectBottom(s, static_cast<int>(k), pose) * n;
            st.objectPoses[k] = pose;
        }
    }
    if (!placed) throw EnvError("task region too small to place every object after 1000 attempts");
    mState = std::move(st);
    return observe();
}

void
Environment::kinematicLite(EnvState &st, bool wasClosed) const {
    const LoadedRobot &r = robot();
    const bool closed = r.gripperIsClosed(st.q);
    const RigidTransform grasp = graspPose(st.q);
    if (st.attached) {
        const auto k = static_cast<std::size_t>(*st.attached);
        st.objectPoses[k] = grasp * st.attachOffset;
        if (!closed) {
            st.attached.reset();
            st.attachOffset = RigidTransform::identity();
            st.objectPoses[k] = dropObject(scene(), st, static_cast<int>(k), st.objectPoses[k]);
        }
        return;
    }
    if (!closed || wasClosed) return;
    int best = -1;
    double bestDist = mOptions.graspRadius;
    for (std::size_t k = 0; k < st.objectPoses.size(); ++k) {
        const double d = (st.objectPoses[k].translation - grasp.translation).norm();
        if (d <= bestDist) {
            best = static_cast<int>(k);
            bestDist = d;
        }
    }
    if (best >= 0) {
        st.attached = best;
        st.attachOffset = grasp.inverse() * st.objectPoses[static_cast<std::size_t>(best)];
    }
}

StepResult
Environment::step(const JointConfig &action) {
    const LoadedRobot &r = robot();
    if (action.size() != mState.q.size()) {
        throw EnvError("action has " + std::to_string(action.size()) + " entries, expected " +
                       std::to_string(mState.q.size()));
    }
    if (!action.allFinite()) throw EnvError("action contains non-finite values");
    const bool wasClosed = r.gripperIsClosed(mState.q);
    for (Eigen::Index i = 0; i < action.size(); ++i) {
        const double lim = mStepLimits[i];
        mState.q[i] += std::clamp(action[i] - mState.q[i], -lim, lim);
    }
    r.tree.clampToLimits(mState.q);
    kinematicLite(mState, wasClosed);
    ++mState.stepIndex;

    StepResult out;
    out.terminated = mTask.success && mTask.success(mState);
    out.reward = reward(mState);
    out.truncated = !out.terminated && mState.stepIndex >= mTask.maxSteps;
    out.info = mState;
    out.observation = observe();
    return out;
}

double
Environment::reward(const EnvState &st) const {
    if (mTask.success && mTask.success(st)) return 1.0;
    if (mTask.partial && mTask.partial(st)) return 0.5;
    return 0.0;
}

void
Environment::restore(const EnvState &st) {
    if (st.q.size() != static_cast<Eigen::Index>(robot().tree.dof())) throw EnvError("restored q has the wrong length");
    if (st.objectPoses.size() != scene().objects.size()) throw EnvError("restored state has the wrong object count");
    if (st.attached && (*st.attached < 0 || *st.attached >= static_cast<int>(st.objectPoses.size()))) {
        throw EnvError("restored state attaches an unknown object");
    }
    mState = st;
}

Observation
Environment::observe() const {
    if (!mOptions.render) return {{}, mState.q};
    return renderObservation(mTask.cameras);
}

namespace {

std::vector<JointConfig>
allRobotQ(const LoadedScene &s, const JointConfig &q0) {
    std::vector<JointConfig> qs;
    qs.push_back(q0);
    for (std::size_t r = 1; r < s.robots.size(); ++r) qs.push_back(s.robots[r].homeQ);
    return qs;
}

} // namespace

Observation
Environment::renderObservation(const std::vector<std::string> &cameras) const {
    Observation obs;
    obs.proprio = mState.q;
    if (cameras.empty()) return obs;
    const std::vector<JointConfig> qs = allRobotQ(scene(), mState.q);
    const PosedSplats posed = poseScene(mCache, qs, mState.objectPoses);
    const auto groups = posed.groups();
    for (const auto &name : cameras) {
        const Camera *cam = scene().description.camera(name);
        if (!cam) throw EnvError("unknown camera '" + name + "'");
        RenderOutput out = rasterize(groups, resolveCamera(*cam, scene(), qs), mOptions.background, mOptions.renderOptions);
        if (mOptions.colorJitter) applyJitter(out.color, mState.episodeSeed, mOptions);
        obs.images.push_back({name, out.width, out.height, std::move(out.color)});
    }
    return obs;
}

RenderOutput
Environment::renderCamera(const std::string &name) const {
    const Camera *cam = scene().description.camera(name);
    if (!cam) throw EnvError("unknown camera '" + name + "'");
    const std::vector<JointConfig> qs = allRobotQ(scene(), mState.q);
    const PosedSplats posed = poseScene(mCache, qs, mState.objectPoses);
    RenderOutput out = rasterize(posed.groups(), resolveCamera(*cam, scene(), qs), mOptions.background,
                                 mOptions.renderOptions);
    if (mOptions.colorJitter) applyJitter(out.color, mState.episodeSeed, mOptions);
    return out;
}

// ---- batch -------------------------------------------------------------------------------

void
parallelFor(std::size_t n, int threads, const std::function<void(std::size_t)> &fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex errorMutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(errorMutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const auto count = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto &t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

EnvBatch::EnvBatch(std::shared_ptr<const StaticSplatCache> cache, const TaskSpec &task, std::size_t count,
                   EnvOptions options, int threads)
    : mThreads(threads) {
    if (count < 1) throw EnvError("batch needs at least one environment");
    mEnvs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) mEnvs.emplace_back(cache, task, options);
}

std::vector<Observation>
EnvBatch::reset(const std::vector<std::uint64_t> &seeds) {
    if (seeds.size() != mEnvs.size()) throw EnvError("batch reset needs one seed per environment");
    std::vector<Observation> out(mEnvs.size());
    parallelFor(mEnvs.size(), mThreads, [&](std::size_t i) { out[i] = mEnvs[i].reset(seeds[i]); });
    return out;
}

std::vector<StepResult>
EnvBatch::step(const std::vector<JointConfig> &actions) {
    if (actions.size() != mEnvs.size()) throw EnvError("batch step needs one action per environment");
    std::vector<StepResult> out(mEnvs.size());
    parallelFor(mEnvs.size(), mThreads, [&](std::size_t i) { out[i] = mEnvs[i].step(actions[i]); });
    return out;
}

} // namespace gskit
