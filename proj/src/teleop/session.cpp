// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gskit/teleop/session.hpp>

#include <gskit/core/error.hpp>
#include <gskit/core/log.hpp>
#include <gskit/kinematics/forward_kinematics.hpp>

#include <json.hpp>

#include <algorithm>
#include <random>

namespace gskit {

using nlohmann::json;

namespace {

[[noreturn]] void
malformed(const std::string &why) {
    throw TeleopError("malformed_command", why);
}

const json &
field(const json &payload, const char *name) {
    if (!payload.is_object() || !payload.contains(name)) malformed(std::string("payload needs '") + name + "'");
    return payload.at(name);
}

std::string
textField(const json &payload, const char *name) {
    const json &v = field(payload, name);
    if (!v.is_string()) malformed(std::string("'") + name + "' must be a string");
    return v.get<std::string>();
}

int
directionField(const json &payload) {
    const json &v = field(payload, "direction");
    if (!v.is_number_integer() || (v.get<long long>() != 1 && v.get<long long>() != -1)) {
        malformed("'direction' must be 1 or -1");
    }
    return static_cast<int>(v.get<long long>());
}

std::string
randomId() {
    static std::mutex mutex;
    static std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard<std::mutex> lock(mutex);
    char buf[33];
    std::snprintf(buf, sizeof(buf), "%016llx%016llx", static_cast<unsigned long long>(rng()),
                  static_cast<unsigned long long>(rng()));
    return buf;
}

Outcome
outcomeOf(const TaskSpec &task, const EnvState &s) {
    if (task.success && task.success(s)) return Outcome::Success;
    if (task.partial && task.partial(s)) return Outcome::Partial;
    return Outcome::Failure;
}

} // namespace

const char *
toString(JogMode mode) {
    return mode == JogMode::Joint ? "joint" : "ee";
}

TeleopCommand
parseCommand(const std::string &jsonText) {
    json j;
    try {
        j = json::parse(jsonText);
    } catch (const json::exception &e) {
        malformed(std::string("command is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) malformed("command needs a string 'type'");
    const std::string type = j.at("type").get<std::string>();
    const json payload = j.value("payload", json::object());
    if (!payload.is_object()) malformed("'payload' must be an object");

    TeleopCommand c;
    if (type == "jog") {
        c.type = TeleopCommand::Type::Jog;
        c.direction = directionField(payload);
        const bool hasJoint = payload.contains("joint");
        const bool hasAxis = payload.contains("axis");
        if (hasJoint == hasAxis) malformed("jog needs exactly one of 'joint' or 'axis'");
        if (hasJoint) {
            const json &v = payload.at("joint");
            if (!v.is_number_integer() || v.get<long long>() < 0) malformed("'joint' must be a non-negative integer");
            c.joint = static_cast<int>(v.get<long long>());
        } else {
            static const std::vector<std::string> axes = {"x", "y", "z", "rx", "ry", "rz"};
            const std::string a = textField(payload, "axis");
            const auto it = std::find(axes.begin(), axes.end(), a);
            if (it == axes.end()) malformed("unknown axis '" + a + "'");
            c.axis = static_cast<int>(it - axes.begin());
        }
    } else if (type == "gripper") {
        c.type = TeleopCommand::Type::Gripper;
        const std::string s = textField(payload, "state");
        if (s != "open" && s != "close") malformed("gripper state must be 'open' or 'close'");
        c.closeGripper = s == "close";
    } else if (type == "reset") {
        c.type = TeleopCommand::Type::Reset;
        const json &v = field(payload, "seed");
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
            malformed("'seed' must be a non-negative integer");
        }
        c.seed = v.get<std::uint64_t>();
    } else if (type == "record") {
        c.type = TeleopCommand::Type::Record;
        const std::string a = textField(payload, "action");
        if (a == "start") {
            c.record = TeleopCommand::RecordAction::Start;
        } else if (a == "stop") {
            c.record = TeleopCommand::RecordAction::Stop;
        } else if (a == "save") {
            c.record = TeleopCommand::RecordAction::Save;
        } else {
            malformed("record action must be start, stop or save");
        }
    } else if (type == "mode") {
        c.type = TeleopCommand::Type::Mode;
        const std::string m = textField(payload, "mode");
        if (m == "joint") {
            c.mode = JogMode::Joint;
        } else if (m == "ee") {
            c.mode = JogMode::EndEffector;
        } else {
            malformed("mode must be 'joint' or 'ee'");
        }
    } else {
        malformed("unknown command type '" + type + "'");
    }
    return c;
}

std::string
CommandAck::toJson() const {
    json j = {{"type", "ack"},
              {"ok", true},
              {"command", command},
              {"step_index", stepIndex},
              {"episode_step", episodeStep},
              {"gripper", gripperClosed ? "closed" : "open"},
              {"attached", attached ? json(*attached) : json(nullptr)},
              {"recording", recording},
              {"mode", toString(mode)}};
    if (saved) j["saved"] = *saved;
    return j.dump();
}

// ---- session -----------------------------------------------------------------------------

TeleopSession::TeleopSession(std::string id, std::string sceneName, std::shared_ptr<const StaticSplatCache> cache,
                             TaskSpec task, std::vector<std::string> cameras, std::uint64_t seed,
                             const TeleopOptions &options, TeleopClock::time_point now)
    : mId(std::move(id)), mSceneName(std::move(sceneName)), mTaskName(task.name), mCameras(std::move(cameras)),
      mOptions(options), mDatasetDir(options.dataRoot / mId), mEnv(std::move(cache), std::move(task), [&] {
          EnvOptions o = options.env;
          o.render = false; // the session renders its own camera set
          return o;
      }()),
      mResetSeed(seed), mLastActivity(now) {
    mEnv.reset(seed);
    renderLocked();
}

std::uint64_t
TeleopSession::stepIndex() const {
    std::lock_guard<std::mutex> lock(mMutex);
    return mStepIndex;
}

EnvState
TeleopSession::state() const {
    std::lock_guard<std::mutex> lock(mMutex);
    return mEnv.state();
}

JogMode
TeleopSession::mode() const {
    std::lock_guard<std::mutex> lock(mMutex);
    return mMode;
}

bool
TeleopSession::recording() const {
    std::lock_guard<std::mutex> lock(mMutex);
    return mRecording;
}

std::vector<FrameMessage>
TeleopSession::latestFrames() const {
    std::lock_guard<std::mutex> lock(mMutex);
    return mLatest;
}

bool
TeleopSession::expired(TeleopClock::time_point now) const {
    std::lock_guard<std::mutex> lock(mMutex);
    return now - mLastActivity > mOptions.idleTimeout;
}

TeleopClock::time_point
TeleopSession::lastActivity() const {
    std::lock_guard<std::mutex> lock(mMutex);
    return mLastActivity;
}

std::vector<std::string>
TeleopSession::savedTrajectories() const {
    std::lock_guard<std::mutex> lock(mMutex);
    return mSaved;
}

int
TeleopSession::subscribe(FrameSink sink) {
    std::lock_guard<std::mutex> lock(mMutex);
    const int token = mNextToken++;
    sink(mLatest);
    mSinks.emplace(token, std::move(sink));
    return token;
}

void
TeleopSession::unsubscribe(int token) {
    std::lock_guard<std::mutex> lock(mMutex);
    mSinks.erase(token);
    if (mController == token) mController.reset();
}

bool
TeleopSession::claimControl(int token) {
    std::lock_guard<std::mutex> lock(mMutex);
    if (!mController) mController = token;
    return mController == token;
}

void
TeleopSession::releaseControl(int token) {
    std::lock_guard<std::mutex> lock(mMutex);
    if (mController == token) mController.reset();
}

bool
TeleopSession::isController(int token) const {
    std::lock_guard<std::mutex> lock(mMutex);
    return mController == token;
}

std::string
TeleopSession::describe() const {
    std::lock_guard<std::mutex> lock(mMutex);
    const CommandAck a = ackLocked("");
    json cams = json::array();
    for (const auto &f : mLatest) cams.push_back({{"name", f.camera}, {"width", f.width}, {"height", f.height}});
    return json{{"id", mId},
                {"state", "ready"},
                {"scene", mSceneName},
                {"task", mTaskName},
                {"seed", mResetSeed},
                {"step_index", mStepIndex},
                {"episode_step", a.episodeStep},
                {"gripper", a.gripperClosed ? "closed" : "open"},
                {"attached", a.attached ? json(*a.attached) : json(nullptr)},
                {"recording", mRecording},
                {"mode", toString(mMode)},
                {"cameras", cams},
                {"stream", "/sessions/" + mId + "/stream"}}
        .dump();
}

CommandAck
TeleopSession::ackLocked(const std::string &command) const {
    const EnvState &s = mEnv.state();
    CommandAck a;
    a.command = command;
    a.stepIndex = mStepIndex;
    a.episodeStep = s.stepIndex;
    a.gripperClosed = mEnv.robot().gripperIsClosed(s.q);
    if (s.attached) a.attached = mEnv.scene().objects[static_cast<std::size_t>(*s.attached)].name;
    a.recording = mRecording;
    a.mode = mMode;
    return a;
}

void
TeleopSession::renderLocked() {
    std::vector<FrameMessage> frames;
    frames.reserve(mCameras.size());
    for (const auto &name : mCameras) {
        const RenderOutput img = mEnv.renderCamera(name);
        FrameMessage f;
        f.sessionId = mId;
        f.stepIndex = mStepIndex;
        f.camera = name;
        f.width = static_cast<std::uint32_t>(img.width);
        f.height = static_cast<std::uint32_t>(img.height);
        f.rgb = toRgb8(img);
        frames.push_back(std::move(f));
    }
    mLatest = std::move(frames);
    for (auto &[token, sink] : mSinks) sink(mLatest);
}

void
TeleopSession::stepLocked(const JointConfig &target) {
    const StepResult r = mEnv.step(target);
    ++mStepIndex;
    renderLocked();
    if (mRecording && mBuffer) {
        mBuffer->actions.push_back(target);
        mBuffer->rewards.push_back(r.reward);
        mBuffer->states.push_back(r.info);
        std::vector<CameraFrame> frames;
        for (const auto &f : mLatest) {
            frames.push_back({f.camera, {static_cast<int>(f.width), static_cast<int>(f.height), f.rgb}});
        }
        mBuffer->frames.push_back(std::move(frames));
    }
}

JointConfig
TeleopSession::jogTargetLocked(const TeleopCommand &c) const {
    const LoadedRobot &robot = mEnv.robot();
    JointConfig q = mEnv.state().q;
    if (c.joint >= 0) {
        if (mMode != JogMode::Joint) malformed("joint jog while in end-effector mode");
        if (c.joint >= static_cast<int>(q.size())) {
            malformed("joint " + std::to_string(c.joint) + " out of range (dof " + std::to_string(q.size()) + ")");
        }
        q[c.joint] += c.direction * mOptions.jointIncrement;
    } else {
        if (mMode != JogMode::EndEffector) malformed("Cartesian jog while in joint mode");
        // World-frame twist for one jog, expressed in the robot root frame.
        Vec3 delta = Vec3::Zero();
        delta[c.axis % 3] = c.direction * (c.axis < 3 ? mOptions.eeTranslation : mOptions.eeRotation);
        const Vec3 local = robot.base.rotation.conjugate() * delta;
        Eigen::VectorXd dx = Eigen::VectorXd::Zero(6);
        if (c.axis < 3) {
            dx.head<3>() = local;
        } else {
            dx.tail<3>() = local;
        }
        const Eigen::MatrixXd jac = pointJacobian(robot.tree, q, robot.eeLink, robot.graspOffset.translation);
        Eigen::VectorXd mask = Eigen::VectorXd::Ones(q.size());
        if (robot.gripperDof >= 0) mask[robot.gripperDof] = 0.0;
        q += dampedLeastSquares(jac, dx, mOptions.ikDamping, mask);
    }
    robot.tree.clampToLimits(q);
    return q;
}

std::string
TeleopSession::saveLocked() {
    if (!mBuffer || mBuffer->actions.empty()) throw TeleopError("empty_recording", "nothing recorded to save", 409);
    Trajectory t = std::move(*mBuffer);
    mBuffer.reset();
    mRecording = false;
    t.id = "teleop-" + std::to_string(mSaved.size());
    t.outcome = outcomeOf(mEnv.task(), t.states.back());
    if (!mWriter) mWriter = std::make_unique<DatasetWriter>(mDatasetDir, datasetInfo(mEnv));
    mWriter->add(t);
    mSaved.push_back(t.id);
    return t.id;
}

CommandAck
TeleopSession::apply(const TeleopCommand &c, TeleopClock::time_point now) {
    std::lock_guard<std::mutex> lock(mMutex);
    if (now - mLastActivity > mOptions.idleTimeout) {
        throw TeleopError("session_expired", "session " + mId + " expired after being idle", 410);
    }
    mLastActivity = now;
    std::optional<std::string> saved;
    std::string name;
    switch (c.type) {
    case TeleopCommand::Type::Jog:
        name = "jog";
        stepLocked(jogTargetLocked(c));
        break;
    case TeleopCommand::Type::Gripper: {
        name = "gripper";
        const LoadedRobot &robot = mEnv.robot();
        if (robot.gripperDof < 0) malformed("robot has no gripper");
        JointConfig q = mEnv.state().q;
        q[robot.gripperDof] = c.closeGripper ? robot.gripperClosed : robot.gripperOpen;
        stepLocked(q);
        break;
    }
    case TeleopCommand::Type::Reset:
        name = "reset";
        if (mRecording) {
            throw TeleopError("recording_active", "stop or save the recording before resetting", 409);
        }
        mEnv.reset(c.seed);
        mResetSeed = c.seed;
        mBuffer.reset();
        ++mStepIndex;
        renderLocked();
        break;
    case TeleopCommand::Type::Record:
        name = "record";
        if (c.record == TeleopCommand::RecordAction::Start) {
            if (!mRecording) {
                Trajectory t;
                t.seed = mResetSeed;
                t.policyId = "teleop";
                t.kind = "demo";
                t.iteration = 0;
                t.states = {mEnv.state()};
                std::vector<CameraFrame> frames;
                for (const auto &f : mLatest) {
                    frames.push_back({f.camera, {static_cast<int>(f.width), static_cast<int>(f.height), f.rgb}});
                }
                t.frames = {std::move(frames)};
                mBuffer = std::move(t);
                mRecording = true;
            }
        } else if (c.record == TeleopCommand::RecordAction::Stop) {
            mRecording = false;
        } else {
            saved = saveLocked();
        }
        break;
    case TeleopCommand::Type::Mode:
        name = "mode";
        mMode = c.mode;
        break;
    }
    CommandAck a = ackLocked(name);
    a.saved = saved;
    return a;
}

// ---- registry ----------------------------------------------------------------------------

SceneRegistry::SceneRegistry(SceneRegistry &&other) noexcept {
    std::lock_guard<std::mutex> lock(other.mMutex);
    mEntries = std::move(other.mEntries);
}

SceneRegistry &
SceneRegistry::operator=(SceneRegistry &&other) noexcept {
    if (this != &other) {
        std::scoped_lock lock(mMutex, other.mMutex);
        mEntries = std::move(other.mEntries);
    }
    return *this;
}

SceneRegistry
SceneRegistry::scan(const std::filesystem::path &root) {
    SceneRegistry r;
    if (!std::filesystem::is_directory(root)) {
        throw TeleopError("bad_config", "asset root " + root.string() + " is not a directory", 500);
    }
    std::vector<std::filesystem::path> files;
    for (const auto &e : std::filesystem::recursive_directory_iterator(root)) {
        if (e.is_regular_file() && e.path().extension() == ".gsdf") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto &f : files) {
        std::string name = f.stem().string();
        if (r.contains(name)) name = std::filesystem::relative(f, root).replace_extension().generic_string();
        r.add(name, f);
    }
    return r;
}

void
SceneRegistry::add(const std::string &name, const std::filesystem::path &gsdf) {
    std::lock_guard<std::mutex> lock(mMutex);
    mEntries[name] = Entry{gsdf, nullptr, nullptr};
}

void
SceneRegistry::add(const std::string &name, std::shared_ptr<const LoadedScene> scene) {
    std::lock_guard<std::mutex> lock(mMutex);
    mEntries[name] = Entry{{}, scene, nullptr};
}

std::vector<std::string>
SceneRegistry::names() const {
    std::lock_guard<std::mutex> lock(mMutex);
    std::vector<std::string> out;
    for (const auto &[name, e] : mEntries) out.push_back(name);
    return out;
}

bool
SceneRegistry::contains(const std::string &name) const {
    std::lock_guard<std::mutex> lock(mMutex);
    return mEntries.count(name) != 0;
}

std::shared_ptr<const StaticSplatCache>
SceneRegistry::cache(const std::string &name) {
    std::lock_guard<std::mutex> lock(mMutex);
    const auto it = mEntries.find(name);
    if (it == mEntries.end()) throw TeleopError("unknown_scene", "unknown scene '" + name + "'", 404);
    Entry &e = it->second;
    if (!e.cache) {
        if (!e.scene) {
            try {
                e.scene = loadScene(e.path);
            } catch (const Error &err) {
                throw TeleopError("scene_load_failed", "scene '" + name + "' failed to load: " + err.what(), 500);
            }
        }
        e.cache = std::make_shared<StaticSplatCache>(e.scene);
    }
    return e.cache;
}

// ---- service -----------------------------------------------------------------------------

TeleopService::TeleopService(SceneRegistry scenes, TeleopOptions options, ClockFn clock)
    : mScenes(std::move(scenes)), mOptions(std::move(options)), mClock(std::move(clock)) {}

std::shared_ptr<TeleopSession>
TeleopService::create(const CreateSessionRequest &request) {
    reap();
    {
        std::lock_guard<std::mutex> lock(mMutex);
        if (mSessions.size() >= mOptions.maxSessions) {
            throw TeleopError("session_limit",
                              "session limit reached (" + std::to_string(mOptions.maxSessions) + " live sessions)", 503);
        }
    }
    const auto cache = mScenes.cache(request.scene);
    TaskSpec task;
    try {
        task = makeTask(request.task, cache->scenePtr());
    } catch (const EnvError &e) {
        throw TeleopError("unknown_task", e.what(), 404);
    }
    std::vector<std::string> cameras = request.cameras.empty() ? task.cameras : request.cameras;
    if (cameras.empty()) throw TeleopError("bad_request", "no cameras to stream");
    for (const auto &name : cameras) {
        const Camera *cam = cache->scene().description.camera(name);
        if (!cam) throw TeleopError("unknown_camera", "unknown camera '" + name + "'", 404);
        if (cam->width > mOptions.maxWidth || cam->height > mOptions.maxHeight) {
            throw TeleopError("bad_request", "camera '" + name + "' exceeds the streaming resolution cap");
        }
    }
    std::shared_ptr<TeleopSession> session;
    try {
        session = std::make_shared<TeleopSession>(randomId(), request.scene, cache, std::move(task), cameras,
                                                  request.seed, mOptions, mClock());
    } catch (const EnvError &e) {
        throw TeleopError("bad_request", e.what());
    }
    std::lock_guard<std::mutex> lock(mMutex);
    if (mSessions.size() >= mOptions.maxSessions) {
        throw TeleopError("session_limit",
                          "session limit reached (" + std::to_string(mOptions.maxSessions) + " live sessions)", 503);
    }
    mSessions.emplace(session->id(), session);
    logInfo("teleop session " + session->id() + " created (" + request.scene + "/" + request.task + ")");
    return session;
}

std::shared_ptr<TeleopSession>
TeleopService::find(const std::string &id) {
    reap();
    std::lock_guard<std::mutex> lock(mMutex);
    const auto it = mSessions.find(id);
    if (it != mSessions.end()) return it->second;
    if (mExpired.count(id)) throw TeleopError("session_expired", "session " + id + " expired after being idle", 410);
    throw TeleopError("not_found", "no session " + id, 404);
}

CommandAck
TeleopService::apply(const std::string &id, const TeleopCommand &command) {
    return find(id)->apply(command, mClock());
}

bool
TeleopService::remove(const std::string &id) {
    std::lock_guard<std::mutex> lock(mMutex);
    return mSessions.erase(id) != 0;
}

std::size_t
TeleopService::reap() {
    const auto now = mClock();
    std::lock_guard<std::mutex> lock(mMutex);
    std::size_t n = 0;
    for (auto it = mSessions.begin(); it != mSessions.end();) {
        if (it->second->expired(now)) {
            logInfo("teleop session " + it->first + " expired");
            mExpired.insert(it->first);
            it = mSessions.erase(it);
            ++n;
        } else {
            ++it;
        }
    }
    return n;
}

std::size_t
TeleopService::size() const {
    std::lock_guard<std::mutex> lock(mMutex);
    return mSessions.size();
}

} // namespace gskit
