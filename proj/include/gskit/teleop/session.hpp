// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gskit/env/dataset.hpp>
#include <gskit/teleop/frame_codec.hpp>

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>

namespace gskit {

enum class JogMode { Joint, EndEffector };

const char *toString(JogMode mode);

/// A parsed upstream command. The JSON form is {"type": ..., "payload": {...}}:
///
///     jog      {"joint": 2, "direction": 1}        joint mode
///              {"axis": "z", "direction": -1}      end-effector mode; axis in x y z rx ry rz
///     gripper  {"state": "open" | "close"}
///     reset    {"seed": 7}
///     record   {"action": "start" | "stop" | "save"}
///     mode     {"mode": "joint" | "ee"}
struct TeleopCommand {
    enum class Type { Jog, Gripper, Reset, Record, Mode };
    enum class RecordAction { Start, Stop, Save };

    Type type = Type::Jog;
    int joint = -1;
    int axis = -1; ///< 0-2 translation x y z, 3-5 rotation about x y z
    int direction = 0;
    bool closeGripper = false;
    std::uint64_t seed = 0;
    RecordAction record = RecordAction::Start;
    JogMode mode = JogMode::Joint;
};

/// Throws TeleopError("malformed_command") for anything outside the vocabulary above.
TeleopCommand parseCommand(const std::string &jsonText);

struct CommandAck {
    std::string command;
    std::uint64_t stepIndex = 0; ///< session frame counter, see TeleopSession::stepIndex
    int episodeStep = 0;         ///< env step inside the current episode
    bool gripperClosed = false;
    std::optional<std::string> attached;
    bool recording = false;
    JogMode mode = JogMode::Joint;
    std::optional<std::string> saved; ///< trajectory id written by record(save)

    std::string toJson() const;
};

struct TeleopOptions {
    double jointIncrement = 0.02;        ///< rad (or m for prismatic joints) per jog
    double eeTranslation = 0.01;         ///< m per end-effector jog
    double eeRotation = 2.0 * 3.14159265358979323846 / 180.0;
    double ikDamping = 1e-2;
    std::chrono::milliseconds idleTimeout = std::chrono::minutes(10);
    std::size_t maxSessions = 4;
    int maxWidth = 640;
    int maxHeight = 480;
    std::filesystem::path dataRoot = "teleop_data";
    EnvOptions env;
};

using TeleopClock = std::chrono::steady_clock;

/// One live teleoperation session: an environment, the jog state and a recording buffer.
/// Every public member is thread-safe; commands are applied one at a time in call order.
class TeleopSession {
  public:
    using FrameSink = std::function<void(const std::vector<FrameMessage> &)>;

    TeleopSession(std::string id, std::string sceneName, std::shared_ptr<const StaticSplatCache> cache, TaskSpec task,
                  std::vector<std::string> cameras, std::uint64_t seed, const TeleopOptions &options,
                  TeleopClock::time_point now);

    const std::string &id() const { return mId; }
    const std::string &sceneName() const { return mSceneName; }
    const std::string &taskName() const { return mTaskName; }
    const std::vector<std::string> &cameras() const { return mCameras; }

    /// Apply one command and publish its frames to every subscriber before returning.
    CommandAck apply(const TeleopCommand &command, TeleopClock::time_point now);

    /// Frame counter: starts at 0 and grows by one with every command that changes the
    /// environment (jog, gripper, reset). It never decreases, even across resets.
    std::uint64_t stepIndex() const;
    EnvState state() const;
    JogMode mode() const;
    bool recording() const;
    /// Most recent frame of every camera (what a heartbeat re-sends).
    std::vector<FrameMessage> latestFrames() const;
    /// JSON object describing the session.
    std::string describe() const;

    bool expired(TeleopClock::time_point now) const;
    TeleopClock::time_point lastActivity() const;

    /// Frames are delivered under the session lock, so every sink sees step_index in order.
    /// The sink must not call back into the session.
    int subscribe(FrameSink sink);
    void unsubscribe(int token);

    /// Single-writer rule: the first connection to claim control keeps it until released.
    bool claimControl(int token);
    void releaseControl(int token);
    bool isController(int token) const;

    std::filesystem::path datasetDir() const { return mDatasetDir; }
    std::vector<std::string> savedTrajectories() const;

  private:
    CommandAck ackLocked(const std::string &command) const;
    void stepLocked(const JointConfig &target);
    void renderLocked();
    JointConfig jogTargetLocked(const TeleopCommand &command) const;
    std::string saveLocked();

    const std::string mId;
    const std::string mSceneName;
    const std::string mTaskName;
    const std::vector<std::string> mCameras;
    const TeleopOptions mOptions;
    const std::filesystem::path mDatasetDir;

    mutable std::mutex mMutex;
    Environment mEnv;
    std::uint64_t mResetSeed;
    std::uint64_t mStepIndex = 0;
    JogMode mMode = JogMode::Joint;
    TeleopClock::time_point mLastActivity;
    std::vector<FrameMessage> mLatest;

    bool mRecording = false;
    std::optional<Trajectory> mBuffer;
    std::unique_ptr<DatasetWriter> mWriter;
    std::vector<std::string> mSaved;

    std::map<int, FrameSink> mSinks;
    int mNextToken = 1;
    std::optional<int> mController;
};

/// Scene names mapped to GSDF files; scenes load on first use and are shared afterwards.
class SceneRegistry {
  public:
    SceneRegistry() = default;
    SceneRegistry(SceneRegistry &&other) noexcept;
    SceneRegistry &operator=(SceneRegistry &&other) noexcept;

    /// Every *.gsdf file below `root`; the name is the file stem.
    static SceneRegistry scan(const std::filesystem::path &root);

    void add(const std::string &name, const std::filesystem::path &gsdf);
    void add(const std::string &name, std::shared_ptr<const LoadedScene> scene);
    std::vector<std::string> names() const;
    bool contains(const std::string &name) const;
    /// Throws TeleopError("unknown_scene") for an unregistered name.
    std::shared_ptr<const StaticSplatCache> cache(const std::string &name);

  private:
    struct Entry {
        std::filesystem::path path;
        std::shared_ptr<const LoadedScene> scene;
        std::shared_ptr<const StaticSplatCache> cache;
    };
    mutable std::mutex mMutex;
    std::map<std::string, Entry> mEntries;
};

struct CreateSessionRequest {
    std::string scene;
    std::string task;
    std::uint64_t seed = 0;
    std::vector<std::string> cameras; ///< empty: the task's cameras
};

/// Owns the live sessions.
class TeleopService {
  public:
    using ClockFn = std::function<TeleopClock::time_point()>;

    TeleopService(SceneRegistry scenes, TeleopOptions options, ClockFn clock = TeleopClock::now);

    const TeleopOptions &options() const { return mOptions; }
    SceneRegistry &scenes() { return mScenes; }
    TeleopClock::time_point now() const { return mClock(); }

    std::shared_ptr<TeleopSession> create(const CreateSessionRequest &request);
    /// Throws TeleopError "not_found" (404) or "session_expired" (410).
    std::shared_ptr<TeleopSession> find(const std::string &id);
    /// Apply a command, checking expiry first.
    CommandAck apply(const std::string &id, const TeleopCommand &command);
    bool remove(const std::string &id);
    /// Drop every session idle for longer than the timeout; returns how many were dropped.
    std::size_t reap();
    std::size_t size() const;

  private:
    SceneRegistry mScenes;
    TeleopOptions mOptions;
    ClockFn mClock;
    mutable std::mutex mMutex;
    std::map<std::string, std::shared_ptr<TeleopSession>> mSessions;
    std::set<std::string> mExpired;
};

} // namespace gskit
