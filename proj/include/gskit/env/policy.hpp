// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gskit/env/environment.hpp>

#include <memory>
#include <random>
#include <string>
#include <vector>

namespace gskit {

/// Maps an observation (and, for privileged policies, the full state) to a target joint
/// configuration for the next control step.
class Policy {
  public:
    virtual ~Policy() = default;
    virtual std::string id() const = 0;
    /// Called once before every episode.
    virtual void reset(std::uint64_t /*episodeSeed*/) {}
    virtual JointConfig act(const Observation &observation, const EnvState &state) = 0;
};

struct ExpertParams {
    double carryHeight = 0.12;      ///< grasp-frame height above the plane while travelling
    double xyTolerance = 0.003;
    double zTolerance = 0.002;
    double releaseClearance = 0.004; ///< object bottom height above its support at release
};

/// Waypoint expert built from predefined motions: approach above the object, descend, close,
/// lift, carry, descend, open. It reads only the current state, so it can take over from any
/// recorded state.
class ScriptedExpert : public Policy {
  public:
    ScriptedExpert(std::shared_ptr<const LoadedScene> scene, TaskSpec task, ExpertParams params = {});

    std::string id() const override { return "scripted"; }
    JointConfig act(const Observation &observation, const EnvState &state) override;
    JointConfig act(const EnvState &state);

    /// Shift the place target in the plane (used by the perturbed stand-in policy).
    void setPlaceOffset(const Vec3 &offset) { mPlaceOffset = offset; }
    /// Name of the motion the expert is in for `state` (diagnostics).
    std::string phase(const EnvState &state) const;

  private:
    struct Decision {
        std::string phase;
        JointConfig target;
    };
    Decision decide(const EnvState &state) const;
    JointConfig reach(const JointConfig &q, const Vec3 &graspTarget, double gripper) const;

    std::shared_ptr<const LoadedScene> mScene;
    TaskSpec mTask;
    ExpertParams mParams;
    Vec3 mPlaceOffset = Vec3::Zero();
};

/// Replays a fixed action list, then holds position.
class ReplayPolicy : public Policy {
  public:
    explicit ReplayPolicy(std::vector<JointConfig> actions) : mActions(std::move(actions)) {}
    std::string id() const override { return "replay"; }
    void reset(std::uint64_t) override { mNext = 0; }
    JointConfig act(const Observation &observation, const EnvState &state) override;

  private:
    std::vector<JointConfig> mActions;
    std::size_t mNext = 0;
};

/// Uniform random targets inside the joint limits.
class RandomPolicy : public Policy {
  public:
    RandomPolicy(const KinematicTree &tree, std::uint64_t seed);
    std::string id() const override { return "random"; }
    void reset(std::uint64_t episodeSeed) override;
    JointConfig act(const Observation &observation, const EnvState &state) override;

  private:
    JointConfig mLower, mUpper;
    std::uint64_t mSeed;
    std::mt19937_64 mRng;
};

struct PerturbationParams {
    double failureProbability = 0.5; ///< chance an episode gets a biased place target
    double minBias = 0.07;           ///< bias length range (metres), beyond the target radius
    double maxBias = 0.1;
    double actionNoise = 0.01;       ///< Gaussian noise on arm joint targets
    std::uint64_t seed = 0;
};

/// Stand-in for a learned policy: the expert with joint noise and, in some episodes, a
/// persistent error in where it puts the object.
class PerturbedExpert : public Policy {
  public:
    PerturbedExpert(std::shared_ptr<const LoadedScene> scene, TaskSpec task, PerturbationParams params = {});
    std::string id() const override { return "perturbed"; }
    void reset(std::uint64_t episodeSeed) override;
    JointConfig act(const Observation &observation, const EnvState &state) override;
    bool biased() const { return mBiased; }

  private:
    ScriptedExpert mExpert;
    PerturbationParams mParams;
    int mGripperDof;
    std::mt19937_64 mRng;
    bool mBiased = false;
};

} // namespace gskit
