// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gskit/env/dataset.hpp>
#include <gskit/env/policy.hpp>

#include <functional>
#include <map>
#include <memory>
#include <random>

namespace gskit {

struct RolloutOptions {
    int maxSteps = -1;         ///< -1: the task's max_steps
    bool recordFrames = false; ///< keep 8-bit frames of every state in the trajectory
};

/// Reset `env` with `seed` and run `policy` until success or the step budget runs out.
/// A non-finite action ends the episode as a failure with a diagnostic.
Trajectory rollout(Environment &env, Policy &policy, std::uint64_t seed, const RolloutOptions &options = {});

/// Same, but starting from the environment's current state instead of a reset.
Trajectory rolloutFromCurrent(Environment &env, Policy &policy, const RolloutOptions &options = {});

/// Uniform draw over the indices of solvable states in a failed trajectory.
std::pair<int, EnvState> sampleRecoveryState(const Trajectory &failure,
                                             const std::function<bool(const EnvState &)> &solvable,
                                             std::mt19937_64 &rng);

/// Restore the recorded state `index` of `failure` exactly and let the expert finish the
/// task from there. The result is tagged as a correction of the failure.
Trajectory restoreAndCorrect(Environment &env, const Trajectory &failure, int index, Policy &expert,
                             const RolloutOptions &options = {});

struct AggregatedDataset {
    DatasetInfo info;
    std::vector<Trajectory> trajectories; ///< tagged by iteration; provenance sim or real
    std::vector<Trajectory> failures;     ///< policy failures that corrections point back to
    std::vector<std::string> importedManifests;
    std::vector<std::string> duplicateImports;

    std::map<int, std::size_t> countsByIteration() const;
    std::map<std::string, std::size_t> countsByProvenance() const;
    /// Trajectories used for training (not excluded).
    std::vector<const Trajectory *> trainingSet() const;
    const Trajectory *findFailure(const std::string &id) const;
};

using PolicyFactory = std::function<std::unique_ptr<Policy>()>;
/// Builds a policy from the data aggregated so far.
using PolicyTrainer = std::function<PolicyFactory(const AggregatedDataset &)>;

struct DaggerConfig {
    int iterations = 2;
    int perIteration = 100;
    std::uint64_t seed = 0;
    int evalEpisodes = -1;                 ///< policy rollouts per iteration; -1: perIteration
    bool includeFailedCorrections = false;
    std::vector<std::uint64_t> heldOutSeeds; ///< extra evaluation after every iteration
    RolloutOptions rollout;
};

struct IterationSummary {
    int iteration = 0;
    std::size_t demos = 0;
    std::size_t corrections = 0;
    std::size_t failedCorrections = 0;
    std::size_t evalEpisodes = 0;
    std::size_t evalFailures = 0;
    double evalSuccessRate = -1.0;    ///< -1 in iteration 1, where no policy is rolled out
    double heldOutSuccessRate = -1.0; ///< -1 when no held-out seeds were given
    std::size_t aggregateSize = 0;
};

struct DaggerResult {
    AggregatedDataset dataset;
    std::vector<IterationSummary> summaries;
};

/// Iteration 1 collects expert demonstrations; every later iteration trains a policy on the
/// aggregate, rolls it out, and collects expert corrections from uniformly sampled
/// recoverable states of its failures. `onIteration` sees the dataset after each iteration.
DaggerResult daggerIterate(EnvBatch &batch, const PolicyTrainer &train, const PolicyFactory &expert,
                           const DaggerConfig &config,
                           const std::function<void(const DaggerResult &)> &onIteration = {});

/// Success rate of `factory` policies over the given reset seeds.
double evaluatePolicy(EnvBatch &batch, const PolicyFactory &factory, const std::vector<std::uint64_t> &seeds,
                      const RolloutOptions &options = {});

/// Union with a real-world dataset; provenance is kept and nothing is deduplicated. An import
/// whose manifest hash was merged before is recorded in duplicateImports.
AggregatedDataset mergeReal(const Dataset &real, const AggregatedDataset &sim);

/// Write an aggregate: one dataset directory per iteration plus failures/ and real/, and an
/// aggregate.json that references them.
void writeAggregate(const std::filesystem::path &dir, const AggregatedDataset &dataset,
                    const std::vector<IterationSummary> &summaries);

struct MimicParams {
    double positionWeight = 10.0; ///< per metre of relative position
    double jointWeight = 0.5;     ///< per radian (or metre) of joint position
    double flagWeight = 5.0;      ///< gripper closed / holding flags
};

/// 1-nearest-neighbour state mimic: finds the most similar recorded state and repeats the
/// joint-space offset of its action.
class NearestNeighborPolicy : public Policy {
  public:
    NearestNeighborPolicy(std::shared_ptr<const LoadedScene> scene, const TaskSpec &task,
                          const std::vector<const Trajectory *> &data, MimicParams params = {});
    std::string id() const override { return "nn-mimic"; }
    JointConfig act(const Observation &observation, const EnvState &state) override;
    std::size_t size() const;

  private:
    struct Impl;
    std::shared_ptr<const Impl> mImpl;
};

PolicyTrainer nearestNeighborTrainer(std::shared_ptr<const LoadedScene> scene, TaskSpec task, MimicParams params = {});

} // namespace gskit
