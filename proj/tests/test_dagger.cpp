// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include "test_util.hpp"

#include <gskit/core/error.hpp>
#include <gskit/dagger/dagger.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>

using namespace gskit;

namespace {

struct Fixture {
    std::shared_ptr<const LoadedScene> scene;
    std::shared_ptr<const StaticSplatCache> cache;
    TaskSpec task;
};

const Fixture &
fixture(const std::string &name = "place_box") {
    static std::map<std::string, Fixture> all;
    auto &f = all[name];
    if (!f.scene) {
        f.scene = test::demoScene(name);
        f.cache = std::make_shared<StaticSplatCache>(f.scene);
        f.task = makeTask(name, f.scene);
    }
    return f;
}

EnvOptions
noRender() {
    EnvOptions o;
    o.render = false;
    return o;
}

PolicyFactory
expertFactory(const Fixture &f) {
    return [&f] { return std::make_unique<ScriptedExpert>(f.scene, f.task); };
}

/// A policy that always fails: it holds the home pose.
class IdlePolicy : public Policy {
  public:
    std::string id() const override { return "idle"; }
    JointConfig act(const Observation &, const EnvState &state) override { return state.q; }
};

class NanPolicy : public Policy {
  public:
    std::string id() const override { return "nan"; }
    JointConfig act(const Observation &, const EnvState &state) override {
        JointConfig q = state.q;
        if (state.stepIndex == 3) q[0] = std::nan("");
        return q;
    }
};

Trajectory
perturbedFailure(Environment &env, const Fixture &f, std::uint64_t firstSeed = 0) {
    PerturbationParams p;
    p.failureProbability = 1.0;
    PerturbedExpert policy(f.scene, f.task, p);
    for (std::uint64_t seed = firstSeed;; ++seed) {
        Trajectory t = rollout(env, policy, seed);
        if (t.outcome != Outcome::Success) return t;
    }
}

} // namespace

TEST(Rollout, ExpertRecordsConsistentTrajectory) {
    const Fixture &f = fixture();
    Environment env(f.cache, f.task, noRender());
    ScriptedExpert expert(f.scene, f.task);
    const Trajectory t = rollout(env, expert, 17);
    EXPECT_EQ(t.outcome, Outcome::Success);
    ASSERT_EQ(t.states.size(), t.actions.size() + 1);
    ASSERT_EQ(t.rewards.size(), t.actions.size());
    EXPECT_EQ(t.rewards.back(), 1.0);
    EXPECT_EQ(t.seed, 17u);
    EXPECT_EQ(t.policyId, "scripted");
    for (std::size_t i = 0; i < t.states.size(); ++i) EXPECT_EQ(t.states[i].stepIndex, static_cast<int>(i));
    EXPECT_EQ(t.states.back(), env.state());
}

TEST(Rollout, BudgetAndFailures) {
    const Fixture &f = fixture();
    Environment env(f.cache, f.task, noRender());
    IdlePolicy idle;
    RolloutOptions o;
    o.maxSteps = 13;
    const Trajectory t = rollout(env, idle, 1, o);
    EXPECT_EQ(t.steps(), 13u);
    EXPECT_EQ(t.outcome, Outcome::Failure);

    RandomPolicy random(env.robot().tree, 3);
    const Trajectory r = rollout(env, random, 2);
    EXPECT_EQ(r.steps(), static_cast<std::size_t>(f.task.maxSteps));

    NanPolicy nan;
    const Trajectory n = rollout(env, nan, 1);
    EXPECT_EQ(n.outcome, Outcome::Failure);
    EXPECT_EQ(n.steps(), 3u);
    EXPECT_FALSE(n.diagnostic.empty());
}

TEST(Rollout, ReplayReproducesFinalState) {
    const Fixture &f = fixture("stack_cans");
    Environment env(f.cache, f.task, noRender());
    ScriptedExpert expert(f.scene, f.task);
    const Trajectory t = rollout(env, expert, 5);
    ReplayPolicy replay(t.actions);
    const Trajectory again = rollout(env, replay, 5);
    EXPECT_EQ(again.states, t.states);
    EXPECT_EQ(again.outcome, t.outcome);
}

TEST(Recovery, SamplerErrorsAndUniqueness) {
    const Fixture &f = fixture();
    Environment env(f.cache, f.task, noRender());
    ScriptedExpert expert(f.scene, f.task);
    std::mt19937_64 rng(1);
    const Trajectory ok = rollout(env, expert, 1);
    EXPECT_THROW(sampleRecoveryState(ok, f.task.solvable, rng), DaggerError);
    Trajectory bad = perturbedFailure(env, f);
    EXPECT_THROW(sampleRecoveryState(bad, [](const EnvState &) { return false; }, rng), DaggerError);
    const auto [index, state] = sampleRecoveryState(bad, f.task.solvable, rng);
    EXPECT_EQ(state, bad.states[static_cast<std::size_t>(index)]);
    EXPECT_TRUE(f.task.solvable(state));
}

TEST(Recovery, SamplerIsUniform) {
    Trajectory t;
    t.id = "synthetic";
    t.outcome = Outcome::Failure;
    for (int i = 0; i < 30; ++i) {
        EnvState s;
        s.stepIndex = i;
        t.states.push_back(s);
    }
    // Only 20 of the 30 states qualify.
    auto solvable = [](const EnvState &s) { return s.stepIndex % 3 != 1; };
    std::mt19937_64 rng(99);
    std::map<int, std::size_t> hits;
    for (int k = 0; k < 10000; ++k) {
        const auto [index, state] = sampleRecoveryState(t, solvable, rng);
        ASSERT_TRUE(solvable(state));
        ++hits[index];
    }
    ASSERT_EQ(hits.size(), 20u);
    std::vector<std::size_t> counts;
    for (auto &[i, c] : hits) counts.push_back(c);
    EXPECT_GT(test::chiSquareUniformPValue(counts), 0.01);
}

TEST(Recovery, RestoredFramesAreIdentical) {
    const Fixture &f = fixture();
    Environment env(f.cache, f.task);
    PerturbationParams p;
    p.failureProbability = 1.0;
    PerturbedExpert policy(f.scene, f.task, p);
    RolloutOptions o;
    o.recordFrames = true;
    const Trajectory t = rollout(env, policy, 4, o);
    ASSERT_EQ(t.frames.size(), t.states.size());
    for (const std::size_t i : {std::size_t{0}, t.states.size() / 3, t.states.size() / 2, t.states.size() - 1}) {
        Environment other(f.cache, f.task);
        other.reset(12345);
        other.restore(t.states[i]);
        const Observation obs = other.observe();
        ASSERT_EQ(obs.images.size(), t.frames[i].size());
        for (std::size_t c = 0; c < obs.images.size(); ++c) EXPECT_EQ(quantize(obs.images[c]), t.frames[i][c]);
    }
}

TEST(Recovery, CorrectionFromStartMatchesFreshExpert) {
    const Fixture &f = fixture();
    Environment env(f.cache, f.task, noRender());
    const Trajectory failure = perturbedFailure(env, f, 10);
    ScriptedExpert expert(f.scene, f.task);
    const Trajectory corr = restoreAndCorrect(env, failure, 0, expert);
    const Trajectory fresh = rollout(env, expert, failure.seed);
    EXPECT_EQ(corr.states, fresh.states);
    EXPECT_EQ(corr.actions, fresh.actions);
    EXPECT_EQ(corr.kind, "corrective");
    ASSERT_TRUE(corr.correctiveOf.has_value());
    EXPECT_EQ(corr.correctiveOf->failureId, failure.id);
    EXPECT_EQ(corr.correctiveOf->stateIndex, 0);
    EXPECT_THROW(restoreAndCorrect(env, failure, static_cast<int>(failure.states.size()), expert), DaggerError);

    const int mid = static_cast<int>(failure.states.size() / 2);
    const Trajectory tail = restoreAndCorrect(env, failure, mid, expert);
    EXPECT_EQ(tail.states.front(), failure.states[static_cast<std::size_t>(mid)]);
}

TEST(Dagger, TwoIterationsWithBackReferences) {
    const Fixture &f = fixture();
    EnvBatch batch(f.cache, f.task, 4, noRender(), 2);
    // The trainer ignores the data and returns a flawed stand-in policy.
    const PolicyTrainer trainer = [&f](const AggregatedDataset &) -> PolicyFactory {
        return [&f] { return std::make_unique<PerturbedExpert>(f.scene, f.task); };
    };
    DaggerConfig cfg;
    cfg.iterations = 2;
    cfg.perIteration = 100;
    cfg.seed = 3;
    int callbacks = 0;
    const DaggerResult r = daggerIterate(batch, trainer, expertFactory(f), cfg, [&](const DaggerResult &) { ++callbacks; });
    EXPECT_EQ(callbacks, 2);
    const auto counts = r.dataset.countsByIteration();
    EXPECT_EQ(counts, (std::map<int, std::size_t>{{1, 100}, {2, 100}}));
    ASSERT_EQ(r.summaries.size(), 2u);
    EXPECT_GT(r.summaries[1].corrections, 0u);
    EXPECT_GT(r.summaries[1].evalFailures, 0u);

    std::set<std::string> ids;
    for (const auto &t : r.dataset.trajectories) {
        EXPECT_TRUE(ids.insert(t.id).second) << t.id;
        if (t.iteration == 1) {
            EXPECT_EQ(t.kind, "demo");
        }
        if (t.kind == "corrective") {
            ASSERT_TRUE(t.correctiveOf.has_value());
            const Trajectory *failure = r.dataset.findFailure(t.correctiveOf->failureId);
            ASSERT_NE(failure, nullptr);
            EXPECT_NE(failure->outcome, Outcome::Success);
            const auto idx = static_cast<std::size_t>(t.correctiveOf->stateIndex);
            ASSERT_LT(idx, failure->states.size());
            EXPECT_EQ(t.states.front(), failure->states[idx]);
            EXPECT_EQ(t.excluded, t.outcome != Outcome::Success);
        }
    }

    // Same configuration on a differently sized batch gives the same data.
    EnvBatch other(f.cache, f.task, 3, noRender(), 1);
    const DaggerResult again = daggerIterate(other, trainer, expertFactory(f), cfg);
    ASSERT_EQ(again.dataset.trajectories.size(), r.dataset.trajectories.size());
    for (std::size_t i = 0; i < r.dataset.trajectories.size(); ++i) {
        EXPECT_EQ(again.dataset.trajectories[i].id, r.dataset.trajectories[i].id);
        EXPECT_EQ(again.dataset.trajectories[i].states, r.dataset.trajectories[i].states);
    }

    const auto dir = test::scratchDir("dagger_aggregate");
    writeAggregate(dir, r.dataset, r.summaries);
    EXPECT_TRUE(std::filesystem::exists(dir / "aggregate.json"));
    EXPECT_TRUE(validateDataset(dir / "iter_1").empty());
    EXPECT_TRUE(validateDataset(dir / "iter_2").empty());
    EXPECT_TRUE(validateDataset(dir / "failures").empty());
    EXPECT_EQ(readDataset(dir / "iter_2").trajectories.size(), 100u);
}

TEST(Dagger, SingleIterationHasNoCorrections) {
    const Fixture &f = fixture();
    EnvBatch batch(f.cache, f.task, 2, noRender());
    DaggerConfig cfg;
    cfg.iterations = 1;
    cfg.perIteration = 5;
    bool trained = false;
    const PolicyTrainer trainer = [&](const AggregatedDataset &) -> PolicyFactory {
        trained = true;
        return expertFactory(f);
    };
    const DaggerResult r = daggerIterate(batch, trainer, expertFactory(f), cfg);
    EXPECT_FALSE(trained);
    EXPECT_EQ(r.dataset.trajectories.size(), 5u);
    for (const auto &t : r.dataset.trajectories) EXPECT_EQ(t.kind, "demo");
    EXPECT_TRUE(r.dataset.failures.empty());

    cfg.iterations = 0;
    EXPECT_THROW(daggerIterate(batch, trainer, expertFactory(f), cfg), DaggerError);
}

TEST(Dataset, RoundTripAndValidation) {
    const Fixture &f = fixture();
    Environment env(f.cache, f.task);
    ScriptedExpert expert(f.scene, f.task);
    RolloutOptions o;
    o.recordFrames = true;
    Trajectory t = rollout(env, expert, 8, o);
    t.id = "demo-0";
    const auto dir = test::scratchDir("dataset_roundtrip");
    {
        DatasetWriter w(dir, datasetInfo(env));
        w.add(t);
        EXPECT_THROW(w.add(t), DatasetError);
    }
    EXPECT_THROW(DatasetWriter(dir, datasetInfo(env)), DatasetError);
    EXPECT_TRUE(validateDataset(dir).empty());
    const Dataset d = readDataset(dir, true);
    ASSERT_EQ(d.trajectories.size(), 1u);
    const Trajectory &back = d.trajectories[0];
    EXPECT_EQ(back.states, t.states);
    EXPECT_EQ(back.actions, t.actions);
    EXPECT_EQ(back.rewards, t.rewards);
    EXPECT_EQ(back.outcome, t.outcome);
    EXPECT_EQ(back.frames, t.frames);
    EXPECT_EQ(d.info.sceneHash, sceneHash(*f.scene));

    ReplayPolicy replay(back.actions);
    const Trajectory again = rollout(env, replay, back.seed);
    EXPECT_EQ(again.states.back(), t.states.back());

    // Corrupt a binary array and the validator notices.
    std::filesystem::resize_file(dir / "trajectories" / "demo-0" / "q.f32", 7);
    EXPECT_FALSE(validateDataset(dir).empty());
    EXPECT_FALSE(validateDataset(dir / "missing").empty());
}

TEST(Dataset, EnvStateJsonIsExact) {
    EnvState s;
    s.q = JointConfig::Random(5);
    s.objectPoses = {RigidTransform(Quat(0.1, 0.7, -0.3, 0.2).normalized(), Vec3(1.0 / 3.0, -2e-17, 5.5))};
    s.attached = 0;
    s.attachOffset = RigidTransform(Quat::Identity(), Vec3(0.1, 0.2, 0.3));
    s.stepIndex = 77;
    s.episodeSeed = 0xfedcba9876543210ull;
    EXPECT_EQ(envStateFromJson(envStateToJson(s)), s);
    EXPECT_THROW(envStateFromJson("{"), DatasetError);
}

TEST(MergeReal, CountsProvenanceAndDuplicates) {
    const Fixture &f = fixture();
    Environment env(f.cache, f.task, noRender());
    ScriptedExpert expert(f.scene, f.task);
    const auto dir = test::scratchDir("real_dataset");
    {
        DatasetWriter w(dir, datasetInfo(env));
        for (int i = 0; i < 3; ++i) {
            Trajectory t = rollout(env, expert, static_cast<std::uint64_t>(50 + i));
            t.id = "teleop-" + std::to_string(i);
            t.iteration = 1;
            w.add(t);
        }
    }
    const Dataset real = readDataset(dir);
    AggregatedDataset sim;
    sim.info = datasetInfo(env);
    for (int i = 0; i < 4; ++i) {
        Trajectory t = rollout(env, expert, static_cast<std::uint64_t>(i));
        t.id = "i1-demo-" + std::to_string(i);
        t.iteration = 1;
        sim.trajectories.push_back(t);
    }
    const AggregatedDataset once = mergeReal(real, sim);
    EXPECT_EQ(once.trajectories.size(), 7u);
    EXPECT_EQ(once.countsByProvenance(), (std::map<std::string, std::size_t>{{"real", 3}, {"sim", 4}}));
    EXPECT_TRUE(once.duplicateImports.empty());
    const AggregatedDataset twice = mergeReal(real, once);
    EXPECT_EQ(twice.trajectories.size(), 10u);
    ASSERT_EQ(twice.duplicateImports.size(), 1u);
    EXPECT_EQ(twice.duplicateImports[0], real.manifestHash);

    Dataset wrong = real;
    wrong.info.dof += 1;
    EXPECT_THROW(mergeReal(wrong, sim), DatasetError);
}

TEST(Mimic, ReproducesAMemorisedDemo) {
    const Fixture &f = fixture();
    Environment env(f.cache, f.task, noRender());
    ScriptedExpert expert(f.scene, f.task);
    AggregatedDataset data;
    data.info = datasetInfo(env);
    data.trajectories.push_back(rollout(env, expert, 21));
    const PolicyFactory factory = nearestNeighborTrainer(f.scene, f.task)(data);
    auto policy = factory();
    EXPECT_EQ(policy->id(), "nn-mimic");
    const Trajectory t = rollout(env, *policy, 21);
    EXPECT_EQ(t.outcome, Outcome::Success);
    EXPECT_THROW(nearestNeighborTrainer(f.scene, f.task)(AggregatedDataset{}), DaggerError);
}
