// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gskit/core/error.hpp>
#include <gskit/core/kd_tree.hpp>
#include <gskit/dagger/dagger.hpp>

#include <json.hpp>

#include <algorithm>
#include <fstream>

namespace gskit {

namespace {

std::uint64_t
splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Reset seed for episode `index` of stream `stream` in iteration `iteration`.
std::uint64_t
episodeSeed(std::uint64_t base, int iteration, int stream, std::size_t index) {
    return splitmix64(splitmix64(splitmix64(base) ^ static_cast<std::uint64_t>(iteration * 16 + stream)) ^ index);
}

Trajectory
runEpisode(Environment &env, Policy &policy, Observation obs, const RolloutOptions &options) {
    const int budget = options.maxSteps > 0 ? options.maxSteps : env.task().maxSteps;
    Trajectory t;
    t.policyId = policy.id();
    t.seed = env.state().episodeSeed;
    t.states.push_back(env.state());
    if (options.recordFrames) {
        std::vector<CameraFrame> set;
        for (const auto &img : obs.images) set.push_back(quantize(img));
        t.frames.push_back(std::move(set));
    }
    bool success = false;
    for (int step = 0; step < budget; ++step) {
        JointConfig action = policy.act(obs, env.state());
        if (action.size() != env.state().q.size() || !action.allFinite()) {
            t.diagnostic = "policy produced an invalid action at step " + std::to_string(step);
            break;
        }
        StepResult r = env.step(action);
        t.actions.push_back(std::move(action));
        t.rewards.push_back(r.reward);
        t.states.push_back(r.info);
        if (options.recordFrames) {
            std::vector<CameraFrame> set;
            for (const auto &img : r.observation.images) set.push_back(quantize(img));
            t.frames.push_back(std::move(set));
        }
        obs = std::move(r.observation);
        if (r.terminated) {
            success = true;
            break;
        }
    }
    const EnvState &last = t.states.back();
    if (success) {
        t.outcome = Outcome::Success;
    } else if (env.task().partial && env.task().partial(last)) {
        t.outcome = Outcome::Partial;
    } else {
        t.outcome = Outcome::Failure;
    }
    return t;
}

/// Run `count` jobs over the environments of a batch. Job j always runs on environment
/// j mod N, so results do not depend on the thread count.
std::vector<Trajectory>
runJobs(EnvBatch &batch, std::size_t count, const std::function<Trajectory(Environment &, std::size_t)> &job) {
    std::vector<Trajectory> out(count);
    const std::size_t n = batch.size();
    parallelFor(std::min(n, count), batch.threads(), [&](std::size_t e) {
        for (std::size_t j = e; j < count; j += n) out[j] = job(batch[e], j);
    });
    return out;
}

std::string
trajectoryId(int iteration, const char *kind, std::size_t index) {
    return "i" + std::to_string(iteration) + "-" + kind + "-" + std::to_string(index);
}

} // namespace

Trajectory
rollout(Environment &env, Policy &policy, std::uint64_t seed, const RolloutOptions &options) {
    policy.reset(seed);
    Observation obs = env.reset(seed);
    Trajectory t = runEpisode(env, policy, std::move(obs), options);
    t.seed = seed;
    return t;
}

Trajectory
rolloutFromCurrent(Environment &env, Policy &policy, const RolloutOptions &options) {
    return runEpisode(env, policy, env.observe(), options);
}

std::pair<int, EnvState>
sampleRecoveryState(const Trajectory &failure, const std::function<bool(const EnvState &)> &solvable,
                    std::mt19937_64 &rng) {
    if (failure.outcome == Outcome::Success) throw DaggerError("recovery states must come from a failed trajectory");
    if (!solvable) throw DaggerError("no solvability predicate");
    std::vector<int> candidates;
    for (std::size_t t = 0; t < failure.states.size(); ++t) {
        if (solvable(failure.states[t])) candidates.push_back(static_cast<int>(t));
    }
    if (candidates.empty()) throw DaggerError("trajectory '" + failure.id + "' has no solvable state");
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    const int index = candidates[pick(rng)];
    return {index, failure.states[static_cast<std::size_t>(index)]};
}

Trajectory
restoreAndCorrect(Environment &env, const Trajectory &failure, int index, Policy &expert, const RolloutOptions &options) {
    if (index < 0 || static_cast<std::size_t>(index) >= failure.states.size()) {
        throw DaggerError("state index " + std::to_string(index) + " is outside trajectory '" + failure.id + "'");
    }
    const EnvState &target = failure.states[static_cast<std::size_t>(index)];
    env.restore(target);
    if (stateDistance(env.state(), target) > 1e-12) throw DaggerError("restoration mismatch");
    expert.reset(failure.seed);
    Trajectory t = rolloutFromCurrent(env, expert, options);
    t.seed = failure.seed;
    t.kind = "corrective";
    t.iteration = failure.iteration;
    t.correctiveOf = CorrectiveRef{failure.id, index};
    t.excluded = t.outcome != Outcome::Success;
    return t;
}

// ---- aggregate ---------------------------------------------------------------------------

std::map<int, std::size_t>
AggregatedDataset::countsByIteration() const {
    std::map<int, std::size_t> out;
    for (const auto &t : trajectories) ++out[t.iteration];
    return out;
}

std::map<std::string, std::size_t>
AggregatedDataset::countsByProvenance() const {
    std::map<std::string, std::size_t> out;
    for (const auto &t : trajectories) ++out[t.provenance];
    return out;
}

std::vector<const Trajectory *>
AggregatedDataset::trainingSet() const {
    std::vector<const Trajectory *> out;
    for (const auto &t : trajectories) {
        if (!t.excluded) out.push_back(&t);
    }
    return out;
}

const Trajectory *
AggregatedDataset::findFailure(const std::string &id) const {
    for (const auto &f : failures) {
        if (f.id == id) return &f;
    }
    return nullptr;
}

double
evaluatePolicy(EnvBatch &batch, const PolicyFactory &factory, const std::vector<std::uint64_t> &seeds,
               const RolloutOptions &options) {
    if (seeds.empty()) return 0.0;
    const auto runs = runJobs(batch, seeds.size(), [&](Environment &env, std::size_t j) {
        auto policy = factory();
        return rollout(env, *policy, seeds[j], options);
    });
    std::size_t ok = 0;
    for (const auto &t : runs) ok += t.outcome == Outcome::Success ? 1 : 0;
    return static_cast<double>(ok) / static_cast<double>(seeds.size());
}

DaggerResult
daggerIterate(EnvBatch &batch, const PolicyTrainer &train, const PolicyFactory &expert, const DaggerConfig &config,
              const std::function<void(const DaggerResult &)> &onIteration) {
    if (config.iterations < 1 || config.perIteration < 1) throw DaggerError("iterations and per-iteration counts must be >= 1");
    DaggerResult result;
    result.dataset.info = datasetInfo(batch[0]);
    std::mt19937_64 rng(splitmix64(config.seed ^ 0xda66e5ULL));
    const auto perIter = static_cast<std::size_t>(config.perIteration);

    auto collectDemos = [&](int iteration, std::size_t first, std::size_t count) {
        return runJobs(batch, count, [&](Environment &env, std::size_t j) {
            auto policy = expert();
            const std::size_t k = first + j;
            Trajectory t = rollout(env, *policy, episodeSeed(config.seed, iteration, 0, k), config.rollout);
            t.id = trajectoryId(iteration, "demo", k);
            t.iteration = iteration;
            t.kind = "demo";
            t.excluded = t.outcome != Outcome::Success && !config.includeFailedCorrections;
            return t;
        });
    };

    for (int iteration = 1; iteration <= config.iterations; ++iteration) {
        IterationSummary summary;
        summary.iteration = iteration;
        std::vector<Trajectory> collected;
        if (iteration == 1) {
            collected = collectDemos(iteration, 0, perIter);
            summary.demos = collected.size();
        } else {
            const PolicyFactory policy = train(result.dataset);
            const std::size_t evalN = config.evalEpisodes < 0 ? perIter : static_cast<std::size_t>(config.evalEpisodes);
            std::vector<Trajectory> evals = runJobs(batch, evalN, [&](Environment &env, std::size_t j) {
                auto p = policy();
                Trajectory t = rollout(env, *p, episodeSeed(config.seed, iteration, 1, j), config.rollout);
                t.id = trajectoryId(iteration, "rollout", j);
                t.iteration = iteration;
                t.kind = "rollout";
                return t;
            });
            std::vector<std::size_t> failures;
            for (auto &t : evals) {
                if (t.outcome != Outcome::Success) {
                    failures.push_back(result.dataset.failures.size());
                    result.dataset.failures.push_back(std::move(t));
                }
            }
            summary.evalEpisodes = evalN;
            summary.evalFailures = failures.size();
            summary.evalSuccessRate =
                evalN ? static_cast<double>(evalN - failures.size()) / static_cast<double>(evalN) : -1.0;

            // Plan every correction up front so the draws do not depend on scheduling.
            const auto &solvable = batch[0].task().solvable;
            std::vector<std::pair<std::size_t, int>> plan;
            std::vector<std::size_t> candidates = failures;
            while (plan.size() < perIter && !candidates.empty()) {
                const std::size_t c = std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng);
                try {
                    const auto [index, state] = sampleRecoveryState(result.dataset.failures[candidates[c]], solvable, rng);
                    plan.emplace_back(candidates[c], index);
                } catch (const DaggerError &) {
                    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(c));
                }
            }
            collected = runJobs(batch, plan.size(), [&](Environment &env, std::size_t j) {
                auto p = expert();
                Trajectory t = restoreAndCorrect(env, result.dataset.failures[plan[j].first], plan[j].second, *p,
                                                 config.rollout);
                t.id = trajectoryId(iteration, "corrective", j);
                t.iteration = iteration;
                t.excluded = t.outcome != Outcome::Success && !config.includeFailedCorrections;
                return t;
            });
            summary.corrections = collected.size();
            for (const auto &t : collected) summary.failedCorrections += t.outcome != Outcome::Success ? 1 : 0;
            if (collected.size() < perIter) {
                // The policy left nothing to correct: top up with fresh demonstrations.
                auto demos = collectDemos(iteration, 0, perIter - collected.size());
                summary.demos = demos.size();
                std::move(demos.begin(), demos.end(), std::back_inserter(collected));
            }
        }
        std::move(collected.begin(), collected.end(), std::back_inserter(result.dataset.trajectories));
        summary.aggregateSize = result.dataset.trajectories.size();
        if (!config.heldOutSeeds.empty()) {
            summary.heldOutSuccessRate = evaluatePolicy(batch, train(result.dataset), config.heldOutSeeds, config.rollout);
        }
        result.summaries.push_back(summary);
        if (onIteration) onIteration(result);
    }
    return result;
}

AggregatedDataset
mergeReal(const Dataset &real, const AggregatedDataset &sim) {
    const bool simEmpty = sim.trajectories.empty() && sim.info.dof == 0;
    if (!simEmpty && !real.trajectories.empty()) {
        if (real.info.dof != sim.info.dof || real.info.objectCount != sim.info.objectCount || real.info.task != sim.info.task) {
            throw DatasetError("schema mismatch: real data (task " + real.info.task + ", dof " + std::to_string(real.info.dof) +
                               ") does not match the simulated aggregate (task " + sim.info.task + ", dof " +
                               std::to_string(sim.info.dof) + ")");
        }
    }
    AggregatedDataset out = sim;
    if (simEmpty) out.info = real.info;
    if (std::find(out.importedManifests.begin(), out.importedManifests.end(), real.manifestHash) !=
        out.importedManifests.end()) {
        out.duplicateImports.push_back(real.manifestHash);
    }
    out.importedManifests.push_back(real.manifestHash);
    const std::string prefix = "real" + std::to_string(out.importedManifests.size()) + "-";
    for (const auto &t : real.trajectories) {
        Trajectory copy = t;
        copy.id = prefix + t.id;
        copy.provenance = "real";
        out.trajectories.push_back(std::move(copy));
    }
    return out;
}

void
writeAggregate(const std::filesystem::path &dir, const AggregatedDataset &dataset,
               const std::vector<IterationSummary> &summaries) {
    using nlohmann::json;
    std::filesystem::create_directories(dir);
    std::map<std::string, std::unique_ptr<DatasetWriter>> writers;
    auto writerFor = [&](const std::string &name) -> DatasetWriter & {
        auto &w = writers[name];
        if (!w) w = std::make_unique<DatasetWriter>(dir / name, dataset.info);
        return *w;
    };
    for (const auto &t : dataset.trajectories) {
        writerFor(t.provenance == "sim" ? "iter_" + std::to_string(t.iteration) : t.provenance).add(t);
    }
    for (const auto &t : dataset.failures) writerFor("failures").add(t);

    json parts = json::object();
    for (const auto &[name, w] : writers) parts[name] = {{"path", name}, {"trajectories", w->size()}};
    json iterCounts = json::object();
    for (const auto &[k, v] : dataset.countsByIteration()) iterCounts[std::to_string(k)] = v;
    json sums = json::array();
    for (const auto &s : summaries) {
        sums.push_back({{"iteration", s.iteration},
                        {"demos", s.demos},
                        {"corrections", s.corrections},
                        {"failed_corrections", s.failedCorrections},
                        {"eval_episodes", s.evalEpisodes},
                        {"eval_failures", s.evalFailures},
                        {"eval_success_rate", s.evalSuccessRate},
                        {"held_out_success_rate", s.heldOutSuccessRate},
                        {"aggregate_size", s.aggregateSize}});
    }
    const json doc = {{"format", "gskit-aggregate"},
                      {"version", 1},
                      {"task", dataset.info.task},
                      {"datasets", parts},
                      {"counts", {{"total", dataset.trajectories.size()},
                                  {"training", dataset.trainingSet().size()},
                                  {"failures", dataset.failures.size()},
                                  {"iterations", iterCounts},
                                  {"provenance", dataset.countsByProvenance()}}},
                      {"imported_manifests", dataset.importedManifests},
                      {"duplicate_imports", dataset.duplicateImports},
                      {"summaries", sums}};
    std::ofstream out(dir / "aggregate.json");
    out << doc.dump(1) << "\n";
    if (!out) throw DatasetError("cannot write aggregate.json");
}

// ---- 1-NN mimic --------------------------------------------------------------------------

struct NearestNeighborPolicy::Impl {
    std::shared_ptr<const LoadedScene> scene;
    TaskSpec task;
    MimicParams params;
    int gripperDof = -1;
    std::vector<JointConfig> offsets; ///< action - q, gripper entry absolute
    std::unique_ptr<KdTree> tree;

    std::vector<double> feature(const EnvState &s) const {
        const LoadedRobot &r = scene->robots.front();
        const int ee = r.eeLink >= 0 ? r.eeLink : static_cast<int>(r.tree.links.size()) - 1;
        const Vec3 grasp = (robotLinkWorldPoses(r, s.q)[static_cast<std::size_t>(ee)] * r.graspOffset).translation;
        const Vec3 pick = s.objectPoses[static_cast<std::size_t>(task.goal.pickObject)].translation;
        const Vec3 goal = task.goal.placeOnObject >= 0
                              ? s.objectPoses[static_cast<std::size_t>(task.goal.placeOnObject)].translation
                              : task.goal.placePoint;
        std::vector<double> f;
        for (int i = 0; i < 3; ++i) f.push_back(params.positionWeight * (pick[i] - grasp[i]));
        for (int i = 0; i < 3; ++i) f.push_back(params.positionWeight * (goal[i] - grasp[i]));
        for (Eigen::Index i = 0; i < s.q.size(); ++i) {
            if (i != gripperDof) f.push_back(params.jointWeight * s.q[i]);
        }
        f.push_back(params.flagWeight * (r.gripperIsClosed(s.q) ? 1.0 : 0.0));
        f.push_back(params.flagWeight * (s.attached ? 1.0 : 0.0));
        return f;
    }
};

NearestNeighborPolicy::NearestNeighborPolicy(std::shared_ptr<const LoadedScene> scene, const TaskSpec &task,
                                             const std::vector<const Trajectory *> &data, MimicParams params) {
    auto impl = std::make_shared<Impl>();
    impl->scene = std::move(scene);
    impl->task = task;
    impl->params = params;
    impl->gripperDof = impl->scene->robots.front().gripperDof;
    std::vector<double> flat;
    std::size_t dim = 0;
    for (const Trajectory *t : data) {
        for (std::size_t s = 0; s < t->actions.size(); ++s) {
            const auto f = impl->feature(t->states[s]);
            dim = f.size();
            flat.insert(flat.end(), f.begin(), f.end());
            JointConfig off = t->actions[s] - t->states[s].q;
            if (impl->gripperDof >= 0) off[impl->gripperDof] = t->actions[s][impl->gripperDof];
            impl->offsets.push_back(std::move(off));
        }
    }
    if (impl->offsets.empty()) throw DaggerError("the mimic policy needs at least one recorded step");
    impl->tree = std::make_unique<KdTree>(flat, dim);
    mImpl = std::move(impl);
}

std::size_t
NearestNeighborPolicy::size() const {
    return mImpl->offsets.size();
}

JointConfig
NearestNeighborPolicy::act(const Observation &, const EnvState &state) {
    const auto f = mImpl->feature(state);
    const JointConfig &off = mImpl->offsets[mImpl->tree->nearestOne(f).index];
    JointConfig a = state.q + off;
    if (mImpl->gripperDof >= 0) a[mImpl->gripperDof] = off[mImpl->gripperDof];
    return a;
}

PolicyTrainer
nearestNeighborTrainer(std::shared_ptr<const LoadedScene> scene, TaskSpec task, MimicParams params) {
    return [scene, task, params](const AggregatedDataset &data) -> PolicyFactory {
        auto policy = std::make_shared<NearestNeighborPolicy>(scene, task, data.trainingSet(), params);
        return [policy]() -> std::unique_ptr<Policy> { return std::make_unique<NearestNeighborPolicy>(*policy); };
    };
}

} // namespace gskit
