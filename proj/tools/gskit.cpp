// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: demo assets, validation, rendering, alignment, rollouts, DAgger
// and the teleoperation server.

#include <gskit/align/align.hpp>
#include <gskit/asset/loaded_scene.hpp>
#include <gskit/asset/splat_file.hpp>
#include <gskit/core/error.hpp>
#include <gskit/core/log.hpp>
#include <gskit/dagger/dagger.hpp>
#include <gskit/demo/demo_scene.hpp>
#include <gskit/kinematics/forward_kinematics.hpp>
#ifdef GSKIT_WITH_TELEOP
#include <gskit/teleop/server.hpp>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace gskit;
using nlohmann::json;

namespace {

std::string
readText(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

json
poseJson(const RigidTransform &t) {
    return {{"rotation_wxyz", {t.rotation.w(), t.rotation.x(), t.rotation.y(), t.rotation.z()}},
            {"translation", {t.translation.x(), t.translation.y(), t.translation.z()}}};
}

struct SceneArgs {
    std::filesystem::path scene;
    std::string task = "place_box";
    std::uint64_t seed = 0;
};

void
addSceneArgs(CLI::App *app, SceneArgs &args) {
    app->add_option("--scene", args.scene, "GSDF scene file")->required()->check(CLI::ExistingFile);
    app->add_option("--task", args.task, "task name")->check(CLI::IsMember(taskNames()));
    app->add_option("--seed", args.seed, "reset seed");
}

std::unique_ptr<Policy>
makePolicy(const std::string &name, const std::shared_ptr<const LoadedScene> &scene, const TaskSpec &task,
           std::uint64_t seed) {
    if (name == "expert") return std::make_unique<ScriptedExpert>(scene, task);
    if (name == "perturbed") return std::make_unique<PerturbedExpert>(scene, task);
    return std::make_unique<RandomPolicy>(scene->robots.front().tree, seed);
}

// ---- subcommands -------------------------------------------------------------------------

int
runMakeDemo(const std::filesystem::path &out, const DemoSceneOptions &options) {
    std::cout << writeDemoScene(out, options).string() << "\n";
    return 0;
}

int
runValidate(const std::filesystem::path &scene, const std::filesystem::path &dataset) {
    int status = 0;
    if (!scene.empty()) {
        GsdfParseOptions parse;
        parse.validate = false;
        const SceneDescription d = loadGsdf(scene, parse);
        const ValidationReport report = validateScene(d, d.baseDir);
        if (report.empty()) {
            std::cout << scene.string() << ": ok\n";
        } else {
            std::cout << report.toString();
            status = 1;
        }
    }
    if (!dataset.empty()) {
        const auto problems = validateDataset(dataset);
        for (const auto &p : problems) std::cout << dataset.string() << ": " << p << "\n";
        if (problems.empty()) std::cout << dataset.string() << ": ok\n";
        status = problems.empty() ? status : 1;
    }
    return status;
}

int
runRender(const SceneArgs &args, const std::filesystem::path &statePath, std::vector<std::string> cameras,
          const std::filesystem::path &outDir, bool jitter) {
    const auto scene = loadScene(args.scene);
    const auto cache = std::make_shared<StaticSplatCache>(scene);
    EnvOptions options;
    options.render = false;
    options.colorJitter = jitter;
    Environment env(cache, makeTask(args.task, scene), options);
    env.reset(args.seed);
    if (!statePath.empty()) env.restore(envStateFromJson(readText(statePath)));
    if (cameras.empty()) cameras = env.task().cameras;
    std::filesystem::create_directories(outDir);
    for (const auto &name : cameras) {
        const RenderOutput img = env.renderCamera(name);
        const auto path = outDir / (name + ".png");
        writePng(path, toRgb8(img), img.width, img.height);
        std::cout << path.string() << "\n";
    }
    return 0;
}

int
runAlignScale(const std::filesystem::path &markers, const std::filesystem::path &splats) {
    const MarkerObservation marker = loadMarkerFile(markers);
    Vec3 centroid = Vec3::Zero();
    if (!splats.empty()) {
        const PointCloud cloud = splatCloud(loadSplatFile(splats), 0.0);
        for (const auto &p : cloud) centroid += p;
        if (!cloud.empty()) centroid /= static_cast<double>(cloud.size());
    } else {
        for (const auto &c : marker.corners) centroid += c / 4.0;
        centroid.z() += 1.0;
    }
    const ScaleEstimate e = estimateScale(marker, centroid);
    const json out = {{"scale", e.scale},
                      {"support_plane",
                       {{"point", {e.supportPlane.point.x(), e.supportPlane.point.y(), e.supportPlane.point.z()}},
                        {"normal", {e.supportPlane.normal.x(), e.supportPlane.normal.y(), e.supportPlane.normal.z()}}}},
                      {"gravity_dir", {e.gravityDir.x(), e.gravityDir.y(), e.gravityDir.z()}},
                      {"edge_lengths", e.edgeLengths}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

int
runAlignRobot(const std::filesystem::path &scenePath, std::size_t robot, std::size_t points) {
    const auto scene = loadScene(scenePath);
    if (robot >= scene->robots.size()) throw Error("scene has no robot " + std::to_string(robot));
    const LoadedRobot &r = scene->robots[robot];
    RobotAlignParams params;
    params.surfacePoints = points;
    // The scan lives in the reconstruction frame; start from the declared base pose.
    const AlignmentResult a = alignRobot(splatCloud(r.scan), r.tree, r.capturedQ, r.base, params);
    const RigidTransform delta = r.base.inverse() * a.transform;
    const json out = {{"robot", r.name},
                      {"transform", poseJson(a.transform)},
                      {"declared_base", poseJson(r.base)},
                      {"translation_change_m", delta.translation.norm()},
                      {"rotation_change_deg", Eigen::AngleAxisd(delta.rotation).angle() * 180.0 / 3.14159265358979323846},
                      {"rms_residual", a.rmsResidual},
                      {"inlier_fraction", a.inlierFraction},
                      {"iterations", a.iterationsUsed}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

int
runAlignSegment(const std::filesystem::path &scenePath, std::size_t robot, std::size_t k, double cutoff,
                const std::filesystem::path &outPath) {
    const auto scene = loadScene(scenePath);
    if (robot >= scene->robots.size()) throw Error("scene has no robot " + std::to_string(robot));
    const LoadedRobot &r = scene->robots[robot];
    // Link surfaces posed at the capture configuration, in the scan frame.
    const LinkPoses poses = robotLinkWorldPoses(r, r.capturedQ);
    std::vector<PointCloud> linkClouds(r.tree.links.size());
    for (std::size_t l = 0; l < r.tree.links.size(); ++l) {
        if (r.linkMeshes[l].vertices.empty()) continue;
        for (const auto &p : sampleSurfacePoints(r.linkMeshes[l], 2000, 17 + l)) linkClouds[l].push_back(poses[l].apply(p));
    }
    const std::vector<int> labels = segmentLinksKnn(r.scan.centroids, linkClouds, k, cutoff);
    std::size_t agree = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) agree += labels[i] == r.labels[i];
    const json out = {{"robot", r.name},
                      {"splats", labels.size()},
                      {"agreement_with_scene_labels", labels.empty() ? 1.0 : double(agree) / double(labels.size())}};
    if (!outPath.empty()) {
        std::ofstream f(outPath);
        f << json(labels).dump() << "\n";
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

int
runRollout(const SceneArgs &args, const std::string &policyName, int episodes, const std::filesystem::path &out,
           bool frames) {
    const auto scene = loadScene(args.scene);
    const auto cache = std::make_shared<StaticSplatCache>(scene);
    const TaskSpec task = makeTask(args.task, scene);
    EnvOptions options;
    options.render = frames;
    Environment env(cache, task, options);
    std::unique_ptr<DatasetWriter> writer;
    if (!out.empty()) writer = std::make_unique<DatasetWriter>(out, datasetInfo(env));
    RolloutOptions ro;
    ro.recordFrames = frames;
    std::map<std::string, int> outcomes;
    for (int i = 0; i < episodes; ++i) {
        const std::uint64_t seed = args.seed + static_cast<std::uint64_t>(i);
        auto policy = makePolicy(policyName, scene, task, seed);
        Trajectory t = rollout(env, *policy, seed, ro);
        t.id = policyName + "-" + std::to_string(i);
        ++outcomes[toString(t.outcome)];
        if (writer) writer->add(t);
    }
    std::cout << json{{"policy", policyName}, {"episodes", episodes}, {"outcomes", outcomes}}.dump(2) << "\n";
    return 0;
}

struct DaggerArgs {
    SceneArgs scene;
    DaggerConfig config;
    int heldOut = 50;
    std::uint64_t heldOutBase = 1000000;
    int envs = 4;
    int threads = 1;
    std::filesystem::path out;
    std::vector<std::filesystem::path> real;
};

int
runDagger(DaggerArgs &args) {
    const auto scene = loadScene(args.scene.scene);
    const auto cache = std::make_shared<StaticSplatCache>(scene);
    const TaskSpec task = makeTask(args.scene.task, scene);
    EnvOptions options;
    options.render = args.config.rollout.recordFrames;
    EnvBatch batch(cache, task, static_cast<std::size_t>(std::max(1, args.envs)), options, args.threads);
    for (int i = 0; i < args.heldOut; ++i) args.config.heldOutSeeds.push_back(args.heldOutBase + static_cast<std::uint64_t>(i));
    const PolicyFactory expert = [&] { return std::make_unique<ScriptedExpert>(scene, task); };
    DaggerResult result = daggerIterate(batch, nearestNeighborTrainer(scene, task), expert, args.config,
                                        [](const DaggerResult &r) {
                                            const IterationSummary &s = r.summaries.back();
                                            std::cout << json{{"iteration", s.iteration},
                                                              {"demos", s.demos},
                                                              {"corrections", s.corrections},
                                                              {"failed_corrections", s.failedCorrections},
                                                              {"eval_success_rate", s.evalSuccessRate},
                                                              {"held_out_success_rate", s.heldOutSuccessRate},
                                                              {"aggregate_size", s.aggregateSize}}
                                                             .dump()
                                                      << std::endl;
                                        });
    for (const auto &dir : args.real) result.dataset = mergeReal(readDataset(dir), result.dataset);
    if (!result.dataset.duplicateImports.empty()) {
        logWarning(std::to_string(result.dataset.duplicateImports.size()) + " real dataset(s) were imported twice");
    }
    if (!args.out.empty()) {
        writeAggregate(args.out, result.dataset, result.summaries);
        std::cout << "aggregate written to " << args.out.string() << "\n";
    }
    return 0;
}

#ifdef GSKIT_WITH_TELEOP
struct ServeArgs {
    std::filesystem::path assets;
    std::filesystem::path data = "teleop_data";
    std::string address = "127.0.0.1";
    unsigned short port = 8765;
    std::size_t maxSessions = 4;
    int threads = 2;
};

int
runServe(ServeArgs args, bool portGiven) {
    // The environment variable replaces the default port; an explicit flag still wins.
    if (const char *env = std::getenv("GSKIT_TELEOP_PORT"); env && !portGiven) {
        args.port = static_cast<unsigned short>(std::stoi(env));
    }
    TeleopOptions options;
    options.dataRoot = args.data;
    options.maxSessions = args.maxSessions;
    TeleopService service(SceneRegistry::scan(args.assets), options);
    if (service.scenes().names().empty()) logWarning("no .gsdf scenes found under " + args.assets.string());

    // Route SIGINT and SIGTERM to this thread before any worker starts.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    ServerOptions server;
    server.address = args.address;
    server.port = args.port;
    server.threads = args.threads;
    TeleopServer teleop(service, server);
    const unsigned short port = teleop.start();
    std::cout << "listening on http://" << args.address << ":" << port << std::endl;
    int sig = 0;
    sigwait(&signals, &sig);
    std::cout << "shutting down" << std::endl;
    teleop.stop();
    return 0;
}
#endif

} // namespace

int
main(int argc, char **argv) {
    CLI::App app{"gskit: Gaussian-splat robot simulation toolkit"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "log informational messages");

    auto *demo = app.add_subcommand("make-demo", "write the procedural demo scene and its assets");
    std::filesystem::path demoOut;
    DemoSceneOptions demoOptions;
    demo->add_option("--out", demoOut, "output directory")->required();
    demo->add_option("--task", demoOptions.task, "task the objects are laid out for")->check(CLI::IsMember(taskNames()));
    demo->add_option("--width", demoOptions.imageWidth, "camera image width");
    demo->add_option("--height", demoOptions.imageHeight, "camera image height");
    demo->add_option("--seed", demoOptions.seed, "asset seed");

    auto *validate = app.add_subcommand("validate", "check a scene file and/or a dataset directory");
    std::filesystem::path validateScenePath, validateDatasetPath;
    validate->add_option("scene", validateScenePath, "GSDF scene file");
    validate->add_option("--dataset", validateDatasetPath, "dataset directory");

    auto *render = app.add_subcommand("render", "render camera images of a scene state to PNG");
    SceneArgs renderScene;
    std::filesystem::path renderState, renderOut = ".";
    std::vector<std::string> renderCameras;
    bool renderJitter = false;
    addSceneArgs(render, renderScene);
    render->add_option("--state", renderState, "EnvState JSON to restore after the reset")->check(CLI::ExistingFile);
    render->add_option("--camera", renderCameras, "camera name (repeatable; default: the task's cameras)");
    render->add_option("--out", renderOut, "output directory");
    render->add_flag("--color-jitter", renderJitter, "apply the per-episode colour jitter");

    auto *align = app.add_subcommand("align", "real-to-sim alignment tools");
    align->require_subcommand(1);
    auto *alignScale = align->add_subcommand("scale", "metric scale and support plane from a marker");
    std::filesystem::path markerFile, markerSplats;
    alignScale->add_option("--markers", markerFile, "marker corner file")->required()->check(CLI::ExistingFile);
    alignScale->add_option("--splats", markerSplats, "reconstruction splat file (orients gravity)")
        ->check(CLI::ExistingFile);
    auto *alignRobotCmd = align->add_subcommand("robot", "ICP of a robot scan against its kinematic model");
    std::filesystem::path alignScene;
    std::size_t alignRobotIndex = 0, alignPoints = 200000;
    alignRobotCmd->add_option("--scene", alignScene, "GSDF scene file")->required()->check(CLI::ExistingFile);
    alignRobotCmd->add_option("--robot", alignRobotIndex, "robot index");
    alignRobotCmd->add_option("--points", alignPoints, "robot surface sample count");
    auto *alignSegment = align->add_subcommand("segment", "K-NN link labels for a robot scan");
    std::size_t segK = 5;
    double segCutoff = 0.02;
    std::filesystem::path segOut;
    alignSegment->add_option("--scene", alignScene, "GSDF scene file")->required()->check(CLI::ExistingFile);
    alignSegment->add_option("--robot", alignRobotIndex, "robot index");
    alignSegment->add_option("--k", segK, "neighbours per vote");
    alignSegment->add_option("--cutoff", segCutoff, "distance beyond which a splat stays unlabeled (m)");
    alignSegment->add_option("--out", segOut, "write the labels as JSON");

    auto *rolloutCmd = app.add_subcommand("rollout", "run a policy and optionally record a dataset");
    SceneArgs rolloutScene;
    std::string policyName = "expert";
    int episodes = 10;
    std::filesystem::path rolloutOut;
    bool rolloutFrames = false;
    addSceneArgs(rolloutCmd, rolloutScene);
    rolloutCmd->add_option("--policy", policyName, "policy")->check(CLI::IsMember({"expert", "perturbed", "random"}));
    rolloutCmd->add_option("--episodes", episodes, "episodes (seeds seed, seed+1, ...)");
    rolloutCmd->add_option("--out", rolloutOut, "dataset directory to create");
    rolloutCmd->add_flag("--frames", rolloutFrames, "record camera frames");

    auto *daggerCmd = app.add_subcommand("dagger", "DAgger with the 1-NN mimic policy and the scripted expert");
    DaggerArgs dagger;
    dagger.config.iterations = 3;
    dagger.config.perIteration = 10;
    dagger.config.evalEpisodes = 100;
    addSceneArgs(daggerCmd, dagger.scene);
    daggerCmd->add_option("--iterations", dagger.config.iterations, "DAgger iterations");
    daggerCmd->add_option("--per-iteration", dagger.config.perIteration, "trajectories added per iteration");
    daggerCmd->add_option("--eval-episodes", dagger.config.evalEpisodes, "policy rollouts per iteration");
    daggerCmd->add_option("--held-out", dagger.heldOut, "held-out evaluation seeds after each iteration");
    daggerCmd->add_option("--envs", dagger.envs, "parallel environments");
    daggerCmd->add_option("--threads", dagger.threads, "worker threads");
    daggerCmd->add_flag("--include-failed-corrections", dagger.config.includeFailedCorrections,
                        "train on corrections that did not succeed");
    daggerCmd->add_flag("--frames", dagger.config.rollout.recordFrames, "record camera frames");
    daggerCmd->add_option("--real", dagger.real, "real dataset directory to merge (repeatable)");
    daggerCmd->add_option("--out", dagger.out, "aggregate output directory");

#ifdef GSKIT_WITH_TELEOP
    auto *serve = app.add_subcommand("serve", "run the teleoperation HTTP/WebSocket server");
    ServeArgs serveArgs;
    serve->add_option("--assets", serveArgs.assets, "directory searched for .gsdf scenes")
        ->required()
        ->check(CLI::ExistingDirectory);
    serve->add_option("--data", serveArgs.data, "where saved teleop datasets go");
    serve->add_option("--address", serveArgs.address, "listen address");
    auto *portOpt = serve->add_option("--port", serveArgs.port, "listen port (env GSKIT_TELEOP_PORT)");
    serve->add_option("--max-sessions", serveArgs.maxSessions, "live session limit");
    serve->add_option("--threads", serveArgs.threads, "network worker threads");
#endif

    CLI11_PARSE(app, argc, argv);
    setLogLevel(verbose ? LogLevel::Info : LogLevel::Warning);

    try {
        if (*demo) return runMakeDemo(demoOut, demoOptions);
        if (*validate) {
            if (validateScenePath.empty() && validateDatasetPath.empty()) {
                std::cerr << "validate: give a scene file, --dataset, or both\n";
                return 2;
            }
            return runValidate(validateScenePath, validateDatasetPath);
        }
        if (*render) return runRender(renderScene, renderState, renderCameras, renderOut, renderJitter);
        if (*alignScale) return runAlignScale(markerFile, markerSplats);
        if (*alignRobotCmd) return runAlignRobot(alignScene, alignRobotIndex, alignPoints);
        if (*alignSegment) return runAlignSegment(alignScene, alignRobotIndex, segK, segCutoff, segOut);
        if (*rolloutCmd) return runRollout(rolloutScene, policyName, episodes, rolloutOut, rolloutFrames);
        if (*daggerCmd) return runDagger(dagger);
#ifdef GSKIT_WITH_TELEOP
        if (*serve) return runServe(serveArgs, portOpt->count() > 0);
#endif
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
