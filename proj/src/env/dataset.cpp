// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gskit/asset/scene.hpp>
#include <gskit/core/error.hpp>
#include <gskit/env/dataset.hpp>

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace gskit {

using nlohmann::json;

namespace {

constexpr int kDatasetVersion = 1;

std::string
readText(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetError("cannot open '" + path.string() + "'");
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

void
writeBytes(const std::filesystem::path &path, const void *data, std::size_t size) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DatasetError("cannot write '" + path.string() + "'");
    out.write(static_cast<const char *>(data), static_cast<std::streamsize>(size));
    if (!out) throw DatasetError("short write to '" + path.string() + "'");
}

void
writeText(const std::filesystem::path &path, const std::string &text) {
    // Write then rename so readers never see a half-written manifest.
    const std::filesystem::path tmp = path.string() + ".tmp";
    writeBytes(tmp, text.data(), text.size());
    std::filesystem::rename(tmp, path);
}

json
poseJson(const RigidTransform &t) {
    return json::array({t.rotation.w(), t.rotation.x(), t.rotation.y(), t.rotation.z(), t.translation.x(),
                        t.translation.y(), t.translation.z()});
}

RigidTransform
poseFromJson(const json &j) {
    if (!j.is_array() || j.size() != 7) throw DatasetError("pose must have 7 numbers");
    RigidTransform t;
    t.rotation = Quat(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
    t.translation = Vec3(j[4].get<double>(), j[5].get<double>(), j[6].get<double>());
    return t;
}

json
vectorJson(const Eigen::VectorXd &v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Eigen::VectorXd
vectorFromJson(const json &j) {
    if (!j.is_array()) throw DatasetError("expected a number array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    return v;
}

json
stateJson(const EnvState &s) {
    json objects = json::array();
    for (const auto &p : s.objectPoses) objects.push_back(poseJson(p));
    return {{"q", vectorJson(s.q)},
            {"objects", objects},
            {"attached", s.attached ? json(*s.attached) : json(nullptr)},
            {"attach_offset", poseJson(s.attachOffset)},
            {"step", s.stepIndex},
            {"episode_seed", s.episodeSeed}};
}

EnvState
stateFromJson(const json &j) {
    EnvState s;
    s.q = vectorFromJson(j.at("q"));
    for (const auto &p : j.at("objects")) s.objectPoses.push_back(poseFromJson(p));
    if (!j.at("attached").is_null()) s.attached = j.at("attached").get<int>();
    s.attachOffset = poseFromJson(j.at("attach_offset"));
    s.stepIndex = j.at("step").get<int>();
    s.episodeSeed = j.at("episode_seed").get<std::uint64_t>();
    return s;
}

std::vector<float>
packFloats(const std::vector<JointConfig> &rows, int dof) {
    std::vector<float> out;
    out.reserve(rows.size() * static_cast<std::size_t>(dof));
    for (const auto &r : rows) {
        for (int i = 0; i < dof; ++i) out.push_back(static_cast<float>(r[i]));
    }
    return out;
}

std::string
frameName(std::size_t t) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%06zu.png", t);
    return buf;
}

json
infoJson(const DatasetInfo &info) {
    json cams = json::array();
    for (const auto &c : info.cameras) cams.push_back({{"name", c.name}, {"width", c.width}, {"height", c.height}});
    return {{"task", info.task},
            {"scene_hash", info.sceneHash},
            {"dof", info.dof},
            {"object_count", info.objectCount},
            {"cameras", cams}};
}

DatasetInfo
infoFromJson(const json &j) {
    DatasetInfo info;
    info.task = j.at("task").get<std::string>();
    info.sceneHash = j.at("scene_hash").get<std::string>();
    info.dof = j.at("dof").get<int>();
    info.objectCount = j.at("object_count").get<std::size_t>();
    for (const auto &c : j.at("cameras")) {
        info.cameras.push_back({c.at("name").get<std::string>(), c.at("width").get<int>(), c.at("height").get<int>()});
    }
    return info;
}

} // namespace

const char *
toString(Outcome outcome) {
    switch (outcome) {
    case Outcome::Success: return "success";
    case Outcome::Partial: return "partial";
    case Outcome::Failure: return "failure";
    }
    return "failure";
}

Outcome
parseOutcome(const std::string &text) {
    if (text == "success") return Outcome::Success;
    if (text == "partial") return Outcome::Partial;
    if (text == "failure") return Outcome::Failure;
    throw DatasetError("unknown outcome '" + text + "'");
}

CameraFrame
quantize(const CameraImage &image) {
    return {image.camera, {image.width, image.height, toRgb8(std::span<const float>(image.color))}};
}

std::string
sceneHash(const LoadedScene &scene) {
    return hexDigest(fnv1a64(writeGsdf(scene.description)));
}

DatasetInfo
datasetInfo(const Environment &env) {
    DatasetInfo info;
    info.task = env.task().name;
    info.sceneHash = sceneHash(env.scene());
    info.dof = static_cast<int>(env.robot().tree.dof());
    info.objectCount = env.scene().objects.size();
    if (env.options().render) {
        for (const auto &name : env.task().cameras) {
            const Camera *c = env.scene().description.camera(name);
            info.cameras.push_back({name, c->width, c->height});
        }
    }
    return info;
}

std::string
envStateToJson(const EnvState &state) {
    return stateJson(state).dump();
}

EnvState
envStateFromJson(const std::string &text) {
    try {
        return stateFromJson(json::parse(text));
    } catch (const json::exception &e) {
        throw DatasetError(std::string("bad EnvState: ") + e.what());
    }
}

// ---- writer ------------------------------------------------------------------------------

DatasetWriter::DatasetWriter(std::filesystem::path dir, DatasetInfo info) : mDir(std::move(dir)), mInfo(std::move(info)) {
    std::filesystem::create_directories(mDir / "trajectories");
    if (std::filesystem::exists(mDir / "manifest.json")) {
        throw DatasetError("dataset directory '" + mDir.string() + "' already holds a dataset");
    }
    writeManifest();
}

void
DatasetWriter::add(const Trajectory &t) {
    if (t.id.empty() || t.id.find('/') != std::string::npos) throw DatasetError("bad trajectory id '" + t.id + "'");
    if (t.states.size() != t.actions.size() + 1) throw DatasetError("trajectory " + t.id + ": states must be actions + 1");
    for (const auto &id : mIds) {
        if (id == t.id) throw DatasetError("duplicate trajectory id '" + t.id + "'");
    }
    const std::filesystem::path dir = mDir / "trajectories" / t.id;
    std::filesystem::create_directories(dir);

    json states = json::array(), actions = json::array();
    for (const auto &s : t.states) {
        if (s.q.size() != mInfo.dof) throw DatasetError("trajectory " + t.id + ": state has the wrong dof");
        states.push_back(stateJson(s));
    }
    for (const auto &a : t.actions) {
        if (a.size() != mInfo.dof) throw DatasetError("trajectory " + t.id + ": action has the wrong dof");
        actions.push_back(vectorJson(a));
    }
    const bool withFrames = !t.frames.empty();
    json record = {{"id", t.id},
                   {"seed", t.seed},
                   {"policy", t.policyId},
                   {"iteration", t.iteration},
                   {"kind", t.kind},
                   {"outcome", toString(t.outcome)},
                   {"excluded", t.excluded},
                   {"provenance", t.provenance},
                   {"diagnostic", t.diagnostic},
                   {"corrective_of", t.correctiveOf ? json{{"failure_id", t.correctiveOf->failureId},
                                                           {"state_index", t.correctiveOf->stateIndex}}
                                                    : json(nullptr)},
                   {"steps", t.steps()},
                   {"rewards", t.rewards},
                   {"actions", actions},
                   {"states", states},
                   {"frames", withFrames}};
    writeText(dir / "record.json", record.dump(1));

    std::vector<JointConfig> qs;
    for (const auto &s : t.states) qs.push_back(s.q);
    const auto q = packFloats(qs, mInfo.dof);
    const auto a = packFloats(t.actions, mInfo.dof);
    writeBytes(dir / "q.f32", q.data(), q.size() * sizeof(float));
    writeBytes(dir / "actions.f32", a.data(), a.size() * sizeof(float));

    if (withFrames) {
        if (t.frames.size() != t.states.size()) throw DatasetError("trajectory " + t.id + ": one frame set per state");
        for (const auto &cam : mInfo.cameras) std::filesystem::create_directories(dir / "frames" / cam.name);
        for (std::size_t s = 0; s < t.frames.size(); ++s) {
            for (const auto &f : t.frames[s]) {
                writePng(dir / "frames" / f.camera / frameName(s), f.image.pixels, f.image.width, f.image.height);
            }
        }
    }
    mIds.push_back(t.id);
    mSteps.push_back(t.steps());
    mOutcomes.push_back(t.outcome);
    mIterations.push_back(t.iteration);
    mProvenance.push_back(t.provenance);
    writeManifest();
}

void
DatasetWriter::writeManifest() const {
    std::map<std::string, std::size_t> outcomes = {{"success", 0}, {"partial", 0}, {"failure", 0}};
    std::map<std::string, std::size_t> iterations, provenance;
    std::size_t steps = 0;
    for (std::size_t i = 0; i < mIds.size(); ++i) {
        ++outcomes[toString(mOutcomes[i])];
        ++iterations[std::to_string(mIterations[i])];
        ++provenance[mProvenance[i]];
        steps += mSteps[i];
    }
    json manifest = infoJson(mInfo);
    manifest["format"] = "gskit-dataset";
    manifest["version"] = kDatasetVersion;
    manifest["counts"] = {{"trajectories", mIds.size()},
                          {"steps", steps},
                          {"outcomes", outcomes},
                          {"iterations", iterations},
                          {"provenance", provenance}};
    manifest["trajectories"] = mIds;
    writeText(mDir / "manifest.json", manifest.dump(1));
}

// ---- reader ------------------------------------------------------------------------------

namespace {

Trajectory
readTrajectory(const std::filesystem::path &dir, const DatasetInfo &info, bool loadFrames) {
    const json r = json::parse(readText(dir / "record.json"));
    Trajectory t;
    t.id = r.at("id").get<std::string>();
    t.seed = r.at("seed").get<std::uint64_t>();
    t.policyId = r.at("policy").get<std::string>();
    t.iteration = r.at("iteration").get<int>();
    t.kind = r.at("kind").get<std::string>();
    t.outcome = parseOutcome(r.at("outcome").get<std::string>());
    t.excluded = r.at("excluded").get<bool>();
    t.provenance = r.at("provenance").get<std::string>();
    t.diagnostic = r.at("diagnostic").get<std::string>();
    if (!r.at("corrective_of").is_null()) {
        t.correctiveOf = CorrectiveRef{r["corrective_of"].at("failure_id").get<std::string>(),
                                       r["corrective_of"].at("state_index").get<int>()};
    }
    t.rewards = r.at("rewards").get<std::vector<double>>();
    for (const auto &a : r.at("actions")) t.actions.push_back(vectorFromJson(a));
    for (const auto &s : r.at("states")) t.states.push_back(stateFromJson(s));
    if (r.at("steps").get<std::size_t>() != t.actions.size() || t.states.size() != t.actions.size() + 1) {
        throw DatasetError("trajectory " + t.id + ": step count mismatch");
    }
    if (loadFrames && r.at("frames").get<bool>()) {
        for (std::size_t s = 0; s < t.states.size(); ++s) {
            std::vector<CameraFrame> set;
            for (const auto &cam : info.cameras) set.push_back({cam.name, readPng(dir / "frames" / cam.name / frameName(s))});
            t.frames.push_back(std::move(set));
        }
    }
    return t;
}

} // namespace

Dataset
readDataset(const std::filesystem::path &dir, bool loadFrames) {
    Dataset d;
    d.dir = dir;
    const std::string text = readText(dir / "manifest.json");
    d.manifestHash = hexDigest(fnv1a64(text));
    try {
        const json m = json::parse(text);
        if (m.at("format") != "gskit-dataset") throw DatasetError("not a gskit dataset");
        if (m.at("version").get<int>() != kDatasetVersion) throw DatasetError("unsupported dataset version");
        d.info = infoFromJson(m);
        for (const auto &id : m.at("trajectories")) {
            d.trajectories.push_back(readTrajectory(dir / "trajectories" / id.get<std::string>(), d.info, loadFrames));
        }
    } catch (const json::exception &e) {
        throw DatasetError("dataset '" + dir.string() + "': " + e.what());
    }
    return d;
}

std::vector<std::string>
validateDataset(const std::filesystem::path &dir) {
    std::vector<std::string> problems;
    json m;
    try {
        m = json::parse(readText(dir / "manifest.json"));
    } catch (const std::exception &e) {
        return {std::string("manifest: ") + e.what()};
    }
    DatasetInfo info;
    try {
        if (m.at("format") != "gskit-dataset") problems.push_back("manifest: format is not gskit-dataset");
        if (m.at("version") != kDatasetVersion) problems.push_back("manifest: unsupported version");
        info = infoFromJson(m);
    } catch (const std::exception &e) {
        problems.push_back(std::string("manifest: ") + e.what());
        return problems;
    }
    std::size_t steps = 0, count = 0;
    std::map<std::string, std::size_t> outcomes;
    try {
        for (const auto &idJson : m.at("trajectories")) {
            const std::string id = idJson.get<std::string>();
            const std::filesystem::path tdir = dir / "trajectories" / id;
            Trajectory t;
            try {
                t = readTrajectory(tdir, info, false);
            } catch (const std::exception &e) {
                problems.push_back(id + ": " + e.what());
                continue;
            }
            ++count;
            steps += t.steps();
            ++outcomes[toString(t.outcome)];
            if (t.id != id) problems.push_back(id + ": record id differs");
            if (t.rewards.size() != t.steps()) problems.push_back(id + ": one reward per step expected");
            const auto dof = static_cast<std::size_t>(info.dof);
            for (const auto &s : t.states) {
                if (static_cast<std::size_t>(s.q.size()) != dof || s.objectPoses.size() != info.objectCount) {
                    problems.push_back(id + ": state shape does not match the manifest");
                    break;
                }
            }
            const auto qBytes = std::filesystem::exists(tdir / "q.f32") ? std::filesystem::file_size(tdir / "q.f32") : 0;
            const auto aBytes =
                std::filesystem::exists(tdir / "actions.f32") ? std::filesystem::file_size(tdir / "actions.f32") : 0;
            if (qBytes != t.states.size() * dof * sizeof(float)) problems.push_back(id + ": q.f32 has the wrong size");
            if (aBytes != t.steps() * dof * sizeof(float)) problems.push_back(id + ": actions.f32 has the wrong size");
            const json r = json::parse(readText(tdir / "record.json"));
            if (r.value("frames", false)) {
                for (const auto &cam : info.cameras) {
                    for (std::size_t s = 0; s < t.states.size(); ++s) {
                        const auto path = tdir / "frames" / cam.name / frameName(s);
                        try {
                            const Rgb8Image img = readPng(path);
                            if (img.width != cam.width || img.height != cam.height) {
                                problems.push_back(id + ": frame " + path.filename().string() + " of " + cam.name +
                                                   " has the wrong size");
                            }
                        } catch (const std::exception &e) {
                            problems.push_back(id + ": missing or unreadable frame " + cam.name + "/" +
                                               path.filename().string());
                        }
                    }
                }
            }
        }
        const json &c = m.at("counts");
        if (c.at("trajectories").get<std::size_t>() != count) problems.push_back("manifest: trajectory count mismatch");
        if (c.at("steps").get<std::size_t>() != steps) problems.push_back("manifest: step count mismatch");
        for (const auto &[k, v] : outcomes) {
            if (c.at("outcomes").value(k, std::size_t{0}) != v) problems.push_back("manifest: outcome count mismatch");
        }
    } catch (const std::exception &e) {
        problems.push_back(std::string("manifest: ") + e.what());
    }
    return problems;
}

} // namespace gskit
