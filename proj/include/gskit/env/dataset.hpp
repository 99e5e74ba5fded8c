// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gskit/env/environment.hpp>
#include <gskit/render/image_io.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gskit {

enum class Outcome { Success, Partial, Failure };
const char *toString(Outcome outcome);
Outcome parseOutcome(const std::string &text);

struct CameraFrame {
    std::string camera;
    Rgb8Image image;

    bool operator==(const CameraFrame &o) const {
        return camera == o.camera && image.width == o.image.width && image.height == o.image.height &&
               image.pixels == o.image.pixels;
    }
};

CameraFrame quantize(const CameraImage &image);

struct CorrectiveRef {
    std::string failureId;
    int stateIndex = 0;
};

/// One episode. states[t] is the state the policy saw before actions[t]; the last state is
/// the final one, so states.size() == actions.size() + 1.
struct Trajectory {
    std::string id;
    std::vector<EnvState> states;
    std::vector<JointConfig> actions;
    std::vector<double> rewards;
    Outcome outcome = Outcome::Failure;
    std::uint64_t seed = 0;
    std::string policyId;
    int iteration = 0;
    std::string kind = "demo"; ///< demo, rollout or corrective
    std::optional<CorrectiveRef> correctiveOf;
    bool excluded = false;     ///< kept on disk but left out of training
    std::string provenance = "sim";
    std::string diagnostic;
    /// Optional rendered frames, one list per state (same length as `states` when present).
    std::vector<std::vector<CameraFrame>> frames;

    std::size_t steps() const { return actions.size(); }
};

struct CameraSpec {
    std::string name;
    int width = 0;
    int height = 0;
};

/// Dataset-level metadata stored in manifest.json.
struct DatasetInfo {
    std::string task;
    std::string sceneHash;
    std::vector<CameraSpec> cameras;
    int dof = 0;
    std::size_t objectCount = 0;
};

DatasetInfo datasetInfo(const Environment &env);
std::string sceneHash(const LoadedScene &scene);

/// Appends trajectories to a dataset directory:
///   manifest.json
///   trajectories/<id>/record.json   metadata and the EnvState sequence
///   trajectories/<id>/q.f32         (T+1) x dof float32, little endian
///   trajectories/<id>/actions.f32   T x dof float32
///   trajectories/<id>/frames/<camera>/<t>.png
/// The manifest is rewritten after every trajectory so the directory is always valid.
class DatasetWriter {
  public:
    DatasetWriter(std::filesystem::path dir, DatasetInfo info);
    void add(const Trajectory &trajectory);
    const std::filesystem::path &dir() const { return mDir; }
    std::size_t size() const { return mIds.size(); }

  private:
    void writeManifest() const;

    std::filesystem::path mDir;
    DatasetInfo mInfo;
    std::vector<std::string> mIds;
    std::vector<std::size_t> mSteps;
    std::vector<Outcome> mOutcomes;
    std::vector<int> mIterations;
    std::vector<std::string> mProvenance;
};

struct Dataset {
    DatasetInfo info;
    std::string manifestHash;
    std::filesystem::path dir;
    std::vector<Trajectory> trajectories;
};

/// Read a dataset directory; frames are decoded only when `loadFrames` is set.
Dataset readDataset(const std::filesystem::path &dir, bool loadFrames = false);

/// Every schema violation in a dataset directory; empty means valid.
std::vector<std::string> validateDataset(const std::filesystem::path &dir);

/// EnvState <-> JSON text (doubles round-trip exactly).
std::string envStateToJson(const EnvState &state);
EnvState envStateFromJson(const std::string &text);

} // namespace gskit
