// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include "test_util.hpp"

#include <gskit/asset/loaded_scene.hpp>
#include <gskit/asset/scene.hpp>
#include <gskit/asset/splat_file.hpp>
#include <gskit/core/error.hpp>
#include <gskit/demo/demo_scene.hpp>

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace gskit;

namespace {

std::string
readText(const std::filesystem::path &p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

TEST(Gsdf, DemoSceneRoundTripIsBitExact)
{
    for (const char *task : {"place_box", "stack_cans"}) {
        const auto dir = test::scratchDir(std::string("gsdf_") + task);
        DemoSceneOptions opts;
        opts.task = task;
        const auto path = writeDemoScene(dir, opts);
        const std::string text = readText(path);
        const SceneDescription scene = parseGsdf(text, dir);
        EXPECT_EQ(writeGsdf(scene), text);
        const SceneDescription again = parseGsdf(writeGsdf(scene), dir);
        EXPECT_EQ(writeGsdf(again), text);
        ASSERT_EQ(again.robots.size(), 1u);
        EXPECT_EQ(again.robots[0].linkLabels, scene.robots[0].linkLabels);
        EXPECT_EQ(again.robots[0].baseTransform.translation, scene.robots[0].baseTransform.translation);
    }
}

TEST(Gsdf, ExactDoublesSurvive)
{
    const auto dir = test::scratchDir("gsdf_doubles");
    const auto path = writeDemoScene(dir);
    SceneDescription scene = loadGsdf(path);
    scene.robots[0].baseTransform.translation = Vec3(0.1 + 0.2, 1.0 / 3.0, -2.5e-17);
    scene.objects[0].massKg = 0.30000000000000004;
    const SceneDescription back = parseGsdf(writeGsdf(scene), dir);
    EXPECT_EQ(back.robots[0].baseTransform.translation, scene.robots[0].baseTransform.translation);
    EXPECT_EQ(back.objects[0].massKg, scene.objects[0].massKg);
}

TEST(Gsdf, ValidationBatchesEveryIssue)
{
    const auto dir = test::scratchDir("gsdf_invalid");
    const auto path = writeDemoScene(dir);
    SceneDescription scene = loadGsdf(path);
    scene.robots[0].linkLabels[3] = 17;
    scene.objects[0].massKg = -1.0;
    scene.objects[0].mesh = "meshes/nowhere.obj";
    const ValidationReport report = validateScene(scene, dir);
    EXPECT_EQ(report.count(ValidationIssue::Kind::Label), 1u);
    EXPECT_EQ(report.count(ValidationIssue::Kind::Reference), 1u);
    EXPECT_EQ(report.count(ValidationIssue::Kind::Value), 1u);
    EXPECT_NE(report.toString().find("label out of range"), std::string::npos);
    try {
        parseGsdf(writeGsdf(scene), dir);
        FAIL();
    } catch (const SceneError &e) {
        EXPECT_NE(std::string(e.what()).find("label out of range"), std::string::npos);
    }
}

TEST(Gsdf, LabelCountMismatchIsReported)
{
    const auto dir = test::scratchDir("gsdf_labels");
    SceneDescription scene = loadGsdf(writeDemoScene(dir));
    scene.robots[0].linkLabels.pop_back();
    EXPECT_EQ(validateScene(scene, dir).count(ValidationIssue::Kind::Label), 1u);
}

TEST(Gsdf, SchemaErrorsThrow)
{
    const auto dir = test::scratchDir("gsdf_schema");
    EXPECT_THROW(parseGsdf("{not json", dir), SceneError);
    EXPECT_THROW(parseGsdf("{\"gsdf_version\": 1}", dir), SceneError);
}

TEST(LoadedScene, LoadsDemoAssets)
{
    const auto dir = test::scratchDir("loaded_scene");
    DemoSceneOptions opts;
    opts.task = "stack_cans";
    opts.metricScale = 0.5;
    const auto scene = loadScene(writeDemoScene(dir, opts));
    ASSERT_EQ(scene->robots.size(), 1u);
    EXPECT_EQ(scene->objects.size(), 2u);
    EXPECT_EQ(scene->robots[0].scan.size(), scene->robots[0].labels.size());
    EXPECT_EQ(scene->robots[0].tree.dof(), 5u);
    EXPECT_GE(scene->robots[0].gripperDof, 0);
    // The background was written in reconstruction units and scaled back to metres.
    const auto raw = loadSplatFile(dir / "background.ply");
    EXPECT_EQ(scene->background.centroids[10], 0.5 * raw.centroids[10]);
}
