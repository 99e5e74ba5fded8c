// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gskit/render/rasterizer.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace gskit {

/// 8-bit RGB, row-major, round-to-nearest from [0, 1].
std::vector<std::uint8_t> toRgb8(const RenderOutput &image);
std::vector<std::uint8_t> toRgb8(std::span<const float> color);

std::vector<std::uint8_t> encodePng(std::span<const std::uint8_t> rgb, int width, int height);
void writePng(const std::filesystem::path &path, std::span<const std::uint8_t> rgb, int width, int height);

struct Rgb8Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;
};
Rgb8Image readPng(const std::filesystem::path &path);

/// Float images: 16-byte little-endian header {magic "GSFI", height, width, channels} then
/// height*width*channels float32 values.
struct FloatImage {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> data;
};

std::vector<std::uint8_t> encodeFloatImage(const FloatImage &image);
FloatImage decodeFloatImage(std::span<const std::uint8_t> bytes);
void writeFloatImage(const std::filesystem::path &path, const FloatImage &image);
FloatImage readFloatImage(const std::filesystem::path &path);

} // namespace gskit
