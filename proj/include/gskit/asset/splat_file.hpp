// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gskit/asset/gaussian_set.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace gskit {

/// Decode a binary-little-endian PLY splat file (reference 3DGS property layout).
///
/// Required properties: x y z, f_dc_0..2, opacity, scale_0..2, rot_0..3, all float32.
/// nx ny nz are accepted and ignored. f_rest_* must be absent or form a complete degree
/// (9, 24 or 45 properties). Optional feat_0..feat_{d-1} carry the per-splat feature vector.
/// Rotations are renormalized when their norm deviates from 1 by more than 1e-6.
///
/// Throws SplatFileError with the byte offset and property name on any malformed input.
GaussianSet parseSplatFile(std::span<const std::uint8_t> bytes);

/// Encode a set into the layout accepted by parseSplatFile. Values are narrowed to float32,
/// so the round trip is exact for any set whose fields are float32-representable.
std::vector<std::uint8_t> writeSplatFile(const GaussianSet &set);

/// Number of bytes per vertex record for a set with the given degree and feature width.
std::size_t splatRecordStride(int shDegree, int featureDim);

GaussianSet loadSplatFile(const std::filesystem::path &path);
void saveSplatFile(const std::filesystem::path &path, const GaussianSet &set);

std::vector<std::uint8_t> readBinaryFile(const std::filesystem::path &path);
void writeBinaryFile(const std::filesystem::path &path, std::span<const std::uint8_t> bytes);

} // namespace gskit
