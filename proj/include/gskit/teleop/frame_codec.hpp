// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gskit {

/// One streamed camera frame.
///
/// Wire layout, all integers little endian:
///
///     "GSF1"                      4 bytes magic
///     u16 session id length, then the id bytes
///     u64 step_index
///     u16 camera name length, then the name bytes
///     u32 width, u32 height
///     width * height * 3 bytes of row-major 8-bit RGB
struct FrameMessage {
    std::string sessionId;
    std::uint64_t stepIndex = 0;
    std::string camera;
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<std::uint8_t> rgb;

    bool operator==(const FrameMessage &) const = default;
};

std::vector<std::uint8_t> encodeFrame(const FrameMessage &frame);
/// Throws TeleopError("bad_frame") on truncated or inconsistent input.
FrameMessage decodeFrame(std::span<const std::uint8_t> bytes);

} // namespace gskit
