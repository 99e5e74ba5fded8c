// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gskit/teleop/frame_codec.hpp>

#include <gskit/core/error.hpp>

#include <cstring>
#include <limits>

namespace gskit {

namespace {

constexpr char kMagic[4] = {'G', 'S', 'F', '1'};

template <typename T>
void
putLe(std::vector<std::uint8_t> &out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

class Reader {
  public:
    explicit Reader(std::span<const std::uint8_t> bytes) : mBytes(bytes) {}

    template <typename T>
    T le() {
        need(sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(mBytes[mPos + i]) << (8 * i));
        mPos += sizeof(T);
        return v;
    }

    std::string text(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char *>(mBytes.data() + mPos), n);
        mPos += n;
        return s;
    }

    std::size_t remaining() const { return mBytes.size() - mPos; }
    std::span<const std::uint8_t> rest() const { return mBytes.subspan(mPos); }

  private:
    void need(std::size_t n) const {
        if (mBytes.size() - mPos < n) throw TeleopError("bad_frame", "frame message is truncated");
    }

    std::span<const std::uint8_t> mBytes;
    std::size_t mPos = 0;
};

} // namespace

std::vector<std::uint8_t>
encodeFrame(const FrameMessage &frame) {
    if (frame.sessionId.size() > std::numeric_limits<std::uint16_t>::max() ||
        frame.camera.size() > std::numeric_limits<std::uint16_t>::max()) {
        throw TeleopError("bad_frame", "frame header string is too long");
    }
    if (frame.rgb.size() != std::size_t{frame.width} * frame.height * 3) {
        throw TeleopError("bad_frame", "frame payload does not match width x height x 3");
    }
    std::vector<std::uint8_t> out;
    out.reserve(32 + frame.sessionId.size() + frame.camera.size() + frame.rgb.size());
    out.insert(out.end(), kMagic, kMagic + 4);
    putLe(out, static_cast<std::uint16_t>(frame.sessionId.size()));
    out.insert(out.end(), frame.sessionId.begin(), frame.sessionId.end());
    putLe(out, frame.stepIndex);
    putLe(out, static_cast<std::uint16_t>(frame.camera.size()));
    out.insert(out.end(), frame.camera.begin(), frame.camera.end());
    putLe(out, frame.width);
    putLe(out, frame.height);
    out.insert(out.end(), frame.rgb.begin(), frame.rgb.end());
    return out;
}

FrameMessage
decodeFrame(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    if (r.text(4) != std::string(kMagic, 4)) throw TeleopError("bad_frame", "frame message has the wrong magic");
    FrameMessage f;
    f.sessionId = r.text(r.le<std::uint16_t>());
    f.stepIndex = r.le<std::uint64_t>();
    f.camera = r.text(r.le<std::uint16_t>());
    f.width = r.le<std::uint32_t>();
    f.height = r.le<std::uint32_t>();
    if (r.remaining() != std::size_t{f.width} * f.height * 3) {
        throw TeleopError("bad_frame", "frame payload size does not match its header");
    }
    const auto rest = r.rest();
    f.rgb.assign(rest.begin(), rest.end());
    return f;
}

} // namespace gskit
