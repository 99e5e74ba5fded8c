// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gskit/asset/splat_file.hpp>
#include <gskit/core/error.hpp>
#include <gskit/render/image_io.hpp>

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>

namespace gskit {

namespace {

constexpr char kFloatMagic[4] = {'G', 'S', 'F', 'I'};

void
pngWrite(png_structp png, png_bytep data, png_size_t length) {
    auto *out = static_cast<std::vector<std::uint8_t> *>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + length);
}

void
pngWarning(png_structp, png_const_charp) {}

void
putU32(std::vector<std::uint8_t> &out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t
getU32(std::span<const std::uint8_t> b, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[at + static_cast<std::size_t>(i)]) << (8 * i);
    return v;
}

} // namespace

std::vector<std::uint8_t>
toRgb8(const RenderOutput &image) {
    return toRgb8(std::span<const float>(image.color));
}

std::vector<std::uint8_t>
toRgb8(std::span<const float> color) {
    std::vector<std::uint8_t> out(color.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const float v = std::clamp(color[i], 0.0f, 1.0f);
        out[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
    return out;
}

std::vector<std::uint8_t>
encodePng(std::span<const std::uint8_t> rgb, int width, int height) {
    if (width <= 0 || height <= 0 || rgb.size() != static_cast<std::size_t>(width) * height * 3) {
        throw Error("encodePng: buffer does not match the image size");
    }
    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, pngWarning);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("PNG encoding failed");
    }
    {
        png_set_write_fn(png, &out, pngWrite, nullptr);
        png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                     PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        for (int y = 0; y < height; ++y) {
            png_write_row(png, const_cast<png_bytep>(rgb.data() + static_cast<std::size_t>(y) * width * 3));
        }
        png_write_end(png, nullptr);
    }
    png_destroy_write_struct(&png, &info);
    return out;
}

void
writePng(const std::filesystem::path &path, std::span<const std::uint8_t> rgb, int width, int height) {
    const auto bytes = encodePng(rgb, width, height);
    writeBinaryFile(path, bytes);
}

Rgb8Image
readPng(const std::filesystem::path &path) {
    std::unique_ptr<FILE, int (*)(FILE *)> file(std::fopen(path.c_str(), "rb"), &std::fclose);
    if (!file) throw Error("cannot open '" + path.string() + "'");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, pngWarning);
    png_infop info = png_create_info_struct(png);
    Rgb8Image image;
    bool badLayout = false;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("cannot decode PNG '" + path.string() + "'");
    }
    {
        png_init_io(png, file.get());
        png_read_info(png, info);
        png_set_strip_16(png);
        png_set_strip_alpha(png);
        png_set_palette_to_rgb(png);
        png_set_gray_to_rgb(png);
        png_read_update_info(png, info);
        image.width = static_cast<int>(png_get_image_width(png, info));
        image.height = static_cast<int>(png_get_image_height(png, info));
        badLayout = png_get_rowbytes(png, info) != static_cast<std::size_t>(image.width) * 3;
        if (!badLayout) {
            image.pixels.resize(static_cast<std::size_t>(image.width) * image.height * 3);
            for (int y = 0; y < image.height; ++y) {
                png_read_row(png, image.pixels.data() + static_cast<std::size_t>(y) * image.width * 3, nullptr);
            }
        }
    }
    png_destroy_read_struct(&png, &info, nullptr);
    if (badLayout) throw Error("unsupported PNG layout in '" + path.string() + "'");
    return image;
}

std::vector<std::uint8_t>
encodeFloatImage(const FloatImage &image) {
    const std::size_t n = static_cast<std::size_t>(image.height) * image.width * image.channels;
    if (image.data.size() != n) throw Error("float image: data does not match the header");
    std::vector<std::uint8_t> out(kFloatMagic, kFloatMagic + 4);
    putU32(out, static_cast<std::uint32_t>(image.height));
    putU32(out, static_cast<std::uint32_t>(image.width));
    putU32(out, static_cast<std::uint32_t>(image.channels));
    const std::size_t at = out.size();
    out.resize(at + n * sizeof(float));
    std::memcpy(out.data() + at, image.data.data(), n * sizeof(float));
    return out;
}

FloatImage
decodeFloatImage(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kFloatMagic, 4) != 0) {
        throw Error("float image: bad magic");
    }
    FloatImage image;
    image.height = static_cast<int>(getU32(bytes, 4));
    image.width = static_cast<int>(getU32(bytes, 8));
    image.channels = static_cast<int>(getU32(bytes, 12));
    const std::size_t n = static_cast<std::size_t>(image.height) * image.width * image.channels;
    if (bytes.size() != 16 + n * sizeof(float)) throw Error("float image: payload size mismatch");
    image.data.resize(n);
    std::memcpy(image.data.data(), bytes.data() + 16, n * sizeof(float));
    return image;
}

void
writeFloatImage(const std::filesystem::path &path, const FloatImage &image) {
    writeBinaryFile(path, encodeFloatImage(image));
}

FloatImage
readFloatImage(const std::filesystem::path &path) {
    return decodeFloatImage(readBinaryFile(path));
}

} // namespace gskit
