// Copyright 2026 The gskit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gskit/asset/splat_file.hpp>
#include <gskit/core/error.hpp>

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>

namespace gskit {

namespace {

static_assert(std::endian::native == std::endian::little, "splat I/O assumes a little-endian host");

constexpr std::string_view kMagic = "ply\n";

int
restCountForDegree(int degree) {
    return 3 * (shCoeffsPerChannel(degree) - 1);
}

std::optional<int>
degreeForRestCount(int count) {
    for (int d = 0; d <= 3; ++d) {
        if (restCountForDegree(d) == count) {
            return d;
        }
    }
    return std::nullopt;
}

std::optional<int>
suffixIndex(std::string_view name, std::string_view prefix) {
    if (name.size() <= prefix.size() || name.substr(0, prefix.size()) != prefix) {
        return std::nullopt;
    }
    int value = -1;
    const auto digits = name.substr(prefix.size());
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || value < 0) {
        return std::nullopt;
    }
    return value;
}

// Column slot for each known property, resolved from the header.
enum class Slot { X, Y, Z, Normal, Dc, Rest, Opacity, Scale, Rot, Feat };

struct Column {
    std::string name;
    Slot slot;
    int index = 0;
};

Column
classify(const std::string &name, std::size_t offset) {
    if (name == "x") return {name, Slot::X};
    if (name == "y") return {name, Slot::Y};
    if (name == "z") return {name, Slot::Z};
    if (name == "nx" || name == "ny" || name == "nz") return {name, Slot::Normal};
    if (name == "opacity") return {name, Slot::Opacity};
    if (auto i = suffixIndex(name, "f_dc_"); i && *i < 3) return {name, Slot::Dc, *i};
    if (auto i = suffixIndex(name, "f_rest_"); i && *i < 45) return {name, Slot::Rest, *i};
    if (auto i = suffixIndex(name, "scale_"); i && *i < 3) return {name, Slot::Scale, *i};
    if (auto i = suffixIndex(name, "rot_"); i && *i < 4) return {name, Slot::Rot, *i};
    if (auto i = suffixIndex(name, "feat_")) return {name, Slot::Feat, *i};
    throw SplatFileError("unknown property", offset, name);
}

struct Header {
    std::size_t vertexCount = 0;
    std::vector<Column> columns;
    std::size_t payloadOffset = 0;
    int shDegree = 0;
    int featureDim = 0;
};

Header
parseHeader(std::span<const std::uint8_t> bytes) {
    const std::string_view text(reinterpret_cast<const char *>(bytes.data()), bytes.size());
    if (text.substr(0, kMagic.size()) != kMagic) {
        throw SplatFileError("missing 'ply' magic", 0);
    }
    Header header;
    std::size_t pos = kMagic.size();
    bool sawFormat = false;
    bool sawVertex = false;
    std::unordered_map<std::string, bool> seen;
    while (true) {
        const std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) {
            throw SplatFileError("unterminated header", pos);
        }
        const std::string line(text.substr(pos, eol - pos));
        const std::size_t lineOffset = pos;
        pos = eol + 1;
        std::istringstream words(line);
        std::string keyword;
        words >> keyword;
        if (keyword.empty() || keyword == "comment" || keyword == "obj_info") {
            continue;
        }
        if (keyword == "end_header") {
            break;
        }
        if (keyword == "format") {
            std::string fmt, version;
            words >> fmt >> version;
            if (fmt != "binary_little_endian" || version != "1.0") {
                throw SplatFileError("unsupported format '" + fmt + " " + version + "'", lineOffset);
            }
            sawFormat = true;
        } else if (keyword == "element") {
            std::string name;
            long long count = -1;
            words >> name >> count;
            if (name != "vertex" || sawVertex) {
                throw SplatFileError("expected exactly one 'vertex' element, got '" + name + "'",
                                     lineOffset);
            }
            if (!words || count < 0) {
                throw SplatFileError("invalid vertex count", lineOffset);
            }
            header.vertexCount = static_cast<std::size_t>(count);
            sawVertex = true;
        } else if (keyword == "property") {
            std::string type, name;
            words >> type >> name;
            if (!sawVertex) {
                throw SplatFileError("property before element declaration", lineOffset, name);
            }
            if (type == "list") {
                throw SplatFileError("list properties are not supported", lineOffset, name);
            }
            if (type != "float" && type != "float32") {
                throw SplatFileError("unsupported property type '" + type + "'", lineOffset, name);
            }
            if (seen[name]) {
                throw SplatFileError("duplicate property", lineOffset, name);
            }
            seen[name] = true;
            header.columns.push_back(classify(name, lineOffset));
        } else {
            throw SplatFileError("unexpected header keyword '" + keyword + "'", lineOffset);
        }
    }
    if (!sawFormat) {
        throw SplatFileError("missing format line", pos);
    }
    if (!sawVertex) {
        throw SplatFileError("missing vertex element", pos);
    }
    header.payloadOffset = pos;

    for (const char *required : {"x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity", "scale_0",
                                 "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"}) {
        if (!seen[required]) {
            throw SplatFileError("missing required property", pos, required);
        }
    }
    int restCount = 0;
    int featCount = 0;
    int maxRest = -1;
    int maxFeat = -1;
    for (const auto &c : header.columns) {
        if (c.slot == Slot::Rest) {
            ++restCount;
            maxRest = std::max(maxRest, c.index);
        } else if (c.slot == Slot::Feat) {
            ++featCount;
            maxFeat = std::max(maxFeat, c.index);
        }
    }
    const auto degree = degreeForRestCount(restCount);
    if (!degree || maxRest + 1 != restCount) {
        throw SplatFileError("f_rest properties do not form a complete SH degree (" +
                                 std::to_string(restCount) + " present)",
                             pos, "f_rest_" + std::to_string(maxRest));
    }
    if (maxFeat + 1 != featCount) {
        throw SplatFileError("feat properties are not contiguous", pos,
                             "feat_" + std::to_string(maxFeat));
    }
    header.shDegree = *degree;
    header.featureDim = featCount;
    return header;
}

} // namespace

std::size_t
splatRecordStride(int shDegree, int featureDim) {
    // x y z, normals, dc, rest, opacity, scale, rot, features
    return sizeof(float) *
           static_cast<std::size_t>(3 + 3 + 3 + restCountForDegree(shDegree) + 1 + 3 + 4 + featureDim);
}

GaussianSet
parseSplatFile(std::span<const std::uint8_t> bytes) {
    const Header header = parseHeader(bytes);
    const std::size_t stride = header.columns.size() * sizeof(float);
    const std::size_t available = bytes.size() - header.payloadOffset;
    if (header.vertexCount > 0 && available / stride < header.vertexCount) {
        throw SplatFileError("truncated payload: expected " + std::to_string(header.vertexCount * stride) +
                                 " bytes, found " + std::to_string(available),
                             bytes.size());
    }
    if (available != header.vertexCount * stride) {
        throw SplatFileError("trailing bytes after vertex payload",
                             header.payloadOffset + header.vertexCount * stride);
    }

    GaussianSet set;
    set.shDegree = header.shDegree;
    set.featureDim = header.featureDim;
    set.resize(header.vertexCount);
    const int perChannelRest = shCoeffsPerChannel(header.shDegree) - 1;

    std::size_t offset = header.payloadOffset;
    for (std::size_t i = 0; i < header.vertexCount; ++i) {
        Eigen::Vector4d q = Eigen::Vector4d::Zero();
        auto sh = set.sh(i);
        const int k = set.coeffsPerChannel();
        for (const auto &col : header.columns) {
            float f;
            std::memcpy(&f, bytes.data() + offset, sizeof(float));
            if (!std::isfinite(f)) {
                throw SplatFileError("non-finite value in splat " + std::to_string(i), offset, col.name);
            }
            const double v = f;
            switch (col.slot) {
            case Slot::X: set.centroids[i].x() = v; break;
            case Slot::Y: set.centroids[i].y() = v; break;
            case Slot::Z: set.centroids[i].z() = v; break;
            case Slot::Normal: break;
            case Slot::Dc: sh[static_cast<std::size_t>(col.index * k)] = v; break;
            case Slot::Rest: {
                const int channel = col.index / perChannelRest;
                const int coeff = 1 + col.index % perChannelRest;
                sh[static_cast<std::size_t>(channel * k + coeff)] = v;
                break;
            }
            case Slot::Opacity: set.opacitiesLogit[i] = v; break;
            case Slot::Scale: set.scalesLog[i][col.index] = v; break;
            case Slot::Rot: q[col.index] = v; break;
            case Slot::Feat:
                set.features[i * static_cast<std::size_t>(set.featureDim) +
                             static_cast<std::size_t>(col.index)] = v;
                break;
            }
            offset += sizeof(float);
        }
        const double norm = q.norm();
        if (!(norm > 0.0)) {
            throw SplatFileError("zero-length rotation in splat " + std::to_string(i),
                                 offset - stride, "rot_0");
        }
        if (std::abs(norm - 1.0) > 1e-6) {
            q /= norm;
        }
        set.rotations[i] = Quat(q[0], q[1], q[2], q[3]);
    }
    return set;
}

std::vector<std::uint8_t>
writeSplatFile(const GaussianSet &set) {
    set.checkInvariants();
    std::ostringstream head;
    head << "ply\nformat binary_little_endian 1.0\nelement vertex " << set.size() << "\n";
    for (const char *p : {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"}) {
        head << "property float " << p << "\n";
    }
    const int rest = restCountForDegree(set.shDegree);
    for (int j = 0; j < rest; ++j) {
        head << "property float f_rest_" << j << "\n";
    }
    head << "property float opacity\n";
    for (int j = 0; j < 3; ++j) head << "property float scale_" << j << "\n";
    for (int j = 0; j < 4; ++j) head << "property float rot_" << j << "\n";
    for (int j = 0; j < set.featureDim; ++j) head << "property float feat_" << j << "\n";
    head << "end_header\n";
    const std::string h = head.str();

    const std::size_t stride = splatRecordStride(set.shDegree, set.featureDim);
    std::vector<std::uint8_t> out(h.size() + stride * set.size());
    std::memcpy(out.data(), h.data(), h.size());

    const int k = set.coeffsPerChannel();
    std::vector<float> record(stride / sizeof(float));
    for (std::size_t i = 0; i < set.size(); ++i) {
        std::size_t c = 0;
        auto put = [&](double v) {
            const float f = static_cast<float>(v);
            if (!std::isfinite(f)) {
                throw Error("writeSplatFile: non-finite field in splat " + std::to_string(i));
            }
            record[c++] = f;
        };
        for (int a = 0; a < 3; ++a) put(set.centroids[i][a]);
        for (int a = 0; a < 3; ++a) put(0.0);
        const auto sh = set.sh(i);
        for (int ch = 0; ch < 3; ++ch) put(sh[static_cast<std::size_t>(ch * k)]);
        for (int ch = 0; ch < 3; ++ch) {
            for (int j = 1; j < k; ++j) put(sh[static_cast<std::size_t>(ch * k + j)]);
        }
        put(set.opacitiesLogit[i]);
        for (int a = 0; a < 3; ++a) put(set.scalesLog[i][a]);
        const Quat &q = set.rotations[i];
        put(q.w());
        put(q.x());
        put(q.y());
        put(q.z());
        for (const double f : set.feature(i)) put(f);
        std::memcpy(out.data() + h.size() + i * stride, record.data(), stride);
    }
    return out;
}

std::vector<std::uint8_t>
readBinaryFile(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open '" + path.string() + "'");
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void
writeBinaryFile(const std::filesystem::path &path, std::span<const std::uint8_t> bytes) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

GaussianSet
loadSplatFile(const std::filesystem::path &path) {
    const auto bytes = readBinaryFile(path);
    try {
        return parseSplatFile(bytes);
    } catch (const SplatFileError &e) {
        throw SplatFileError(path.string() + ": " + e.message(), e.byteOffset(), e.property());
    }
}

void
saveSplatFile(const std::filesystem::path &path, const GaussianSet &set) {
    writeBinaryFile(path, writeSplatFile(set));
}

} // namespace gskit
