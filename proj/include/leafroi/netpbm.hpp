#pragma once

// Binary netpbm I/O: P6 (RGB) and P5 (grayscale), maxval 255 only.
// Masks are P5 files holding exactly 0 and 255.

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "leafroi/raster.hpp"

namespace leafroi::netpbm {

enum class Kind { Ppm, Pgm };

namespace detail {

struct Header {
    Kind kind;
    int width;
    int height;
    std::size_t data_offset;
};

inline void skip_space_and_comments(const std::string& buf, std::size_t& pos) {
    while (pos < buf.size()) {
        const auto c = static_cast<unsigned char>(buf[pos]);
        if (c == '#') {
            while (pos < buf.size() && buf[pos] != '\n' && buf[pos] != '\r') ++pos;
        } else if (std::isspace(c)) {
            ++pos;
        } else {
            break;
        }
    }
}

inline int read_header_int(const std::string& buf, std::size_t& pos, const char* field) {
    skip_space_and_comments(buf, pos);
    if (pos >= buf.size() || !std::isdigit(static_cast<unsigned char>(buf[pos]))) {
        throw FormatError(std::string("netpbm: expected ") + field);
    }
    long long v = 0;
    while (pos < buf.size() && std::isdigit(static_cast<unsigned char>(buf[pos]))) {
        v = v * 10 + (buf[pos] - '0');
        if (v > (1LL << 30)) throw FormatError(std::string("netpbm: ") + field + " too large");
        ++pos;
    }
    return static_cast<int>(v);
}

inline Header parse_header(const std::string& buf) {
    if (buf.size() < 2 || buf[0] != 'P' || (buf[1] != '5' && buf[1] != '6')) {
        throw FormatError("netpbm: unsupported magic (expected P5 or P6)");
    }
    Header h{};
    h.kind = buf[1] == '6' ? Kind::Ppm : Kind::Pgm;
    std::size_t pos = 2;
    h.width = read_header_int(buf, pos, "width");
    h.height = read_header_int(buf, pos, "height");
    const int maxval = read_header_int(buf, pos, "maxval");
    if (maxval != 255) throw FormatError("netpbm: maxval must be 255, got " + std::to_string(maxval));
    if (h.width < 1 || h.height < 1) throw FormatError("netpbm: zero image dimension");
    if (pos >= buf.size() || !std::isspace(static_cast<unsigned char>(buf[pos]))) {
        throw FormatError("netpbm: missing whitespace after maxval");
    }
    h.data_offset = pos + 1;
    const std::size_t channels = h.kind == Kind::Ppm ? 3 : 1;
    const std::size_t need = static_cast<std::size_t>(h.width) * h.height * channels;
    if (buf.size() - h.data_offset < need) throw FormatError("netpbm: truncated pixel data");
    return h;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace detail

inline Kind peek_kind(const std::string& bytes) { return detail::parse_header(bytes).kind; }

inline RgbImage decode_ppm(const std::string& bytes) {
    const auto h = detail::parse_header(bytes);
    if (h.kind != Kind::Ppm) throw FormatError("netpbm: expected P6 image");
    std::vector<Rgb> px(static_cast<std::size_t>(h.width) * h.height);
    const auto* p = reinterpret_cast<const std::uint8_t*>(bytes.data() + h.data_offset);
    for (auto& c : px) {
        c = Rgb{p[0], p[1], p[2]};
        p += 3;
    }
    return RgbImage(h.width, h.height, std::move(px));
}

inline GrayImage decode_pgm(const std::string& bytes) {
    const auto h = detail::parse_header(bytes);
    if (h.kind != Kind::Pgm) throw FormatError("netpbm: expected P5 image");
    const auto* p = reinterpret_cast<const std::uint8_t*>(bytes.data() + h.data_offset);
    std::vector<std::uint8_t> px(p, p + static_cast<std::size_t>(h.width) * h.height);
    return GrayImage(h.width, h.height, std::move(px));
}

/// Rejects any level other than 0 and 255.
inline BinaryMask decode_mask(const std::string& bytes) {
    const GrayImage g = decode_pgm(bytes);
    for (auto v : g.pixels()) {
        if (v != 0 && v != 255) {
            throw FormatError("mask: pixel value " + std::to_string(v) + " is neither 0 nor 255");
        }
    }
    return BinaryMask::from_bytes(g.width(), g.height(), g.pixels());
}

inline std::string encode_ppm(const RgbImage& img) {
    std::string out = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    out.reserve(out.size() + img.size() * 3);
    for (const Rgb& c : img.pixels()) {
        out.push_back(static_cast<char>(c.r));
        out.push_back(static_cast<char>(c.g));
        out.push_back(static_cast<char>(c.b));
    }
    return out;
}

inline std::string encode_pgm(const GrayImage& img) {
    std::string out = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    for (auto v : img.pixels()) out.push_back(static_cast<char>(v));
    return out;
}

inline std::string encode_mask(const BinaryMask& m) {
    std::string out = "P5\n" + std::to_string(m.width()) + " " + std::to_string(m.height()) + "\n255\n";
    for (auto b : m.bits()) out.push_back(static_cast<char>(b ? 255 : 0));
    return out;
}

inline RgbImage read_ppm(const std::filesystem::path& p) { return decode_ppm(detail::read_file(p)); }
inline GrayImage read_pgm(const std::filesystem::path& p) { return decode_pgm(detail::read_file(p)); }
inline BinaryMask read_mask(const std::filesystem::path& p) { return decode_mask(detail::read_file(p)); }
inline Kind read_kind(const std::filesystem::path& p) { return peek_kind(detail::read_file(p)); }

inline void write_ppm(const std::filesystem::path& p, const RgbImage& img) {
    detail::write_file(p, encode_ppm(img));
}
inline void write_pgm(const std::filesystem::path& p, const GrayImage& img) {
    detail::write_file(p, encode_pgm(img));
}
inline void write_mask(const std::filesystem::path& p, const BinaryMask& m) {
    detail::write_file(p, encode_mask(m));
}

}  // namespace leafroi::netpbm
