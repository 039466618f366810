#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "leafroi/core.hpp"

namespace leafroi {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    friend constexpr bool operator==(const Rgb&, const Rgb&) = default;
};

/// Hue is a fraction of a full turn in [0,1); saturation and value in [0,1].
struct Hsv {
    double h = 0.0;
    double s = 0.0;
    double v = 0.0;
    friend constexpr bool operator==(const Hsv&, const Hsv&) = default;
};

/// Dense row-major raster. Dimensions are at least 1x1.
template <typename Pixel>
class Raster {
public:
    using value_type = Pixel;

    Raster(int width, int height, Pixel fill = Pixel{}) : width_(width), height_(height) {
        check_dims(width, height);
        pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }

    Raster(int width, int height, std::vector<Pixel> pixels)
        : width_(width), height_(height), pixels_(std::move(pixels)) {
        check_dims(width, height);
        if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
            throw DimensionMismatchError("pixel buffer holds " + std::to_string(pixels_.size()) +
                                         " values, expected " + std::to_string(width) + "x" +
                                         std::to_string(height));
        }
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return pixels_.size(); }

    bool in_bounds(int x, int y) const noexcept {
        return x >= 0 && y >= 0 && x < width_ && y < height_;
    }

    const Pixel& at(int x, int y) const noexcept { return pixels_[index(x, y)]; }
    Pixel& at(int x, int y) noexcept { return pixels_[index(x, y)]; }

    std::span<const Pixel> pixels() const noexcept { return pixels_; }
    std::span<Pixel> pixels() noexcept { return pixels_; }

    bool same_shape(int w, int h) const noexcept { return w == width_ && h == height_; }
    template <typename Other>
    bool same_shape(const Other& o) const noexcept {
        return same_shape(o.width(), o.height());
    }

    friend bool operator==(const Raster&, const Raster&) = default;

protected:
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

private:
    static void check_dims(int width, int height) {
        if (width < 1 || height < 1) {
            throw DegenerateInputError("raster dimensions must be at least 1x1, got " +
                                       std::to_string(width) + "x" + std::to_string(height));
        }
    }

    int width_;
    int height_;
    std::vector<Pixel> pixels_;
};

using RgbImage = Raster<Rgb>;
using HsvImage = Raster<Hsv>;
/// 8-bit scalar raster (attention maps, grayscale saliency).
using GrayImage = Raster<std::uint8_t>;

/// Foreground flags; every element is exactly 0 or 1.
class BinaryMask {
public:
    BinaryMask(int width, int height, bool fill = false) : bits_(width, height, fill ? 1 : 0) {}

    // Any nonzero byte counts as foreground.
    static BinaryMask from_bytes(int width, int height, std::span<const std::uint8_t> bytes) {
        BinaryMask m(width, height);
        if (bytes.size() != m.size()) {
            throw DimensionMismatchError("mask buffer size does not match " +
                                         std::to_string(width) + "x" + std::to_string(height));
        }
        auto out = m.bits_.pixels();
        for (std::size_t i = 0; i < bytes.size(); ++i) out[i] = bytes[i] != 0 ? 1 : 0;
        return m;
    }

    int width() const noexcept { return bits_.width(); }
    int height() const noexcept { return bits_.height(); }
    std::size_t size() const noexcept { return bits_.size(); }
    bool in_bounds(int x, int y) const noexcept { return bits_.in_bounds(x, y); }

    bool get(int x, int y) const noexcept { return bits_.at(x, y) != 0; }
    void set(int x, int y, bool on = true) noexcept { bits_.at(x, y) = on ? 1 : 0; }

    bool get(std::size_t i) const noexcept { return bits_.pixels()[i] != 0; }
    void set(std::size_t i, bool on = true) noexcept { bits_.pixels()[i] = on ? 1 : 0; }

    std::span<const std::uint8_t> bits() const noexcept { return bits_.pixels(); }

    std::size_t count() const noexcept {
        std::size_t n = 0;
        for (auto b : bits_.pixels()) n += b;
        return n;
    }
    bool empty() const noexcept { return count() == 0; }

    template <typename Other>
    bool same_shape(const Other& o) const noexcept {
        return o.width() == width() && o.height() == height();
    }

    BinaryMask complement() const {
        BinaryMask out(width(), height());
        for (std::size_t i = 0; i < size(); ++i) out.set(i, !get(i));
        return out;
    }

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
    Raster<std::uint8_t> bits_;
};

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, std::string_view what) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw DimensionMismatchError(std::string(what) + ": " + std::to_string(a.width()) + "x" +
                                     std::to_string(a.height()) + " vs " +
                                     std::to_string(b.width()) + "x" + std::to_string(b.height()));
    }
}

// Pixelwise set operations on equal-shaped masks.
inline BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b) {
    require_same_shape(a, b, "mask_and");
    BinaryMask out(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i) out.set(i, a.get(i) && b.get(i));
    return out;
}

inline BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b) {
    require_same_shape(a, b, "mask_or");
    BinaryMask out(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i) out.set(i, a.get(i) || b.get(i));
    return out;
}

inline bool is_subset(const BinaryMask& a, const BinaryMask& b) {
    require_same_shape(a, b, "is_subset");
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.get(i) && !b.get(i)) return false;
    }
    return true;
}

}  // namespace leafroi
