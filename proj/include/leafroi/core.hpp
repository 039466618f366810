#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace leafroi {

// Base of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input is structurally valid but too small or empty for the requested operation.
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

class DimensionMismatchError : public Error {
public:
    using Error::Error;
};

// Violated invariant on a value, config, manifest or scene spec.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Malformed file contents (netpbm, CSV, JSON lines).
class FormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

enum class ClassLabel : std::uint8_t { EarlyBlight = 0, LateBlight = 1, HealthyLeaves = 2 };

inline constexpr std::size_t kClassCount = 3;
inline constexpr std::array<ClassLabel, kClassCount> kAllClasses = {
    ClassLabel::EarlyBlight, ClassLabel::LateBlight, ClassLabel::HealthyLeaves};

constexpr std::size_t ordinal(ClassLabel c) noexcept { return static_cast<std::size_t>(c); }

constexpr std::string_view short_name(ClassLabel c) noexcept {
    switch (c) {
        case ClassLabel::EarlyBlight: return "EB";
        case ClassLabel::LateBlight: return "LB";
        case ClassLabel::HealthyLeaves: return "HL";
    }
    return "??";
}

constexpr std::string_view long_name(ClassLabel c) noexcept {
    switch (c) {
        case ClassLabel::EarlyBlight: return "early_blight";
        case ClassLabel::LateBlight: return "late_blight";
        case ClassLabel::HealthyLeaves: return "healthy_leaves";
    }
    return "unknown";
}

constexpr bool is_disease(ClassLabel c) noexcept { return c != ClassLabel::HealthyLeaves; }

// Accepts "EB"/"LB"/"HL" and the long snake_case names.
inline std::optional<ClassLabel> parse_class(std::string_view s) noexcept {
    for (ClassLabel c : kAllClasses) {
        if (s == short_name(c) || s == long_name(c)) return c;
    }
    return std::nullopt;
}

inline ClassLabel class_from_string(std::string_view s) {
    if (auto c = parse_class(s)) return *c;
    throw ValidationError("unknown class label '" + std::string(s) + "'");
}

/// Axis-aligned pixel box, half-open: [x_min, x_max) x [y_min, y_max), origin top-left.
struct BoundingBox {
    int x_min = 0;
    int y_min = 0;
    int x_max = 0;
    int y_max = 0;

    constexpr int width() const noexcept { return x_max - x_min; }
    constexpr int height() const noexcept { return y_max - y_min; }
    constexpr std::int64_t area() const noexcept {
        return static_cast<std::int64_t>(width()) * height();
    }
    constexpr bool valid() const noexcept {
        return x_min >= 0 && y_min >= 0 && x_min < x_max && y_min < y_max;
    }
    constexpr bool contains(int x, int y) const noexcept {
        return x >= x_min && x < x_max && y >= y_min && y < y_max;
    }
    constexpr bool within(int width, int height) const noexcept {
        return valid() && x_max <= width && y_max <= height;
    }

    friend constexpr bool operator==(const BoundingBox&, const BoundingBox&) = default;
    friend constexpr auto operator<=>(const BoundingBox&, const BoundingBox&) = default;
};

inline std::string to_string(const BoundingBox& b) {
    return "(" + std::to_string(b.x_min) + "," + std::to_string(b.y_min) + "," +
           std::to_string(b.x_max) + "," + std::to_string(b.y_max) + ")";
}

inline void require_valid(const BoundingBox& b) {
    if (!b.valid()) throw ValidationError("invalid bounding box " + to_string(b));
}

}  // namespace leafroi
