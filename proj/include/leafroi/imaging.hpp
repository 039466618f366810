#pragma once

// Raster primitives: colour conversion, hue-band ground-truth thresholding,
// binary morphology, connected components and mask <-> box conversion.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "leafroi/core.hpp"
#include "leafroi/raster.hpp"

namespace leafroi::imaging {

/// Standard hexcone conversion. Hue is degrees/360 in [0,1); achromatic pixels get h = s = 0.
inline Hsv rgb_to_hsv(Rgb c) noexcept {
    const int mx = std::max({c.r, c.g, c.b});
    const int mn = std::min({c.r, c.g, c.b});
    const int delta = mx - mn;
    Hsv out;
    out.v = mx / 255.0;
    if (delta == 0) return out;
    out.s = static_cast<double>(delta) / mx;
    double sector;
    if (mx == c.r) {
        sector = static_cast<double>(c.g - c.b) / delta;
        if (sector < 0) sector += 6.0;
    } else if (mx == c.g) {
        sector = static_cast<double>(c.b - c.r) / delta + 2.0;
    } else {
        sector = static_cast<double>(c.r - c.g) / delta + 4.0;
    }
    out.h = sector / 6.0;
    if (out.h >= 1.0) out.h = 0.0;
    return out;
}

inline HsvImage rgb_to_hsv(const RgbImage& img) {
    HsvImage out(img.width(), img.height());
    auto src = img.pixels();
    auto dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = rgb_to_hsv(src[i]);
    return out;
}

enum class MaskKind { DiseaseSpot, HealthyLeaf };

/// Hue bands for ground-truth binarization. Disease band is h < disease_hue_max;
/// healthy band is the closed interval [healthy_hue_min, healthy_hue_max]. Both
/// also require s >= min_saturation and v >= min_value.
struct ThresholdConfig {
    double disease_hue_max = 0.15;
    double healthy_hue_min = 0.15;
    double healthy_hue_max = 0.60;
    double min_saturation = 0.20;
    double min_value = 0.15;

    void validate() const {
        if (!(0.0 <= disease_hue_max && disease_hue_max <= healthy_hue_min &&
              healthy_hue_min <= healthy_hue_max && healthy_hue_max < 1.0)) {
            throw ValidationError(
                "threshold config: need 0 <= disease_hue_max <= healthy_hue_min <= healthy_hue_max < 1");
        }
        if (!(min_saturation >= 0.0 && min_saturation <= 1.0 && min_value >= 0.0 && min_value <= 1.0)) {
            throw ValidationError("threshold config: min_saturation and min_value must lie in [0,1]");
        }
    }
};

inline bool in_band(const Hsv& p, MaskKind kind, const ThresholdConfig& cfg) noexcept {
    if (p.s < cfg.min_saturation || p.v < cfg.min_value) return false;
    if (kind == MaskKind::DiseaseSpot) return p.h < cfg.disease_hue_max;
    return p.h >= cfg.healthy_hue_min && p.h <= cfg.healthy_hue_max;
}

inline BinaryMask threshold_ground_truth(const RgbImage& img, MaskKind kind,
                                         const ThresholdConfig& cfg = {}) {
    cfg.validate();
    BinaryMask out(img.width(), img.height());
    auto src = img.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) out.set(i, in_band(rgb_to_hsv(src[i]), kind, cfg));
    return out;
}

// ---------------------------------------------------------------------------
// Morphology

/// Square footprint of side 2*radius+1.
struct StructuringElement {
    int radius = 1;

    constexpr int side() const noexcept { return 2 * radius + 1; }
};

namespace detail {

inline void check_se(const BinaryMask& m, const StructuringElement& se) {
    if (se.radius < 1) throw ValidationError("structuring element radius must be >= 1");
    if (se.side() >= std::min(m.width(), m.height())) {
        throw DegenerateInputError("structuring element side " + std::to_string(se.side()) +
                                   " is not smaller than the " + std::to_string(m.width()) + "x" +
                                   std::to_string(m.height()) + " mask");
    }
}

// Separable max/min filter along one axis. Outside samples read as `outside`.
inline std::vector<std::uint8_t> sweep(std::span<const std::uint8_t> in, int w, int h, int r,
                                       bool horizontal, bool take_max, std::uint8_t outside) {
    std::vector<std::uint8_t> out(in.size());
    const int lines = horizontal ? h : w;
    const int len = horizontal ? w : h;
    for (int line = 0; line < lines; ++line) {
        auto sample = [&](int k) -> std::uint8_t {
            if (k < 0 || k >= len) return outside;
            const int x = horizontal ? k : line;
            const int y = horizontal ? line : k;
            return in[static_cast<std::size_t>(y) * w + x];
        };
        // Running count of foreground samples within the window.
        int ones = 0;
        for (int k = -r; k <= r; ++k) ones += sample(k);
        for (int k = 0; k < len; ++k) {
            const int x = horizontal ? k : line;
            const int y = horizontal ? line : k;
            const bool v = take_max ? ones > 0 : ones == 2 * r + 1;
            out[static_cast<std::size_t>(y) * w + x] = v ? 1 : 0;
            ones += sample(k + r + 1) - sample(k - r);
        }
    }
    return out;
}

inline BinaryMask square_filter(const BinaryMask& m, int r, bool take_max) {
    const int w = m.width();
    const int h = m.height();
    // Dilation ignores outside pixels; erosion treats them as background. Both map to 0.
    auto pass1 = sweep(m.bits(), w, h, r, true, take_max, 0);
    auto pass2 = sweep(pass1, w, h, r, false, take_max, 0);
    return BinaryMask::from_bytes(w, h, pass2);
}

}  // namespace detail

inline BinaryMask dilate(const BinaryMask& m, const StructuringElement& se = {}) {
    detail::check_se(m, se);
    return detail::square_filter(m, se.radius, true);
}

/// Pixels whose footprint leaves the image are always cleared.
inline BinaryMask erode(const BinaryMask& m, const StructuringElement& se = {}) {
    detail::check_se(m, se);
    return detail::square_filter(m, se.radius, false);
}

/// Erode, then dilate.
inline BinaryMask open(const BinaryMask& m, const StructuringElement& se = {}) {
    return dilate(erode(m, se), se);
}

/// Dilate, then erode.
inline BinaryMask close(const BinaryMask& m, const StructuringElement& se = {}) {
    return erode(dilate(m, se), se);
}

// ---------------------------------------------------------------------------
// Connected components

enum class Connectivity { Four = 4, Eight = 8 };

inline Connectivity connectivity_from_int(int n) {
    if (n == 4) return Connectivity::Four;
    if (n == 8) return Connectivity::Eight;
    throw ValidationError("connectivity must be 4 or 8, got " + std::to_string(n));
}

/// Component ids are dense 1..count in raster order of each component's first pixel; 0 is background.
struct LabeledRegions {
    int width = 0;
    int height = 0;
    std::vector<int> labels;
    int component_count = 0;
    std::vector<std::size_t> component_areas;  // component_areas[id - 1]

    int label(int x, int y) const noexcept {
        return labels[static_cast<std::size_t>(y) * width + x];
    }
    std::size_t area(int id) const { return component_areas.at(static_cast<std::size_t>(id - 1)); }
};

namespace detail {

class DisjointSets {
public:
    int make() {
        parent_.push_back(static_cast<int>(parent_.size()));
        return parent_.back();
    }
    int find(int a) {
        while (parent_[a] != a) {
            parent_[a] = parent_[parent_[a]];
            a = parent_[a];
        }
        return a;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<int> parent_;
};

}  // namespace detail

inline LabeledRegions connected_components(const BinaryMask& m, Connectivity conn = Connectivity::Eight) {
    const int w = m.width();
    const int h = m.height();
    LabeledRegions out;
    out.width = w;
    out.height = h;
    out.labels.assign(m.size(), 0);

    // Pass 1: provisional labels, merging with already-visited neighbours.
    detail::DisjointSets sets;
    sets.make();  // slot 0 = background
    std::vector<int> provisional(m.size(), 0);
    auto at = [&](int x, int y) -> int& { return provisional[static_cast<std::size_t>(y) * w + x]; };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!m.get(x, y)) continue;
            int mine = 0;
            auto link = [&](int nx, int ny) {
                if (nx < 0 || ny < 0 || nx >= w) return;
                const int other = at(nx, ny);
                if (other == 0) return;
                if (mine == 0) {
                    mine = other;
                } else {
                    sets.unite(mine, other);
                }
            };
            link(x - 1, y);
            link(x, y - 1);
            if (conn == Connectivity::Eight) {
                link(x - 1, y - 1);
                link(x + 1, y - 1);
            }
            at(x, y) = mine != 0 ? mine : sets.make();
        }
    }

    // Pass 2: dense ids in raster order of first appearance.
    std::vector<int> dense;
    for (std::size_t i = 0; i < provisional.size(); ++i) {
        if (provisional[i] == 0) continue;
        const int root = sets.find(provisional[i]);
        if (static_cast<std::size_t>(root) >= dense.size()) dense.resize(root + 1, 0);
        if (dense[root] == 0) {
            dense[root] = ++out.component_count;
            out.component_areas.push_back(0);
        }
        out.labels[i] = dense[root];
        ++out.component_areas[dense[root] - 1];
    }
    return out;
}

/// Clears every component with area < min_area. min_area = 0 is the identity.
inline BinaryMask remove_small_components(const BinaryMask& m, std::size_t min_area,
                                          Connectivity conn = Connectivity::Eight) {
    if (min_area == 0) return m;
    const auto regions = connected_components(m, conn);
    BinaryMask out(m.width(), m.height());
    for (std::size_t i = 0; i < m.size(); ++i) {
        const int id = regions.labels[i];
        if (id != 0 && regions.area(id) >= min_area) out.set(i);
    }
    return out;
}

/// Tight half-open box per component, ordered by component id.
inline std::vector<BoundingBox> mask_to_boxes(const LabeledRegions& regions) {
    std::vector<BoundingBox> boxes(static_cast<std::size_t>(regions.component_count),
                                   BoundingBox{regions.width, regions.height, -1, -1});
    for (int y = 0; y < regions.height; ++y) {
        for (int x = 0; x < regions.width; ++x) {
            const int id = regions.label(x, y);
            if (id == 0) continue;
            auto& b = boxes[static_cast<std::size_t>(id - 1)];
            b.x_min = std::min(b.x_min, x);
            b.y_min = std::min(b.y_min, y);
            b.x_max = std::max(b.x_max, x + 1);
            b.y_max = std::max(b.y_max, y + 1);
        }
    }
    return boxes;
}

/// Union of box interiors. Every box must lie within the image.
inline BinaryMask rasterize_boxes(std::span<const BoundingBox> boxes, int width, int height) {
    BinaryMask out(width, height);
    for (const auto& b : boxes) {
        if (!b.within(width, height)) {
            throw ValidationError("box " + to_string(b) + " lies outside the " + std::to_string(width) +
                                  "x" + std::to_string(height) + " image");
        }
        for (int y = b.y_min; y < b.y_max; ++y) {
            for (int x = b.x_min; x < b.x_max; ++x) out.set(x, y);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Segmentation-mask refinement

/// Default pipeline: open, close (3x3), then drop 8-connected components under 32 px.
struct RefinementConfig {
    StructuringElement element{};
    std::size_t min_area = 32;
    Connectivity connectivity = Connectivity::Eight;
};

inline BinaryMask refine(const BinaryMask& m, const RefinementConfig& cfg = {}) {
    return remove_small_components(close(open(m, cfg.element), cfg.element), cfg.min_area, cfg.connectivity);
}

}  // namespace leafroi::imaging
