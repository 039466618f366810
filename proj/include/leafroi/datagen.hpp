#pragma once

// Deterministic synthetic leaf scenes and a simulated noisy ROI detector.
// Scenes are painted so that hue-band thresholding recovers the painted
// disease and healthy pixel sets exactly.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "leafroi/core.hpp"
#include "leafroi/detection.hpp"
#include "leafroi/imaging.hpp"
#include "leafroi/raster.hpp"
#include "leafroi/rng.hpp"

namespace leafroi::datagen {

/// Axis-aligned ellipse. Pixel (x,y) is inside iff its centre (x+0.5, y+0.5)
/// satisfies the ellipse inequality.
struct Ellipse {
    double cx = 0.0;
    double cy = 0.0;
    double rx = 1.0;
    double ry = 1.0;

    bool contains(int x, int y) const noexcept {
        const double dx = (x + 0.5 - cx) / rx;
        const double dy = (y + 0.5 - cy) / ry;
        return dx * dx + dy * dy <= 1.0;
    }
};

struct LeafSpec {
    Ellipse shape;
    double hue = 0.33;  // [0.20, 0.45]
    double saturation = 0.7;
    double value = 0.6;
};

struct SpotSpec {
    Ellipse shape;
    ClassLabel kind = ClassLabel::EarlyBlight;
    double hue = 0.06;  // [0.02, 0.10]
    double saturation = 0.8;
    double value = 0.55;
};

enum class Background {
    Dark,  // value below the thresholding guard; exact-recovery scenes
    Soil,  // hue near 0.08 above the guard; produces false disease pixels
};

struct SceneSpec {
    int width = 96;
    int height = 96;
    LeafSpec leaf;
    std::vector<SpotSpec> spots;
    Background background = Background::Dark;
    double background_value = 0.08;
    // Per-pixel jitter amplitudes drawn from the scene seed.
    double hue_jitter = 0.01;
    double value_jitter = 0.04;
};

struct SceneTruth {
    RgbImage image;
    BinaryMask disease_mask;
    BinaryMask healthy_mask;
    std::vector<std::pair<BoundingBox, ClassLabel>> gt_boxes;
    ClassLabel image_class = ClassLabel::HealthyLeaves;

    std::vector<BoundingBox> boxes() const {
        std::vector<BoundingBox> out;
        out.reserve(gt_boxes.size());
        for (const auto& [b, c] : gt_boxes) out.push_back(b);
        return out;
    }
};

/// 8-bit quantized HSV -> RGB (standard sector formula, rounded).
inline Rgb hsv_to_rgb(double h, double s, double v) noexcept {
    h = h - std::floor(h);
    const double c = v * s;
    const double hp = h * 6.0;
    const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(hp)) {
        case 0: r = c, g = x; break;
        case 1: r = x, g = c; break;
        case 2: g = c, b = x; break;
        case 3: g = x, b = c; break;
        case 4: r = x, b = c; break;
        default: r = c, b = x; break;
    }
    const double m = v - c;
    auto q = [](double u) { return static_cast<std::uint8_t>(std::clamp(std::lround(u * 255.0), 0L, 255L)); };
    return Rgb{q(r + m), q(g + m), q(b + m)};
}

namespace detail {

inline constexpr double kLeafHueMin = 0.20;
inline constexpr double kLeafHueMax = 0.45;
inline constexpr double kSpotHueMin = 0.02;
inline constexpr double kSpotHueMax = 0.10;
inline constexpr std::size_t kMinSpotArea = 16;
// Colour channels stay comfortably inside the thresholding guards.
inline constexpr double kMinPaintSV = 0.35;

inline void check_unit(double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(std::string("scene spec: ") + what + " must lie in [0,1]");
}

inline std::vector<std::pair<int, int>> raster_ellipse(const Ellipse& e, int w, int h) {
    std::vector<std::pair<int, int>> px;
    const int x0 = std::max(0, static_cast<int>(std::floor(e.cx - e.rx)) - 1);
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil(e.cx + e.rx)) + 1);
    const int y0 = std::max(0, static_cast<int>(std::floor(e.cy - e.ry)) - 1);
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil(e.cy + e.ry)) + 1);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            if (e.contains(x, y)) px.emplace_back(x, y);
        }
    }
    return px;
}

inline BoundingBox extent(const std::vector<std::pair<int, int>>& px) {
    BoundingBox b{px.front().first, px.front().second, px.front().first + 1, px.front().second + 1};
    for (auto [x, y] : px) {
        b.x_min = std::min(b.x_min, x);
        b.y_min = std::min(b.y_min, y);
        b.x_max = std::max(b.x_max, x + 1);
        b.y_max = std::max(b.y_max, y + 1);
    }
    return b;
}

inline Rgb background_colour(const SceneSpec& spec) {
    if (spec.background == Background::Soil) return hsv_to_rgb(0.08, 0.55, 0.45);
    const double v = spec.background_value;
    return Rgb{static_cast<std::uint8_t>(std::lround(v * 255.0)),
               static_cast<std::uint8_t>(std::lround(v * 0.8 * 255.0)),
               static_cast<std::uint8_t>(std::lround(v * 0.6 * 255.0))};
}

}  // namespace detail

/// Checks ranges, spot containment in the leaf, minimum spot area, and that
/// spots are pairwise separated (no overlap, no 8-adjacency).
inline void validate(const SceneSpec& spec) {
    using namespace detail;
    if (spec.width < 8 || spec.height < 8) throw ValidationError("scene spec: image must be at least 8x8");
    if (!(spec.leaf.hue >= kLeafHueMin && spec.leaf.hue <= kLeafHueMax)) {
        throw ValidationError("scene spec: leaf hue must lie in [0.20,0.45]");
    }
    check_unit(spec.leaf.saturation, "leaf saturation");
    check_unit(spec.leaf.value, "leaf value");
    if (spec.leaf.saturation < kMinPaintSV || spec.leaf.value < kMinPaintSV) {
        throw ValidationError("scene spec: leaf saturation and value must be >= 0.35");
    }
    if (!(spec.hue_jitter >= 0.0 && spec.hue_jitter <= 0.015)) {
        throw ValidationError("scene spec: hue_jitter must lie in [0,0.015]");
    }
    if (!(spec.value_jitter >= 0.0 && spec.value_jitter <= 0.1)) {
        throw ValidationError("scene spec: value_jitter must lie in [0,0.1]");
    }
    if (spec.background == Background::Dark && !(spec.background_value >= 0.0 && spec.background_value < 0.12)) {
        throw ValidationError("scene spec: dark background value must lie in [0,0.12)");
    }
    if (spec.leaf.shape.rx <= 0 || spec.leaf.shape.ry <= 0) throw ValidationError("scene spec: leaf radii must be positive");

    const auto leaf_px = raster_ellipse(spec.leaf.shape, spec.width, spec.height);
    if (leaf_px.empty()) throw ValidationError("scene spec: leaf covers no pixels");
    BinaryMask leaf(spec.width, spec.height);
    for (auto [x, y] : leaf_px) leaf.set(x, y);

    Raster<int> owner(spec.width, spec.height, -1);
    for (std::size_t i = 0; i < spec.spots.size(); ++i) {
        const auto& s = spec.spots[i];
        if (!is_disease(s.kind)) throw ValidationError("scene spec: spot kind must be EB or LB");
        if (s.kind != spec.spots.front().kind) throw ValidationError("scene spec: all spots must share one kind");
        if (!(s.hue >= kSpotHueMin && s.hue <= kSpotHueMax)) {
            throw ValidationError("scene spec: spot hue must lie in [0.02,0.10]");
        }
        check_unit(s.saturation, "spot saturation");
        check_unit(s.value, "spot value");
        if (s.saturation < kMinPaintSV || s.value < kMinPaintSV) {
            throw ValidationError("scene spec: spot saturation and value must be >= 0.35");
        }
        if (s.shape.rx <= 0 || s.shape.ry <= 0) throw ValidationError("scene spec: spot radii must be positive");
        // Clipped rasterization would hide pixels beyond the border, so require the full ellipse on-image.
        if (s.shape.cx - s.shape.rx < 0 || s.shape.cy - s.shape.ry < 0 || s.shape.cx + s.shape.rx > spec.width ||
            s.shape.cy + s.shape.ry > spec.height) {
            throw ValidationError("scene spec: spot " + std::to_string(i) + " extends beyond the image");
        }
        const auto px = raster_ellipse(s.shape, spec.width, spec.height);
        if (px.size() < kMinSpotArea) {
            throw ValidationError("scene spec: spot " + std::to_string(i) + " covers " + std::to_string(px.size()) +
                                  " pixels, need >= 16");
        }
        for (auto [x, y] : px) {
            if (!leaf.get(x, y)) throw ValidationError("scene spec: spot " + std::to_string(i) + " lies outside the leaf");
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    if (!owner.in_bounds(nx, ny)) continue;
                    const int o = owner.at(nx, ny);
                    if (o >= 0 && o != static_cast<int>(i)) {
                        throw ValidationError("scene spec: spots " + std::to_string(o) + " and " + std::to_string(i) +
                                              " touch or overlap");
                    }
                }
            }
            owner.at(x, y) = static_cast<int>(i);
        }
    }
}

/// Paints background, leaf, then spots. Per-pixel colour jitter is drawn from
/// `seed` in raster order over leaf pixels (hue, then value), then spot pixels.
inline SceneTruth generate_scene(const SceneSpec& spec, std::uint64_t seed) {
    validate(spec);
    const int w = spec.width, h = spec.height;
    SceneTruth t{RgbImage(w, h, detail::background_colour(spec)), BinaryMask(w, h), BinaryMask(w, h), {},
                 ClassLabel::HealthyLeaves};
    Xorshift64Star rng(seed);

    const imaging::ThresholdConfig bands{};
    // A jittered colour that quantizes outside its band falls back to the unjittered colour.
    auto paint = [&](const std::vector<std::pair<int, int>>& px, imaging::MaskKind kind, double hue, double sat,
                     double val) {
        const Rgb base = hsv_to_rgb(hue, sat, val);
        if (!imaging::in_band(imaging::rgb_to_hsv(base), kind, bands)) {
            throw ValidationError("scene spec: colour quantizes outside its threshold band");
        }
        for (auto [x, y] : px) {
            const double dh = spec.hue_jitter * (2.0 * rng.uniform01() - 1.0);
            const double dv = spec.value_jitter * (2.0 * rng.uniform01() - 1.0);
            const Rgb c = hsv_to_rgb(hue + dh, sat, std::clamp(val + dv, 0.0, 1.0));
            t.image.at(x, y) = imaging::in_band(imaging::rgb_to_hsv(c), kind, bands) ? c : base;
        }
    };

    const auto leaf_px = detail::raster_ellipse(spec.leaf.shape, w, h);
    paint(leaf_px, imaging::MaskKind::HealthyLeaf, spec.leaf.hue, spec.leaf.saturation, spec.leaf.value);
    for (auto [x, y] : leaf_px) t.healthy_mask.set(x, y);

    for (const auto& s : spec.spots) {
        const auto px = detail::raster_ellipse(s.shape, w, h);
        paint(px, imaging::MaskKind::DiseaseSpot, s.hue, s.saturation, s.value);
        for (auto [x, y] : px) {
            t.disease_mask.set(x, y);
            t.healthy_mask.set(x, y, false);
        }
        t.gt_boxes.emplace_back(detail::extent(px), s.kind);
    }

    if (spec.spots.empty()) {
        t.gt_boxes.emplace_back(detail::extent(leaf_px), ClassLabel::HealthyLeaves);
        t.image_class = ClassLabel::HealthyLeaves;
    } else {
        t.image_class = spec.spots.front().kind;
    }
    return t;
}

// ---------------------------------------------------------------------------
// Random scene specs

struct RandomSceneOptions {
    int width = 96;
    int height = 96;
    std::optional<ClassLabel> forced_class;
    int min_spots = 1;
    int max_spots = 3;
    double min_spot_radius = 3.0;
    double max_spot_radius = 7.0;
    Background background = Background::Dark;
};

/// Class drawn uniformly unless forced; spots placed by rejection sampling
/// until they fit inside the leaf without touching each other.
inline SceneSpec random_scene_spec(const RandomSceneOptions& opt, Xorshift64Star& rng) {
    if (opt.min_spots < 1 || opt.max_spots < opt.min_spots) throw ValidationError("random scene: bad spot count range");
    if (opt.width < 32 || opt.height < 32) throw ValidationError("random scene: image must be at least 32x32");
    SceneSpec spec;
    spec.width = opt.width;
    spec.height = opt.height;
    spec.background = opt.background;
    const ClassLabel cls = opt.forced_class ? *opt.forced_class : static_cast<ClassLabel>(rng.uniform_int(0, 2));

    spec.leaf.shape.cx = opt.width * rng.uniform(0.45, 0.55);
    spec.leaf.shape.cy = opt.height * rng.uniform(0.45, 0.55);
    spec.leaf.shape.rx = opt.width * rng.uniform(0.30, 0.42);
    spec.leaf.shape.ry = opt.height * rng.uniform(0.30, 0.42);
    spec.leaf.hue = rng.uniform(0.22, 0.43);
    spec.leaf.saturation = rng.uniform(0.5, 0.9);
    spec.leaf.value = rng.uniform(0.45, 0.85);
    if (cls == ClassLabel::HealthyLeaves) return spec;

    const auto want = static_cast<int>(rng.uniform_int(opt.min_spots, opt.max_spots));
    for (int attempt = 0; static_cast<int>(spec.spots.size()) < want && attempt < 400; ++attempt) {
        SpotSpec s;
        s.kind = cls;
        s.shape.rx = rng.uniform(opt.min_spot_radius, opt.max_spot_radius);
        s.shape.ry = rng.uniform(opt.min_spot_radius, opt.max_spot_radius);
        // Place the centre within the leaf's inner ellipse.
        const double a = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        const double d = std::sqrt(rng.uniform01()) * 0.6;
        s.shape.cx = spec.leaf.shape.cx + d * spec.leaf.shape.rx * std::cos(a);
        s.shape.cy = spec.leaf.shape.cy + d * spec.leaf.shape.ry * std::sin(a);
        s.hue = rng.uniform(0.03, 0.09);
        s.saturation = rng.uniform(0.55, 0.95);
        s.value = rng.uniform(0.45, 0.8);
        spec.spots.push_back(s);
        try {
            validate(spec);
        } catch (const ValidationError&) {
            spec.spots.pop_back();
        }
    }
    if (spec.spots.empty()) throw ValidationError("random scene: could not place any spot");
    return spec;
}

// ---------------------------------------------------------------------------
// Simulated detector

struct DetectorNoise {
    int box_jitter = 0;
    double drop_rate = 0.0;
    double mislabel_rate = 0.0;
    double confidence_low = 1.0;
    double confidence_high = 1.0;
    double spurious_rate = 0.0;

    static DetectorNoise identity() { return {}; }

    void validate() const {
        auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
        if (box_jitter < 0) throw ValidationError("detector noise: box_jitter must be >= 0");
        if (!prob(drop_rate) || !prob(mislabel_rate)) {
            throw ValidationError("detector noise: drop_rate and mislabel_rate must lie in [0,1]");
        }
        if (!prob(confidence_low) || !prob(confidence_high) || confidence_low > confidence_high) {
            throw ValidationError("detector noise: need 0 <= confidence_low <= confidence_high <= 1");
        }
        if (!(spurious_rate >= 0.0)) throw ValidationError("detector noise: spurious_rate must be >= 0");
    }
};

struct SimulationTrace {
    std::vector<detection::Detection> detections;
    std::size_t dropped = 0;
    std::size_t mislabeled = 0;
    std::size_t spurious = 0;
};

/// Per ground-truth box, in order: drop draw; if kept, four edge jitters
/// (x_min, y_min, x_max, y_max), mislabel draw (plus one pick among the other
/// two classes), confidence draw. Then a Poisson count of spurious boxes, each
/// drawn as x, y, width, height, label, confidence.
inline SimulationTrace simulate_detector_traced(const SceneTruth& truth, const DetectorNoise& noise,
                                                std::uint64_t seed) {
    noise.validate();
    const int w = truth.image.width(), h = truth.image.height();
    Xorshift64Star rng(seed);
    SimulationTrace out;
    auto confidence = [&] { return noise.confidence_low + (noise.confidence_high - noise.confidence_low) * rng.uniform01(); };

    for (const auto& [box, label] : truth.gt_boxes) {
        if (rng.bernoulli(noise.drop_rate)) {
            ++out.dropped;
            continue;
        }
        BoundingBox b = box;
        if (noise.box_jitter > 0) {
            const int j = noise.box_jitter;
            BoundingBox moved{b.x_min + static_cast<int>(rng.uniform_int(-j, j)),
                              b.y_min + static_cast<int>(rng.uniform_int(-j, j)),
                              b.x_max + static_cast<int>(rng.uniform_int(-j, j)),
                              b.y_max + static_cast<int>(rng.uniform_int(-j, j))};
            moved.x_min = std::clamp(moved.x_min, 0, w);
            moved.x_max = std::clamp(moved.x_max, 0, w);
            moved.y_min = std::clamp(moved.y_min, 0, h);
            moved.y_max = std::clamp(moved.y_max, 0, h);
            if (moved.x_min < moved.x_max) {
                b.x_min = moved.x_min;
                b.x_max = moved.x_max;
            }
            if (moved.y_min < moved.y_max) {
                b.y_min = moved.y_min;
                b.y_max = moved.y_max;
            }
        }
        ClassLabel out_label = label;
        if (rng.bernoulli(noise.mislabel_rate)) {
            const auto shift = static_cast<std::size_t>(rng.uniform_int(1, 2));
            out_label = static_cast<ClassLabel>((ordinal(label) + shift) % kClassCount);
            ++out.mislabeled;
        }
        out.detections.push_back({b, out_label, confidence()});
    }

    const auto extra = rng.poisson(noise.spurious_rate);
    for (std::uint64_t i = 0; i < extra; ++i) {
        const int x = static_cast<int>(rng.uniform_int(0, w - 1));
        const int y = static_cast<int>(rng.uniform_int(0, h - 1));
        const int bw = static_cast<int>(rng.uniform_int(1, std::max(1, w / 4)));
        const int bh = static_cast<int>(rng.uniform_int(1, std::max(1, h / 4)));
        const auto lbl = static_cast<ClassLabel>(rng.uniform_int(0, 2));
        out.detections.push_back({BoundingBox{x, y, std::min(w, x + bw), std::min(h, y + bh)}, lbl, confidence()});
        ++out.spurious;
    }
    return out;
}

inline std::vector<detection::Detection> simulate_detector(const SceneTruth& truth, const DetectorNoise& noise,
                                                           std::uint64_t seed) {
    return simulate_detector_traced(truth, noise, seed).detections;
}

}  // namespace leafroi::datagen
