#pragma once

// Saliency / attention map binarization and overlap scoring against ground truth.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "leafroi/core.hpp"
#include "leafroi/imaging.hpp"
#include "leafroi/raster.hpp"

namespace leafroi::saliency {

/// "Red to orange" band of a jet-style overlay: hue in [0, hue_max], no wrap at 1.
struct SaliencyBandConfig {
    double hue_max = 0.125;
    double min_saturation = 0.5;
    double min_value = 0.5;
    int scalar_threshold = 128;

    void validate() const {
        if (!(hue_max > 0.0 && hue_max < 1.0)) throw ValidationError("saliency band: hue_max must lie in (0,1)");
        if (!(min_saturation >= 0.0 && min_saturation <= 1.0 && min_value >= 0.0 && min_value <= 1.0)) {
            throw ValidationError("saliency band: min_saturation and min_value must lie in [0,1]");
        }
        if (scalar_threshold < 0 || scalar_threshold > 255) {
            throw ValidationError("saliency band: scalar_threshold must lie in [0,255]");
        }
    }
};

inline BinaryMask binarize_color_saliency(const RgbImage& map, const SaliencyBandConfig& cfg = {}) {
    cfg.validate();
    BinaryMask out(map.width(), map.height());
    auto src = map.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const Hsv p = imaging::rgb_to_hsv(src[i]);
        out.set(i, p.h <= cfg.hue_max && p.s >= cfg.min_saturation && p.v >= cfg.min_value);
    }
    return out;
}

/// Foreground iff value >= threshold.
inline BinaryMask binarize_scalar_saliency(const GrayImage& map, int threshold = 128) {
    if (threshold < 0 || threshold > 255) throw ValidationError("scalar threshold must lie in [0,255]");
    BinaryMask out(map.width(), map.height());
    auto src = map.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) out.set(i, src[i] >= threshold);
    return out;
}

/// Pixel counts between a ground-truth mask and a predicted mask, plus
/// precision = tp/(tp+fp) and recall = tp/(tp+fn).
///
/// Degenerate cases: an empty prediction against nonempty truth scores
/// precision 0; nonempty prediction against empty truth scores recall 0; two
/// empty masks agree vacuously (precision = recall = 1).
struct OverlapScores {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double precision = 0.0;
    double recall = 0.0;

    static OverlapScores from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
        OverlapScores s{tp, fp, fn, 0.0, 0.0};
        const std::size_t predicted = tp + fp;
        const std::size_t actual = tp + fn;
        if (predicted == 0 && actual == 0) {
            s.precision = 1.0;
            s.recall = 1.0;
            return s;
        }
        s.precision = predicted == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(predicted);
        s.recall = actual == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(actual);
        return s;
    }

    friend bool operator==(const OverlapScores&, const OverlapScores&) = default;
};

inline OverlapScores overlap_scores(const BinaryMask& gt, const BinaryMask& sm) {
    require_same_shape(gt, sm, "overlap_scores: ground truth vs prediction");
    std::size_t tp = 0, fp = 0, fn = 0;
    auto g = gt.bits();
    auto s = sm.bits();
    for (std::size_t i = 0; i < g.size(); ++i) {
        tp += g[i] & s[i];
        fp += (g[i] ^ 1) & s[i];
        fn += g[i] & (s[i] ^ 1);
    }
    return OverlapScores::from_counts(tp, fp, fn);
}

/// True iff some 8-connected component has at least min_area pixels.
inline bool attention_present(const BinaryMask& mask, std::size_t min_area = 16) {
    if (min_area < 1) throw ValidationError("attention_present: min_area must be >= 1");
    const auto regions = imaging::connected_components(mask, imaging::Connectivity::Eight);
    return std::any_of(regions.component_areas.begin(), regions.component_areas.end(),
                       [&](std::size_t a) { return a >= min_area; });
}

// ---------------------------------------------------------------------------
// Aggregation

struct ClassMeans {
    double precision_pct = 0.0;
    double recall_pct = 0.0;
    std::size_t image_count = 0;
};

/// Per-class means of per-image ratios (in percent) and their unweighted row average.
struct SaliencyReport {
    std::map<ClassLabel, ClassMeans> per_class;
    double row_precision_pct = 0.0;
    double row_recall_pct = 0.0;
    std::vector<ClassLabel> missing_classes;
};

namespace detail {

// Sum in sorted order so the result does not depend on input order.
inline double stable_mean(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

}  // namespace detail

/// Row average over the classes present; absent classes are listed in missing_classes.
inline SaliencyReport row_average(std::map<ClassLabel, ClassMeans> per_class) {
    if (per_class.empty()) throw DegenerateInputError("saliency aggregation: no classes");
    SaliencyReport r;
    double p = 0.0, rc = 0.0;
    for (ClassLabel c : kAllClasses) {
        auto it = per_class.find(c);
        if (it == per_class.end()) {
            r.missing_classes.push_back(c);
            continue;
        }
        p += it->second.precision_pct;
        rc += it->second.recall_pct;
    }
    const double n = static_cast<double>(per_class.size());
    r.row_precision_pct = p / n;
    r.row_recall_pct = rc / n;
    r.per_class = std::move(per_class);
    return r;
}

inline SaliencyReport aggregate_saliency(std::span<const std::pair<ClassLabel, OverlapScores>> scores) {
    if (scores.empty()) throw DegenerateInputError("saliency aggregation: empty score list");
    std::array<std::vector<double>, kClassCount> precisions, recalls;
    for (const auto& [label, s] : scores) {
        precisions[ordinal(label)].push_back(s.precision);
        recalls[ordinal(label)].push_back(s.recall);
    }
    std::map<ClassLabel, ClassMeans> per_class;
    for (ClassLabel c : kAllClasses) {
        const auto k = ordinal(c);
        if (precisions[k].empty()) continue;
        per_class[c] = ClassMeans{100.0 * detail::stable_mean(precisions[k]),
                                  100.0 * detail::stable_mean(recalls[k]), precisions[k].size()};
    }
    return row_average(std::move(per_class));
}

/// Unweighted mean of several dataset rows (the bottom "average" line of a saliency table).
inline std::pair<double, double> overall_average(std::span<const SaliencyReport> rows) {
    if (rows.empty()) throw DegenerateInputError("overall_average: no rows");
    double p = 0.0, r = 0.0;
    for (const auto& row : rows) {
        p += row.row_precision_pct;
        r += row.row_recall_pct;
    }
    return {p / static_cast<double>(rows.size()), r / static_cast<double>(rows.size())};
}

}  // namespace leafroi::saliency
