#pragma once

// ROI detections: confidence gate, pixelized localization score, and the
// image-level class decision.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "leafroi/core.hpp"
#include "leafroi/imaging.hpp"
#include "leafroi/saliency.hpp"

namespace leafroi::detection {

inline constexpr double kDefaultConfidenceThreshold = 0.8;

struct Detection {
    BoundingBox box;
    ClassLabel label = ClassLabel::HealthyLeaves;
    double confidence = 0.0;

    friend bool operator==(const Detection&, const Detection&) = default;
};

inline void validate(const Detection& d) {
    require_valid(d.box);
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
        throw ValidationError("detection confidence must lie in [0,1]");
    }
}

/// Empty when no detection survived the gate.
using ImageDecision = std::optional<ClassLabel>;

inline void check_threshold(double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw ValidationError("confidence threshold must lie in [0,1]");
}

/// Keeps detections with confidence strictly above threshold, in input order.
inline std::vector<Detection> filter_by_confidence(std::span<const Detection> dets,
                                                   double threshold = kDefaultConfidenceThreshold) {
    check_threshold(threshold);
    std::vector<Detection> kept;
    std::copy_if(dets.begin(), dets.end(), std::back_inserter(kept),
                 [&](const Detection& d) { return d.confidence > threshold; });
    return kept;
}

/// Localization score of the union of predicted boxes against the union of
/// ground-truth boxes. Labels are ignored.
inline saliency::OverlapScores detector_overlap(std::span<const Detection> pred,
                                                std::span<const BoundingBox> gt_boxes, int width,
                                                int height) {
    std::vector<BoundingBox> pred_boxes;
    pred_boxes.reserve(pred.size());
    for (const auto& d : pred) pred_boxes.push_back(d.box);
    const auto gt_mask = imaging::rasterize_boxes(gt_boxes, width, height);
    const auto pred_mask = imaging::rasterize_boxes(pred_boxes, width, height);
    return saliency::overlap_scores(gt_mask, pred_mask);
}

/// Sums closer than this are a tie, so 0.95 + 0.85 ties with 0.9 + 0.9.
inline constexpr double kSumTieTolerance = 1e-9;

/// Class with the largest summed confidence among gated detections. Ties go to
/// the larger single confidence, then to the lower class ordinal.
inline ImageDecision classify_image(std::span<const Detection> dets,
                                    double threshold = kDefaultConfidenceThreshold) {
    const auto kept = filter_by_confidence(dets, threshold);
    if (kept.empty()) return std::nullopt;

    std::array<std::vector<double>, kClassCount> per_class;
    for (const auto& d : kept) per_class[ordinal(d.label)].push_back(d.confidence);

    struct Score {
        double sum = 0.0;
        double best = 0.0;
        bool any = false;
    };
    std::array<Score, kClassCount> scores{};
    for (std::size_t k = 0; k < kClassCount; ++k) {
        auto& v = per_class[k];
        if (v.empty()) continue;
        // Fixed summation order keeps the decision permutation invariant.
        std::sort(v.begin(), v.end(), std::greater<>());
        scores[k].any = true;
        scores[k].best = v.front();
        for (double c : v) scores[k].sum += c;
    }

    std::optional<std::size_t> winner;
    for (std::size_t k = 0; k < kClassCount; ++k) {
        if (!scores[k].any) continue;
        if (!winner) {
            winner = k;
            continue;
        }
        const auto& w = scores[*winner];
        const double diff = scores[k].sum - w.sum;
        if (diff > kSumTieTolerance || (std::abs(diff) <= kSumTieTolerance && scores[k].best > w.best)) winner = k;
    }
    return static_cast<ClassLabel>(*winner);
}

/// Intersection over union with half-open area semantics.
inline double iou(const BoundingBox& a, const BoundingBox& b) {
    require_valid(a);
    require_valid(b);
    const int ix = std::max(0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
    const int iy = std::max(0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
    const auto inter = static_cast<std::int64_t>(ix) * iy;
    const auto uni = a.area() + b.area() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace leafroi::detection
