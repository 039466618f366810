#pragma once

// Evaluation runs over a manifest + prediction set. Per-image work runs on a
// worker pool; results are merged in image_id order so reports do not depend
// on the worker count.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <cstddef>
#include <exception>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "leafroi/detection.hpp"
#include "leafroi/harness/config.hpp"
#include "leafroi/harness/dataset.hpp"
#include "leafroi/harness/report.hpp"
#include "leafroi/imaging.hpp"
#include "leafroi/metrics.hpp"
#include "leafroi/netpbm.hpp"
#include "leafroi/saliency.hpp"

namespace leafroi::harness {

/// Runs fn(i) for i in [0, n) on up to `workers` threads; results keep index order.
template <typename Fn>
auto parallel_map(std::size_t n, unsigned workers, Fn fn) -> std::vector<decltype(fn(std::size_t{}))> {
    using R = decltype(fn(std::size_t{}));
    std::vector<std::optional<R>> slots(n);
    const unsigned threads = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    auto run = [&] {
        for (std::size_t i = next++; i < n && !failed; i = next++) {
            try {
                slots[i].emplace(fn(i));
            } catch (...) {
                if (!failed.exchange(true)) error = std::current_exception();
            }
        }
    };
    if (threads == 1) {
        run();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(run);
    }
    if (error) std::rethrow_exception(error);
    std::vector<R> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

// ---------------------------------------------------------------------------
// Per-image helpers

inline imaging::MaskKind ground_truth_kind(ClassLabel c) noexcept {
    return is_disease(c) ? imaging::MaskKind::DiseaseSpot : imaging::MaskKind::HealthyLeaf;
}

/// Ground-truth mask of `kind`: read from disk when the manifest names a mask
/// (taken as the mask for the entry's own class), else thresholded from the image.
inline BinaryMask load_ground_truth(const ManifestEntry& e, imaging::MaskKind kind, const EvaluationConfig& cfg) {
    if (e.gt_mask_path && kind == ground_truth_kind(e.actual_class)) return netpbm::read_mask(*e.gt_mask_path);
    auto mask = imaging::threshold_ground_truth(netpbm::read_ppm(e.image_path), kind, cfg.ground_truth);
    if (cfg.refinement) mask = imaging::refine(mask, *cfg.refinement);
    return mask;
}

/// Colour-coded maps (P6) use the hue band; scalar maps (P5) use the level threshold.
inline BinaryMask load_binarized_map(const fs::path& path, const EvaluationConfig& cfg) {
    const std::string bytes = netpbm::detail::read_file(path);
    if (netpbm::peek_kind(bytes) == netpbm::Kind::Ppm) {
        return saliency::binarize_color_saliency(netpbm::decode_ppm(bytes), cfg.saliency);
    }
    return saliency::binarize_scalar_saliency(netpbm::decode_pgm(bytes), cfg.saliency.scalar_threshold);
}

namespace detail {

inline std::vector<const ManifestEntry*> sorted_entries(const DatasetManifest& m) {
    std::vector<const ManifestEntry*> v;
    for (const auto& e : m.entries) v.push_back(&e);
    std::sort(v.begin(), v.end(), [](auto* a, auto* b) { return a->image_id < b->image_id; });
    return v;
}

template <typename T>
struct Outcome {
    std::optional<T> value;
    std::string error;
};

template <typename T, typename Fn>
Outcome<T> guarded(Fn&& fn) {
    try {
        return {fn(), {}};
    } catch (const Error& e) {
        return {std::nullopt, e.what()};
    } catch (const std::exception& e) {
        return {std::nullopt, e.what()};
    }
}

inline double stable_mean(std::vector<double> v) { return saliency::detail::stable_mean(std::move(v)); }

inline ClassifierSummary classify_summary(const metrics::ConfusionMatrix& cm, const EvaluationConfig& cfg) {
    ClassifierSummary s;
    s.confusion = cm;
    s.headline_policy = cfg.no_decision_policy;
    s.as_error = metrics::summarize(cm, metrics::NoDecisionPolicy::AsError);
    if (cm.decided_total() > 0) s.exclude = metrics::summarize(cm, metrics::NoDecisionPolicy::Exclude);
    return s;
}

inline void note_section_flags(const EvaluationSection& s, const std::string& scope, std::vector<std::string>& flags) {
    if (s.saliency) {
        for (ClassLabel c : s.saliency->missing_classes) {
            flags.push_back(scope + ": class " + std::string(short_name(c)) +
                            " has no scored images and is excluded from the row average");
        }
    }
    if (s.classifier && !s.classifier->exclude) {
        flags.push_back(scope + ": every image was undecided; exclude-policy metrics are undefined");
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Saliency

struct ImageOverlap {
    ClassLabel label;
    saliency::OverlapScores scores;
};

inline EvaluationSection saliency_section(const DatasetManifest& manifest, const PredictionSet& preds,
                                          const EvaluationConfig& cfg, unsigned workers) {
    const auto entries = detail::sorted_entries(manifest);
    auto outcomes = parallel_map(entries.size(), workers, [&](std::size_t i) {
        const ManifestEntry& e = *entries[i];
        return detail::guarded<ImageOverlap>([&] {
            const ImagePrediction* p = preds.find(e.image_id);
            if (!p || !p->saliency_path) throw ValidationError("no saliency map");
            const auto gt = load_ground_truth(e, ground_truth_kind(e.actual_class), cfg);
            const auto sm = load_binarized_map(*p->saliency_path, cfg);
            return ImageOverlap{e.actual_class, saliency::overlap_scores(gt, sm)};
        });
    });

    EvaluationSection s;
    s.dataset = manifest.dataset_name;
    s.images_total = entries.size();
    std::vector<std::pair<ClassLabel, saliency::OverlapScores>> scored;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!outcomes[i].value) {
            s.failures.push_back({entries[i]->image_id, outcomes[i].error});
            continue;
        }
        scored.emplace_back(outcomes[i].value->label, outcomes[i].value->scores);
    }
    s.images_succeeded = scored.size();
    if (!scored.empty()) s.saliency = saliency::aggregate_saliency(scored);
    return s;
}

inline EvaluationReport evaluate_saliency(const DatasetManifest& manifest, const PredictionSet& preds,
                                          const EvaluationConfig& cfg, unsigned workers = 1) {
    cfg.validate();
    EvaluationReport r;
    r.kind = ReportKind::Saliency;
    r.config = cfg;
    r.testing = saliency_section(manifest, preds, cfg, workers);
    detail::note_section_flags(*r.testing, "testing", r.discrepancy_flags);
    return r;
}

// ---------------------------------------------------------------------------
// Detector

struct ImageDetection {
    saliency::OverlapScores overlap;
    ClassLabel actual;
    detection::ImageDecision decision;
};

/// Ground-truth boxes from the manifest, or derived from the ground-truth mask
/// (8-connected components) labelled with the entry's class.
inline std::vector<BoundingBox> ground_truth_boxes(const ManifestEntry& e, const EvaluationConfig& cfg) {
    std::vector<BoundingBox> out;
    if (e.gt_boxes) {
        for (const auto& b : *e.gt_boxes) out.push_back(b.box);
        return out;
    }
    const auto mask = load_ground_truth(e, ground_truth_kind(e.actual_class), cfg);
    return imaging::mask_to_boxes(imaging::connected_components(mask, imaging::Connectivity::Eight));
}

inline EvaluationSection detector_section(const DatasetManifest& manifest, const PredictionSet& preds,
                                          const EvaluationConfig& cfg, unsigned workers) {
    const auto entries = detail::sorted_entries(manifest);
    auto outcomes = parallel_map(entries.size(), workers, [&](std::size_t i) {
        const ManifestEntry& e = *entries[i];
        return detail::guarded<ImageDetection>([&] {
            const ImagePrediction* p = preds.find(e.image_id);
            if (!p || !p->detections) throw ValidationError("no detections");
            const auto image = netpbm::read_ppm(e.image_path);
            const auto gt = ground_truth_boxes(e, cfg);
            const auto kept = detection::filter_by_confidence(*p->detections, cfg.confidence_threshold);
            return ImageDetection{detection::detector_overlap(kept, gt, image.width(), image.height()),
                                  e.actual_class, detection::classify_image(*p->detections, cfg.confidence_threshold)};
        });
    });

    EvaluationSection s;
    s.dataset = manifest.dataset_name;
    s.images_total = entries.size();
    metrics::ConfusionMatrix cm;
    std::vector<double> precisions, recalls;
    DetectorOverlapSummary d;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!outcomes[i].value) {
            s.failures.push_back({entries[i]->image_id, outcomes[i].error});
            continue;
        }
        const auto& o = *outcomes[i].value;
        precisions.push_back(o.overlap.precision);
        recalls.push_back(o.overlap.recall);
        d.tp += o.overlap.tp;
        d.fp += o.overlap.fp;
        d.fn += o.overlap.fn;
        cm = metrics::accumulate(cm, o.actual, o.decision);
    }
    s.images_succeeded = precisions.size();
    if (!precisions.empty()) {
        d.images = precisions.size();
        d.mean_precision = detail::stable_mean(precisions);
        d.mean_recall = detail::stable_mean(recalls);
        s.detector_overlap = d;
        s.classifier = detail::classify_summary(cm, cfg);
    }
    return s;
}

inline EvaluationReport evaluate_detector(const DatasetManifest& manifest, const PredictionSet& preds,
                                          const EvaluationConfig& cfg, unsigned workers = 1) {
    cfg.validate();
    EvaluationReport r;
    r.kind = ReportKind::Detector;
    r.config = cfg;
    r.testing = detector_section(manifest, preds, cfg, workers);
    detail::note_section_flags(*r.testing, "testing", r.discrepancy_flags);
    return r;
}

// ---------------------------------------------------------------------------
// Attention

struct ImageAttention {
    ClassLabel actual;
    detection::ImageDecision predicted;
    bool present = false;
    std::optional<saliency::OverlapScores> overlap;  // disease classes only
};

inline EvaluationSection attention_section(const DatasetManifest& manifest, const PredictionSet& preds,
                                           const EvaluationConfig& cfg, unsigned workers) {
    const auto entries = detail::sorted_entries(manifest);
    auto outcomes = parallel_map(entries.size(), workers, [&](std::size_t i) {
        const ManifestEntry& e = *entries[i];
        return detail::guarded<ImageAttention>([&] {
            const ImagePrediction* p = preds.find(e.image_id);
            if (!p || !p->attention_path) throw ValidationError("no attention map");
            if (!p->predicted_class) throw ValidationError("no predicted_class");
            const auto att = load_binarized_map(*p->attention_path, cfg);
            ImageAttention a{e.actual_class, *p->predicted_class, saliency::attention_present(att, cfg.attention_min_area),
                             std::nullopt};
            if (is_disease(e.actual_class)) {
                a.overlap = saliency::overlap_scores(load_ground_truth(e, imaging::MaskKind::DiseaseSpot, cfg), att);
            }
            return a;
        });
    });

    EvaluationSection s;
    s.dataset = manifest.dataset_name;
    s.images_total = entries.size();
    metrics::ConfusionMatrix cm;
    AttentionDiagnostics diag;
    std::vector<std::pair<ClassLabel, saliency::OverlapScores>> scored;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!outcomes[i].value) {
            s.failures.push_back({entries[i]->image_id, outcomes[i].error});
            continue;
        }
        const auto& o = *outcomes[i].value;
        ++s.images_succeeded;
        cm = metrics::accumulate(cm, o.actual, o.predicted);
        if (is_disease(o.actual)) {
            ++diag.disease_images;
            if (!o.present) ++diag.disease_without_attention;
            scored.emplace_back(o.actual, *o.overlap);
        } else {
            ++diag.healthy_images;
            if (o.present) ++diag.spurious_attention;
        }
    }
    if (s.images_succeeded > 0) {
        s.attention = diag;
        s.classifier = detail::classify_summary(cm, cfg);
    }
    if (!scored.empty()) s.saliency = saliency::aggregate_saliency(scored);
    return s;
}

inline EvaluationReport evaluate_attention(const DatasetManifest& manifest, const PredictionSet& preds,
                                           const EvaluationConfig& cfg, unsigned workers = 1) {
    cfg.validate();
    EvaluationReport r;
    r.kind = ReportKind::Attention;
    r.config = cfg;
    r.testing = attention_section(manifest, preds, cfg, workers);
    detail::note_section_flags(*r.testing, "testing", r.discrepancy_flags);
    return r;
}

// ---------------------------------------------------------------------------
// Cross-testing

inline EvaluationSection evaluate_section(ReportKind kind, const DatasetManifest& manifest, const PredictionSet& preds,
                                          const EvaluationConfig& cfg, unsigned workers) {
    switch (kind) {
        case ReportKind::Saliency: return saliency_section(manifest, preds, cfg, workers);
        case ReportKind::Detector: return detector_section(manifest, preds, cfg, workers);
        case ReportKind::Attention: return attention_section(manifest, preds, cfg, workers);
        case ReportKind::Classifier: break;
    }
    throw ValidationError("cross_test: a classifier-only report has no per-image evaluation to repeat");
}

inline EvaluationReport evaluate(ReportKind kind, const DatasetManifest& manifest, const PredictionSet& preds,
                                 const EvaluationConfig& cfg, unsigned workers = 1) {
    switch (kind) {
        case ReportKind::Saliency: return evaluate_saliency(manifest, preds, cfg, workers);
        case ReportKind::Detector: return evaluate_detector(manifest, preds, cfg, workers);
        case ReportKind::Attention: return evaluate_attention(manifest, preds, cfg, workers);
        case ReportKind::Classifier: break;
    }
    throw ValidationError("evaluate: classifier reports come from confusion matrices");
}

/// Runs the prior report's evaluation on dataset B with the prior report's
/// config and pairs the two sections.
inline EvaluationReport cross_test(const DatasetManifest& manifest_b, const PredictionSet& predictions_b,
                                   const EvaluationReport& prior, unsigned workers = 1) {
    if (!prior.testing) throw ValidationError("cross_test: prior report has no testing section");
    EvaluationReport r = prior;
    r.cross_testing = evaluate_section(prior.kind, manifest_b, predictions_b, prior.config, workers);
    detail::note_section_flags(*r.cross_testing, "cross_testing", r.discrepancy_flags);
    return r;
}

// ---------------------------------------------------------------------------
// Replays from pre-computed tables

/// Published figures to compare derived numbers against.
struct ReferenceFigures {
    std::optional<metrics::ReportedFigures> testing;
    std::optional<metrics::ReportedFigures> cross_testing;
    // dataset row name -> (row precision %, row recall %)
    std::map<std::string, std::pair<double, double>> saliency_rows;
    std::optional<std::pair<double, double>> saliency_overall;
};

inline metrics::ReportedFigures reported_from_json(const json& j) {
    metrics::ReportedFigures f;
    auto get = [&](const char* k, std::optional<double>& out) {
        if (auto it = j.find(k); it != j.end() && !it->is_null()) out = it->get<double>();
    };
    get("accuracy", f.accuracy);
    get("macro_precision", f.macro_precision);
    get("macro_recall", f.macro_recall);
    get("f_measure", f.f_measure);
    return f;
}

/// {"testing": {...}, "cross_testing": {...},
///  "saliency_rows": {"name": [precision_pct, recall_pct]}, "saliency_overall": [p, r]}
inline ReferenceFigures reference_from_json(const json& j) {
    ReferenceFigures ref;
    try {
        if (auto it = j.find("testing"); it != j.end()) ref.testing = reported_from_json(*it);
        if (auto it = j.find("cross_testing"); it != j.end()) ref.cross_testing = reported_from_json(*it);
        if (auto it = j.find("saliency_rows"); it != j.end()) {
            for (const auto& [name, v] : it->items()) ref.saliency_rows[name] = {v.at(0).get<double>(), v.at(1).get<double>()};
        }
        if (auto it = j.find("saliency_overall"); it != j.end()) {
            ref.saliency_overall = std::pair{it->at(0).get<double>(), it->at(1).get<double>()};
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("reference figures: ") + e.what());
    }
    return ref;
}

inline ReferenceFigures load_reference(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open reference '" + path.string() + "'");
    try {
        return reference_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw FormatError("reference '" + path.string() + "': " + e.what());
    }
}

inline EvaluationSection section_from_confusion(const metrics::ConfusionMatrix& cm, const std::string& name,
                                                const EvaluationConfig& cfg) {
    EvaluationSection s;
    s.dataset = name;
    s.images_total = static_cast<std::size_t>(cm.decided_total() + cm.undecided_total());
    s.images_succeeded = s.images_total;
    s.classifier = detail::classify_summary(cm, cfg);
    return s;
}

/// Classifier report straight from confusion matrices, with optional
/// comparison against reported figures.
inline EvaluationReport report_from_confusion(const metrics::ConfusionMatrix& testing,
                                              const std::optional<metrics::ConfusionMatrix>& cross,
                                              const EvaluationConfig& cfg, const ReferenceFigures& ref = {}) {
    cfg.validate();
    EvaluationReport r;
    r.kind = ReportKind::Classifier;
    r.config = cfg;
    r.testing = section_from_confusion(testing, "testing", cfg);
    if (cross) r.cross_testing = section_from_confusion(*cross, "cross_testing", cfg);
    auto compare = [&](const std::optional<EvaluationSection>& s, const std::optional<metrics::ReportedFigures>& f,
                       const std::string& scope) {
        if (!s || !f) return;
        auto flags = metrics::compare_with_reported(s->classifier->headline(), *f, cfg.reference_tolerance, scope);
        r.discrepancy_flags.insert(r.discrepancy_flags.end(), flags.begin(), flags.end());
    };
    compare(r.testing, ref.testing, "testing");
    compare(r.cross_testing, ref.cross_testing, "cross_testing");
    if (r.testing) detail::note_section_flags(*r.testing, "testing", r.discrepancy_flags);
    if (r.cross_testing) detail::note_section_flags(*r.cross_testing, "cross_testing", r.discrepancy_flags);
    return r;
}

/// One row of pre-aggregated per-class saliency means (percent), EB/LB/HL order.
struct ClassMeansRow {
    std::string dataset;
    std::array<double, kClassCount> precision_pct{};
    std::array<double, kClassCount> recall_pct{};
};

/// Header "dataset,eb_precision,lb_precision,hl_precision,eb_recall,lb_recall,hl_recall", then one row per dataset.
inline std::vector<ClassMeansRow> parse_class_means_csv(std::istream& in) {
    std::vector<ClassMeansRow> rows;
    std::string line;
    int n = 0;
    bool header = true;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        if (header) {
            header = false;
            if (line.rfind("dataset", 0) == 0) continue;
        }
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 7) throw FormatError("class-means csv line " + std::to_string(n) + ": expected 7 fields");
        ClassMeansRow r;
        r.dataset = cells[0];
        try {
            for (std::size_t k = 0; k < kClassCount; ++k) {
                r.precision_pct[k] = std::stod(cells[1 + k]);
                r.recall_pct[k] = std::stod(cells[4 + k]);
            }
        } catch (const std::exception&) {
            throw FormatError("class-means csv line " + std::to_string(n) + ": non-numeric value");
        }
        for (std::size_t k = 0; k < kClassCount; ++k) {
            for (double v : {r.precision_pct[k], r.recall_pct[k]}) {
                if (!(v >= 0.0 && v <= 100.0)) {
                    throw FormatError("class-means csv line " + std::to_string(n) + ": percentage outside [0,100]");
                }
            }
        }
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw FormatError("class-means csv: no rows");
    return rows;
}

/// Saliency table from pre-aggregated class means: derived row averages,
/// the overall average of the derived rows, and flags where reported row or
/// overall averages disagree with the derived ones.
inline EvaluationReport saliency_table_from_class_means(const std::vector<ClassMeansRow>& rows,
                                                        const EvaluationConfig& cfg, const ReferenceFigures& ref = {}) {
    cfg.validate();
    if (rows.empty()) throw DegenerateInputError("saliency table: no rows");
    EvaluationReport r;
    r.kind = ReportKind::Saliency;
    r.config = cfg;
    SaliencyTable table;
    std::vector<saliency::SaliencyReport> derived;
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };
    for (const auto& row : rows) {
        std::map<ClassLabel, saliency::ClassMeans> per_class;
        for (ClassLabel c : kAllClasses) {
            per_class[c] = {row.precision_pct[ordinal(c)], row.recall_pct[ordinal(c)], 0};
        }
        auto rep = saliency::row_average(std::move(per_class));
        if (auto it = ref.saliency_rows.find(row.dataset); it != ref.saliency_rows.end()) {
            const auto [p, rc] = it->second;
            if (std::abs(rep.row_precision_pct - p) > cfg.reference_tolerance_pct) {
                r.discrepancy_flags.push_back("saliency row " + row.dataset + ": derived average precision " +
                                              fmt(rep.row_precision_pct) + " disagrees with reported " + fmt(p));
            }
            if (std::abs(rep.row_recall_pct - rc) > cfg.reference_tolerance_pct) {
                r.discrepancy_flags.push_back("saliency row " + row.dataset + ": derived average recall " +
                                              fmt(rep.row_recall_pct) + " disagrees with reported " + fmt(rc));
            }
        }
        derived.push_back(rep);
        table.rows.emplace_back(row.dataset, std::move(rep));
    }
    const auto [op, orc] = saliency::overall_average(derived);
    table.overall_precision_pct = op;
    table.overall_recall_pct = orc;
    if (ref.saliency_overall) {
        const auto [p, rc] = *ref.saliency_overall;
        if (std::abs(op - p) > cfg.reference_tolerance_pct) {
            r.discrepancy_flags.push_back("saliency overall: derived average precision " + fmt(op) +
                                          " disagrees with reported " + fmt(p));
        }
        if (std::abs(orc - rc) > cfg.reference_tolerance_pct) {
            r.discrepancy_flags.push_back("saliency overall: derived average recall " + fmt(orc) +
                                          " disagrees with reported " + fmt(rc));
        }
    }
    r.saliency_table = std::move(table);
    return r;
}

}  // namespace leafroi::harness
