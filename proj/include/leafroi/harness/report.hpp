#pragma once

// Evaluation reports and their deterministic CSV / JSON serialization.
//
// Serialization rules: object keys sorted; floating-point values printed with
// 4 decimals, or 2 decimals when the key ends in "_pct". Values under the
// "config" object are printed round-trip exact so a report's echoed config
// can be replayed.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "leafroi/harness/config.hpp"
#include "leafroi/metrics.hpp"
#include "leafroi/saliency.hpp"

namespace leafroi::harness {

enum class ReportKind { Saliency, Detector, Attention, Classifier };

inline std::string_view to_string(ReportKind k) noexcept {
    switch (k) {
        case ReportKind::Saliency: return "saliency";
        case ReportKind::Detector: return "detector";
        case ReportKind::Attention: return "attention";
        case ReportKind::Classifier: return "classifier";
    }
    return "unknown";
}

struct ImageFailure {
    std::string image_id;
    std::string message;
};

struct DetectorOverlapSummary {
    double mean_precision = 0.0;
    double mean_recall = 0.0;
    std::size_t images = 0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
};

struct ClassifierSummary {
    metrics::ConfusionMatrix confusion;
    metrics::NoDecisionPolicy headline_policy = metrics::NoDecisionPolicy::AsError;
    metrics::SummaryMetrics as_error;
    std::optional<metrics::SummaryMetrics> exclude;  // absent when every image was undecided

    const metrics::SummaryMetrics& headline() const {
        return headline_policy == metrics::NoDecisionPolicy::Exclude && exclude ? *exclude : as_error;
    }
};

struct AttentionDiagnostics {
    std::size_t healthy_images = 0;
    std::size_t spurious_attention = 0;  // healthy images whose map still shows an attention region
    std::size_t disease_images = 0;
    std::size_t disease_without_attention = 0;
};

/// Results for one dataset.
struct EvaluationSection {
    std::string dataset;
    std::size_t images_total = 0;
    std::size_t images_succeeded = 0;
    std::vector<ImageFailure> failures;
    std::optional<saliency::SaliencyReport> saliency;
    std::optional<DetectorOverlapSummary> detector_overlap;
    std::optional<ClassifierSummary> classifier;
    std::optional<AttentionDiagnostics> attention;
};

/// Several dataset rows of per-class saliency means plus their overall average.
struct SaliencyTable {
    std::vector<std::pair<std::string, saliency::SaliencyReport>> rows;
    double overall_precision_pct = 0.0;
    double overall_recall_pct = 0.0;
};

struct EvaluationReport {
    ReportKind kind = ReportKind::Classifier;
    EvaluationConfig config;
    std::optional<EvaluationSection> testing;
    std::optional<EvaluationSection> cross_testing;
    std::optional<SaliencyTable> saliency_table;
    std::vector<std::string> discrepancy_flags;

    std::size_t failure_count() const noexcept {
        return (testing ? testing->failures.size() : 0) + (cross_testing ? cross_testing->failures.size() : 0);
    }
};

// ---------------------------------------------------------------------------
// To JSON value tree

inline json interpretation_json() {
    return {
        {"saliency_averaging", "per-class mean of per-image ratios; row average is the unweighted mean over classes"},
        {"detector_overlap", "pixelized union of boxes per image, unweighted mean over images"},
        {"f_measure", "macro_f1_mean is the mean of per-class F1; f1_of_macros is the harmonic mean of macro precision and macro recall"},
        {"no_decision", "as_error keeps undecided images in the accuracy denominator; exclude drops them"},
        {"degenerate_overlap", "empty prediction vs nonempty truth scores precision 0; nonempty prediction vs empty truth scores recall 0; both empty score 1"},
    };
}

inline json to_json(const metrics::SummaryMetrics& m) {
    json per_class;
    for (ClassLabel c : kAllClasses) {
        const auto& pc = m.per_class[ordinal(c)];
        per_class[std::string(short_name(c))] = {{"precision", pc.precision}, {"recall", pc.recall}, {"f1", pc.f1}};
    }
    return {{"accuracy", m.accuracy},
            {"macro_precision", m.macro_precision},
            {"macro_recall", m.macro_recall},
            {"macro_f1_mean", m.macro_f1_mean},
            {"f1_of_macros", m.f1_of_macros},
            {"per_class", per_class}};
}

inline json to_json(const metrics::ConfusionMatrix& cm) {
    json rows = json::array();
    for (const auto& r : cm.counts) rows.push_back(json::array({r[0], r[1], r[2]}));
    return {{"rows_actual_cols_predicted", rows},
            {"no_decision", json::array({cm.no_decision[0], cm.no_decision[1], cm.no_decision[2]})},
            {"class_order", json::array({"EB", "LB", "HL"})}};
}

inline json to_json(const ClassifierSummary& c) {
    // Headline metrics sit directly under the classifier object.
    json j = to_json(c.headline());
    j["headline_policy"] = std::string(metrics::to_string(c.headline_policy));
    j["confusion"] = to_json(c.confusion);
    j["as_error"] = to_json(c.as_error);
    j["exclude"] = c.exclude ? to_json(*c.exclude) : json(nullptr);
    return j;
}

inline json to_json(const saliency::SaliencyReport& r) {
    json per_class = json::object();
    for (const auto& [c, m] : r.per_class) {
        per_class[std::string(short_name(c))] = {
            {"precision_pct", m.precision_pct}, {"recall_pct", m.recall_pct}, {"images", m.image_count}};
    }
    json missing = json::array();
    for (ClassLabel c : r.missing_classes) missing.push_back(std::string(short_name(c)));
    return {{"per_class", per_class},
            {"row_precision_pct", r.row_precision_pct},
            {"row_recall_pct", r.row_recall_pct},
            {"missing_classes", missing}};
}

inline json to_json(const EvaluationSection& s) {
    json j;
    j["dataset"] = s.dataset;
    j["images"] = {{"total", s.images_total}, {"succeeded", s.images_succeeded}, {"failed", s.failures.size()}};
    json failures = json::array();
    for (const auto& f : s.failures) failures.push_back({{"image_id", f.image_id}, {"error", f.message}});
    j["failures"] = failures;
    if (s.saliency) j["saliency"] = to_json(*s.saliency);
    if (s.detector_overlap) {
        const auto& d = *s.detector_overlap;
        j["detector_overlap"] = {{"mean_precision", d.mean_precision}, {"mean_recall", d.mean_recall},
                                 {"images", d.images}, {"tp", d.tp}, {"fp", d.fp}, {"fn", d.fn}};
    }
    if (s.classifier) j["classifier"] = to_json(*s.classifier);
    if (s.attention) {
        const auto& a = *s.attention;
        j["attention"] = {{"healthy_images", a.healthy_images},
                          {"spurious_attention", a.spurious_attention},
                          {"disease_images", a.disease_images},
                          {"disease_without_attention", a.disease_without_attention}};
    }
    return j;
}

inline json to_json(const EvaluationReport& r) {
    json j;
    j["kind"] = std::string(to_string(r.kind));
    j["config"] = to_json(r.config);
    j["interpretation"] = interpretation_json();
    j["testing"] = r.testing ? to_json(*r.testing) : json(nullptr);
    j["cross_testing"] = r.cross_testing ? to_json(*r.cross_testing) : json(nullptr);
    if (r.saliency_table) {
        json rows = json::object();
        for (const auto& [name, row] : r.saliency_table->rows) rows[name] = to_json(row);
        j["saliency_table"] = {{"rows", rows},
                               {"overall_precision_pct", r.saliency_table->overall_precision_pct},
                               {"overall_recall_pct", r.saliency_table->overall_recall_pct}};
    }
    j["discrepancy_flags"] = r.discrepancy_flags;
    return j;
}

// ---------------------------------------------------------------------------
// Text emission

namespace detail {

inline bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

inline std::string format_number(const json& v, std::string_view key, bool exact) {
    if (v.is_number_float()) {
        if (exact) return v.dump();
        char buf[64];
        std::snprintf(buf, sizeof buf, ends_with(key, "_pct") ? "%.2f" : "%.4f", v.get<double>());
        return buf;
    }
    return v.dump();
}

inline void emit_json_value(std::string& out, const json& v, std::string_view key, bool exact, int depth) {
    const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    const std::string inner(static_cast<std::size_t>(depth + 1) * 2, ' ');
    if (v.is_object()) {
        if (v.empty()) {
            out += "{}";
            return;
        }
        out += "{\n";
        bool first = true;
        for (auto it = v.begin(); it != v.end(); ++it) {  // std::map order: sorted keys
            if (!first) out += ",\n";
            first = false;
            out += inner + json(it.key()).dump() + ": ";
            emit_json_value(out, it.value(), it.key(), exact || it.key() == "config", depth + 1);
        }
        out += "\n" + pad + "}";
    } else if (v.is_array()) {
        if (v.empty()) {
            out += "[]";
            return;
        }
        const bool flat = std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_primitive(); });
        if (flat && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); })) {
            out += "[";
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (i) out += ", ";
                out += format_number(v[i], key, exact);
            }
            out += "]";
            return;
        }
        out += "[\n";
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out += ",\n";
            out += inner;
            emit_json_value(out, v[i], key, exact, depth + 1);
        }
        out += "\n" + pad + "]";
    } else if (v.is_number()) {
        out += format_number(v, key, exact);
    } else {
        out += v.dump();
    }
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

inline void emit_csv_rows(std::string& out, const json& v, const std::string& scope, const std::string& key,
                          bool exact) {
    const std::string child_scope = key.empty() ? scope : (scope.empty() ? key : scope + "." + key);
    if (v.is_object()) {
        for (auto it = v.begin(); it != v.end(); ++it) {
            emit_csv_rows(out, it.value(), child_scope, it.key(), exact || it.key() == "config");
        }
        return;
    }
    if (v.is_array()) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            // Array elements inherit the array's key for number formatting.
            if (v[i].is_primitive()) {
                std::string value = v[i].is_string() ? v[i].get<std::string>()
                                    : v[i].is_number() ? format_number(v[i], key, exact)
                                                       : v[i].dump();
                out += csv_field(scope) + "," + csv_field(key + "." + std::to_string(i)) + "," + csv_field(value) + "\n";
            } else {
                emit_csv_rows(out, v[i], child_scope, std::to_string(i), exact);
            }
        }
        return;
    }
    const std::string value = v.is_string() ? v.get<std::string>()
                              : v.is_number() ? format_number(v, key, exact)
                                              : v.dump();
    out += csv_field(scope) + "," + csv_field(key) + "," + csv_field(value) + "\n";
}

}  // namespace detail

enum class ReportFormat { Csv, Json };

inline ReportFormat format_from_string(std::string_view s) {
    if (s == "csv") return ReportFormat::Csv;
    if (s == "json") return ReportFormat::Json;
    throw ValidationError("unknown report format '" + std::string(s) + "'");
}

inline std::string render_json(const EvaluationReport& r) {
    std::string out;
    detail::emit_json_value(out, to_json(r), "", false, 0);
    out += "\n";
    return out;
}

/// Rows of scope,key,value; scope is the dotted path of the enclosing objects.
inline std::string render_csv(const EvaluationReport& r) {
    std::string out = "scope,key,value\n";
    detail::emit_csv_rows(out, to_json(r), "", "", false);
    return out;
}

inline std::string render(const EvaluationReport& r, ReportFormat f) {
    return f == ReportFormat::Csv ? render_csv(r) : render_json(r);
}

inline void emit_report(const EvaluationReport& r, ReportFormat f, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write report '" + path.string() + "'");
    const std::string text = render(r, f);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write failed for report '" + path.string() + "'");
}

}  // namespace leafroi::harness
