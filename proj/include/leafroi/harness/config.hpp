#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "leafroi/core.hpp"
#include "leafroi/imaging.hpp"
#include "leafroi/metrics.hpp"
#include "leafroi/saliency.hpp"

namespace leafroi::harness {

using json = nlohmann::json;

/// Every knob an evaluation run depends on. Serialized verbatim into each report.
struct EvaluationConfig {
    imaging::ThresholdConfig ground_truth{};
    saliency::SaliencyBandConfig saliency{};
    double confidence_threshold = detection::kDefaultConfidenceThreshold;
    std::size_t attention_min_area = 16;
    metrics::NoDecisionPolicy no_decision_policy = metrics::NoDecisionPolicy::AsError;
    // Applied to thresholded ground truth only; masks read from disk are used as-is.
    std::optional<imaging::RefinementConfig> refinement;
    double reference_tolerance = 0.001;
    double reference_tolerance_pct = 0.01;

    void validate() const {
        ground_truth.validate();
        saliency.validate();
        detection::check_threshold(confidence_threshold);
        if (attention_min_area < 1) throw ValidationError("config: attention_min_area must be >= 1");
        if (refinement && refinement->element.radius < 1) throw ValidationError("config: refinement radius must be >= 1");
        if (!(reference_tolerance >= 0.0) || !(reference_tolerance_pct >= 0.0)) {
            throw ValidationError("config: reference tolerances must be >= 0");
        }
    }
};

namespace detail {

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) out = it->template get<T>();
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* where) {
    for (const auto& [k, v] : j.items()) {
        bool ok = false;
        for (const char* name : known) ok = ok || k == name;
        if (!ok) throw ValidationError(std::string("config: unknown key '") + k + "' in " + where);
    }
}

}  // namespace detail

inline json to_json(const EvaluationConfig& c) {
    json j;
    j["ground_truth"] = {{"disease_hue_max", c.ground_truth.disease_hue_max},
                         {"healthy_hue_min", c.ground_truth.healthy_hue_min},
                         {"healthy_hue_max", c.ground_truth.healthy_hue_max},
                         {"min_saturation", c.ground_truth.min_saturation},
                         {"min_value", c.ground_truth.min_value}};
    j["saliency"] = {{"hue_max", c.saliency.hue_max},
                     {"min_saturation", c.saliency.min_saturation},
                     {"min_value", c.saliency.min_value},
                     {"scalar_threshold", c.saliency.scalar_threshold}};
    j["confidence_threshold"] = c.confidence_threshold;
    j["attention_min_area"] = c.attention_min_area;
    j["no_decision_policy"] = std::string(metrics::to_string(c.no_decision_policy));
    if (c.refinement) {
        j["refinement"] = {{"radius", c.refinement->element.radius},
                           {"min_area", c.refinement->min_area},
                           {"connectivity", static_cast<int>(c.refinement->connectivity)}};
    } else {
        j["refinement"] = nullptr;
    }
    j["reference_tolerance"] = c.reference_tolerance;
    j["reference_tolerance_pct"] = c.reference_tolerance_pct;
    return j;
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline EvaluationConfig config_from_json(const json& j) {
    EvaluationConfig c;
    try {
        detail::reject_unknown(j,
                               {"ground_truth", "saliency", "confidence_threshold", "attention_min_area",
                                "no_decision_policy", "refinement", "reference_tolerance", "reference_tolerance_pct"},
                               "config");
        if (auto it = j.find("ground_truth"); it != j.end()) {
            detail::reject_unknown(*it, {"disease_hue_max", "healthy_hue_min", "healthy_hue_max", "min_saturation", "min_value"},
                                   "ground_truth");
            detail::read_opt(*it, "disease_hue_max", c.ground_truth.disease_hue_max);
            detail::read_opt(*it, "healthy_hue_min", c.ground_truth.healthy_hue_min);
            detail::read_opt(*it, "healthy_hue_max", c.ground_truth.healthy_hue_max);
            detail::read_opt(*it, "min_saturation", c.ground_truth.min_saturation);
            detail::read_opt(*it, "min_value", c.ground_truth.min_value);
        }
        if (auto it = j.find("saliency"); it != j.end()) {
            detail::reject_unknown(*it, {"hue_max", "min_saturation", "min_value", "scalar_threshold"}, "saliency");
            detail::read_opt(*it, "hue_max", c.saliency.hue_max);
            detail::read_opt(*it, "min_saturation", c.saliency.min_saturation);
            detail::read_opt(*it, "min_value", c.saliency.min_value);
            detail::read_opt(*it, "scalar_threshold", c.saliency.scalar_threshold);
        }
        detail::read_opt(j, "confidence_threshold", c.confidence_threshold);
        detail::read_opt(j, "attention_min_area", c.attention_min_area);
        if (auto it = j.find("no_decision_policy"); it != j.end()) {
            c.no_decision_policy = metrics::policy_from_string(it->get<std::string>());
        }
        if (auto it = j.find("refinement"); it != j.end() && !it->is_null()) {
            detail::reject_unknown(*it, {"radius", "min_area", "connectivity"}, "refinement");
            imaging::RefinementConfig r;
            detail::read_opt(*it, "radius", r.element.radius);
            detail::read_opt(*it, "min_area", r.min_area);
            int conn = static_cast<int>(r.connectivity);
            detail::read_opt(*it, "connectivity", conn);
            r.connectivity = imaging::connectivity_from_int(conn);
            c.refinement = r;
        }
        detail::read_opt(j, "reference_tolerance", c.reference_tolerance);
        detail::read_opt(j, "reference_tolerance_pct", c.reference_tolerance_pct);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

inline EvaluationConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError("config '" + path.string() + "': " + e.what());
    }
    return config_from_json(j);
}

}  // namespace leafroi::harness
