#pragma once

// Manifest and prediction files: JSON lines, one record per image.
//
// Manifest record:
//   {"image_id": "s0001", "image_path": "images/s0001.ppm", "class": "EB",
//    "gt_mask_path": "masks/s0001.pgm",                       (optional)
//    "gt_boxes": [{"x_min":0,"y_min":0,"x_max":4,"y_max":4,"class":"EB"}]}   (optional)
// An optional leading {"dataset_name": "..."} record names the dataset.
//
// Prediction record:
//   {"image_id": "s0001",
//    "detections": [{"x_min":..,"y_min":..,"x_max":..,"y_max":..,"class":"EB","confidence":0.93}],
//    "saliency_path": "...", "attention_path": "...",
//    "predicted_class": "EB" | null}
// Every field other than image_id is optional. Relative paths resolve
// against the directory of the file that names them.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "leafroi/core.hpp"
#include "leafroi/detection.hpp"

namespace leafroi::harness {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct LabeledBox {
    BoundingBox box;
    ClassLabel label = ClassLabel::HealthyLeaves;
    friend bool operator==(const LabeledBox&, const LabeledBox&) = default;
};

struct ManifestEntry {
    std::string image_id;
    fs::path image_path;
    ClassLabel actual_class = ClassLabel::HealthyLeaves;
    std::optional<fs::path> gt_mask_path;
    std::optional<std::vector<LabeledBox>> gt_boxes;
};

struct DatasetManifest {
    std::string dataset_name;
    std::vector<ManifestEntry> entries;

    const ManifestEntry* find(const std::string& id) const {
        auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& e) { return e.image_id == id; });
        return it == entries.end() ? nullptr : &*it;
    }
};

struct ImagePrediction {
    std::optional<std::vector<detection::Detection>> detections;
    std::optional<fs::path> saliency_path;
    std::optional<fs::path> attention_path;
    // Outer optional: key present. Inner: null means the classifier made no decision.
    std::optional<std::optional<ClassLabel>> predicted_class;
};

struct PredictionSet {
    std::map<std::string, ImagePrediction> by_id;

    const ImagePrediction* find(const std::string& id) const {
        auto it = by_id.find(id);
        return it == by_id.end() ? nullptr : &it->second;
    }
};

// ---------------------------------------------------------------------------
// JSON <-> values

inline json box_json(const BoundingBox& b) {
    return {{"x_min", b.x_min}, {"y_min", b.y_min}, {"x_max", b.x_max}, {"y_max", b.y_max}};
}

inline BoundingBox box_from_json(const json& j) {
    BoundingBox b{j.at("x_min").get<int>(), j.at("y_min").get<int>(), j.at("x_max").get<int>(),
                  j.at("y_max").get<int>()};
    require_valid(b);
    return b;
}

inline json to_json(const detection::Detection& d) {
    json j = box_json(d.box);
    j["class"] = std::string(short_name(d.label));
    j["confidence"] = d.confidence;
    return j;
}

inline detection::Detection detection_from_json(const json& j) {
    detection::Detection d{box_from_json(j), class_from_string(j.at("class").get<std::string>()),
                           j.at("confidence").get<double>()};
    detection::validate(d);
    return d;
}

inline json to_json(const LabeledBox& b) {
    json j = box_json(b.box);
    j["class"] = std::string(short_name(b.label));
    return j;
}

namespace detail {

inline std::vector<std::pair<int, json>> read_json_lines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::vector<std::pair<int, json>> out;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.emplace_back(n, json::parse(line));
        } catch (const json::exception& e) {
            throw FormatError(path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
        if (!out.back().second.is_object()) {
            throw FormatError(path.string() + ":" + std::to_string(n) + ": record is not an object");
        }
    }
    return out;
}

inline fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path q(p);
    return q.is_absolute() ? q : base / q;
}

inline std::string relative_to(const fs::path& p, const fs::path& base) {
    return p.lexically_relative(base).generic_string();
}

}  // namespace detail

/// Parses and validates: ids unique, referenced files exist, at least one entry.
inline DatasetManifest load_manifest(const fs::path& path) {
    const auto records = detail::read_json_lines(path);
    const fs::path base = path.parent_path();
    DatasetManifest m;
    m.dataset_name = path.stem().string();
    std::set<std::string> seen;
    for (const auto& [line, j] : records) {
        const std::string where = path.string() + ":" + std::to_string(line);
        try {
            if (!j.contains("image_id")) {
                if (j.contains("dataset_name")) {
                    m.dataset_name = j.at("dataset_name").get<std::string>();
                    continue;
                }
                throw ValidationError("record lacks image_id");
            }
            ManifestEntry e;
            e.image_id = j.at("image_id").get<std::string>();
            if (!seen.insert(e.image_id).second) {
                throw ValidationError("duplicate image_id '" + e.image_id + "'");
            }
            e.image_path = detail::resolve(base, j.at("image_path").get<std::string>());
            e.actual_class = class_from_string(j.at("class").get<std::string>());
            if (auto it = j.find("gt_mask_path"); it != j.end() && !it->is_null()) {
                e.gt_mask_path = detail::resolve(base, it->get<std::string>());
            }
            if (auto it = j.find("gt_boxes"); it != j.end() && !it->is_null()) {
                std::vector<LabeledBox> boxes;
                for (const auto& b : *it) {
                    boxes.push_back({box_from_json(b), class_from_string(b.at("class").get<std::string>())});
                }
                e.gt_boxes = std::move(boxes);
            }
            if (!fs::exists(e.image_path)) {
                throw ValidationError("image '" + e.image_id + "': missing file " + e.image_path.string());
            }
            if (e.gt_mask_path && !fs::exists(*e.gt_mask_path)) {
                throw ValidationError("image '" + e.image_id + "': missing file " + e.gt_mask_path->string());
            }
            m.entries.push_back(std::move(e));
        } catch (const json::exception& ex) {
            throw FormatError(where + ": " + ex.what());
        } catch (const ValidationError& ex) {
            throw ValidationError(where + ": " + ex.what());
        }
    }
    if (m.entries.empty()) throw ValidationError(path.string() + ": manifest has no entries");
    return m;
}

/// Every image_id must appear in `manifest`.
inline PredictionSet load_predictions(const fs::path& path, const DatasetManifest& manifest) {
    const auto records = detail::read_json_lines(path);
    const fs::path base = path.parent_path();
    PredictionSet set;
    for (const auto& [line, j] : records) {
        const std::string where = path.string() + ":" + std::to_string(line);
        try {
            const auto id = j.at("image_id").get<std::string>();
            if (!manifest.find(id)) throw ValidationError("image_id '" + id + "' is not in the manifest");
            if (set.by_id.count(id)) throw ValidationError("duplicate image_id '" + id + "'");
            ImagePrediction p;
            if (auto it = j.find("detections"); it != j.end() && !it->is_null()) {
                std::vector<detection::Detection> dets;
                for (const auto& d : *it) dets.push_back(detection_from_json(d));
                p.detections = std::move(dets);
            }
            if (auto it = j.find("saliency_path"); it != j.end() && !it->is_null()) {
                p.saliency_path = detail::resolve(base, it->get<std::string>());
            }
            if (auto it = j.find("attention_path"); it != j.end() && !it->is_null()) {
                p.attention_path = detail::resolve(base, it->get<std::string>());
            }
            if (auto it = j.find("predicted_class"); it != j.end()) {
                p.predicted_class = it->is_null() ? std::optional<ClassLabel>{}
                                                  : std::optional<ClassLabel>{class_from_string(it->get<std::string>())};
            }
            set.by_id.emplace(id, std::move(p));
        } catch (const json::exception& ex) {
            throw FormatError(where + ": " + ex.what());
        } catch (const ValidationError& ex) {
            throw ValidationError(where + ": " + ex.what());
        }
    }
    return set;
}

// ---------------------------------------------------------------------------
// Writers (paths are stored relative to the file's directory)

inline std::string manifest_line(const ManifestEntry& e, const fs::path& base) {
    json j;
    j["image_id"] = e.image_id;
    j["image_path"] = detail::relative_to(e.image_path, base);
    j["class"] = std::string(short_name(e.actual_class));
    if (e.gt_mask_path) j["gt_mask_path"] = detail::relative_to(*e.gt_mask_path, base);
    if (e.gt_boxes) {
        json arr = json::array();
        for (const auto& b : *e.gt_boxes) arr.push_back(to_json(b));
        j["gt_boxes"] = std::move(arr);
    }
    return j.dump();
}

inline void write_manifest(const fs::path& path, const DatasetManifest& m) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << json{{"dataset_name", m.dataset_name}}.dump() << '\n';
    for (const auto& e : m.entries) out << manifest_line(e, path.parent_path()) << '\n';
}

inline void write_predictions(const fs::path& path, const PredictionSet& p) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    const fs::path base = path.parent_path();
    for (const auto& [id, pred] : p.by_id) {
        json j;
        j["image_id"] = id;
        if (pred.detections) {
            json arr = json::array();
            for (const auto& d : *pred.detections) arr.push_back(to_json(d));
            j["detections"] = std::move(arr);
        }
        if (pred.saliency_path) j["saliency_path"] = detail::relative_to(*pred.saliency_path, base);
        if (pred.attention_path) j["attention_path"] = detail::relative_to(*pred.attention_path, base);
        if (pred.predicted_class) {
            j["predicted_class"] = *pred.predicted_class ? json(std::string(short_name(**pred.predicted_class))) : json(nullptr);
        }
        out << j.dump() << '\n';
    }
}

}  // namespace leafroi::harness
