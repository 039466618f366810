#pragma once

// Synthetic dataset batches: in memory, or written to disk in the same
// formats the evaluators ingest.
//
// Layout written by write_synthetic_dataset(dir, ...):
//   dir/images/<id>.ppm      scene image
//   dir/masks/<id>.pgm       ground truth for the scene's class (disease spots, or the healthy leaf)
//   dir/saliency/<id>.ppm    ideal colour-coded map: ground truth in red on a blue field
//   dir/attention/<id>.pgm   ideal scalar map: disease pixels at 255, zero for healthy scenes
//   dir/manifest.jsonl
//   dir/detections.jsonl     simulated detections, map paths and the detector's image decision

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "leafroi/datagen.hpp"
#include "leafroi/detection.hpp"
#include "leafroi/harness/dataset.hpp"
#include "leafroi/netpbm.hpp"
#include "leafroi/rng.hpp"

namespace leafroi::harness {

struct SyntheticOptions {
    std::size_t count = 100;
    std::uint64_t seed = 1;
    datagen::RandomSceneOptions scene{};
    datagen::DetectorNoise noise{};
    double confidence_threshold = detection::kDefaultConfidenceThreshold;
    std::string dataset_name = "synthetic";
};

struct SyntheticScene {
    std::string image_id;
    datagen::SceneTruth truth;
    datagen::SimulationTrace detections;
};

/// Scene i draws its spec from derive_seed(seed, 3i), its pixel jitter from
/// derive_seed(seed, 3i+1) and its detections from derive_seed(seed, 3i+2).
inline SyntheticScene synthetic_scene(const SyntheticOptions& opt, std::size_t i) {
    Xorshift64Star spec_rng(derive_seed(opt.seed, 3 * i));
    const auto spec = datagen::random_scene_spec(opt.scene, spec_rng);
    auto truth = datagen::generate_scene(spec, derive_seed(opt.seed, 3 * i + 1));
    auto dets = datagen::simulate_detector_traced(truth, opt.noise, derive_seed(opt.seed, 3 * i + 2));
    char id[32];
    std::snprintf(id, sizeof id, "scene_%05zu", i);
    return {id, std::move(truth), std::move(dets)};
}

inline std::vector<SyntheticScene> synthetic_batch(const SyntheticOptions& opt) {
    std::vector<SyntheticScene> out;
    out.reserve(opt.count);
    for (std::size_t i = 0; i < opt.count; ++i) out.push_back(synthetic_scene(opt, i));
    return out;
}

inline RgbImage ideal_colour_saliency(const BinaryMask& gt) {
    RgbImage img(gt.width(), gt.height(), Rgb{0, 0, 160});
    for (int y = 0; y < gt.height(); ++y) {
        for (int x = 0; x < gt.width(); ++x) {
            if (gt.get(x, y)) img.at(x, y) = Rgb{230, 20, 0};
        }
    }
    return img;
}

inline GrayImage ideal_attention(const BinaryMask& disease) {
    GrayImage img(disease.width(), disease.height(), 0);
    for (int y = 0; y < disease.height(); ++y) {
        for (int x = 0; x < disease.width(); ++x) img.at(x, y) = disease.get(x, y) ? 255 : 0;
    }
    return img;
}

struct SyntheticDataset {
    DatasetManifest manifest;
    PredictionSet predictions;
    fs::path manifest_path;
    fs::path predictions_path;
};

inline SyntheticDataset write_synthetic_dataset(const fs::path& dir, const SyntheticOptions& opt) {
    for (const char* sub : {"images", "masks", "saliency", "attention"}) fs::create_directories(dir / sub);
    SyntheticDataset ds;
    ds.manifest.dataset_name = opt.dataset_name;
    ds.manifest_path = dir / "manifest.jsonl";
    ds.predictions_path = dir / "detections.jsonl";
    for (std::size_t i = 0; i < opt.count; ++i) {
        const auto scene = synthetic_scene(opt, i);
        const auto& t = scene.truth;
        const BinaryMask& gt = is_disease(t.image_class) ? t.disease_mask : t.healthy_mask;

        ManifestEntry e;
        e.image_id = scene.image_id;
        e.image_path = dir / "images" / (scene.image_id + ".ppm");
        e.actual_class = t.image_class;
        e.gt_mask_path = dir / "masks" / (scene.image_id + ".pgm");
        std::vector<LabeledBox> boxes;
        for (const auto& [b, c] : t.gt_boxes) boxes.push_back({b, c});
        e.gt_boxes = std::move(boxes);
        netpbm::write_ppm(e.image_path, t.image);
        netpbm::write_mask(*e.gt_mask_path, gt);

        ImagePrediction p;
        p.detections = scene.detections.detections;
        p.saliency_path = dir / "saliency" / (scene.image_id + ".ppm");
        p.attention_path = dir / "attention" / (scene.image_id + ".pgm");
        p.predicted_class = detection::classify_image(scene.detections.detections, opt.confidence_threshold);
        netpbm::write_ppm(*p.saliency_path, ideal_colour_saliency(gt));
        netpbm::write_pgm(*p.attention_path, ideal_attention(t.disease_mask));

        ds.predictions.by_id.emplace(e.image_id, std::move(p));
        ds.manifest.entries.push_back(std::move(e));
    }
    write_manifest(ds.manifest_path, ds.manifest);
    write_predictions(ds.predictions_path, ds.predictions);
    return ds;
}

}  // namespace leafroi::harness
