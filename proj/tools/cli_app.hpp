#pragma once

// leafroi command-line front end. run_cli() is separate from main() so the
// test suite can drive it in-process.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "leafroi/leafroi.hpp"

namespace leafroi::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kValidation = 1, kImageFailures = 2 };

struct GlobalOptions {
    std::string config_path;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    std::string format = "json";
};

inline harness::EvaluationConfig load_config(const GlobalOptions& g) {
    return g.config_path.empty() ? harness::EvaluationConfig{} : harness::load_config(g.config_path);
}

inline int write_report(const harness::EvaluationReport& r, const GlobalOptions& g, const std::string& out,
                        std::ostream& stdout_) {
    const auto fmt = harness::format_from_string(g.format);
    if (out.empty()) {
        stdout_ << harness::render(r, fmt);
    } else {
        harness::emit_report(r, fmt, out);
    }
    return r.failure_count() > 0 ? kImageFailures : kOk;
}

inline harness::ReportKind kind_from_string(const std::string& s) {
    if (s == "saliency") return harness::ReportKind::Saliency;
    if (s == "detector") return harness::ReportKind::Detector;
    if (s == "attention") return harness::ReportKind::Attention;
    throw ValidationError("unknown evaluation kind '" + s + "'");
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"leafroi: region-grounded leaf disease evaluation tools"};
    app.require_subcommand(1);
    app.fallthrough();
    GlobalOptions g;
    app.add_option("--config", g.config_path, "JSON evaluation config")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Seed for synthetic data");
    app.add_option("--workers", g.workers, "Concurrent per-image workers")->check(CLI::Range(1u, 1024u));
    app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"csv", "json"}));

    // gt-mask
    std::string image, kind_name, out_path;
    bool refine = false;
    auto* gt = app.add_subcommand("gt-mask", "Threshold a PPM image into a ground-truth mask (PGM 0/255)");
    gt->add_option("--image", image, "Input P6 image")->required()->check(CLI::ExistingFile);
    gt->add_option("--kind", kind_name, "disease | healthy")->required()->check(CLI::IsMember({"disease", "healthy"}));
    gt->add_option("--out", out_path, "Output mask")->required();
    gt->add_flag("--refine", refine, "Apply open/close/small-component refinement");

    // binarize-saliency
    std::string map_path, mode = "auto";
    std::optional<int> level;
    auto* bin = app.add_subcommand("binarize-saliency", "Binarize a saliency (P6) or attention (P5) map");
    bin->add_option("--input", map_path, "Input map")->required()->check(CLI::ExistingFile);
    bin->add_option("--out", out_path, "Output mask")->required();
    bin->add_option("--mode", mode, "auto | color | scalar")->check(CLI::IsMember({"auto", "color", "scalar"}));
    bin->add_option("--threshold", level, "Scalar threshold level (overrides config)")->check(CLI::Range(0, 255));

    // evaluations
    std::string manifest, predictions, cross_manifest, cross_predictions, class_means, reference, cm, cross_cm;
    std::string eval_kind = "detector";
    auto add_eval_io = [&](CLI::App* sub) {
        sub->add_option("--manifest", manifest, "Manifest (JSON lines)")->check(CLI::ExistingFile);
        sub->add_option("--predictions", predictions, "Predictions (JSON lines)")->check(CLI::ExistingFile);
        sub->add_option("--out", out_path, "Report path (stdout if omitted)");
    };
    auto* es = app.add_subcommand("eval-saliency", "Score saliency maps against ground truth");
    add_eval_io(es);
    es->add_option("--class-means", class_means, "CSV of pre-aggregated per-class means")->check(CLI::ExistingFile);
    es->add_option("--reference", reference, "Reported figures to compare against")->check(CLI::ExistingFile);
    auto* ed = app.add_subcommand("eval-detector", "Score ROI detections and the image-level decision");
    add_eval_io(ed);
    auto* ea = app.add_subcommand("eval-attention", "Score attention maps and supplied image predictions");
    add_eval_io(ea);

    auto* ct = app.add_subcommand("cross-test", "Paired testing / cross-testing report");
    add_eval_io(ct);
    ct->add_option("--kind", eval_kind, "saliency | detector | attention")
        ->check(CLI::IsMember({"saliency", "detector", "attention"}));
    ct->add_option("--cross-manifest", cross_manifest, "Cross-testing manifest")->check(CLI::ExistingFile);
    ct->add_option("--cross-predictions", cross_predictions, "Cross-testing predictions")->check(CLI::ExistingFile);
    ct->add_option("--cm", cm, "Testing confusion matrix CSV")->check(CLI::ExistingFile);
    ct->add_option("--cross-cm", cross_cm, "Cross-testing confusion matrix CSV")->check(CLI::ExistingFile);
    ct->add_option("--reference", reference, "Reported figures to compare against")->check(CLI::ExistingFile);

    auto* mc = app.add_subcommand("metrics-from-cm", "Summary metrics from a confusion-matrix CSV");
    mc->add_option("--cm", cm, "Confusion matrix CSV (EB,LB,HL rows)")->required()->check(CLI::ExistingFile);
    mc->add_option("--reference", reference, "Reported figures to compare against")->check(CLI::ExistingFile);
    mc->add_option("--out", out_path, "Report path (stdout if omitted)");

    // gen-synthetic
    harness::SyntheticOptions syn;
    bool soil = false;
    auto* gs = app.add_subcommand("gen-synthetic", "Write a synthetic dataset with simulated detections");
    gs->add_option("--out", out_path, "Output directory")->required();
    gs->add_option("--count", syn.count, "Number of scenes")->check(CLI::Range(std::size_t{1}, std::size_t{1000000}));
    gs->add_option("--width", syn.scene.width, "Scene width")->check(CLI::Range(32, 4096));
    gs->add_option("--height", syn.scene.height, "Scene height")->check(CLI::Range(32, 4096));
    gs->add_option("--min-spots", syn.scene.min_spots)->check(CLI::Range(1, 16));
    gs->add_option("--max-spots", syn.scene.max_spots)->check(CLI::Range(1, 16));
    gs->add_flag("--soil", soil, "Soil-coloured background (breaks exact ground-truth recovery)");
    gs->add_option("--box-jitter", syn.noise.box_jitter)->check(CLI::NonNegativeNumber);
    gs->add_option("--drop-rate", syn.noise.drop_rate)->check(CLI::Range(0.0, 1.0));
    gs->add_option("--mislabel-rate", syn.noise.mislabel_rate)->check(CLI::Range(0.0, 1.0));
    gs->add_option("--confidence-low", syn.noise.confidence_low)->check(CLI::Range(0.0, 1.0));
    gs->add_option("--confidence-high", syn.noise.confidence_high)->check(CLI::Range(0.0, 1.0));
    gs->add_option("--spurious-rate", syn.noise.spurious_rate)->check(CLI::NonNegativeNumber);
    gs->add_option("--name", syn.dataset_name, "Dataset name");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kOk : kValidation;
    }

    try {
        if (gt->parsed()) {
            auto cfg = load_config(g);
            const auto kind = kind_name == "disease" ? imaging::MaskKind::DiseaseSpot : imaging::MaskKind::HealthyLeaf;
            auto mask = imaging::threshold_ground_truth(netpbm::read_ppm(image), kind, cfg.ground_truth);
            if (refine) mask = imaging::refine(mask, cfg.refinement.value_or(imaging::RefinementConfig{}));
            netpbm::write_mask(out_path, mask);
            return kOk;
        }
        if (bin->parsed()) {
            auto cfg = load_config(g);
            if (level) cfg.saliency.scalar_threshold = *level;
            const std::string bytes = netpbm::detail::read_file(map_path);
            const bool colour = mode == "color" || (mode == "auto" && netpbm::peek_kind(bytes) == netpbm::Kind::Ppm);
            const auto mask = colour ? saliency::binarize_color_saliency(netpbm::decode_ppm(bytes), cfg.saliency)
                                     : saliency::binarize_scalar_saliency(netpbm::decode_pgm(bytes),
                                                                          cfg.saliency.scalar_threshold);
            netpbm::write_mask(out_path, mask);
            return kOk;
        }
        auto load_pair = [](const std::string& m, const std::string& p) {
            if (m.empty() || p.empty()) throw ValidationError("--manifest and --predictions are both required");
            auto man = harness::load_manifest(m);
            auto pred = harness::load_predictions(p, man);
            return std::pair{std::move(man), std::move(pred)};
        };
        const harness::ReferenceFigures ref = reference.empty() ? harness::ReferenceFigures{} : harness::load_reference(reference);

        if (es->parsed()) {
            const auto cfg = load_config(g);
            if (!class_means.empty()) {
                std::ifstream in(class_means);
                return write_report(harness::saliency_table_from_class_means(harness::parse_class_means_csv(in), cfg, ref),
                                    g, out_path, out);
            }
            auto [man, pred] = load_pair(manifest, predictions);
            return write_report(harness::evaluate_saliency(man, pred, cfg, g.workers), g, out_path, out);
        }
        if (ed->parsed()) {
            auto [man, pred] = load_pair(manifest, predictions);
            return write_report(harness::evaluate_detector(man, pred, load_config(g), g.workers), g, out_path, out);
        }
        if (ea->parsed()) {
            auto [man, pred] = load_pair(manifest, predictions);
            return write_report(harness::evaluate_attention(man, pred, load_config(g), g.workers), g, out_path, out);
        }
        if (ct->parsed()) {
            const auto cfg = load_config(g);
            if (!cm.empty()) {
                if (cross_cm.empty()) throw ValidationError("--cm needs --cross-cm");
                return write_report(harness::report_from_confusion(metrics::read_confusion_csv(cm),
                                                                   metrics::read_confusion_csv(cross_cm), cfg, ref),
                                    g, out_path, out);
            }
            auto [man_a, pred_a] = load_pair(manifest, predictions);
            auto [man_b, pred_b] = load_pair(cross_manifest, cross_predictions);
            const auto kind = kind_from_string(eval_kind);
            const auto prior = harness::evaluate(kind, man_a, pred_a, cfg, g.workers);
            return write_report(harness::cross_test(man_b, pred_b, prior, g.workers), g, out_path, out);
        }
        if (mc->parsed()) {
            return write_report(
                harness::report_from_confusion(metrics::read_confusion_csv(cm), std::nullopt, load_config(g), ref), g,
                out_path, out);
        }
        if (gs->parsed()) {
            syn.seed = g.seed;
            if (soil) syn.scene.background = datagen::Background::Soil;
            const auto cfg = load_config(g);
            syn.confidence_threshold = cfg.confidence_threshold;
            const auto ds = harness::write_synthetic_dataset(out_path, syn);
            out << "wrote " << ds.manifest.entries.size() << " scenes to " << out_path << "\n";
            return kOk;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kValidation;
    }
    return kValidation;
}

}  // namespace leafroi::cli
