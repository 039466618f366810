#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "leafroi/harness/evaluate.hpp"
#include "leafroi/harness/synthetic.hpp"

using namespace leafroi;
using namespace leafroi::harness;

namespace {

class TempDir {
public:
    explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / ("leafroi_" + name)) {
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream(p) << s;
}

SyntheticDataset make_dataset(const fs::path& dir, std::size_t count, std::uint64_t seed,
                              datagen::DetectorNoise noise = {}) {
    SyntheticOptions opt;
    opt.count = count;
    opt.seed = seed;
    opt.scene.width = opt.scene.height = 48;
    opt.noise = noise;
    return write_synthetic_dataset(dir, opt);
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Manifest, MinimalEntry) {
    TempDir dir("manifest_min");
    netpbm::write_ppm(dir.path() / "a.ppm", RgbImage(4, 4));
    write_text(dir.path() / "m.jsonl", R"({"image_id":"a","image_path":"a.ppm","class":"HL"})" "\n");
    const auto m = load_manifest(dir.path() / "m.jsonl");
    ASSERT_EQ(m.entries.size(), 1u);
    EXPECT_EQ(m.entries[0].actual_class, ClassLabel::HealthyLeaves);
    EXPECT_EQ(m.dataset_name, "m");
}

TEST(Manifest, Rejections) {
    TempDir dir("manifest_bad");
    netpbm::write_ppm(dir.path() / "a.ppm", RgbImage(4, 4));
    write_text(dir.path() / "dup.jsonl",
               R"({"image_id":"leaf_7","image_path":"a.ppm","class":"EB"})" "\n"
               R"({"image_id":"leaf_7","image_path":"a.ppm","class":"LB"})" "\n");
    try {
        load_manifest(dir.path() / "dup.jsonl");
        FAIL() << "duplicate id accepted";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("leaf_7"), std::string::npos);
    }
    write_text(dir.path() / "missing.jsonl", R"({"image_id":"b","image_path":"nope.ppm","class":"EB"})" "\n");
    EXPECT_THROW(load_manifest(dir.path() / "missing.jsonl"), ValidationError);
    write_text(dir.path() / "badclass.jsonl", R"({"image_id":"b","image_path":"a.ppm","class":"XX"})" "\n");
    EXPECT_THROW(load_manifest(dir.path() / "badclass.jsonl"), ValidationError);
    write_text(dir.path() / "syntax.jsonl", "{not json\n");
    EXPECT_THROW(load_manifest(dir.path() / "syntax.jsonl"), FormatError);
    write_text(dir.path() / "empty.jsonl", R"({"dataset_name":"x"})" "\n");
    EXPECT_THROW(load_manifest(dir.path() / "empty.jsonl"), ValidationError);
}

TEST(Manifest, SyntheticRoundTrip) {
    TempDir dir("manifest_syn");
    const auto ds = make_dataset(dir.path(), 100, 5);
    const auto m = load_manifest(ds.manifest_path);
    ASSERT_EQ(m.entries.size(), 100u);
    EXPECT_EQ(m.dataset_name, "synthetic");
    SyntheticOptions opt;
    opt.count = 100;
    opt.seed = 5;
    opt.scene.width = opt.scene.height = 48;
    for (std::size_t i = 0; i < 100; ++i) {
        const auto s = synthetic_scene(opt, i);
        const auto* e = m.find(s.image_id);
        ASSERT_NE(e, nullptr);
        EXPECT_EQ(e->actual_class, s.truth.image_class);
        ASSERT_TRUE(e->gt_boxes.has_value());
        EXPECT_EQ(e->gt_boxes->size(), s.truth.gt_boxes.size());
    }
    const auto p = load_predictions(ds.predictions_path, m);
    EXPECT_EQ(p.by_id.size(), 100u);
}

TEST(Predictions, UnknownIdRejected) {
    TempDir dir("pred_bad");
    const auto ds = make_dataset(dir.path(), 2, 1);
    write_text(dir.path() / "p.jsonl", R"({"image_id":"ghost","detections":[]})" "\n");
    EXPECT_THROW(load_predictions(dir.path() / "p.jsonl", ds.manifest), ValidationError);
    write_text(dir.path() / "p2.jsonl",
               R"({"image_id":"scene_00000","detections":[{"x_min":0,"y_min":0,"x_max":2,"y_max":2,"class":"EB","confidence":1.2}]})" "\n");
    EXPECT_THROW(load_predictions(dir.path() / "p2.jsonl", ds.manifest), ValidationError);
}

TEST(EvaluateSaliency, PerfectAndEmptyMaps) {
    TempDir dir("sal");
    const auto ds = make_dataset(dir.path(), 30, 8);
    const auto r = evaluate_saliency(ds.manifest, ds.predictions, {});
    ASSERT_TRUE(r.testing && r.testing->saliency);
    EXPECT_TRUE(r.testing->failures.empty());
    for (const auto& [c, m] : r.testing->saliency->per_class) {
        EXPECT_EQ(m.precision_pct, 100.0);
        EXPECT_EQ(m.recall_pct, 100.0);
    }

    // Blue maps carry no red-orange pixels.
    auto preds = ds.predictions;
    for (auto& [id, p] : preds.by_id) {
        const auto path = dir.path() / "saliency" / (id + "_blue.ppm");
        netpbm::write_ppm(path, RgbImage(48, 48, Rgb{0, 0, 255}));
        p.saliency_path = path;
    }
    const auto empty = evaluate_saliency(ds.manifest, preds, {});
    for (const auto& [c, m] : empty.testing->saliency->per_class) {
        EXPECT_EQ(m.precision_pct, 0.0);
        EXPECT_EQ(m.recall_pct, 0.0);
    }
}

TEST(EvaluateSaliency, PerImageFailuresDoNotAbort) {
    TempDir dir("sal_fail");
    const auto ds = make_dataset(dir.path(), 10, 4);
    auto preds = ds.predictions;
    auto it = preds.by_id.begin();
    it->second.saliency_path.reset();
    ++it;
    const auto small = dir.path() / "small.ppm";
    netpbm::write_ppm(small, RgbImage(10, 10));
    it->second.saliency_path = small;
    const auto r = evaluate_saliency(ds.manifest, preds, {});
    EXPECT_EQ(r.testing->failures.size(), 2u);
    EXPECT_EQ(r.testing->images_succeeded + r.testing->failures.size(), 10u);
    EXPECT_EQ(r.failure_count(), 2u);
}

TEST(EvaluateDetector, IdentityNoiseIsPerfect) {
    TempDir dir("det");
    const auto ds = make_dataset(dir.path(), 40, 3);
    const auto r = evaluate_detector(ds.manifest, ds.predictions, {}, 4);
    ASSERT_TRUE(r.testing->detector_overlap && r.testing->classifier);
    EXPECT_EQ(r.testing->detector_overlap->mean_precision, 1.0);
    EXPECT_EQ(r.testing->detector_overlap->mean_recall, 1.0);
    EXPECT_EQ(r.testing->classifier->as_error.accuracy, 1.0);
}

TEST(EvaluateDetector, ThresholdOneLeavesEverythingUndecided) {
    TempDir dir("det_one");
    const auto ds = make_dataset(dir.path(), 12, 3);
    EvaluationConfig cfg;
    cfg.confidence_threshold = 1.0;
    const auto r = evaluate_detector(ds.manifest, ds.predictions, cfg);
    const auto& c = *r.testing->classifier;
    EXPECT_EQ(c.confusion.decided_total(), 0u);
    EXPECT_EQ(c.confusion.undecided_total(), 12u);
    EXPECT_EQ(c.as_error.accuracy, 0.0);
    EXPECT_FALSE(c.exclude.has_value());
    EXPECT_FALSE(r.discrepancy_flags.empty());
}

TEST(EvaluateDetector, BoxesDerivedFromMaskWhenManifestHasNone) {
    TempDir dir("det_derive");
    auto ds = make_dataset(dir.path(), 15, 12);
    for (auto& e : ds.manifest.entries) e.gt_boxes.reset();
    const auto r = evaluate_detector(ds.manifest, ds.predictions, {});
    EXPECT_EQ(r.testing->detector_overlap->mean_precision, 1.0);
    EXPECT_EQ(r.testing->detector_overlap->mean_recall, 1.0);
}

TEST(EvaluateAttention, HealthyAndDiseaseScenes) {
    TempDir dir("att");
    const auto ds = make_dataset(dir.path(), 30, 21);
    const auto r = evaluate_attention(ds.manifest, ds.predictions, {});
    ASSERT_TRUE(r.testing->attention);
    const auto& a = *r.testing->attention;
    EXPECT_GT(a.healthy_images, 0u);
    EXPECT_EQ(a.spurious_attention, 0u);
    EXPECT_EQ(a.disease_without_attention, 0u);
    for (const auto& [c, m] : r.testing->saliency->per_class) {
        EXPECT_TRUE(is_disease(c));
        EXPECT_EQ(m.precision_pct, 100.0);
        EXPECT_EQ(m.recall_pct, 100.0);
    }
    EXPECT_EQ(r.testing->classifier->as_error.accuracy, 1.0);

    // An attention region on a healthy image is counted as spurious.
    auto preds = ds.predictions;
    for (const auto& e : ds.manifest.entries) {
        if (e.actual_class != ClassLabel::HealthyLeaves) continue;
        const auto path = dir.path() / "attention" / (e.image_id + "_hot.pgm");
        GrayImage g(48, 48, 0);
        for (int y = 10; y < 20; ++y)
            for (int x = 10; x < 20; ++x) g.at(x, y) = 200;
        netpbm::write_pgm(path, g);
        preds.by_id[e.image_id].attention_path = path;
    }
    const auto r2 = evaluate_attention(ds.manifest, preds, {});
    EXPECT_EQ(r2.testing->attention->spurious_attention, r2.testing->attention->healthy_images);
}

TEST(CrossTest, SelfComparisonMatches) {
    TempDir dir("cross");
    const auto ds = make_dataset(dir.path(), 20, 6, datagen::DetectorNoise{2, 0.1, 0.2, 0.85, 1.0, 0.3});
    const auto prior = evaluate_detector(ds.manifest, ds.predictions, {});
    const auto r = cross_test(ds.manifest, ds.predictions, prior);
    ASSERT_TRUE(r.cross_testing);
    EXPECT_EQ(to_json(*r.testing), to_json(*r.cross_testing));
}

TEST(ReportFromConfusion, FlagsReportedRecallDiscrepancy) {
    metrics::ConfusionMatrix cm;
    cm.counts = {{{865, 3, 21}, {102, 551, 92}, {35, 1, 102}}};
    ReferenceFigures ref;
    ref.testing = metrics::ReportedFigures{0.8566, 0.7767, 0.8272, 0.8012};
    const auto r = report_from_confusion(cm, std::nullopt, {}, ref);
    EXPECT_NEAR(r.testing->classifier->as_error.accuracy, 0.8567, 0.001);
    bool found = false;
    for (const auto& f : r.discrepancy_flags) found |= f.find("macro_recall 0.8172") != std::string::npos;
    EXPECT_TRUE(found);
}

TEST(SaliencyTable, ClassMeansRows) {
    std::istringstream in(
        "dataset,eb_precision,lb_precision,hl_precision,eb_recall,lb_recall,hl_recall\n"
        "PV,66.17,49.92,86.80,30.50,53.03,44.47\n");
    const auto rows = parse_class_means_csv(in);
    ReferenceFigures ref;
    ref.saliency_rows["PV"] = {67.63, 42.67};
    const auto r = saliency_table_from_class_means(rows, {}, ref);
    ASSERT_TRUE(r.saliency_table);
    EXPECT_NEAR(r.saliency_table->rows[0].second.row_precision_pct, 67.63, 0.005);
    EXPECT_NEAR(r.saliency_table->rows[0].second.row_recall_pct, 42.67, 0.005);
    EXPECT_TRUE(r.discrepancy_flags.empty());
    std::istringstream bad("x,1,2,3\n");
    EXPECT_THROW(parse_class_means_csv(bad), FormatError);
}

TEST(EmitReport, DeterministicWithFlagsAndHeadline) {
    TempDir dir("emit");
    metrics::ConfusionMatrix cm;
    cm.counts = {{{1197, 27, 9}, {16, 753, 7}, {3, 0, 20}}};
    auto r = report_from_confusion(cm, std::nullopt, {});
    r.discrepancy_flags.push_back("example flag, with comma");
    for (auto f : {ReportFormat::Csv, ReportFormat::Json}) {
        emit_report(r, f, dir.path() / "a");
        emit_report(r, f, dir.path() / "b");
        EXPECT_EQ(read_text(dir.path() / "a"), read_text(dir.path() / "b"));
    }
    const auto csv = render_csv(r);
    EXPECT_NE(csv.find("testing.classifier,accuracy,0.9695\n"), std::string::npos);
    EXPECT_NE(csv.find("\"example flag, with comma\""), std::string::npos);
    const auto js = render_json(r);
    EXPECT_NE(js.find("\"accuracy\": 0.9695"), std::string::npos);
    EXPECT_NE(js.find("example flag, with comma"), std::string::npos);
    EXPECT_EQ(nlohmann::json::parse(js)["testing"]["classifier"]["confusion"]["rows_actual_cols_predicted"][1][1], 753);
}

TEST(EmitReport, WorkerCountIndependent) {
    TempDir dir("workers");
    const auto ds = make_dataset(dir.path(), 40, 10, datagen::DetectorNoise{2, 0.1, 0.2, 0.7, 1.0, 0.5});
    for (auto kind : {ReportKind::Saliency, ReportKind::Detector, ReportKind::Attention}) {
        const auto one = render_json(evaluate(kind, ds.manifest, ds.predictions, {}, 1));
        const auto eight = render_json(evaluate(kind, ds.manifest, ds.predictions, {}, 8));
        EXPECT_EQ(one, eight);
    }
}

TEST(Config, EchoReplaysTheRun) {
    TempDir dir("config");
    const auto ds = make_dataset(dir.path(), 15, 2, datagen::DetectorNoise{1, 0.1, 0.1, 0.6, 1.0, 0.2});
    EvaluationConfig cfg;
    cfg.confidence_threshold = 0.73;
    cfg.saliency.hue_max = 0.1123456789;
    cfg.refinement = imaging::RefinementConfig{};
    const auto first = evaluate_detector(ds.manifest, ds.predictions, cfg);
    const auto echoed = nlohmann::json::parse(render_json(first))["config"];
    const auto replay_cfg = config_from_json(echoed);
    EXPECT_EQ(replay_cfg.saliency.hue_max, cfg.saliency.hue_max);
    EXPECT_EQ(render_json(evaluate_detector(ds.manifest, ds.predictions, replay_cfg)), render_json(first));

    EXPECT_THROW(config_from_json(nlohmann::json{{"confidence_threshold", 2.0}}), ValidationError);
    EXPECT_THROW(config_from_json(nlohmann::json{{"bogus", 1}}), ValidationError);
    EXPECT_THROW(config_from_json(nlohmann::json{{"no_decision_policy", "maybe"}}), ValidationError);
}
