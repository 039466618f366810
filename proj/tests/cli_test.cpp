#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "../tools/cli_app.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult cli(std::vector<std::string> args) {
    args.insert(args.begin(), "leafroi");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = leafroi::cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("leafroi_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    std::string path(const std::string& name) const { return (dir / name).string(); }
    void write(const std::string& name, const std::string& text) const { std::ofstream(dir / name) << text; }
    void gen(const std::string& sub, std::vector<std::string> extra = {}) const {
        std::vector<std::string> args{"--seed", "9", "gen-synthetic", "--out", path(sub), "--count", "12",
                                      "--width", "48", "--height", "48"};
        args.insert(args.end(), extra.begin(), extra.end());
        ASSERT_EQ(cli(args).code, 0);
    }

    fs::path dir;
};

}  // namespace

TEST_F(CliTest, MetricsFromConfusionMatrix) {
    write("cm.csv", "1197,27,9\n16,753,7\n3,0,20\n");
    const auto r = cli({"--format", "csv", "metrics-from-cm", "--cm", path("cm.csv")});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("testing.classifier,accuracy,0.9695"), std::string::npos);
    const auto j = cli({"metrics-from-cm", "--cm", path("cm.csv")});
    EXPECT_NE(j.out.find("\"accuracy\": 0.9695"), std::string::npos);
}

TEST_F(CliTest, ReferenceDisagreementsAreFlagged) {
    write("cm.csv", "865,3,21\n102,551,92\n35,1,102\n");
    write("ref.json", R"({"testing":{"accuracy":0.8566,"macro_precision":0.7767,"macro_recall":0.8272,"f_measure":0.8012}})");
    const auto r = cli({"--format", "csv", "metrics-from-cm", "--cm", path("cm.csv"), "--reference", path("ref.json")});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("macro_recall 0.8172 disagrees with reported 0.8272"), std::string::npos) << r.out;
}

TEST_F(CliTest, ValidationFailuresExitOne) {
    write("bad.csv", "1,2\n");
    EXPECT_EQ(cli({"metrics-from-cm", "--cm", path("bad.csv")}).code, 1);
    EXPECT_EQ(cli({"metrics-from-cm", "--cm", path("missing.csv")}).code, 1);
    EXPECT_EQ(cli({"--format", "xml", "metrics-from-cm", "--cm", path("bad.csv")}).code, 1);
    EXPECT_EQ(cli({"no-such-command"}).code, 1);
    write("cfg.json", R"({"confidence_threshold": 1.5})");
    write("cm.csv", "1,0,0\n0,1,0\n0,0,1\n");
    EXPECT_EQ(cli({"--config", path("cfg.json"), "metrics-from-cm", "--cm", path("cm.csv")}).code, 1);
}

TEST_F(CliTest, GenerateAndEvaluate) {
    gen("syn");
    const auto m = path("syn/manifest.jsonl");
    const auto p = path("syn/detections.jsonl");
    for (const char* sub : {"eval-saliency", "eval-detector", "eval-attention"}) {
        const auto r = cli({"--workers", "3", sub, "--manifest", m, "--predictions", p, "--out", path(std::string(sub) + ".json")});
        EXPECT_EQ(r.code, 0) << sub << ": " << r.err;
        EXPECT_TRUE(fs::exists(path(std::string(sub) + ".json")));
    }
    const auto report = nlohmann::json::parse(slurp(path("eval-saliency.json")));
    EXPECT_EQ(report["kind"], "saliency");
    const auto cross = cli({"cross-test", "--kind", "detector", "--manifest", m, "--predictions", p,
                            "--cross-manifest", m, "--cross-predictions", p});
    EXPECT_EQ(cross.code, 0) << cross.err;
    const auto j = nlohmann::json::parse(cross.out);
    EXPECT_EQ(j["testing"]["classifier"], j["cross_testing"]["classifier"]);
}

TEST_F(CliTest, SeedMakesGenerationReproducible) {
    gen("a");
    gen("b");
    for (const auto& entry : fs::recursive_directory_iterator(dir / "a")) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), dir / "a");
        EXPECT_EQ(slurp(entry.path()), slurp(dir / "b" / rel)) << rel;
    }
}

TEST_F(CliTest, PerImageFailuresExitTwo) {
    gen("syn");
    fs::remove(dir / "syn" / "saliency" / "scene_00003.ppm");
    const auto r = cli({"--format", "csv", "eval-saliency", "--manifest", path("syn/manifest.jsonl"),
                        "--predictions", path("syn/detections.jsonl")});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("scene_00003"), std::string::npos);
}

TEST_F(CliTest, GroundTruthAndBinarize) {
    gen("syn");
    const auto r = cli({"gt-mask", "--image", path("syn/images/scene_00000.ppm"), "--kind", "disease", "--out", path("gt.pgm")});
    EXPECT_EQ(r.code, 0) << r.err;
    const auto mask = leafroi::netpbm::read_mask(path("gt.pgm"));
    EXPECT_EQ(mask.width(), 48);
    EXPECT_EQ(cli({"binarize-saliency", "--input", path("syn/saliency/scene_00000.ppm"), "--out", path("s.pgm")}).code, 0);
    EXPECT_EQ(cli({"binarize-saliency", "--input", path("syn/attention/scene_00000.pgm"), "--out", path("a.pgm"),
                   "--threshold", "128"}).code, 0);
    EXPECT_EQ(leafroi::netpbm::read_mask(path("s.pgm")).width(), 48);
}
