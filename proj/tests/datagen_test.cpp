#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "leafroi/datagen.hpp"
#include "leafroi/harness/synthetic.hpp"
#include "leafroi/imaging.hpp"

using namespace leafroi;
using namespace leafroi::datagen;

namespace {

SceneSpec healthy_spec() {
    SceneSpec s;
    s.width = 64;
    s.height = 48;
    s.leaf.shape = {32, 24, 24, 18};
    s.leaf.hue = 0.33;
    return s;
}

SceneSpec one_spot_spec() {
    auto s = healthy_spec();
    SpotSpec spot;
    spot.shape = {30, 22, 5, 4};
    spot.kind = ClassLabel::EarlyBlight;
    spot.hue = 0.05;
    s.spots.push_back(spot);
    return s;
}

}  // namespace

TEST(Rng, FrozenStream) {
    // Values from an independent reimplementation of splitmix64 seeding + xorshift64*.
    Xorshift64Star rng(1);
    EXPECT_EQ(rng.next(), 0x4b46a55df3611b9bULL);
    EXPECT_EQ(rng.next(), 0xd7e1f1410e763ef4ULL);
    EXPECT_EQ(rng.next(), 0x5f14ec66975f9b06ULL);
    EXPECT_EQ(splitmix64(0), 0xe220a8397b1dcdafULL);
}

TEST(Rng, UniformIntRangeAndBernoulli) {
    Xorshift64Star rng(5);
    std::set<std::int64_t> seen;
    for (int i = 0; i < 2000; ++i) {
        const auto v = rng.uniform_int(-2, 2);
        ASSERT_GE(v, -2);
        ASSERT_LE(v, 2);
        seen.insert(v);
        const double u = rng.uniform01();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
    EXPECT_EQ(seen.size(), 5u);
    EXPECT_FALSE(rng.bernoulli(0.0));
    EXPECT_TRUE(rng.bernoulli(1.0));
}

TEST(GenerateScene, HealthyScene) {
    const auto t = generate_scene(healthy_spec(), 3);
    EXPECT_TRUE(t.disease_mask.empty());
    EXPECT_EQ(t.image_class, ClassLabel::HealthyLeaves);
    ASSERT_EQ(t.gt_boxes.size(), 1u);
    EXPECT_EQ(t.gt_boxes[0].second, ClassLabel::HealthyLeaves);
    EXPECT_FALSE(t.healthy_mask.empty());
}

TEST(GenerateScene, SpotAreaMatchesEllipseEnumeration) {
    const auto spec = one_spot_spec();
    const auto& e = spec.spots[0].shape;
    std::size_t area = 0;
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) {
            const double dx = (x + 0.5 - e.cx) / e.rx, dy = (y + 0.5 - e.cy) / e.ry;
            area += dx * dx + dy * dy <= 1.0;
        }
    const auto t = generate_scene(spec, 9);
    EXPECT_EQ(t.disease_mask.count(), area);
    EXPECT_EQ(t.image_class, ClassLabel::EarlyBlight);
    EXPECT_EQ(imaging::threshold_ground_truth(t.image, imaging::MaskKind::DiseaseSpot), t.disease_mask);
    EXPECT_EQ(imaging::threshold_ground_truth(t.image, imaging::MaskKind::HealthyLeaf), t.healthy_mask);
}

TEST(GenerateScene, Deterministic) {
    const auto a = generate_scene(one_spot_spec(), 42);
    const auto b = generate_scene(one_spot_spec(), 42);
    const auto c = generate_scene(one_spot_spec(), 43);
    EXPECT_EQ(a.image, b.image);
    EXPECT_NE(a.image, c.image);
    EXPECT_EQ(a.disease_mask, c.disease_mask);
}

TEST(GenerateScene, SpecValidation) {
    auto outside = one_spot_spec();
    outside.spots[0].shape = {5, 5, 4, 4};
    EXPECT_THROW(generate_scene(outside, 1), ValidationError);

    auto tiny = one_spot_spec();
    tiny.spots[0].shape.rx = tiny.spots[0].shape.ry = 1.5;
    EXPECT_THROW(generate_scene(tiny, 1), ValidationError);

    auto touching = one_spot_spec();
    auto second = touching.spots[0];
    second.shape.cx += 10.0;  // extents 25..35 and 35..45 share a column edge
    touching.spots.push_back(second);
    EXPECT_THROW(generate_scene(touching, 1), ValidationError);

    auto mixed = one_spot_spec();
    auto other = mixed.spots[0];
    other.shape.cy += 12;
    other.kind = ClassLabel::LateBlight;
    mixed.spots.push_back(other);
    EXPECT_THROW(generate_scene(mixed, 1), ValidationError);

    auto bad_hue = one_spot_spec();
    bad_hue.spots[0].hue = 0.2;
    EXPECT_THROW(generate_scene(bad_hue, 1), ValidationError);

    auto bright_bg = healthy_spec();
    bright_bg.background_value = 0.3;
    EXPECT_THROW(generate_scene(bright_bg, 1), ValidationError);
}

TEST(GenerateScene, RandomScenesAreBandExactWithTightBoxes) {
    harness::SyntheticOptions opt;
    opt.seed = 77;
    opt.count = 60;
    for (const auto& s : harness::synthetic_batch(opt)) {
        const auto& t = s.truth;
        ASSERT_EQ(imaging::threshold_ground_truth(t.image, imaging::MaskKind::DiseaseSpot), t.disease_mask);
        ASSERT_EQ(imaging::threshold_ground_truth(t.image, imaging::MaskKind::HealthyLeaf), t.healthy_mask);
        if (t.image_class == ClassLabel::HealthyLeaves) {
            ASSERT_TRUE(t.disease_mask.empty());
            continue;
        }
        auto derived = imaging::mask_to_boxes(imaging::connected_components(t.disease_mask));
        auto painted = t.boxes();
        std::sort(derived.begin(), derived.end());
        std::sort(painted.begin(), painted.end());
        ASSERT_EQ(derived, painted);
        for (const auto& [b, c] : t.gt_boxes) ASSERT_EQ(c, t.image_class);
        const auto regions = imaging::connected_components(t.disease_mask);
        for (auto a : regions.component_areas) ASSERT_GE(a, 16u);
    }
}

TEST(GenerateScene, SoilBackgroundBreaksExactness) {
    auto spec = one_spot_spec();
    spec.background = Background::Soil;
    const auto t = generate_scene(spec, 1);
    const auto got = imaging::threshold_ground_truth(t.image, imaging::MaskKind::DiseaseSpot);
    EXPECT_TRUE(is_subset(t.disease_mask, got));
    EXPECT_GT(got.count(), t.disease_mask.count());
}

TEST(SimulateDetector, IdentityNoise) {
    const auto t = generate_scene(one_spot_spec(), 1);
    const auto d = simulate_detector(t, DetectorNoise::identity(), 5);
    ASSERT_EQ(d.size(), t.gt_boxes.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_EQ(d[i].box, t.gt_boxes[i].first);
        EXPECT_EQ(d[i].label, t.gt_boxes[i].second);
        EXPECT_EQ(d[i].confidence, 1.0);
    }
}

TEST(SimulateDetector, DropAllAndDeterminism) {
    const auto t = generate_scene(one_spot_spec(), 1);
    DetectorNoise drop;
    drop.drop_rate = 1.0;
    EXPECT_TRUE(simulate_detector(t, drop, 5).empty());

    DetectorNoise noisy{3, 0.2, 0.3, 0.5, 0.99, 2.0};
    const auto a = simulate_detector(t, noisy, 11);
    EXPECT_EQ(a, simulate_detector(t, noisy, 11));
    for (const auto& d : a) {
        EXPECT_TRUE(d.box.within(t.image.width(), t.image.height()));
        EXPECT_GE(d.confidence, 0.5);
        EXPECT_LE(d.confidence, 0.99);
    }
    EXPECT_THROW(simulate_detector(t, DetectorNoise{0, 1.5, 0, 1, 1, 0}, 1), ValidationError);
    EXPECT_THROW(simulate_detector(t, DetectorNoise{0, 0, 0, 0.9, 0.8, 0}, 1), ValidationError);
}

TEST(SimulateDetector, MislabelRateWithinThreeSigma) {
    harness::SyntheticOptions opt;
    opt.seed = 2026;
    opt.count = 1000;
    opt.scene.width = opt.scene.height = 48;
    opt.scene.max_spots = 1;
    opt.noise.mislabel_rate = 0.1;
    std::size_t boxes = 0, mislabeled = 0;
    for (std::size_t i = 0; i < opt.count; ++i) {
        const auto s = harness::synthetic_scene(opt, i);
        boxes += s.truth.gt_boxes.size();
        mislabeled += s.detections.mislabeled;
        std::size_t wrong = 0;
        for (std::size_t k = 0; k < s.detections.detections.size(); ++k)
            wrong += s.detections.detections[k].label != s.truth.gt_boxes[k].second;
        ASSERT_EQ(wrong, s.detections.mislabeled);
    }
    const double n = static_cast<double>(boxes);
    const double sigma = std::sqrt(n * 0.1 * 0.9);
    EXPECT_NEAR(static_cast<double>(mislabeled), 0.1 * n, 3 * sigma);
}
