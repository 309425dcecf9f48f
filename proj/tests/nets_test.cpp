#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "testutil.hpp"
#include "vesselgan/nets/network.hpp"
#include "vesselgan/nets/spec.hpp"

using namespace vesselgan;
using vgtest::Rng;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    EXPECT_TRUE(in.good()) << path;
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

struct Row {
    const char* name;
    int64_t in_res, in_ch, out_ch, kernel;  // kernel 0 = none
};

// All 16 columns of the U-Net discriminator layer table.
constexpr Row kTable1[] = {
    {"C1", 48, 1, 32, 3},    {"C2", 48, 32, 32, 3},  {"P1", 48, 32, 32, 2},
    {"C3", 24, 32, 64, 3},   {"C4", 24, 64, 64, 3},  {"P2", 24, 64, 64, 2},
    {"C5", 12, 64, 64, 3},   {"U1", 12, 64, 64, 0},  {"Con1", 24, 128, 128, 0},
    {"C6", 24, 128, 64, 3},  {"C7", 24, 64, 64, 3},  {"U2", 24, 64, 64, 0},
    {"Con2", 48, 96, 96, 0}, {"C8", 48, 96, 32, 3},  {"C9", 48, 32, 32, 3},
    {"C10", 48, 32, 2, 1},
};

TEST(DiscriminatorSpec, Table1ProgrammaticWalk) {
    const auto net =
        build_discriminator(PoolKind::average, NormKind::weight, HeadKind::structured);
    ASSERT_EQ(net.layers.size(), 16u);
    for (size_t i = 0; i < 16; ++i) {
        const auto& l = net.layers[i];
        const auto& row = kTable1[i];
        EXPECT_EQ(l.name, row.name);
        EXPECT_EQ(l.in_resolution, row.in_res) << row.name;
        EXPECT_EQ(l.in_channels, row.in_ch) << row.name;
        EXPECT_EQ(l.out_channels, row.out_ch) << row.name;
        EXPECT_EQ(l.kernel_h, row.kernel) << row.name;
    }
    // Skip concatenations reference the named producers.
    EXPECT_EQ(net.find("Con1")->inputs, (std::vector<std::string>{"U1", "C4"}));
    EXPECT_EQ(net.find("Con2")->inputs, (std::vector<std::string>{"U2", "C2"}));
    EXPECT_EQ(net.find("C10")->activation, ActKind::softmax);
}

TEST(DiscriminatorSpec, ManifestMatchesGoldenFile) {
    const auto net =
        build_discriminator(PoolKind::average, NormKind::weight, HeadKind::structured, 0.8);
    const std::string golden = read_file(std::string(TESTDATA_DIR) + "/discriminator_table1.txt");
    EXPECT_EQ(net.manifest(), golden);
}

TEST(DiscriminatorSpec, BrokenChainNamesOffendingLayer) {
    auto net = build_discriminator(PoolKind::max, NormKind::none, HeadKind::structured);
    net.layers[4].out_channels = 99;  // C4
    try {
        net.validate();
        FAIL() << "expected config_error";
    } catch (const config_error& e) {
        EXPECT_NE(std::string(e.what()).find("P2"), std::string::npos);
    }
}

TEST(DiscriminatorSpec, CenterPixelHeadEndsInTwoWayClassifier) {
    const auto net =
        build_discriminator(PoolKind::max, NormKind::none, HeadKind::center_pixel);
    EXPECT_EQ(net.output_layer, "FC");
    EXPECT_EQ(net.find("FC")->out_channels, 2);
    EXPECT_NE(net.find("C5"), nullptr);
    EXPECT_EQ(net.find("C6"), nullptr);  // no decoder in CP mode
}

TEST(DiscriminatorForward, ShapesAndSoftmaxNormalization) {
    const auto spec =
        build_discriminator(PoolKind::average, NormKind::weight, HeadKind::structured);
    Network<double> net(spec, 7);
    Rng rng(8);
    Tensor<double> batch({2, 48, 48, 1});
    vgtest::fill_uniform(batch, rng, -1, 1);

    auto res = net.forward(batch, {"Con1", "C5"});
    EXPECT_EQ(res.logits.dims(), (std::vector<int64_t>{2, 48, 48, 2}));
    EXPECT_EQ(res.activations.at("Con1").dims(), (std::vector<int64_t>{2, 24, 24, 128}));
    EXPECT_EQ(res.activations.at("C5").dims(), (std::vector<int64_t>{2, 12, 12, 64}));
    for (int64_t i = 0; i < res.probs.size() / 2; ++i)
        EXPECT_NEAR(res.probs[2 * i] + res.probs[2 * i + 1], 1.0, 1e-5);

    // Zero patch: full forward completes and still emits distributions.
    Tensor<double> zero({1, 48, 48, 1});
    auto zres = net.forward(zero);
    for (int64_t i = 0; i < zres.probs.size() / 2; ++i)
        EXPECT_NEAR(zres.probs[2 * i] + zres.probs[2 * i + 1], 1.0, 1e-5);
}

TEST(DiscriminatorForward, UnknownCaptureNameRejected) {
    const auto spec = build_discriminator(PoolKind::max, NormKind::none, HeadKind::structured);
    Network<float> net(spec, 1);
    Tensor<float> batch({1, 48, 48, 1});
    EXPECT_THROW(net.forward(batch, {"C99"}), config_error);
}

TEST(DiscriminatorForward, DeterministicWithoutDropout) {
    const auto spec =
        build_discriminator(PoolKind::average, NormKind::instance, HeadKind::structured);
    Network<float> net(spec, 3);
    Rng rng(4);
    Tensor<float> batch({2, 48, 48, 1});
    for (int64_t i = 0; i < batch.size(); ++i) batch[i] = static_cast<float>(rng.next_unit());
    const auto a = net.forward(batch, {}, false, nullptr);
    const auto b = net.forward(batch, {}, false, nullptr);
    for (int64_t i = 0; i < a.logits.size(); ++i) EXPECT_EQ(a.logits[i], b.logits[i]);
}

TEST(WeightNorm, EffectiveColumnNormEqualsG) {
    Rng rng(5);
    Tensor<double> v({18, 4}), g({4});
    vgtest::fill_uniform(v, rng, -1, 1);
    for (int64_t i = 0; i < 4; ++i) g[i] = rng.next_real(0.2, 2.0);
    Tensor<double> w;
    ops::weight_norm_effective(v, g, w);
    for (int64_t c = 0; c < 4; ++c) {
        double n2 = 0;
        for (int64_t r = 0; r < 18; ++r) n2 += w.at(r, c) * w.at(r, c);
        EXPECT_NEAR(std::sqrt(n2), std::fabs(g[c]), 1e-9);
    }
}

TEST(WeightNorm, ScalingVLeavesOutputsUnchanged) {
    const auto spec =
        build_discriminator(PoolKind::average, NormKind::weight, HeadKind::structured);
    Network<double> net(spec, 11);
    Rng rng(12);
    Tensor<double> batch({1, 48, 48, 1});
    vgtest::fill_uniform(batch, rng, -1, 1);
    const auto before = net.forward(batch);
    std::set<std::string> normalized;  // layers that carry a g parameter
    for (auto& p : net.parameters())
        if (p.name.ends_with("/g")) normalized.insert(p.name.substr(0, p.name.size() - 2));
    for (auto& p : net.parameters())
        if (p.name.ends_with("/w") && normalized.count(p.name.substr(0, p.name.size() - 2)))
            for (int64_t i = 0; i < p.value->size(); ++i) (*p.value)[i] *= 3.7;
    const auto after = net.forward(batch);
    for (int64_t i = 0; i < before.logits.size(); ++i)
        EXPECT_NEAR(before.logits[i], after.logits[i], 1e-9);
}

TEST(Generator, StageResolutionsAndOutputRange) {
    const auto spec = build_generator(100, 48);
    EXPECT_EQ(spec.find("G_reshape")->out_resolution, 6);
    EXPECT_EQ(spec.find("G_tconv1")->out_resolution, 12);
    EXPECT_EQ(spec.find("G_tconv2")->out_resolution, 24);
    EXPECT_EQ(spec.find("G_tconv3")->out_resolution, 48);
    EXPECT_EQ(spec.find("G_tconv3")->activation, ActKind::tanh);

    Network<float> net(spec, 21);
    Rng rng(22);
    Tensor<float> z({4, 100});
    for (int64_t i = 0; i < z.size(); ++i) z[i] = static_cast<float>(rng.next_real(-1, 1));
    const auto out = net.forward(z);
    EXPECT_EQ(out.logits.dims(), (std::vector<int64_t>{4, 48, 48, 1}));
    for (int64_t i = 0; i < out.logits.size(); ++i) {
        EXPECT_GE(out.logits[i], -1.0f);
        EXPECT_LE(out.logits[i], 1.0f);
    }
}

TEST(Generator, RejectsIndivisibleOutputSize) {
    EXPECT_THROW(build_generator(100, 50), config_error);
}

TEST(Dropout, StochasticForwardNeedsRngAndMasksUnits) {
    const auto spec =
        build_discriminator(PoolKind::average, NormKind::none, HeadKind::structured);
    Network<float> net(spec, 31);
    Tensor<float> batch({1, 48, 48, 1});
    batch.fill(0.5f);
    EXPECT_THROW(net.forward(batch, {}, true, nullptr), config_error);
    Rng rng(32);
    auto a = net.forward(batch, {}, true, &rng);
    auto b = net.forward(batch, {}, false, nullptr);
    // Training pass differs from the evaluation pass with dropout active.
    double diff = 0;
    for (int64_t i = 0; i < a.logits.size(); ++i)
        diff += std::fabs(static_cast<double>(a.logits[i]) - b.logits[i]);
    EXPECT_GT(diff, 0.0);
}

}  // namespace
