#include <gtest/gtest.h>

#include <cmath>

#include "testutil.hpp"
#include "vesselgan/nets/network.hpp"

using namespace vesselgan;
using vgtest::Rng;

namespace {

// Scalar objective over a network output: fixed random projection, so the
// output-side gradient is just the projection weights.
struct Probe {
    Tensor<double> weights;
    double operator()(const Tensor<double>& y) const {
        double acc = 0;
        for (int64_t i = 0; i < y.size(); ++i) acc += weights[i] * y[i];
        return acc;
    }
};

LayerSpec conv_layer(const std::string& name, const std::string& src, int64_t res, int64_t in_ch,
                     int64_t out_ch, ActKind act, NormKind norm) {
    LayerSpec l;
    l.name = name;
    l.op = OpKind::conv;
    l.inputs = {src};
    l.kernel_h = l.kernel_w = 3;
    l.pad = 1;
    l.in_resolution = l.out_resolution = res;
    l.in_channels = in_ch;
    l.out_channels = out_ch;
    l.activation = act;
    l.normalization = norm;
    return l;
}

// Checks d(input) and every parameter gradient of a miniature network against
// central finite differences at float64.
void check_network_grads(const NetworkSpec& spec, const std::vector<int64_t>& input_dims,
                         double tol = 1e-5, uint64_t seed = 101, bool stochastic_mode = false) {
    Network<double> net(spec, seed);
    Rng rng(seed + 1);
    Tensor<double> x(input_dims);
    vgtest::fill_uniform(x, rng, -1.0, 1.0);

    auto out_of = [&]() {
        return net.forward(x, {}, stochastic_mode, nullptr).logits;
    };
    Probe probe{Tensor<double>(out_of().dims())};
    vgtest::fill_uniform(probe.weights, rng, -1.0, 1.0);
    auto objective = [&]() { return probe(out_of()); };

    ForwardTrace<double> tr;
    net.forward(x, {}, stochastic_mode, nullptr, &tr);
    net.zero_grads();
    const Tensor<double> d_input = net.backward(tr, probe.weights, nullptr, true);

    const double in_err = vgtest::max_grad_rel_err(x, objective, d_input);
    EXPECT_LT(in_err, tol) << spec.name << ": input gradient";

    for (auto& p : net.parameters()) {
        const double err = vgtest::max_grad_rel_err(*p.value, objective, *p.grad);
        EXPECT_LT(err, tol) << spec.name << ": parameter " << p.name;
    }
}

NetworkSpec mini(const std::string& name, std::vector<LayerSpec> layers, int64_t in_res,
                 int64_t in_ch) {
    NetworkSpec s;
    s.name = name;
    s.input_resolution = in_res;
    s.input_channels = in_ch;
    s.layers = std::move(layers);
    s.output_layer = s.layers.back().name;
    s.validate();
    return s;
}

TEST(OpGradients, ConvPlain) {
    auto s = mini("conv_mini",
                  {conv_layer("a", "input", 4, 2, 3, ActKind::leaky_relu, NormKind::none),
                   conv_layer("b", "a", 4, 3, 2, ActKind::none, NormKind::none)},
                  4, 2);
    check_network_grads(s, {2, 4, 4, 2});
}

TEST(OpGradients, ConvWeightNorm) {
    auto s = mini("conv_wn",
                  {conv_layer("a", "input", 4, 2, 3, ActKind::leaky_relu, NormKind::weight),
                   conv_layer("b", "a", 4, 3, 2, ActKind::none, NormKind::weight)},
                  4, 2);
    check_network_grads(s, {2, 4, 4, 2});
}

TEST(OpGradients, ConvInstanceNorm) {
    auto s = mini("conv_in",
                  {conv_layer("a", "input", 4, 2, 3, ActKind::leaky_relu, NormKind::instance),
                   conv_layer("b", "a", 4, 3, 2, ActKind::none, NormKind::none)},
                  4, 2);
    check_network_grads(s, {2, 4, 4, 2});
}

TEST(OpGradients, ConvBatchNorm) {
    auto s = mini("conv_bn",
                  {conv_layer("a", "input", 4, 2, 3, ActKind::leaky_relu, NormKind::batch),
                   conv_layer("b", "a", 4, 3, 2, ActKind::none, NormKind::none)},
                  4, 2);
    // Batch statistics are live in training mode.
    check_network_grads(s, {2, 4, 4, 2}, 1e-5, 101, true);
}

TEST(OpGradients, MaxAndAveragePool) {
    for (PoolKind pk : {PoolKind::max, PoolKind::average}) {
        LayerSpec p;
        p.name = "p";
        p.op = OpKind::pool;
        p.inputs = {"a"};
        p.kernel_h = p.kernel_w = 2;
        p.in_resolution = 4;
        p.out_resolution = 2;
        p.in_channels = p.out_channels = 3;
        p.pool_mode = pk;
        auto s = mini(pk == PoolKind::max ? "maxpool_mini" : "avgpool_mini",
                      {conv_layer("a", "input", 4, 2, 3, ActKind::leaky_relu, NormKind::none), p},
                      4, 2);
        check_network_grads(s, {2, 4, 4, 2});
    }
}

TEST(OpGradients, UpsampleNearestAndBilinear) {
    for (UpsampleKind uk : {UpsampleKind::nearest, UpsampleKind::bilinear}) {
        LayerSpec u;
        u.name = "u";
        u.op = OpKind::upsample;
        u.inputs = {"a"};
        u.in_resolution = 4;
        u.out_resolution = 8;
        u.in_channels = u.out_channels = 3;
        u.upsample_mode = uk;
        auto s = mini(uk == UpsampleKind::nearest ? "up_nn_mini" : "up_bl_mini",
                      {conv_layer("a", "input", 4, 2, 3, ActKind::leaky_relu, NormKind::none), u},
                      4, 2);
        check_network_grads(s, {2, 4, 4, 2});
    }
}

TEST(OpGradients, Concat) {
    LayerSpec cat;
    cat.name = "cat";
    cat.op = OpKind::concat;
    cat.inputs = {"a", "b"};
    cat.in_resolution = cat.out_resolution = 4;
    cat.in_channels = cat.out_channels = 5;
    auto tail = conv_layer("c", "cat", 4, 5, 2, ActKind::none, NormKind::none);
    auto s = mini("concat_mini",
                  {conv_layer("a", "input", 4, 2, 3, ActKind::leaky_relu, NormKind::none),
                   conv_layer("b", "input", 4, 2, 2, ActKind::leaky_relu, NormKind::none), cat,
                   tail},
                  4, 2);
    check_network_grads(s, {2, 4, 4, 2});
}

TEST(OpGradients, TransposedConv) {
    LayerSpec t;
    t.name = "t";
    t.op = OpKind::transposed_conv;
    t.inputs = {"input"};
    t.kernel_h = t.kernel_w = 4;
    t.stride = 2;
    t.pad = 1;
    t.in_resolution = 3;
    t.out_resolution = 6;
    t.in_channels = 2;
    t.out_channels = 3;
    t.activation = ActKind::relu;
    LayerSpec t2 = t;
    t2.name = "t2";
    t2.inputs = {"t"};
    t2.in_resolution = 6;
    t2.out_resolution = 12;
    t2.in_channels = 3;
    t2.out_channels = 2;
    t2.activation = ActKind::tanh;
    auto s = mini("tconv_mini", {t, t2}, 3, 2);
    check_network_grads(s, {2, 3, 3, 2});
}

TEST(OpGradients, LinearGapAndReshape) {
    LayerSpec gap;
    gap.name = "gap";
    gap.op = OpKind::gap;
    gap.inputs = {"a"};
    gap.in_resolution = 4;
    gap.out_resolution = 0;
    gap.in_channels = gap.out_channels = 3;
    LayerSpec fc;
    fc.name = "fc";
    fc.op = OpKind::linear;
    fc.inputs = {"gap"};
    fc.in_resolution = fc.out_resolution = 0;
    fc.in_channels = 3;
    fc.out_channels = 4;
    LayerSpec rs;
    rs.name = "rs";
    rs.op = OpKind::reshape;
    rs.inputs = {"fc"};
    rs.in_resolution = 0;
    rs.in_channels = 4;
    rs.out_resolution = 2;
    rs.out_channels = 1;
    auto tail = conv_layer("c", "rs", 2, 1, 2, ActKind::none, NormKind::none);
    auto s = mini("flat_mini",
                  {conv_layer("a", "input", 4, 2, 3, ActKind::leaky_relu, NormKind::none), gap,
                   fc, rs, tail},
                  4, 2);
    check_network_grads(s, {2, 4, 4, 2});
}

TEST(PoolWindow, MatchesSpecExamples) {
    std::vector<double> window = {1, 2, 3, 4};
    EXPECT_DOUBLE_EQ(ops::pool_window(window, true), 4.0);
    EXPECT_DOUBLE_EQ(ops::pool_window(window, false), 2.5);
}

// Finite differences through the pooling ops directly: average pooling has a
// dense 1/W^2 gradient, max pooling puts everything on the argmax.
TEST(PoolWindow, GradientDensityByFiniteDifferences) {
    Tensor<double> x({1, 2, 2, 1}, {0.3, -0.2, 0.9, 0.1});
    const double h = 1e-6;
    for (int64_t i = 0; i < 4; ++i) {
        auto eval = [&](bool mx) {
            std::vector<double> w(x.data(), x.data() + 4);
            return ops::pool_window(w, mx);
        };
        const double orig = x[i];
        x[i] = orig + h;
        const double ap = eval(false), mp = eval(true);
        x[i] = orig - h;
        const double am = eval(false), mm = eval(true);
        x[i] = orig;
        EXPECT_NEAR((ap - am) / (2 * h), 0.25, 1e-6);             // dense everywhere
        EXPECT_NEAR((mp - mm) / (2 * h), i == 2 ? 1.0 : 0.0, 1e-6);  // argmax only
    }
}

}  // namespace
