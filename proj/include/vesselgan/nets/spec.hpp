#ifndef VESSELGAN_NETS_SPEC_HPP
#define VESSELGAN_NETS_SPEC_HPP

#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "vesselgan/core/common.hpp"

namespace vesselgan {

enum class OpKind { input, conv, pool, upsample, concat, transposed_conv, linear, reshape, gap };
enum class ActKind { none, leaky_relu, relu, tanh, softmax };
enum class NormKind { none, batch, instance, weight };
enum class PoolKind { max, average };
enum class UpsampleKind { nearest, bilinear };
enum class HeadKind { center_pixel, structured };

inline const char* to_string(OpKind k) {
    switch (k) {
        case OpKind::input: return "input";
        case OpKind::conv: return "conv";
        case OpKind::pool: return "pool";
        case OpKind::upsample: return "upsample";
        case OpKind::concat: return "concat";
        case OpKind::transposed_conv: return "transposed_conv";
        case OpKind::linear: return "linear";
        case OpKind::reshape: return "reshape";
        case OpKind::gap: return "gap";
    }
    return "?";
}
inline const char* to_string(ActKind k) {
    switch (k) {
        case ActKind::none: return "none";
        case ActKind::leaky_relu: return "leaky_relu(0.2)";
        case ActKind::relu: return "relu";
        case ActKind::tanh: return "tanh";
        case ActKind::softmax: return "softmax";
    }
    return "?";
}
inline const char* to_string(NormKind k) {
    switch (k) {
        case NormKind::none: return "none";
        case NormKind::batch: return "batch";
        case NormKind::instance: return "instance";
        case NormKind::weight: return "weight";
    }
    return "?";
}
inline const char* to_string(PoolKind k) { return k == PoolKind::max ? "max" : "average"; }
inline const char* to_string(HeadKind k) {
    return k == HeadKind::center_pixel ? "center_pixel" : "structured";
}

inline NormKind norm_from_string(const std::string& s) {
    if (s == "none") return NormKind::none;
    if (s == "batch") return NormKind::batch;
    if (s == "instance") return NormKind::instance;
    if (s == "weight") return NormKind::weight;
    throw config_error("unknown normalization mode: " + s);
}
inline PoolKind pool_from_string(const std::string& s) {
    if (s == "max") return PoolKind::max;
    if (s == "average") return PoolKind::average;
    throw config_error("unknown pooling mode: " + s);
}
inline HeadKind head_from_string(const std::string& s) {
    if (s == "center_pixel" || s == "cp") return HeadKind::center_pixel;
    if (s == "structured" || s == "sp") return HeadKind::structured;
    throw config_error("unknown head mode: " + s);
}

// One declarative layer. Resolutions of 0 denote flat (vector) shapes.
struct LayerSpec {
    std::string name;
    OpKind op = OpKind::conv;
    std::vector<std::string> inputs;
    int64_t kernel_h = 0, kernel_w = 0;
    int64_t in_channels = 0, out_channels = 0;
    int64_t in_resolution = 0, out_resolution = 0;
    int64_t stride = 1, pad = 0;
    ActKind activation = ActKind::none;
    double dropout_keep = 1.0;
    NormKind normalization = NormKind::none;
    PoolKind pool_mode = PoolKind::max;
    UpsampleKind upsample_mode = UpsampleKind::nearest;
};

struct NetworkSpec {
    std::string name;
    int64_t input_resolution = 0;  // 0 = flat input
    int64_t input_channels = 0;
    HeadKind head = HeadKind::structured;
    std::vector<LayerSpec> layers;
    std::string output_layer;

    const LayerSpec* find(const std::string& layer_name) const {
        for (const auto& l : layers)
            if (l.name == layer_name) return &l;
        return nullptr;
    }

    // Walks the graph and checks every declared shape against its producers.
    // Throws config_error naming the first offending layer.
    void validate() const {
        std::map<std::string, std::pair<int64_t, int64_t>> shapes;  // name -> (res, channels)
        shapes["input"] = {input_resolution, input_channels};
        for (const auto& l : layers) {
            if (l.inputs.empty())
                throw config_error("layer " + l.name + ": no inputs declared");
            if (shapes.count(l.name))
                throw config_error("layer " + l.name + ": duplicate name");
            std::vector<std::pair<int64_t, int64_t>> in;
            for (const auto& src : l.inputs) {
                auto it = shapes.find(src);
                if (it == shapes.end())
                    throw config_error("layer " + l.name + ": unknown input " + src);
                in.push_back(it->second);
            }
            const auto [res, ch] = in[0];
            auto expect = [&](bool ok, const std::string& what) {
                if (!ok) throw config_error("layer " + l.name + ": " + what);
            };
            expect(l.in_resolution == res, "declared input resolution mismatch");
            switch (l.op) {
                case OpKind::conv:
                    expect(in.size() == 1, "conv takes one input");
                    expect(l.in_channels == ch, "declared input channels mismatch");
                    expect(l.out_resolution == (res + 2 * l.pad - l.kernel_h) / l.stride + 1,
                           "conv output resolution inconsistent with kernel/pad/stride");
                    break;
                case OpKind::pool:
                    expect(in.size() == 1, "pool takes one input");
                    expect(l.in_channels == ch && l.out_channels == ch,
                           "pool cannot change channels");
                    expect(res % l.kernel_h == 0, "pool window must divide resolution");
                    expect(l.out_resolution == res / l.kernel_h, "pool output resolution");
                    break;
                case OpKind::upsample:
                    expect(in.size() == 1, "upsample takes one input");
                    expect(l.in_channels == ch && l.out_channels == ch,
                           "upsample cannot change channels");
                    expect(l.out_resolution == res * 2, "upsample doubles resolution");
                    break;
                case OpKind::concat: {
                    expect(in.size() == 2, "concat takes two inputs");
                    expect(in[0].first == in[1].first, "concat inputs must share resolution");
                    expect(l.in_channels == in[0].second + in[1].second,
                           "concat input channels must sum");
                    expect(l.out_channels == l.in_channels, "concat preserves total channels");
                    expect(l.out_resolution == res, "concat preserves resolution");
                    break;
                }
                case OpKind::transposed_conv:
                    expect(in.size() == 1, "transposed_conv takes one input");
                    expect(l.in_channels == ch, "declared input channels mismatch");
                    expect(l.out_resolution == (res - 1) * l.stride - 2 * l.pad + l.kernel_h,
                           "transposed_conv output resolution");
                    break;
                case OpKind::linear:
                    expect(in.size() == 1, "linear takes one input");
                    expect(res == 0, "linear expects a flat input");
                    expect(l.in_channels == ch, "declared input features mismatch");
                    expect(l.out_resolution == 0, "linear emits a flat output");
                    break;
                case OpKind::reshape:
                    expect(in.size() == 1, "reshape takes one input");
                    expect(l.out_resolution * l.out_resolution * l.out_channels ==
                               (res == 0 ? ch : res * res * ch),
                           "reshape must preserve element count");
                    break;
                case OpKind::gap:
                    expect(in.size() == 1, "gap takes one input");
                    expect(l.in_channels == ch && l.out_channels == ch,
                           "gap preserves channels");
                    expect(l.out_resolution == 0, "gap emits a flat output");
                    break;
                case OpKind::input:
                    throw config_error("layer " + l.name + ": explicit input layers not allowed");
            }
            shapes[l.name] = {l.out_resolution, l.out_channels};
        }
        if (!shapes.count(output_layer))
            throw config_error("output layer " + output_layer + " not defined");
    }

    // Text manifest: one row per layer, mirroring the builder's layer table.
    std::string manifest() const {
        std::ostringstream os;
        os << "network " << name << " head=" << to_string(head) << " input="
           << input_resolution << "x" << input_resolution << "x" << input_channels << "\n";
        os << "name|op|inputs|in_res|in_ch|out_res|out_ch|kernel|activation|norm|dropout_keep\n";
        for (const auto& l : layers) {
            os << l.name << "|" << to_string(l.op);
            if (l.op == OpKind::pool) os << "(" << to_string(l.pool_mode) << ")";
            os << "|";
            for (size_t i = 0; i < l.inputs.size(); ++i) os << (i ? "+" : "") << l.inputs[i];
            os << "|" << l.in_resolution << "|" << l.in_channels << "|" << l.out_resolution << "|"
               << l.out_channels << "|";
            if (l.kernel_h > 0)
                os << l.kernel_h << "x" << l.kernel_w;
            else
                os << "-";
            os << "|" << to_string(l.activation) << "|" << to_string(l.normalization) << "|"
               << l.dropout_keep << "\n";
        }
        return os.str();
    }
};

// U-Net discriminator. The structured head follows the 16-layer table
// (C1..C10, P1, P2, U1, U2, Con1, Con2); the center-pixel head keeps the
// encoder and classifies via global average pooling and a 2-way linear layer.
inline NetworkSpec build_discriminator(PoolKind pooling, NormKind norm, HeadKind head,
                                       double dropout_keep = 0.8) {
    if (!(dropout_keep > 0.0 && dropout_keep <= 1.0))
        throw config_error("dropout_keep must lie in (0, 1]");
    NetworkSpec net;
    net.name = head == HeadKind::structured ? "unet_discriminator" : "cp_discriminator";
    net.input_resolution = 48;
    net.input_channels = 1;
    net.head = head;

    // IN/BN are activation-statistics modes applied after each hidden conv;
    // weight norm reparametrizes the kernels themselves.
    auto conv = [&](const std::string& name, const std::string& src, int64_t res, int64_t in_ch,
                    int64_t out_ch, bool dropout) {
        LayerSpec l;
        l.name = name;
        l.op = OpKind::conv;
        l.inputs = {src};
        l.kernel_h = l.kernel_w = 3;
        l.pad = 1;
        l.in_resolution = l.out_resolution = res;
        l.in_channels = in_ch;
        l.out_channels = out_ch;
        l.activation = ActKind::leaky_relu;
        l.normalization = norm;
        l.dropout_keep = dropout ? dropout_keep : 1.0;
        return l;
    };
    auto pool = [&](const std::string& name, const std::string& src, int64_t res, int64_t ch) {
        LayerSpec l;
        l.name = name;
        l.op = OpKind::pool;
        l.inputs = {src};
        l.kernel_h = l.kernel_w = 2;
        l.in_resolution = res;
        l.out_resolution = res / 2;
        l.in_channels = l.out_channels = ch;
        l.pool_mode = pooling;
        return l;
    };

    net.layers.push_back(conv("C1", "input", 48, 1, 32, true));
    net.layers.push_back(conv("C2", "C1", 48, 32, 32, false));
    net.layers.push_back(pool("P1", "C2", 48, 32));
    net.layers.push_back(conv("C3", "P1", 24, 32, 64, true));
    net.layers.push_back(conv("C4", "C3", 24, 64, 64, false));
    net.layers.push_back(pool("P2", "C4", 24, 64));
    net.layers.push_back(conv("C5", "P2", 12, 64, 64, true));

    if (head == HeadKind::structured) {
        LayerSpec u1;
        u1.name = "U1";
        u1.op = OpKind::upsample;
        u1.inputs = {"C5"};
        u1.in_resolution = 12;
        u1.out_resolution = 24;
        u1.in_channels = u1.out_channels = 64;
        net.layers.push_back(u1);

        LayerSpec con1;
        con1.name = "Con1";
        con1.op = OpKind::concat;
        con1.inputs = {"U1", "C4"};
        con1.in_resolution = con1.out_resolution = 24;
        con1.in_channels = con1.out_channels = 128;
        net.layers.push_back(con1);

        net.layers.push_back(conv("C6", "Con1", 24, 128, 64, true));
        net.layers.push_back(conv("C7", "C6", 24, 64, 64, false));

        LayerSpec u2 = u1;
        u2.name = "U2";
        u2.inputs = {"C7"};
        u2.in_resolution = 24;
        u2.out_resolution = 48;
        net.layers.push_back(u2);

        LayerSpec con2;
        con2.name = "Con2";
        con2.op = OpKind::concat;
        con2.inputs = {"U2", "C2"};
        con2.in_resolution = con2.out_resolution = 48;
        con2.in_channels = con2.out_channels = 96;
        net.layers.push_back(con2);

        net.layers.push_back(conv("C8", "Con2", 48, 96, 32, true));
        net.layers.push_back(conv("C9", "C8", 48, 32, 32, false));

        LayerSpec c10;
        c10.name = "C10";
        c10.op = OpKind::conv;
        c10.inputs = {"C9"};
        c10.kernel_h = c10.kernel_w = 1;
        c10.in_resolution = c10.out_resolution = 48;
        c10.in_channels = 32;
        c10.out_channels = 2;
        c10.activation = ActKind::softmax;
        net.layers.push_back(c10);
        net.output_layer = "C10";
    } else {
        LayerSpec gap;
        gap.name = "GAP";
        gap.op = OpKind::gap;
        gap.inputs = {"C5"};
        gap.in_resolution = 12;
        gap.out_resolution = 0;
        gap.in_channels = gap.out_channels = 64;
        net.layers.push_back(gap);

        LayerSpec fc;
        fc.name = "FC";
        fc.op = OpKind::linear;
        fc.inputs = {"GAP"};
        fc.in_resolution = fc.out_resolution = 0;
        fc.in_channels = 64;
        fc.out_channels = 2;
        fc.activation = ActKind::softmax;
        net.layers.push_back(fc);
        net.output_layer = "FC";
    }
    net.validate();
    return net;
}

// DCGAN-style generator: linear from z, reshape to (out/8)^2 spatial, three
// 2x transposed-conv stages, tanh output in [-1, 1].
inline NetworkSpec build_generator(int64_t z_dim = 100, int64_t out_size = 48) {
    if (out_size % 8 != 0) throw config_error("generator out_size must be divisible by 8");
    NetworkSpec net;
    net.name = "generator";
    net.input_resolution = 0;
    net.input_channels = z_dim;

    const int64_t base = out_size / 8;
    const int64_t widths[4] = {128, 64, 32, 1};

    LayerSpec fc;
    fc.name = "G_fc";
    fc.op = OpKind::linear;
    fc.inputs = {"input"};
    fc.in_channels = z_dim;
    fc.out_channels = base * base * widths[0];
    fc.activation = ActKind::relu;
    net.layers.push_back(fc);

    LayerSpec rs;
    rs.name = "G_reshape";
    rs.op = OpKind::reshape;
    rs.inputs = {"G_fc"};
    rs.in_channels = fc.out_channels;
    rs.out_resolution = base;
    rs.out_channels = widths[0];
    net.layers.push_back(rs);

    std::string prev = "G_reshape";
    int64_t res = base;
    for (int i = 0; i < 3; ++i) {
        LayerSpec t;
        t.name = "G_tconv" + std::to_string(i + 1);
        t.op = OpKind::transposed_conv;
        t.inputs = {prev};
        t.kernel_h = t.kernel_w = 4;
        t.stride = 2;
        t.pad = 1;
        t.in_resolution = res;
        t.out_resolution = res * 2;
        t.in_channels = widths[i];
        t.out_channels = widths[i + 1];
        t.activation = i == 2 ? ActKind::tanh : ActKind::relu;
        net.layers.push_back(t);
        prev = t.name;
        res *= 2;
    }
    net.output_layer = prev;
    net.validate();
    return net;
}

}  // namespace vesselgan

#endif
