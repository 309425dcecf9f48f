#ifndef VESSELGAN_NETS_NETWORK_HPP
#define VESSELGAN_NETS_NETWORK_HPP

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vesselgan/nets/ops.hpp"
#include "vesselgan/nets/spec.hpp"

namespace vesselgan {

template <typename T>
struct ForwardTrace {
    Tensor<T> input;
    std::map<std::string, Tensor<T>> outputs;    // post-activation/dropout, per layer
    std::map<std::string, Tensor<T>> pre_norm;   // conv output before IN/BN
    std::map<std::string, ops::NormStats> norm_stats;
    std::map<std::string, std::vector<uint8_t>> dropout_masks;
    std::map<std::string, std::vector<int32_t>> pool_argmax;
    bool stochastic = false;
};

template <typename T>
struct ForwardResult {
    Tensor<T> logits;  // output layer pre-softmax
    Tensor<T> probs;   // softmax over the trailing class dimension
    std::map<std::string, Tensor<T>> activations;  // captured layer outputs
};

// Runtime for a NetworkSpec: owns parameters and gradients, interprets the
// layer graph forward and backward. Parameter gradients accumulate across
// backward calls until zero_grads().
template <typename T>
class Network {
  public:
    struct LayerState {
        Tensor<T> w;     // kernel [K, M]; V when weight-normalized
        Tensor<T> wn_g;  // [M]
        Tensor<T> bias;
        Tensor<T> gamma, beta;
        Tensor<T> run_mean, run_var;  // batch norm running statistics
        Tensor<T> d_w, d_wn_g, d_bias, d_gamma, d_beta;
        Tensor<T> eff_w;  // materialized weight-norm kernel, refreshed per forward
    };

    struct ParamRef {
        std::string name;
        Tensor<T>* value;
        Tensor<T>* grad;
    };

    Network() = default;
    Network(NetworkSpec spec, uint64_t init_seed) : spec_(std::move(spec)) {
        spec_.validate();
        for (size_t i = 0; i < spec_.layers.size(); ++i) {
            const LayerSpec& l = spec_.layers[i];
            LayerState st;
            Rng rng(derive_seed(init_seed, 0x6c617965, i));
            if (l.op == OpKind::conv || l.op == OpKind::linear) {
                const int64_t k = l.op == OpKind::linear ? l.in_channels
                                                         : l.kernel_h * l.kernel_w * l.in_channels;
                init_kernel(st, l, k, l.out_channels, rng);
            } else if (l.op == OpKind::transposed_conv) {
                if (l.normalization == NormKind::weight || l.normalization == NormKind::instance ||
                    l.normalization == NormKind::batch)
                    throw config_error("layer " + l.name +
                                       ": normalization on transposed_conv unsupported");
                const int64_t k = l.kernel_h * l.kernel_w * l.out_channels;
                init_kernel(st, l, k, l.in_channels, rng);
            }
            if ((l.activation == ActKind::tanh || l.activation == ActKind::softmax) &&
                l.dropout_keep < 1.0)
                throw config_error("layer " + l.name + ": dropout after tanh/softmax unsupported");
            states_.push_back(std::move(st));
        }
    }

    const NetworkSpec& spec() const { return spec_; }

    std::vector<ParamRef> parameters() {
        std::vector<ParamRef> out;
        for (size_t i = 0; i < spec_.layers.size(); ++i) {
            const std::string& n = spec_.layers[i].name;
            LayerState& st = states_[i];
            auto add = [&](const char* suffix, Tensor<T>& v, Tensor<T>& g) {
                if (!v.empty()) out.push_back({n + "/" + suffix, &v, &g});
            };
            add("w", st.w, st.d_w);
            add("g", st.wn_g, st.d_wn_g);
            add("b", st.bias, st.d_bias);
            add("gamma", st.gamma, st.d_gamma);
            add("beta", st.beta, st.d_beta);
        }
        return out;
    }

    // Running BN statistics are state, not trainable parameters; checkpoints
    // still have to carry them.
    std::vector<std::pair<std::string, Tensor<T>*>> buffers() {
        std::vector<std::pair<std::string, Tensor<T>*>> out;
        for (size_t i = 0; i < spec_.layers.size(); ++i) {
            LayerState& st = states_[i];
            if (!st.run_mean.empty()) {
                out.push_back({spec_.layers[i].name + "/run_mean", &st.run_mean});
                out.push_back({spec_.layers[i].name + "/run_var", &st.run_var});
            }
        }
        return out;
    }

    void zero_grads() {
        for (auto& st : states_) {
            st.d_w.zero();
            st.d_wn_g.zero();
            st.d_bias.zero();
            st.d_gamma.zero();
            st.d_beta.zero();
        }
    }

    // stochastic=true enables dropout (rng required) and batch statistics.
    ForwardResult<T> forward(const Tensor<T>& batch, const std::set<std::string>& capture = {},
                             bool stochastic = false, Rng* rng = nullptr,
                             ForwardTrace<T>* trace_out = nullptr) {
        check_input(batch);
        for (const auto& name : capture)
            if (!spec_.find(name)) throw config_error("unknown capture name: " + name);

        ForwardTrace<T> local;
        ForwardTrace<T>& tr = trace_out ? *trace_out : local;
        tr = ForwardTrace<T>{};
        tr.input = batch;
        tr.stochastic = stochastic;

        for (size_t i = 0; i < spec_.layers.size(); ++i) run_layer(i, tr, stochastic, rng);

        ForwardResult<T> res;
        res.logits = tr.outputs.at(spec_.output_layer);
        ops::softmax_last_dim(res.logits, res.probs);
        for (const auto& name : capture) {
            if (name == spec_.output_layer &&
                spec_.find(name)->activation == ActKind::softmax)
                res.activations[name] = res.probs;
            else
                res.activations[name] = tr.outputs.at(name);
        }
        return res;
    }

    // d_logits is the gradient at the output layer pre-softmax. extra_grads
    // injects gradients at named layer outputs (feature matching). Returns the
    // gradient w.r.t. the network input when want_input_grad.
    Tensor<T> backward(const ForwardTrace<T>& tr, const Tensor<T>& d_logits,
                       const std::map<std::string, Tensor<T>>* extra_grads = nullptr,
                       bool want_input_grad = false) {
        std::map<std::string, Tensor<T>> grad;  // w.r.t. each layer's final output
        if (!d_logits.empty()) grad[spec_.output_layer] = d_logits;
        if (extra_grads)
            for (const auto& [name, g] : *extra_grads) add_grad(grad, name, Tensor<T>(g));

        Tensor<T> d_input;
        if (want_input_grad) {
            d_input = Tensor<T>(tr.input.dims());
        }

        for (size_t ii = spec_.layers.size(); ii-- > 0;) {
            const LayerSpec& l = spec_.layers[ii];
            auto it = grad.find(l.name);
            if (it == grad.end()) continue;
            Tensor<T> g = std::move(it->second);
            grad.erase(it);
            backward_layer(ii, tr, g, grad, want_input_grad ? &d_input : nullptr);
        }
        return d_input;
    }

    int64_t parameter_count() {
        int64_t n = 0;
        for (const auto& p : parameters()) n += p.value->size();
        return n;
    }

  private:
    void check_input(const Tensor<T>& batch) const {
        if (spec_.input_resolution == 0) {
            if (batch.rank() != 2 || batch.dim(1) != spec_.input_channels)
                throw config_error("network " + spec_.name + ": expected [N," +
                                   std::to_string(spec_.input_channels) + "] input");
        } else if (batch.rank() != 4 || batch.dim(1) != spec_.input_resolution ||
                   batch.dim(2) != spec_.input_resolution ||
                   batch.dim(3) != spec_.input_channels) {
            throw config_error("network " + spec_.name + ": input resolution mismatch");
        }
    }

    void init_kernel(LayerState& st, const LayerSpec& l, int64_t k, int64_t m, Rng& rng) {
        st.w = Tensor<T>({k, m});
        const double std = std::sqrt(2.0 / static_cast<double>(k));
        for (int64_t i = 0; i < st.w.size(); ++i) st.w[i] = static_cast<T>(rng.next_normal() * std);
        st.d_w = Tensor<T>({k, m});
        if (l.normalization == NormKind::weight) {
            st.wn_g = Tensor<T>({m});
            for (int64_t c = 0; c < m; ++c) {
                double n2 = 0;
                for (int64_t r = 0; r < k; ++r) n2 += static_cast<double>(st.w.at(r, c)) * st.w.at(r, c);
                st.wn_g[c] = static_cast<T>(std::sqrt(n2));
            }
            st.d_wn_g = Tensor<T>({m});
        }
        const bool stat_norm =
            l.normalization == NormKind::instance || l.normalization == NormKind::batch;
        if (!stat_norm) {
            st.bias = Tensor<T>({m});
            st.d_bias = Tensor<T>({m});
        } else {
            st.gamma = Tensor<T>({l.out_channels});
            st.gamma.fill(T{1});
            st.beta = Tensor<T>({l.out_channels});
            st.d_gamma = Tensor<T>({l.out_channels});
            st.d_beta = Tensor<T>({l.out_channels});
            if (l.normalization == NormKind::batch) {
                st.run_mean = Tensor<T>({l.out_channels});
                st.run_var = Tensor<T>({l.out_channels});
                st.run_var.fill(T{1});
            }
        }
    }

    const Tensor<T>& act_of(const ForwardTrace<T>& tr, const std::string& name) const {
        if (name == "input") return tr.input;
        return tr.outputs.at(name);
    }

    const Tensor<T>& kernel_for_use(size_t i) {
        const LayerSpec& l = spec_.layers[i];
        LayerState& st = states_[i];
        if (l.normalization == NormKind::weight) {
            ops::weight_norm_effective(st.w, st.wn_g, st.eff_w);
            return st.eff_w;
        }
        return st.w;
    }

    static void add_grad(std::map<std::string, Tensor<T>>& grad, const std::string& name,
                         Tensor<T>&& g) {
        auto it = grad.find(name);
        if (it == grad.end()) {
            grad.emplace(name, std::move(g));
        } else {
            Tensor<T>& acc = it->second;
            for (int64_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
        }
    }

    ops::ConvGeom conv_geom(const LayerSpec& l) const {
        ops::ConvGeom g;
        g.in_h = g.in_w = l.in_resolution;
        g.in_c = l.in_channels;
        g.out_c = l.out_channels;
        g.kh = l.kernel_h;
        g.kw = l.kernel_w;
        g.stride = l.stride;
        g.pad = l.pad;
        return g;
    }

    ops::TransConvGeom tconv_geom(const LayerSpec& l) const {
        ops::TransConvGeom g;
        g.in_h = g.in_w = l.in_resolution;
        g.in_c = l.in_channels;
        g.out_c = l.out_channels;
        g.kh = l.kernel_h;
        g.kw = l.kernel_w;
        g.stride = l.stride;
        g.pad = l.pad;
        return g;
    }

    void run_layer(size_t i, ForwardTrace<T>& tr, bool stochastic, Rng* rng) {
        const LayerSpec& l = spec_.layers[i];
        LayerState& st = states_[i];
        const Tensor<T>& x = act_of(tr, l.inputs[0]);
        Tensor<T> y;

        switch (l.op) {
            case OpKind::conv:
                ops::conv_forward(conv_geom(l), x, kernel_for_use(i), st.bias, y, scratch_);
                break;
            case OpKind::transposed_conv:
                ops::transposed_conv_forward(tconv_geom(l), x, kernel_for_use(i), st.bias, y,
                                             scratch_);
                break;
            case OpKind::linear: {
                const int64_t n = x.dim(0), k = l.in_channels, m = l.out_channels;
                y = Tensor<T>({n, m});
                gemm<T>(false, false, n, m, k, T{1}, x.data(), k, kernel_for_use(i).data(), m,
                        T{0}, y.data(), m);
                for (int64_t r = 0; r < n; ++r)
                    for (int64_t c = 0; c < m; ++c) y.at(r, c) += st.bias[c];
                break;
            }
            case OpKind::pool:
                if (l.pool_mode == PoolKind::max) {
                    ops::maxpool_forward(x, l.kernel_h, y, tr.pool_argmax[l.name]);
                } else {
                    ops::avgpool_forward(x, l.kernel_h, y);
                }
                break;
            case OpKind::upsample:
                if (l.upsample_mode == UpsampleKind::nearest)
                    ops::upsample_nearest_forward(x, y);
                else
                    ops::upsample_bilinear_forward(x, y);
                break;
            case OpKind::concat:
                ops::concat_forward(x, act_of(tr, l.inputs[1]), y);
                break;
            case OpKind::reshape: {
                const int64_t n = x.dim(0);
                y = Tensor<T>({n, l.out_resolution, l.out_resolution, l.out_channels},
                              std::vector<T>(x.data(), x.data() + x.size()));
                break;
            }
            case OpKind::gap:
                ops::gap_forward(x, y);
                break;
            case OpKind::input:
                throw config_error("unexpected input layer");
        }

        if (l.normalization == NormKind::instance || l.normalization == NormKind::batch) {
            tr.pre_norm[l.name] = y;
            Tensor<T> z;
            if (l.normalization == NormKind::instance) {
                ops::instance_norm_forward(y, st.gamma, st.beta, z, tr.norm_stats[l.name]);
            } else if (stochastic) {
                ops::batch_norm_forward(y, st.gamma, st.beta, z, tr.norm_stats[l.name]);
                const auto& stats = tr.norm_stats[l.name];
                for (int64_t c = 0; c < st.run_mean.size(); ++c) {
                    st.run_mean[c] = static_cast<T>(0.9 * st.run_mean[c] + 0.1 * stats.mean[c]);
                    const double var = 1.0 / (stats.inv_std[c] * stats.inv_std[c]) - ops::kNormEps;
                    st.run_var[c] = static_cast<T>(0.9 * st.run_var[c] + 0.1 * var);
                }
            } else {
                z = Tensor<T>(y.dims());
                const int64_t c = l.out_channels, rows = y.size() / c;
                for (int64_t r = 0; r < rows; ++r)
                    for (int64_t ch = 0; ch < c; ++ch)
                        z[r * c + ch] = static_cast<T>(
                            (y[r * c + ch] - st.run_mean[ch]) /
                                std::sqrt(static_cast<double>(st.run_var[ch]) + ops::kNormEps) *
                                st.gamma[ch] +
                            st.beta[ch]);
            }
            y = std::move(z);
        }

        switch (l.activation) {
            case ActKind::leaky_relu: ops::leaky_relu_forward(y); break;
            case ActKind::relu: ops::relu_forward(y); break;
            case ActKind::tanh: ops::tanh_forward(y); break;
            case ActKind::softmax: break;  // losses consume logits; probs derived on demand
            case ActKind::none: break;
        }

        if (stochastic && l.dropout_keep < 1.0) {
            if (!rng) throw config_error("stochastic forward requires an rng");
            ops::dropout_forward(y, l.dropout_keep, *rng, tr.dropout_masks[l.name]);
        }
        tr.outputs[l.name] = std::move(y);
    }

    void backward_layer(size_t i, const ForwardTrace<T>& tr, Tensor<T>& g,
                        std::map<std::string, Tensor<T>>& grad, Tensor<T>* d_input) {
        const LayerSpec& l = spec_.layers[i];
        LayerState& st = states_[i];
        const Tensor<T>& y = tr.outputs.at(l.name);

        if (tr.stochastic && l.dropout_keep < 1.0)
            ops::dropout_backward(tr.dropout_masks.at(l.name), l.dropout_keep, g);

        switch (l.activation) {
            case ActKind::leaky_relu: ops::leaky_relu_backward(y, g); break;
            case ActKind::relu: ops::relu_backward(y, g); break;
            case ActKind::tanh: ops::tanh_backward(y, g); break;
            case ActKind::softmax: break;  // gradient arrives at logits already
            case ActKind::none: break;
        }

        if (l.normalization == NormKind::instance || l.normalization == NormKind::batch) {
            const Tensor<T>& x_pre = tr.pre_norm.at(l.name);
            Tensor<T> dx_pre;
            if (l.normalization == NormKind::instance)
                ops::instance_norm_backward(x_pre, st.gamma, tr.norm_stats.at(l.name), g, dx_pre,
                                            st.d_gamma, st.d_beta);
            else
                ops::batch_norm_backward(x_pre, st.gamma, tr.norm_stats.at(l.name), g, dx_pre,
                                         st.d_gamma, st.d_beta);
            g = std::move(dx_pre);
        }

        const std::string& src = l.inputs[0];
        const bool need_dx = src != "input" || d_input != nullptr;
        const Tensor<T>& x = act_of(tr, src);
        Tensor<T> dx;

        switch (l.op) {
            case OpKind::conv: {
                const ops::ConvGeom cg = conv_geom(l);
                if (l.normalization == NormKind::weight) {
                    Tensor<T> dw_eff({st.w.dim(0), st.w.dim(1)});
                    ops::conv_backward_weight(cg, x, g, dw_eff, st.d_bias, scratch_);
                    ops::weight_norm_backward(st.w, st.wn_g, dw_eff, st.d_w, st.d_wn_g);
                } else {
                    ops::conv_backward_weight(cg, x, g, st.d_w, st.d_bias, scratch_);
                }
                if (need_dx) ops::conv_backward_input(cg, kernel_for_use(i), g, dx, scratch_);
                break;
            }
            case OpKind::transposed_conv: {
                const ops::TransConvGeom tg = tconv_geom(l);
                ops::transposed_conv_backward_weight(tg, x, g, st.d_w, st.d_bias, scratch_);
                if (need_dx) ops::transposed_conv_backward_input(tg, st.w, g, dx, scratch_);
                break;
            }
            case OpKind::linear: {
                const int64_t n = x.dim(0), k = l.in_channels, m = l.out_channels;
                if (l.normalization == NormKind::weight) {
                    Tensor<T> dw_eff({k, m});
                    gemm<T>(true, false, k, m, n, T{1}, x.data(), k, g.data(), m, T{1},
                            dw_eff.data(), m);
                    ops::weight_norm_backward(st.w, st.wn_g, dw_eff, st.d_w, st.d_wn_g);
                } else {
                    gemm<T>(true, false, k, m, n, T{1}, x.data(), k, g.data(), m, T{1},
                            st.d_w.data(), m);
                }
                for (int64_t r = 0; r < n; ++r)
                    for (int64_t c = 0; c < m; ++c) st.d_bias[c] += g.at(r, c);
                if (need_dx) {
                    dx = Tensor<T>({n, k});
                    gemm<T>(false, true, n, k, m, T{1}, g.data(), m, kernel_for_use(i).data(), m,
                            T{0}, dx.data(), k);
                }
                break;
            }
            case OpKind::pool:
                if (l.pool_mode == PoolKind::max)
                    ops::maxpool_backward(g, l.kernel_h, tr.pool_argmax.at(l.name), dx,
                                          l.in_resolution, l.in_resolution);
                else
                    ops::avgpool_backward(g, l.kernel_h, dx, l.in_resolution, l.in_resolution);
                break;
            case OpKind::upsample:
                if (l.upsample_mode == UpsampleKind::nearest)
                    ops::upsample_nearest_backward(g, dx);
                else
                    ops::upsample_bilinear_backward(g, dx);
                break;
            case OpKind::concat: {
                Tensor<T> da, db;
                const int64_t ca = spec_find_channels(l.inputs[0]);
                const int64_t cb = spec_find_channels(l.inputs[1]);
                ops::concat_backward(g, ca, cb, da, db);
                route_grad(l.inputs[0], std::move(da), grad, d_input);
                route_grad(l.inputs[1], std::move(db), grad, d_input);
                return;
            }
            case OpKind::reshape: {
                const Tensor<T>& xin = act_of(tr, src);
                dx = Tensor<T>(xin.dims(), std::vector<T>(g.data(), g.data() + g.size()));
                break;
            }
            case OpKind::gap:
                ops::gap_backward(g, l.in_resolution, l.in_resolution, dx);
                break;
            case OpKind::input:
                return;
        }
        if (need_dx) route_grad(src, std::move(dx), grad, d_input);
    }

    int64_t spec_find_channels(const std::string& name) const {
        if (name == "input") return spec_.input_channels;
        return spec_.find(name)->out_channels;
    }

    void route_grad(const std::string& src, Tensor<T>&& dx, std::map<std::string, Tensor<T>>& grad,
                    Tensor<T>* d_input) {
        if (src == "input") {
            if (d_input)
                for (int64_t i = 0; i < d_input->size(); ++i) (*d_input)[i] += dx[i];
            return;
        }
        add_grad(grad, src, std::move(dx));
    }

    NetworkSpec spec_;
    std::vector<LayerState> states_;
    std::vector<T> scratch_;
};

}  // namespace vesselgan

#endif
