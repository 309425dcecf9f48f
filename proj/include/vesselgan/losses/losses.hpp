#ifndef VESSELGAN_LOSSES_LOSSES_HPP
#define VESSELGAN_LOSSES_LOSSES_HPP

#include <cmath>
#include <string>

#include "vesselgan/core/tensor.hpp"

namespace vesselgan {

// Per-step objective values. l_d is the exact sum of its three components.
struct LossReport {
    double l_sup = 0.0;
    double l_adv = 0.0;
    double l_unsup = 0.0;
    double l_d = 0.0;
    double l_g = 0.0;
    int64_t step = 0;
    int64_t epoch = 0;
    int64_t n_labeled = 0;
    int64_t n_unlabeled = 0;
    int64_t n_fake = 0;
    std::string matching_layer;
    bool sup_skipped = false;
};

namespace losses {

inline constexpr double kProbFloor = 1e-12;

// A logit field holds two semantic-class logits per position (trailing dim);
// the fake class carries an implicit logit fixed at 0. Positions are samples
// for the center-pixel head and pixels for the structured head.
inline int64_t positions_of(const std::vector<int64_t>& dims) {
    int64_t p = 1;
    for (size_t i = 0; i + 1 < dims.size(); ++i) p *= dims[i];
    return p;
}

// Stable per-position quantities for the K+1 reduction with l_fake = 0.
struct PositionProbs {
    double d;        // D(x) = S / (S + 1), S = sum_k exp(l_k)
    double p_fake;   // 1 - D(x)
    double sem[2];   // softmax over semantic logits
    double full[2];  // softmax over {l_0, l_1, 0}
};

inline PositionProbs position_probs(double l0, double l1) {
    const double m = std::max({l0, l1, 0.0});
    const double e0 = std::exp(l0 - m), e1 = std::exp(l1 - m), ef = std::exp(-m);
    const double denom_full = e0 + e1 + ef;
    const double denom_sem = e0 + e1;
    PositionProbs p;
    p.d = denom_sem / denom_full;
    p.p_fake = ef / denom_full;
    p.sem[0] = e0 / denom_sem;
    p.sem[1] = e1 / denom_sem;
    p.full[0] = e0 / denom_full;
    p.full[1] = e1 / denom_full;
    return p;
}

inline double clamp_prob(double p) {
    return std::min(std::max(p, kProbFloor), 1.0 - kProbFloor);
}

// D(x) per position, the K-node closed form of the K+1 discriminator output.
template <typename T>
Tensor<double> real_probability(const Tensor<T>& logits) {
    if (!logits.all_finite()) throw numeric_error("real_probability: non-finite logits");
    const int64_t pos = positions_of(logits.dims());
    std::vector<int64_t> out_dims(logits.dims().begin(), logits.dims().end() - 1);
    Tensor<double> out(out_dims);
    for (int64_t i = 0; i < pos; ++i) {
        const auto p = position_probs(logits[2 * i], logits[2 * i + 1]);
        out[i] = p.d;
    }
    return out;
}

// Mean negative log-likelihood of the true semantic class (conditioned on the
// sample being real, so the softmax runs over the two semantic logits only).
// labels: one class index per position, dims = logits dims minus the class dim.
template <typename T>
double supervised_loss(const Tensor<T>& logits, const Tensor<uint8_t>& labels,
                       Tensor<T>* d_logits = nullptr) {
    const int64_t pos = positions_of(logits.dims());
    if (labels.size() != pos)
        throw config_error("supervised_loss: labels do not match logit positions");
    if (d_logits) *d_logits = Tensor<T>(logits.dims());
    const double inv = 1.0 / static_cast<double>(pos);
    double total = 0;
    for (int64_t i = 0; i < pos; ++i) {
        const auto p = position_probs(logits[2 * i], logits[2 * i + 1]);
        const int y = labels[i] ? 1 : 0;
        total -= std::log(clamp_prob(p.sem[y]));
        if (d_logits) {
            (*d_logits)[2 * i] = static_cast<T>((p.sem[0] - (y == 0 ? 1.0 : 0.0)) * inv);
            (*d_logits)[2 * i + 1] = static_cast<T>((p.sem[1] - (y == 1 ? 1.0 : 0.0)) * inv);
        }
    }
    return total * inv;
}

// -mean log p(fake | x) on generated samples.
template <typename T>
double adversarial_loss(const Tensor<T>& fake_logits, Tensor<T>* d_logits = nullptr) {
    const int64_t pos = positions_of(fake_logits.dims());
    if (d_logits) *d_logits = Tensor<T>(fake_logits.dims());
    const double inv = 1.0 / static_cast<double>(pos);
    double total = 0;
    for (int64_t i = 0; i < pos; ++i) {
        const auto p = position_probs(fake_logits[2 * i], fake_logits[2 * i + 1]);
        const double pf = clamp_prob(p.p_fake);
        total -= std::log(pf);
        if (d_logits && p.p_fake > kProbFloor && p.p_fake < 1.0 - kProbFloor) {
            (*d_logits)[2 * i] = static_cast<T>(p.full[0] * inv);
            (*d_logits)[2 * i + 1] = static_cast<T>(p.full[1] * inv);
        }
    }
    return total * inv;
}

// -mean log D(x) on real unlabeled samples.
template <typename T>
double unsupervised_loss(const Tensor<T>& real_logits, Tensor<T>* d_logits = nullptr) {
    const int64_t pos = positions_of(real_logits.dims());
    if (d_logits) *d_logits = Tensor<T>(real_logits.dims());
    const double inv = 1.0 / static_cast<double>(pos);
    double total = 0;
    for (int64_t i = 0; i < pos; ++i) {
        const auto p = position_probs(real_logits[2 * i], real_logits[2 * i + 1]);
        total -= std::log(clamp_prob(p.d));
        if (d_logits && p.d > kProbFloor && p.d < 1.0 - kProbFloor) {
            (*d_logits)[2 * i] = static_cast<T>((p.full[0] - p.sem[0]) * inv);
            (*d_logits)[2 * i + 1] = static_cast<T>((p.full[1] - p.sem[1]) * inv);
        }
    }
    return total * inv;
}

// Vanilla generator objective. The saturation-safe form drives -log D(fake)
// down; raw reproduces the literal -L_adv.
template <typename T>
double generator_loss_vanilla(const Tensor<T>& fake_logits, bool safe_form = true,
                              Tensor<T>* d_logits = nullptr) {
    if (safe_form) return unsupervised_loss(fake_logits, d_logits);
    const double l = -adversarial_loss(fake_logits, d_logits);
    if (d_logits)
        for (int64_t i = 0; i < d_logits->size(); ++i) (*d_logits)[i] = -(*d_logits)[i];
    return l;
}

// Squared L2 distance between batch-mean activations; expectation is taken
// before the distance. Gradient flows to the fake batch.
template <typename T>
double feature_matching_loss(const Tensor<T>& real_acts, const Tensor<T>& fake_acts,
                             Tensor<T>* d_fake = nullptr) {
    const int64_t nr = real_acts.dim(0), nf = fake_acts.dim(0);
    const int64_t er = real_acts.size() / nr, ef = fake_acts.size() / nf;
    if (er != ef) throw config_error("feature_matching_loss: feature shape mismatch");
    std::vector<double> mu_r(static_cast<size_t>(er), 0.0), mu_f(static_cast<size_t>(er), 0.0);
    for (int64_t n = 0; n < nr; ++n)
        for (int64_t e = 0; e < er; ++e) mu_r[static_cast<size_t>(e)] += real_acts[n * er + e];
    for (int64_t n = 0; n < nf; ++n)
        for (int64_t e = 0; e < er; ++e) mu_f[static_cast<size_t>(e)] += fake_acts[n * er + e];
    double loss = 0;
    for (int64_t e = 0; e < er; ++e) {
        mu_r[static_cast<size_t>(e)] /= static_cast<double>(nr);
        mu_f[static_cast<size_t>(e)] /= static_cast<double>(nf);
        const double d = mu_r[static_cast<size_t>(e)] - mu_f[static_cast<size_t>(e)];
        loss += d * d;
    }
    if (d_fake) {
        *d_fake = Tensor<T>(fake_acts.dims());
        for (int64_t n = 0; n < nf; ++n)
            for (int64_t e = 0; e < er; ++e)
                (*d_fake)[n * er + e] = static_cast<T>(
                    2.0 * (mu_f[static_cast<size_t>(e)] - mu_r[static_cast<size_t>(e)]) /
                    static_cast<double>(nf));
    }
    return loss;
}

}  // namespace losses
}  // namespace vesselgan

#endif
