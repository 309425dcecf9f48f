#ifndef VESSELGAN_TRAINER_TRAINER_HPP
#define VESSELGAN_TRAINER_TRAINER_HPP

#include <functional>
#include <optional>
#include <vector>

#include "vesselgan/dataset/types.hpp"
#include "vesselgan/eval/auc.hpp"
#include "vesselgan/eval/stitch.hpp"
#include "vesselgan/losses/losses.hpp"
#include "vesselgan/trainer/adam.hpp"
#include "vesselgan/trainer/config.hpp"

namespace vesselgan {

template <typename T>
struct GanModel {
    TrainConfig cfg;
    Network<T> d;
    Network<T> g;
    Adam<T> opt_d;
    Adam<T> opt_g;
    int64_t step = 0;

    static GanModel create(const TrainConfig& cfg) {
        cfg.validate();
        GanModel m;
        m.cfg = cfg;
        auto dspec = build_discriminator(cfg.pooling, cfg.norm, cfg.head, cfg.dropout_keep);
        for (auto& l : dspec.layers)
            if (l.op == OpKind::upsample) l.upsample_mode = cfg.upsample;
        m.d = Network<T>(dspec, derive_seed(cfg.seed, 0xd15c));
        m.g = Network<T>(build_generator(cfg.z_dim, cfg.patch_size),
                         derive_seed(cfg.seed, 0x67656e));
        m.opt_d = Adam<T>(cfg.lr_d, cfg.adam_beta1, cfg.adam_beta2);
        m.opt_g = Adam<T>(cfg.lr_g, cfg.adam_beta1, cfg.adam_beta2);
        return m;
    }
};

// ---------------------------------------------------------------------------
// Batch assembly. Patch values are stored in [0,1] and fed to the networks in
// the generator's tanh range [-1,1].
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> patch_batch(const std::vector<const Patch*>& patches, int64_t size) {
    Tensor<T> out({static_cast<int64_t>(patches.size()), size, size, 1});
    for (size_t b = 0; b < patches.size(); ++b) {
        if (patches[b]->values.size() != size * size)
            throw config_error("patch_batch: patch size mismatch");
        for (int64_t i = 0; i < size * size; ++i)
            out[static_cast<int64_t>(b) * size * size + i] =
                static_cast<T>(to_net_range(patches[b]->values[i]));
    }
    return out;
}

// Structured head: full label grids. Center-pixel head: the center label.
inline Tensor<uint8_t> label_batch(const std::vector<const Patch*>& patches, int64_t size,
                                   HeadKind head) {
    if (head == HeadKind::structured) {
        Tensor<uint8_t> out({static_cast<int64_t>(patches.size()), size, size});
        for (size_t b = 0; b < patches.size(); ++b) {
            if (!patches[b]->labeled()) throw config_error("label_batch: unlabeled patch");
            for (int64_t i = 0; i < size * size; ++i)
                out[static_cast<int64_t>(b) * size * size + i] = patches[b]->label[i];
        }
        return out;
    }
    Tensor<uint8_t> out({static_cast<int64_t>(patches.size())});
    const int64_t center = (size / 2) * size + size / 2;
    for (size_t b = 0; b < patches.size(); ++b) {
        if (!patches[b]->labeled()) throw config_error("label_batch: unlabeled patch");
        out[static_cast<int64_t>(b)] = patches[b]->label[center];
    }
    return out;
}

// z ~ U[-1,1]^d.
template <typename T>
Tensor<T> latent_batch(int64_t n, int64_t dim, Rng& rng) {
    Tensor<T> z({n, dim});
    for (int64_t i = 0; i < z.size(); ++i) z[i] = static_cast<T>(rng.next_real(-1.0, 1.0));
    return z;
}

// ---------------------------------------------------------------------------
// Alternating optimization steps.
// ---------------------------------------------------------------------------

// One Adam update of the discriminator against L_D = L_sup + L_adv + L_unsup.
// Generator parameters are not touched. An empty labeled batch skips the
// supervised term and flags the report.
template <typename T>
LossReport discriminator_step(GanModel<T>& model, const Tensor<T>& labeled,
                              const Tensor<uint8_t>& labels, const Tensor<T>& unlabeled,
                              const Tensor<T>& z) {
    const TrainConfig& cfg = model.cfg;
    LossReport report;
    report.matching_layer = cfg.generator_objective == GenObjective::feature_matching
                                ? cfg.matching_layer
                                : "";
    Rng drop_rng(derive_seed(cfg.seed, 0xd0d0, static_cast<uint64_t>(model.step)));
    model.d.zero_grads();

    if (!labeled.empty() && labeled.dim(0) > 0) {
        report.n_labeled = labeled.dim(0);
        ForwardTrace<T> tr;
        model.d.forward(labeled, {}, true, &drop_rng, &tr);
        Tensor<T> dlogits;
        report.l_sup =
            cfg.w_sup * losses::supervised_loss(tr.outputs.at(model.d.spec().output_layer),
                                                labels, &dlogits);
        if (cfg.w_sup != 1.0)
            for (int64_t i = 0; i < dlogits.size(); ++i)
                dlogits[i] = static_cast<T>(dlogits[i] * cfg.w_sup);
        model.d.backward(tr, dlogits);
    } else {
        report.sup_skipped = true;
    }

    if (cfg.unsup_enabled && !unlabeled.empty() && unlabeled.dim(0) > 0) {
        report.n_unlabeled = unlabeled.dim(0);
        ForwardTrace<T> tr;
        model.d.forward(unlabeled, {}, true, &drop_rng, &tr);
        Tensor<T> dlogits;
        report.l_unsup =
            cfg.w_unsup * losses::unsupervised_loss(tr.outputs.at(model.d.spec().output_layer),
                                                    &dlogits);
        if (cfg.w_unsup != 1.0)
            for (int64_t i = 0; i < dlogits.size(); ++i)
                dlogits[i] = static_cast<T>(dlogits[i] * cfg.w_unsup);
        model.d.backward(tr, dlogits);
    }

    if (cfg.adv_enabled && !z.empty() && z.dim(0) > 0) {
        report.n_fake = z.dim(0);
        const auto fake = model.g.forward(z).logits;  // generator frozen here
        ForwardTrace<T> tr;
        model.d.forward(fake, {}, true, &drop_rng, &tr);
        Tensor<T> dlogits;
        report.l_adv = cfg.w_adv * losses::adversarial_loss(
                                       tr.outputs.at(model.d.spec().output_layer), &dlogits);
        if (cfg.w_adv != 1.0)
            for (int64_t i = 0; i < dlogits.size(); ++i)
                dlogits[i] = static_cast<T>(dlogits[i] * cfg.w_adv);
        model.d.backward(tr, dlogits);
    }

    report.l_d = report.l_sup + report.l_adv + report.l_unsup;
    model.opt_d.step(model.d.parameters());
    return report;
}

// One Adam update of the generator; the discriminator only supplies
// activations and gradients and keeps its parameters.
template <typename T>
LossReport generator_step(GanModel<T>& model, const Tensor<T>& z, const Tensor<T>& real_batch) {
    const TrainConfig& cfg = model.cfg;
    LossReport report;
    Rng drop_rng(derive_seed(cfg.seed, 0x9090, static_cast<uint64_t>(model.step)));

    ForwardTrace<T> tr_g;
    model.g.forward(z, {}, false, nullptr, &tr_g);
    const Tensor<T>& fake = tr_g.outputs.at(model.g.spec().output_layer);

    model.d.zero_grads();
    model.g.zero_grads();
    Tensor<T> d_fake_input;

    if (cfg.generator_objective == GenObjective::feature_matching) {
        if (real_batch.empty() || real_batch.dim(0) == 0)
            throw config_error("generator_step: feature matching needs a real batch");
        report.matching_layer = cfg.matching_layer;
        // Independent dropout draws for the two passes.
        const auto real_res = model.d.forward(real_batch, {cfg.matching_layer}, true, &drop_rng);
        ForwardTrace<T> tr_d;
        const auto fake_res =
            model.d.forward(fake, {cfg.matching_layer}, true, &drop_rng, &tr_d);
        Tensor<T> d_acts;
        report.l_g = losses::feature_matching_loss(real_res.activations.at(cfg.matching_layer),
                                                   fake_res.activations.at(cfg.matching_layer),
                                                   &d_acts);
        std::map<std::string, Tensor<T>> extra;
        extra[cfg.matching_layer] = std::move(d_acts);
        d_fake_input = model.d.backward(tr_d, Tensor<T>{}, &extra, true);
    } else {
        ForwardTrace<T> tr_d;
        model.d.forward(fake, {}, true, &drop_rng, &tr_d);
        Tensor<T> dlogits;
        report.l_g = losses::generator_loss_vanilla(tr_d.outputs.at(model.d.spec().output_layer),
                                                    !cfg.generator_raw_form, &dlogits);
        d_fake_input = model.d.backward(tr_d, dlogits, nullptr, true);
    }

    model.g.backward(tr_g, d_fake_input);
    model.opt_g.step(model.g.parameters());
    report.n_fake = z.dim(0);
    return report;
}

// ---------------------------------------------------------------------------
// Full alternating loop.
// ---------------------------------------------------------------------------

template <typename T>
struct TrainResult {
    GanModel<T> model;
    Network<T> best_d;          // highest validation AUC (final weights if no val)
    double best_val_auc = -1.0;
    std::vector<LossReport> log;
    std::vector<double> val_auc;  // one entry per epoch (NaN when no val split)
    bool aborted = false;
};

// Cycles an index sequence with a seeded reshuffle at every wrap.
class BatchCycler {
  public:
    BatchCycler(int64_t n, uint64_t seed) : n_(n), seed_(seed) { reshuffle(); }

    std::vector<int64_t> next(int64_t count) {
        std::vector<int64_t> out;
        if (n_ == 0) return out;
        while (count-- > 0) {
            if (pos_ == n_) reshuffle();
            out.push_back(order_[static_cast<size_t>(pos_++)]);
        }
        return out;
    }

  private:
    void reshuffle() {
        order_.resize(static_cast<size_t>(n_));
        for (int64_t i = 0; i < n_; ++i) order_[static_cast<size_t>(i)] = i;
        Rng rng(derive_seed(seed_, 0x5548, static_cast<uint64_t>(round_++)));
        rng.shuffle(order_);
        pos_ = 0;
    }
    int64_t n_, pos_ = 0, round_ = 0;
    uint64_t seed_;
    std::vector<int64_t> order_;
};

// Per-epoch validation: pooled pixel AUC (structured) or center-pixel AUC
// over the held-out labeled slice.
template <typename T>
double validation_auc(GanModel<T>& model, const std::vector<const Patch*>& val) {
    if (val.empty()) return std::numeric_limits<double>::quiet_NaN();
    const int64_t size = model.cfg.patch_size;
    std::vector<double> scores;
    std::vector<uint8_t> labels;
    const int64_t bs = 64;
    for (size_t start = 0; start < val.size(); start += static_cast<size_t>(bs)) {
        std::vector<const Patch*> chunk(
            val.begin() + static_cast<long>(start),
            val.begin() + static_cast<long>(std::min(start + static_cast<size_t>(bs), val.size())));
        const auto batch = patch_batch<T>(chunk, size);
        const auto res = model.d.forward(batch, {}, false, nullptr);
        if (model.cfg.head == HeadKind::structured) {
            for (size_t b = 0; b < chunk.size(); ++b)
                for (int64_t i = 0; i < size * size; ++i) {
                    scores.push_back(res.probs[(static_cast<int64_t>(b) * size * size + i) * 2 + 1]);
                    labels.push_back(chunk[b]->label[i]);
                }
        } else {
            const int64_t center = (size / 2) * size + size / 2;
            for (size_t b = 0; b < chunk.size(); ++b) {
                scores.push_back(res.probs[static_cast<int64_t>(b) * 2 + 1]);
                labels.push_back(chunk[b]->label[center]);
            }
        }
    }
    try {
        return auc_roc(scores, labels);
    } catch (const metric_error&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

using ProgressFn = std::function<void(int64_t epoch, int64_t step, const LossReport&)>;

// Alternates one discriminator and one generator update per iteration; an
// epoch is one pass over the unlabeled pool. Labeled batches cycle with
// reshuffling. Aborts (keeping the last epoch-end snapshot) if any loss goes
// non-finite.
template <typename T>
TrainResult<T> train(const SplitPatchSet& split, const TrainConfig& cfg,
                     const ProgressFn& progress = {}) {
    cfg.validate();
    if (split.unlabeled.empty()) throw config_error("train: unlabeled pool is empty");

    TrainResult<T> result;
    result.model = GanModel<T>::create(cfg);
    GanModel<T>& model = result.model;

    // Hold out a validation slice from the labeled budget.
    std::vector<int64_t> labeled_idx(split.labeled.size());
    for (size_t i = 0; i < split.labeled.size(); ++i) labeled_idx[i] = static_cast<int64_t>(i);
    Rng val_rng(derive_seed(cfg.seed, 0x7641));
    val_rng.shuffle(labeled_idx);
    int64_t val_count = 0;
    if (cfg.val_fraction > 0 && static_cast<int64_t>(split.labeled.size()) >= 10)
        val_count = std::min<int64_t>(
            static_cast<int64_t>(static_cast<double>(split.labeled.size()) * cfg.val_fraction),
            512);
    std::vector<const Patch*> val_patches;
    std::vector<int64_t> train_labeled;
    for (size_t i = 0; i < labeled_idx.size(); ++i) {
        if (static_cast<int64_t>(i) < val_count)
            val_patches.push_back(&split.labeled[static_cast<size_t>(labeled_idx[i])]);
        else
            train_labeled.push_back(labeled_idx[i]);
    }

    BatchCycler labeled_cycle(static_cast<int64_t>(train_labeled.size()),
                              derive_seed(cfg.seed, 1));
    BatchCycler unlabeled_cycle(static_cast<int64_t>(split.unlabeled.size()),
                                derive_seed(cfg.seed, 2));

    const int64_t iters_per_epoch =
        (static_cast<int64_t>(split.unlabeled.size()) + cfg.batch_size - 1) / cfg.batch_size;

    GanModel<T> last_good = model;
    result.best_d = model.d;

    for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (int64_t it = 0; it < iters_per_epoch; ++it) {
            // Last unlabeled batch of the epoch may be partial.
            const int64_t remaining = static_cast<int64_t>(split.unlabeled.size()) -
                                      it * cfg.batch_size;
            const int64_t un_count = std::min(cfg.batch_size, remaining);
            const auto un_idx = unlabeled_cycle.next(un_count);
            std::vector<const Patch*> un_ptrs;
            for (int64_t i : un_idx) un_ptrs.push_back(&split.unlabeled[static_cast<size_t>(i)]);
            const auto unlabeled = patch_batch<T>(un_ptrs, cfg.patch_size);

            Tensor<T> labeled;
            Tensor<uint8_t> labels;
            if (!train_labeled.empty()) {
                const auto lab_pos = labeled_cycle.next(cfg.batch_size);
                std::vector<const Patch*> lab_ptrs;
                for (int64_t i : lab_pos)
                    lab_ptrs.push_back(&split.labeled[static_cast<size_t>(
                        train_labeled[static_cast<size_t>(i)])]);
                labeled = patch_batch<T>(lab_ptrs, cfg.patch_size);
                labels = label_batch(lab_ptrs, cfg.patch_size, cfg.head);
            }

            Rng z_rng(derive_seed(cfg.seed, 0x7a7a, static_cast<uint64_t>(model.step)));
            const auto z_d = latent_batch<T>(cfg.batch_size, cfg.z_dim, z_rng);
            LossReport rep = discriminator_step(model, labeled, labels, unlabeled, z_d);

            const auto z_g = latent_batch<T>(cfg.batch_size, cfg.z_dim, z_rng);
            const LossReport grep = generator_step(model, z_g, unlabeled);
            rep.l_g = grep.l_g;
            rep.step = model.step;
            rep.epoch = epoch;
            ++model.step;

            if (!std::isfinite(rep.l_d) || !std::isfinite(rep.l_g)) {
                model = last_good;
                result.aborted = true;
                result.log.push_back(rep);
                return result;
            }
            result.log.push_back(rep);
            if (progress) progress(epoch, model.step, rep);
        }
        const double auc = validation_auc(model, val_patches);
        result.val_auc.push_back(auc);
        if (!std::isnan(auc) && auc > result.best_val_auc) {
            result.best_val_auc = auc;
            result.best_d = model.d;
        }
        last_good = model;
    }
    if (result.best_val_auc < 0) result.best_d = model.d;  // no validation split
    return result;
}

// Training log rows: one CSV line per iteration.
inline void write_log_csv(const std::string& path, const std::vector<LossReport>& log) {
    std::ofstream out(path);
    out << "step,epoch,l_sup,l_adv,l_unsup,l_d,l_g,matching_layer\n";
    for (const auto& r : log)
        out << r.step << "," << r.epoch << "," << r.l_sup << "," << r.l_adv << "," << r.l_unsup
            << "," << r.l_d << "," << r.l_g << "," << r.matching_layer << "\n";
}

}  // namespace vesselgan

#endif
