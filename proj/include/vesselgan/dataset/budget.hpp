#ifndef VESSELGAN_DATASET_BUDGET_HPP
#define VESSELGAN_DATASET_BUDGET_HPP

#include <algorithm>
#include <vector>

#include "vesselgan/dataset/types.hpp"
#include "vesselgan/imaging/patches.hpp"
#include "vesselgan/imaging/preprocess.hpp"

namespace vesselgan {

// 1-held-out protocol: a single seeded permutation gives every image exactly
// one turn as the test image, so the 20 folds partition the set.
inline std::vector<FoldDescriptor> stare_holdout_folds(int64_t image_count, uint64_t fold_seed) {
    if (image_count != 20)
        throw data_error("stare protocol expects 20 images, found " +
                         std::to_string(image_count));
    Rng rng(derive_seed(fold_seed, 0x666f6c64));
    std::vector<int64_t> perm(static_cast<size_t>(image_count));
    for (int64_t i = 0; i < image_count; ++i) perm[static_cast<size_t>(i)] = i;
    rng.shuffle(perm);
    std::vector<FoldDescriptor> folds;
    for (int64_t f = 0; f < image_count; ++f) {
        FoldDescriptor d;
        d.fold_index = f;
        d.test_image = perm[static_cast<size_t>(f)];
        for (int64_t i = 0; i < image_count; ++i)
            if (i != d.test_image) d.train_images.push_back(i);
        folds.push_back(std::move(d));
    }
    return folds;
}

// Even split of `total` across `parts`: first (total % parts) parts get one
// extra, so counts differ by at most 1.
inline std::vector<int64_t> even_allocation(int64_t total, int64_t parts) {
    std::vector<int64_t> out(static_cast<size_t>(parts), total / parts);
    for (int64_t i = 0; i < total % parts; ++i) ++out[static_cast<size_t>(i)];
    return out;
}

// Draws the labeled budget from a seeded M-image subset and the unlabeled
// pool from all training images. Labeled and unlabeled picks inside one image
// come from a single without-replacement draw, so their identities never
// collide.
inline SplitPatchSet sample_budget(const std::vector<PreparedImage>& train, const BudgetPlan& plan,
                                   const ImagingConfig& cfg = {},
                                   int64_t unlabeled_pool_size = 20000) {
    const int64_t n = static_cast<int64_t>(train.size());
    if (n == 0) throw data_error("sample_budget: empty training pool");
    if (plan.pool < 1 || plan.pool > n)
        throw config_error("sample_budget: pool must lie in [1, " + std::to_string(n) + "]");
    if (plan.budget < 0) throw config_error("sample_budget: negative budget");

    Rng pick_rng(derive_seed(plan.seed, 0x706f6f6c));
    const auto chosen = pick_rng.sample_without_replacement(n, plan.pool);
    const auto labeled_per = even_allocation(plan.budget, plan.pool);
    const auto unlabeled_per = even_allocation(unlabeled_pool_size, n);

    std::vector<int64_t> labeled_count(static_cast<size_t>(n), 0);
    for (int64_t i = 0; i < plan.pool; ++i)
        labeled_count[static_cast<size_t>(chosen[static_cast<size_t>(i)])] =
            labeled_per[static_cast<size_t>(i)];

    SplitPatchSet out;
    out.plan = plan;
    for (int64_t i = 0; i < n; ++i) {
        const PreparedImage& img = train[static_cast<size_t>(i)];
        out.image_ids.push_back(img.id);
        const int64_t n_lab = labeled_count[static_cast<size_t>(i)];
        int64_t n_unl = unlabeled_per[static_cast<size_t>(i)];
        if (n_lab == 0 && n_unl == 0) continue;
        if (n_lab > 0 && img.gt.empty())
            throw data_error("sample_budget: image " + img.id + " has no ground truth");

        auto corners = admissible_corners(img.gray.height(), img.gray.width(), cfg.patch_size,
                                          cfg.fov_filter ? &img.fov : nullptr);
        const int64_t avail = static_cast<int64_t>(corners.size());
        if (n_lab > avail)
            throw sampler_error("sample_budget: image " + img.id + " admits only " +
                                std::to_string(avail) + " patches, budget share is " +
                                std::to_string(n_lab));
        n_unl = std::min(n_unl, avail - n_lab);

        Rng rng(derive_seed(plan.seed, 0x70617463, static_cast<uint64_t>(i)));
        const auto picks = rng.sample_without_replacement(avail, n_lab + n_unl);
        for (int64_t j = 0; j < n_lab + n_unl; ++j) {
            const auto [r0, c0] = corners[static_cast<size_t>(picks[static_cast<size_t>(j)])];
            const bool labeled = j < n_lab;
            Patch p = cut_patch(img.gray, labeled ? &img.gt : nullptr, r0, c0, cfg.patch_size,
                                img.id);
            (labeled ? out.labeled : out.unlabeled).push_back(std::move(p));
        }
    }
    return out;
}

}  // namespace vesselgan

#endif
