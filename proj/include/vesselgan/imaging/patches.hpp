#ifndef VESSELGAN_IMAGING_PATCHES_HPP
#define VESSELGAN_IMAGING_PATCHES_HPP

#include <string>
#include <vector>

#include "vesselgan/core/rng.hpp"
#include "vesselgan/imaging/image.hpp"

namespace vesselgan {

// Raised when a sampler cannot honor a without-replacement request.
struct sampler_error : error {
    using error::error;
};

// All top-left corners whose full window fits the image, restricted (when a
// FOV mask is given) to windows whose center pixel is inside the mask.
inline std::vector<std::pair<int64_t, int64_t>> admissible_corners(
    int64_t h, int64_t w, int64_t size, const Tensor<uint8_t>* fov) {
    std::vector<std::pair<int64_t, int64_t>> out;
    out.reserve(static_cast<size_t>((h - size + 1) * (w - size + 1)));
    for (int64_t r = 0; r + size <= h; ++r)
        for (int64_t c = 0; c + size <= w; ++c) {
            if (fov && !(*fov)[(r + size / 2) * w + (c + size / 2)]) continue;
            out.emplace_back(r, c);
        }
    return out;
}

inline Patch cut_patch(const GrayImage& img, const Tensor<uint8_t>* gt, int64_t r0, int64_t c0,
                       int64_t size, const std::string& source_id) {
    Patch p;
    p.values = Tensor<float>({size, size});
    const int64_t w = img.width();
    for (int64_t r = 0; r < size; ++r)
        for (int64_t c = 0; c < size; ++c)
            p.values[r * size + c] = img.values[(r0 + r) * w + (c0 + c)];
    if (gt) {
        p.label = Tensor<uint8_t>({size, size});
        for (int64_t r = 0; r < size; ++r)
            for (int64_t c = 0; c < size; ++c)
                p.label[r * size + c] = (*gt)[(r0 + r) * w + (c0 + c)] ? 1 : 0;
    }
    p.center_row = r0 + size / 2;
    p.center_col = c0 + size / 2;
    p.source_id = source_id;
    return p;
}

// `count` patches at uniform-random admissible centers, sampled without
// replacement; deterministic for a given seed.
inline std::vector<Patch> extract_patches(const GrayImage& img, const Tensor<uint8_t>* gt,
                                          int64_t count, int64_t size, uint64_t rng_seed,
                                          const Tensor<uint8_t>* fov = nullptr,
                                          const std::string& source_id = "") {
    if (count < 0) throw config_error("extract_patches: negative count");
    if (size > img.height() || size > img.width())
        throw config_error("extract_patches: patch size exceeds image");
    if (gt && (gt->dim(0) != img.height() || gt->dim(1) != img.width()))
        throw data_error("extract_patches: ground truth dims differ from image");
    if (count == 0) return {};

    auto corners = admissible_corners(img.height(), img.width(), size, fov);
    if (count > static_cast<int64_t>(corners.size()))
        throw sampler_error("extract_patches: requested " + std::to_string(count) +
                            " patches but only " + std::to_string(corners.size()) +
                            " admissible centers exist");

    Rng rng(rng_seed);
    const auto picks = rng.sample_without_replacement(static_cast<int64_t>(corners.size()), count);
    std::vector<Patch> out;
    out.reserve(static_cast<size_t>(count));
    for (int64_t idx : picks) {
        const auto [r0, c0] = corners[static_cast<size_t>(idx)];
        out.push_back(cut_patch(img, gt, r0, c0, size, source_id));
    }
    return out;
}

}  // namespace vesselgan

#endif
