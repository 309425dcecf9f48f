#ifndef VESSELGAN_IMAGING_PREPROCESS_HPP
#define VESSELGAN_IMAGING_PREPROCESS_HPP

#include <array>
#include <cmath>
#include <vector>

#include "vesselgan/imaging/image.hpp"

namespace vesselgan {

struct ImagingConfig {
    // The green channel carries most of the vessel contrast, so it gets the
    // dominant weight; the remainder splits evenly.
    std::array<double, 3> gray_weights = {0.25, 0.5, 0.25};
    bool clahe_enabled = true;
    double clahe_clip = 2.0;
    int64_t clahe_tile_rows = 8;
    int64_t clahe_tile_cols = 8;
    int64_t clahe_bins = 256;
    double gamma = 1.2;
    int64_t patch_size = 48;
    bool fov_filter = true;
};

// out(y,x) = w_r R + w_g G + w_b B, rescaled from 0..255 to [0,1].
inline GrayImage to_weighted_grayscale(const FundusImage& img,
                                       std::array<double, 3> weights = {0.25, 0.5, 0.25}) {
    if (img.pixels.rank() != 3 || img.pixels.dim(2) != 3)
        throw data_error(img.image_id + ": expected 3 channels, got " +
                         std::to_string(img.pixels.rank() == 3 ? img.pixels.dim(2) : -1));
    double sum = 0;
    for (double w : weights) {
        if (w < 0) throw config_error("grayscale weights must be nonnegative");
        sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-9) throw config_error("grayscale weights must sum to 1");

    const int64_t h = img.height(), w = img.width();
    GrayImage out;
    out.values = Tensor<float>({h, w});
    const uint8_t* p = img.pixels.data();
    for (int64_t i = 0; i < h * w; ++i) {
        const double v =
            weights[0] * p[3 * i] + weights[1] * p[3 * i + 1] + weights[2] * p[3 * i + 2];
        out.values[i] = static_cast<float>(v / 255.0);
    }
    return out;
}

// Contrast-limited adaptive histogram equalization in the [0,1] float domain.
//
// The image splits into tile_rows x tile_cols tiles (sizes differ by at most
// one pixel). Each tile takes a `bins`-bin histogram; counts above
// clip_limit * tile_pixels / bins move to the other bins in equal shares.
// A value in bin b maps to cdf(b) / tile_pixels, and per-pixel results blend
// the four surrounding tile mappings bilinearly by tile-center distance.
inline GrayImage clahe(const GrayImage& img, double clip_limit = 2.0, int64_t tile_rows = 8,
                       int64_t tile_cols = 8, int64_t bins = 256) {
    if (clip_limit <= 0) throw config_error("clahe: clip_limit must be positive");
    if (tile_rows < 1 || tile_cols < 1) throw config_error("clahe: tiles must be >= 1");
    const int64_t h = img.height(), w = img.width();
    if (h < tile_rows || w < tile_cols)
        throw config_error("clahe: image smaller than tile grid");
    if (img.range != ValueRange::unit) throw config_error("clahe: expects [0,1] input");

    auto bin_of = [&](float v) {
        int64_t b = static_cast<int64_t>(static_cast<double>(v) * static_cast<double>(bins));
        return std::min(std::max<int64_t>(b, 0), bins - 1);
    };
    auto tile_lo = [](int64_t idx, int64_t n_tiles, int64_t extent) {
        return idx * extent / n_tiles;
    };

    // Per-tile mapping tables bin -> equalized value.
    std::vector<std::vector<double>> mapping(
        static_cast<size_t>(tile_rows * tile_cols));
    std::vector<double> center_r(static_cast<size_t>(tile_rows));
    std::vector<double> center_c(static_cast<size_t>(tile_cols));
    for (int64_t tr = 0; tr < tile_rows; ++tr) {
        const int64_t r0 = tile_lo(tr, tile_rows, h), r1 = tile_lo(tr + 1, tile_rows, h);
        center_r[static_cast<size_t>(tr)] = (static_cast<double>(r0) + r1 - 1) / 2.0;
        for (int64_t tc = 0; tc < tile_cols; ++tc) {
            const int64_t c0 = tile_lo(tc, tile_cols, w), c1 = tile_lo(tc + 1, tile_cols, w);
            if (tr == 0) center_c[static_cast<size_t>(tc)] = (static_cast<double>(c0) + c1 - 1) / 2.0;
            std::vector<double> hist(static_cast<size_t>(bins), 0.0);
            for (int64_t r = r0; r < r1; ++r)
                for (int64_t c = c0; c < c1; ++c)
                    hist[static_cast<size_t>(bin_of(img.values[r * w + c]))] += 1.0;
            const double n = static_cast<double>((r1 - r0) * (c1 - c0));
            const double clip = clip_limit * n / static_cast<double>(bins);
            double excess = 0;
            for (double& bcount : hist) {
                if (bcount > clip) {
                    excess += bcount - clip;
                    bcount = clip;
                }
            }
            const double share = excess / static_cast<double>(bins);
            double cdf = 0;
            auto& map = mapping[static_cast<size_t>(tr * tile_cols + tc)];
            map.resize(static_cast<size_t>(bins));
            for (int64_t b = 0; b < bins; ++b) {
                cdf += hist[static_cast<size_t>(b)] + share;
                map[static_cast<size_t>(b)] = cdf / n;
            }
        }
    }

    GrayImage out;
    out.values = Tensor<float>({h, w});
    for (int64_t r = 0; r < h; ++r) {
        // Neighboring tile rows and vertical blend weight.
        int64_t tr1 = 0;
        while (tr1 + 1 < tile_rows && center_r[static_cast<size_t>(tr1 + 1)] <= r) ++tr1;
        int64_t tr2 = std::min(tr1 + 1, tile_rows - 1);
        double fr = 0.0;
        if (r > center_r[static_cast<size_t>(tr1)] && tr2 != tr1)
            fr = (r - center_r[static_cast<size_t>(tr1)]) /
                 (center_r[static_cast<size_t>(tr2)] - center_r[static_cast<size_t>(tr1)]);
        fr = std::min(std::max(fr, 0.0), 1.0);
        for (int64_t c = 0; c < w; ++c) {
            int64_t tc1 = 0;
            while (tc1 + 1 < tile_cols && center_c[static_cast<size_t>(tc1 + 1)] <= c) ++tc1;
            int64_t tc2 = std::min(tc1 + 1, tile_cols - 1);
            double fc = 0.0;
            if (c > center_c[static_cast<size_t>(tc1)] && tc2 != tc1)
                fc = (c - center_c[static_cast<size_t>(tc1)]) /
                     (center_c[static_cast<size_t>(tc2)] - center_c[static_cast<size_t>(tc1)]);
            fc = std::min(std::max(fc, 0.0), 1.0);
            const int64_t b = bin_of(img.values[r * w + c]);
            auto m = [&](int64_t tr, int64_t tc) {
                return mapping[static_cast<size_t>(tr * tile_cols + tc)][static_cast<size_t>(b)];
            };
            const double v = (1 - fr) * ((1 - fc) * m(tr1, tc1) + fc * m(tr1, tc2)) +
                             fr * ((1 - fc) * m(tr2, tc1) + fc * m(tr2, tc2));
            out.values[r * w + c] = static_cast<float>(std::min(std::max(v, 0.0), 1.0));
        }
    }
    return out;
}

// out = in^gamma elementwise.
inline GrayImage gamma_adjust(const GrayImage& img, double gamma) {
    if (gamma <= 0) throw config_error("gamma_adjust: gamma must be positive");
    if (img.range != ValueRange::unit) throw config_error("gamma_adjust: expects [0,1] input");
    GrayImage out;
    out.values = Tensor<float>(img.values.dims());
    for (int64_t i = 0; i < img.values.size(); ++i)
        out.values[i] = static_cast<float>(std::pow(static_cast<double>(img.values[i]), gamma));
    return out;
}

// Full pipeline: weighted grayscale, CLAHE, then gamma. The paper orders the
// two enhancement steps this way; it is configurable off per stage.
inline GrayImage preprocess(const FundusImage& img, const ImagingConfig& cfg = {}) {
    GrayImage g = to_weighted_grayscale(img, cfg.gray_weights);
    if (cfg.clahe_enabled)
        g = clahe(g, cfg.clahe_clip, cfg.clahe_tile_rows, cfg.clahe_tile_cols, cfg.clahe_bins);
    if (cfg.gamma != 1.0) g = gamma_adjust(g, cfg.gamma);
    return g;
}

}  // namespace vesselgan

#endif
