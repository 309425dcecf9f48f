#ifndef VESSELGAN_DATASET_SYNTHETIC_HPP
#define VESSELGAN_DATASET_SYNTHETIC_HPP

#include <cmath>
#include <filesystem>
#include <vector>

#include "vesselgan/core/rng.hpp"
#include "vesselgan/dataset/types.hpp"
#include "vesselgan/io/raster.hpp"

namespace vesselgan {

// Procedural fundus-like images: a circular field of view over a warm
// background with uneven illumination, crossed by branching dark vessels of
// decaying width. Deterministic per (id, seed). Used by tests, the demo
// dataset writer, and the desk-scale acceptance runs when no real dataset is
// mounted.
inline FundusImage make_synthetic_fundus(const std::string& id, int64_t h, int64_t w,
                                         uint64_t seed, SplitTag split = SplitTag::train) {
    Rng rng(derive_seed(seed, 0x73796e74));
    const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
    const double radius = 0.47 * std::min(h, w);

    FundusImage img;
    img.image_id = id;
    img.split_tag = split;
    img.pixels = Tensor<uint8_t>({h, w, 3});
    img.fov_mask = Tensor<uint8_t>({h, w});
    img.vessel_gt = Tensor<uint8_t>({h, w});

    // Illumination bumps.
    struct Bump {
        double y, x, sigma, amp;
    };
    std::vector<Bump> bumps;
    for (int i = 0; i < 4; ++i)
        bumps.push_back({rng.next_real(0, h), rng.next_real(0, w),
                         rng.next_real(0.15, 0.4) * std::min(h, w), rng.next_real(-18, 18)});

    // Vessel tree: darkness canvas (max over strokes) and the label mask.
    std::vector<float> shade(static_cast<size_t>(h * w), 0.0f);
    struct Walker {
        double y, x, theta, width, contrast;
    };
    std::vector<Walker> stack;
    const int n_roots = 5 + static_cast<int>(rng.next_below(3));
    for (int i = 0; i < n_roots; ++i) {
        const double ang = rng.next_real(0, 6.2831853);
        const double r0 = rng.next_real(0.05, 0.35) * radius;
        // Faint vessels make ranking nontrivial; strong ones anchor learning.
        const double contrast = i % 3 == 2 ? rng.next_real(0.12, 0.25)
                                           : rng.next_real(0.3, 0.55);
        stack.push_back({cy + r0 * std::sin(ang), cx + r0 * std::cos(ang),
                         rng.next_real(0, 6.2831853), rng.next_real(1.6, 2.8), contrast});
    }
    int vessels = 0;
    while (!stack.empty() && vessels < 28) {
        Walker v = stack.back();
        stack.pop_back();
        ++vessels;
        const int max_steps = static_cast<int>(3.5 * std::min(h, w));
        for (int step = 0; step < max_steps; ++step) {
            v.theta += rng.next_normal() * 0.11;
            v.y += std::sin(v.theta);
            v.x += std::cos(v.theta);
            v.width *= 0.9990;
            if (v.width < 0.55) break;
            const double dy = v.y - cy, dx = v.x - cx;
            if (std::sqrt(dy * dy + dx * dx) > radius - 2) break;
            if (rng.next_unit() < 0.006 && stack.size() < 24)
                stack.push_back({v.y, v.x, v.theta + (rng.next_unit() < 0.5 ? 0.7 : -0.7),
                                 v.width * 0.72, v.contrast});
            // Stamp an antialiased disc.
            const int64_t r_lo = std::max<int64_t>(0, static_cast<int64_t>(v.y - v.width - 1));
            const int64_t r_hi = std::min<int64_t>(h - 1, static_cast<int64_t>(v.y + v.width + 1));
            const int64_t c_lo = std::max<int64_t>(0, static_cast<int64_t>(v.x - v.width - 1));
            const int64_t c_hi = std::min<int64_t>(w - 1, static_cast<int64_t>(v.x + v.width + 1));
            for (int64_t r = r_lo; r <= r_hi; ++r)
                for (int64_t c = c_lo; c <= c_hi; ++c) {
                    const double d = std::hypot(r - v.y, c - v.x);
                    const double prof = std::min(std::max(v.width + 0.5 - d, 0.0), 1.0);
                    if (prof <= 0) continue;
                    auto& s = shade[static_cast<size_t>(r * w + c)];
                    s = std::max(s, static_cast<float>(prof * v.contrast));
                    if (d <= v.width * 0.9) img.vessel_gt[r * w + c] = 1;
                }
        }
    }

    for (int64_t r = 0; r < h; ++r)
        for (int64_t c = 0; c < w; ++c) {
            const double d = std::hypot(r - cy, c - cx);
            const bool inside = d <= radius;
            img.fov_mask[r * w + c] = inside ? 1 : 0;
            if (!inside) {
                img.vessel_gt[r * w + c] = 0;
                for (int ch = 0; ch < 3; ++ch) img.pixels[(r * w + c) * 3 + ch] = 0;
                continue;
            }
            double illum = 1.0 - 0.35 * (d / radius) * (d / radius);
            double bump_sum = 0;
            for (const auto& b : bumps) {
                const double dd = std::hypot(r - b.y, c - b.x);
                bump_sum += b.amp * std::exp(-dd * dd / (2 * b.sigma * b.sigma));
            }
            const double base[3] = {185, 112, 58};
            const double vessel_k[3] = {0.45, 0.75, 0.35};
            for (int ch = 0; ch < 3; ++ch) {
                const double s = shade[static_cast<size_t>(r * w + c)];
                double val = base[ch] * illum * (1.0 - s * vessel_k[ch]) + bump_sum +
                             rng.next_real(-9, 9);
                val = std::min(std::max(val, 0.0), 255.0);
                img.pixels[(r * w + c) * 3 + ch] = static_cast<uint8_t>(val + 0.5);
            }
        }
    img.check();
    return img;
}

namespace synth_detail {

inline io::Raster rgb_raster(const FundusImage& img) {
    io::Raster r;
    r.height = img.height();
    r.width = img.width();
    r.channels = 3;
    r.bit_depth = 8;
    r.data.assign(img.pixels.data(), img.pixels.data() + img.pixels.size());
    return r;
}

inline io::Raster mask_raster(const Tensor<uint8_t>& mask) {
    io::Raster r;
    r.height = mask.dim(0);
    r.width = mask.dim(1);
    r.channels = 1;
    r.bit_depth = 8;
    r.data.resize(static_cast<size_t>(mask.size()));
    for (int64_t i = 0; i < mask.size(); ++i)
        r.data[static_cast<size_t>(i)] = mask[i] ? 255 : 0;
    return r;
}

}  // namespace synth_detail

// Writes a DRIVE-layout synthetic dataset (20 train / 20 test by default).
inline void write_synthetic_drive(const std::string& root, int64_t size, uint64_t seed,
                                  int64_t n_train = 20, int64_t n_test = 20) {
    namespace fs = std::filesystem;
    for (const char* split : {"training", "test"}) {
        fs::create_directories(fs::path(root) / split / "images");
        fs::create_directories(fs::path(root) / split / "1st_manual");
        fs::create_directories(fs::path(root) / split / "mask");
    }
    char name[64];
    for (int64_t i = 0; i < n_train; ++i) {
        const auto img = make_synthetic_fundus("drive_train_" + std::to_string(21 + i), size, size,
                                               derive_seed(seed, 1, static_cast<uint64_t>(i)));
        std::snprintf(name, sizeof name, "%02lld_training.png", static_cast<long long>(21 + i));
        io::write_png((fs::path(root) / "training" / "images" / name).string(),
                      synth_detail::rgb_raster(img));
        std::snprintf(name, sizeof name, "%02lld_manual1.png", static_cast<long long>(21 + i));
        io::write_png((fs::path(root) / "training" / "1st_manual" / name).string(),
                      synth_detail::mask_raster(img.vessel_gt));
        std::snprintf(name, sizeof name, "%02lld_training_mask.png", static_cast<long long>(21 + i));
        io::write_png((fs::path(root) / "training" / "mask" / name).string(),
                      synth_detail::mask_raster(img.fov_mask));
    }
    for (int64_t i = 0; i < n_test; ++i) {
        const auto img = make_synthetic_fundus("drive_test_" + std::to_string(1 + i), size, size,
                                               derive_seed(seed, 2, static_cast<uint64_t>(i)),
                                               SplitTag::test);
        std::snprintf(name, sizeof name, "%02lld_test.png", static_cast<long long>(1 + i));
        io::write_png((fs::path(root) / "test" / "images" / name).string(),
                      synth_detail::rgb_raster(img));
        std::snprintf(name, sizeof name, "%02lld_manual1.png", static_cast<long long>(1 + i));
        io::write_png((fs::path(root) / "test" / "1st_manual" / name).string(),
                      synth_detail::mask_raster(img.vessel_gt));
        std::snprintf(name, sizeof name, "%02lld_test_mask.png", static_cast<long long>(1 + i));
        io::write_png((fs::path(root) / "test" / "mask" / name).string(),
                      synth_detail::mask_raster(img.fov_mask));
    }
}

// Writes a STARE-layout synthetic dataset (20 images, one flat pool).
inline void write_synthetic_stare(const std::string& root, int64_t size, uint64_t seed,
                                  int64_t count = 20) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(root) / "images");
    fs::create_directories(fs::path(root) / "labels");
    fs::create_directories(fs::path(root) / "masks");
    char name[64];
    for (int64_t i = 0; i < count; ++i) {
        const auto img = make_synthetic_fundus("stare_" + std::to_string(1 + i), size, size,
                                               derive_seed(seed, 3, static_cast<uint64_t>(i)));
        std::snprintf(name, sizeof name, "im%04lld.png", static_cast<long long>(1 + i));
        io::write_png((fs::path(root) / "images" / name).string(), synth_detail::rgb_raster(img));
        std::snprintf(name, sizeof name, "im%04lld.ah.png", static_cast<long long>(1 + i));
        io::write_png((fs::path(root) / "labels" / name).string(),
                      synth_detail::mask_raster(img.vessel_gt));
        std::snprintf(name, sizeof name, "im%04lld.mask.png", static_cast<long long>(1 + i));
        io::write_png((fs::path(root) / "masks" / name).string(),
                      synth_detail::mask_raster(img.fov_mask));
    }
}

}  // namespace vesselgan

#endif
