#ifndef VESSELGAN_DATASET_LOADERS_HPP
#define VESSELGAN_DATASET_LOADERS_HPP

#include <algorithm>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vesselgan/dataset/types.hpp"
#include "vesselgan/io/raster.hpp"

namespace vesselgan {

namespace fs = std::filesystem;

namespace loader_detail {

// Pairing key: the first digit run in the filename stem ("21_training" -> 21).
inline std::string numeric_key(const fs::path& p) {
    const std::string stem = p.stem().string();
    std::string digits;
    for (char c : stem) {
        if (std::isdigit(static_cast<unsigned char>(c)))
            digits.push_back(c);
        else if (!digits.empty())
            break;
    }
    // Strip leading zeros so 01 and 1 pair up.
    size_t i = 0;
    while (i + 1 < digits.size() && digits[i] == '0') ++i;
    return digits.substr(i);
}

inline std::map<std::string, fs::path> scan_dir(const fs::path& dir) {
    std::map<std::string, fs::path> out;
    if (!fs::exists(dir)) return out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string key = numeric_key(entry.path());
        if (!key.empty()) out[key] = entry.path();
    }
    return out;
}

inline Tensor<uint8_t> to_rgb(const io::Raster& r) {
    Tensor<uint8_t> out({r.height, r.width, 3});
    const int shift = r.bit_depth == 16 ? 8 : 0;
    for (int64_t i = 0; i < r.height * r.width; ++i)
        for (int64_t ch = 0; ch < 3; ++ch)
            out[3 * i + ch] = static_cast<uint8_t>(
                r.data[static_cast<size_t>(i * r.channels + (r.channels == 3 ? ch : 0))] >> shift);
    return out;
}

inline Tensor<uint8_t> to_mask(const io::Raster& r) {
    Tensor<uint8_t> out({r.height, r.width});
    const uint16_t half = r.max_value() / 2;
    for (int64_t i = 0; i < r.height * r.width; ++i) {
        uint32_t acc = 0;
        for (int64_t ch = 0; ch < r.channels; ++ch)
            acc += r.data[static_cast<size_t>(i * r.channels + ch)];
        out[i] = acc / static_cast<uint32_t>(r.channels) > half ? 1 : 0;
    }
    return out;
}

// Fallback field of view when no mask file ships with the dataset: pixels
// bright enough to hold anatomy.
inline Tensor<uint8_t> threshold_fov(const Tensor<uint8_t>& rgb, uint8_t threshold = 20) {
    Tensor<uint8_t> out({rgb.dim(0), rgb.dim(1)});
    for (int64_t i = 0; i < out.size(); ++i) {
        const uint32_t mean = (rgb[3 * i] + rgb[3 * i + 1] + rgb[3 * i + 2]) / 3;
        out[i] = mean > threshold ? 1 : 0;
    }
    return out;
}

inline FundusImage load_one(const fs::path& image, const fs::path* gt, const fs::path* mask,
                            const std::string& id, SplitTag split) {
    FundusImage img;
    img.image_id = id;
    img.split_tag = split;
    img.pixels = to_rgb(io::read_raster(image.string()));
    if (mask)
        img.fov_mask = to_mask(io::read_raster(mask->string()));
    else
        img.fov_mask = threshold_fov(img.pixels);
    if (gt) {
        img.vessel_gt = to_mask(io::read_raster(gt->string()));
        // Stray positive labels outside the mask would trip the invariant
        // check; clip them the way the evaluation protocol does.
        for (int64_t i = 0; i < img.vessel_gt.size(); ++i)
            if (!img.fov_mask[i]) img.vessel_gt[i] = 0;
    }
    img.check();
    return img;
}

inline std::vector<FundusImage> load_split(const fs::path& images_dir, const fs::path& gt_dir,
                                           const fs::path& mask_dir, const std::string& prefix,
                                           SplitTag split) {
    const auto images = scan_dir(images_dir);
    const auto gts = scan_dir(gt_dir);
    const auto masks = scan_dir(mask_dir);
    std::vector<FundusImage> out;
    for (const auto& [key, path] : images) {
        const auto g = gts.find(key);
        const auto m = masks.find(key);
        out.push_back(load_one(path, g != gts.end() ? &g->second : nullptr,
                               m != masks.end() ? &m->second : nullptr, prefix + key, split));
    }
    return out;
}

}  // namespace loader_detail

// DRIVE layout: <root>/training/{images,1st_manual,mask} and
// <root>/test/{images,1st_manual,mask}; 20 images on each side.
struct DriveDataset {
    std::vector<FundusImage> train;
    std::vector<FundusImage> test;
};

inline DriveDataset load_drive(const std::string& root) {
    const fs::path r(root);
    DriveDataset d;
    d.train = loader_detail::load_split(r / "training" / "images", r / "training" / "1st_manual",
                                        r / "training" / "mask", "drive_train_", SplitTag::train);
    d.test = loader_detail::load_split(r / "test" / "images", r / "test" / "1st_manual",
                                       r / "test" / "mask", "drive_test_", SplitTag::test);
    if (d.train.size() != 20 || d.test.size() != 20)
        throw data_error("drive dataset integrity: expected 20 train / 20 test images, found " +
                         std::to_string(d.train.size()) + "/" + std::to_string(d.test.size()));
    return d;
}

// STARE layout: <root>/{images,labels[,masks]}; 20 images, folds carve the
// train/test split.
inline std::vector<FundusImage> load_stare(const std::string& root) {
    const fs::path r(root);
    auto images = loader_detail::load_split(r / "images", r / "labels", r / "masks", "stare_",
                                            SplitTag::train);
    if (images.size() != 20)
        throw data_error("stare dataset integrity: expected 20 images, found " +
                         std::to_string(images.size()));
    return images;
}

}  // namespace vesselgan

#endif
