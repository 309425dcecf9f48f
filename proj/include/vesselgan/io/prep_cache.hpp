#ifndef VESSELGAN_IO_PREP_CACHE_HPP
#define VESSELGAN_IO_PREP_CACHE_HPP

#include <zlib.h>

#include <filesystem>
#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "vesselgan/dataset/types.hpp"
#include "vesselgan/io/raster.hpp"

namespace vesselgan::io {

namespace fs = std::filesystem;

inline uint32_t crc32_of_file(const std::string& path) {
    const auto bytes = read_bytes(path);
    return static_cast<uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()),
                static_cast<uInt>(bytes.size())));
}

// Preprocessed-image cache: one 16-bit gray PNG per image plus ground-truth
// and FOV mask PNGs, indexed by a manifest with one record per image
// (id, split, checksum of the gray PNG).
inline void save_prepared(const std::string& dir, const std::vector<PreparedImage>& images) {
    fs::create_directories(dir);
    nlohmann::json manifest = nlohmann::json::array();
    for (const auto& img : images) {
        Raster gray;
        gray.height = img.gray.height();
        gray.width = img.gray.width();
        gray.channels = 1;
        gray.bit_depth = 16;
        gray.data.resize(static_cast<size_t>(gray.height * gray.width));
        for (int64_t i = 0; i < img.gray.values.size(); ++i)
            gray.data[static_cast<size_t>(i)] =
                static_cast<uint16_t>(std::min(std::max(img.gray.values[i], 0.0f), 1.0f) * 65535.0f +
                                      0.5f);
        const std::string gray_path = (fs::path(dir) / (img.id + ".png")).string();
        write_png(gray_path, gray);

        auto mask_raster = [](const Tensor<uint8_t>& m) {
            Raster r;
            r.height = m.dim(0);
            r.width = m.dim(1);
            r.channels = 1;
            r.bit_depth = 8;
            r.data.resize(static_cast<size_t>(m.size()));
            for (int64_t i = 0; i < m.size(); ++i) r.data[static_cast<size_t>(i)] = m[i] ? 255 : 0;
            return r;
        };
        write_png((fs::path(dir) / (img.id + "_fov.png")).string(), mask_raster(img.fov));
        if (!img.gt.empty())
            write_png((fs::path(dir) / (img.id + "_gt.png")).string(), mask_raster(img.gt));

        manifest.push_back({{"id", img.id},
                            {"split", img.split == SplitTag::train ? "train" : "test"},
                            {"checksum", crc32_of_file(gray_path)}});
    }
    std::ofstream out(fs::path(dir) / "manifest.json");
    out << manifest.dump(2) << "\n";
}

inline std::vector<PreparedImage> load_prepared(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "manifest.json");
    if (!in.good()) throw data_error("prep cache manifest missing in " + dir);
    nlohmann::json manifest;
    in >> manifest;
    std::vector<PreparedImage> out;
    for (const auto& rec : manifest) {
        PreparedImage img;
        img.id = rec.at("id").get<std::string>();
        img.split = rec.at("split").get<std::string>() == "test" ? SplitTag::test : SplitTag::train;
        const std::string gray_path = (fs::path(dir) / (img.id + ".png")).string();
        if (rec.contains("checksum") && crc32_of_file(gray_path) != rec["checksum"].get<uint32_t>())
            throw data_error(img.id + ": prep cache checksum mismatch");
        const Raster gray = read_raster(gray_path);
        img.gray.values = Tensor<float>({gray.height, gray.width});
        const float scale = 1.0f / static_cast<float>(gray.max_value());
        for (int64_t i = 0; i < img.gray.values.size(); ++i)
            img.gray.values[i] = static_cast<float>(gray.data[static_cast<size_t>(i)]) * scale;

        auto read_mask = [&](const std::string& suffix, Tensor<uint8_t>& dst) {
            const fs::path p = fs::path(dir) / (img.id + suffix);
            if (!fs::exists(p)) return false;
            const Raster m = read_raster(p.string());
            dst = Tensor<uint8_t>({m.height, m.width});
            for (int64_t i = 0; i < dst.size(); ++i)
                dst[i] = m.data[static_cast<size_t>(i * m.channels)] > m.max_value() / 2 ? 1 : 0;
            return true;
        };
        if (!read_mask("_fov.png", img.fov)) {
            img.fov = Tensor<uint8_t>({gray.height, gray.width});
            img.fov.fill(1);
        }
        read_mask("_gt.png", img.gt);
        out.push_back(std::move(img));
    }
    return out;
}

}  // namespace vesselgan::io

#endif
