#ifndef VESSELGAN_IO_PATCHSET_HPP
#define VESSELGAN_IO_PATCHSET_HPP

#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vesselgan/imaging/image.hpp"

namespace vesselgan::io {

// VGPS container: magic, version, patch size, patch count, a JSON text header
// with plan metadata and the source-image id table, then fixed-size records.
// Each record stores float32 patch values followed by an 8-bit label plane;
// a plane of 0xFF marks an unlabeled patch.
inline constexpr char kPatchSetMagic[4] = {'V', 'G', 'P', 'S'};
inline constexpr uint32_t kPatchSetVersion = 1;

struct PatchSetFile {
    int64_t patch_size = 0;
    nlohmann::json meta;  // budget/pool/seed/... (free-form, written verbatim)
    std::vector<std::string> image_ids;
    std::vector<Patch> labeled;
    std::vector<Patch> unlabeled;
};

namespace detail {
inline void put_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<char*>(b), 4);
}
inline uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (b[1] << 8) | (b[2] << 16) |
           (static_cast<uint32_t>(b[3]) << 24);
}
}  // namespace detail

inline void save_patchset(const std::string& path, const PatchSetFile& ps) {
    std::ofstream os(path, std::ios::binary);
    if (!os.good()) throw io_error("cannot write " + path);
    os.write(kPatchSetMagic, 4);
    detail::put_u32(os, kPatchSetVersion);
    detail::put_u32(os, static_cast<uint32_t>(ps.patch_size));
    detail::put_u32(os, static_cast<uint32_t>(ps.labeled.size() + ps.unlabeled.size()));

    nlohmann::json hdr = ps.meta;
    hdr["image_ids"] = ps.image_ids;
    hdr["labeled_count"] = ps.labeled.size();
    hdr["unlabeled_count"] = ps.unlabeled.size();
    const std::string hdr_text = hdr.dump();
    detail::put_u32(os, static_cast<uint32_t>(hdr_text.size()));
    os.write(hdr_text.data(), static_cast<std::streamsize>(hdr_text.size()));

    std::map<std::string, uint32_t> id_index;
    for (size_t i = 0; i < ps.image_ids.size(); ++i)
        id_index[ps.image_ids[i]] = static_cast<uint32_t>(i);

    const int64_t area = ps.patch_size * ps.patch_size;
    auto write_patch = [&](const Patch& p) {
        if (p.values.size() != area) throw io_error("patch size mismatch in set");
        auto it = id_index.find(p.source_id);
        if (it == id_index.end()) throw io_error("patch source id missing from id table");
        detail::put_u32(os, it->second);
        detail::put_u32(os, static_cast<uint32_t>(p.center_row));
        detail::put_u32(os, static_cast<uint32_t>(p.center_col));
        os.write(reinterpret_cast<const char*>(p.values.data()),
                 static_cast<std::streamsize>(area * sizeof(float)));
        if (p.labeled()) {
            os.write(reinterpret_cast<const char*>(p.label.data()),
                     static_cast<std::streamsize>(area));
        } else {
            const std::vector<uint8_t> sentinel(static_cast<size_t>(area), 0xFF);
            os.write(reinterpret_cast<const char*>(sentinel.data()),
                     static_cast<std::streamsize>(area));
        }
    };
    for (const auto& p : ps.labeled) write_patch(p);
    for (const auto& p : ps.unlabeled) write_patch(p);
    if (!os.good()) throw io_error("short write to " + path);
}

inline PatchSetFile load_patchset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is.good()) throw io_error("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (std::memcmp(magic, kPatchSetMagic, 4) != 0)
        throw io_error(path + ": bad patch-set magic");
    const uint32_t version = detail::get_u32(is);
    if (version != kPatchSetVersion)
        throw io_error(path + ": unsupported patch-set version " + std::to_string(version));
    PatchSetFile ps;
    ps.patch_size = detail::get_u32(is);
    const uint32_t total = detail::get_u32(is);
    const uint32_t hdr_len = detail::get_u32(is);
    std::string hdr_text(hdr_len, '\0');
    is.read(hdr_text.data(), hdr_len);
    ps.meta = nlohmann::json::parse(hdr_text);
    ps.image_ids = ps.meta.value("image_ids", std::vector<std::string>{});
    const uint64_t labeled_count = ps.meta.value("labeled_count", uint64_t{0});

    const int64_t area = ps.patch_size * ps.patch_size;
    std::vector<uint8_t> labels(static_cast<size_t>(area));
    for (uint32_t i = 0; i < total; ++i) {
        Patch p;
        const uint32_t src = detail::get_u32(is);
        p.center_row = detail::get_u32(is);
        p.center_col = detail::get_u32(is);
        if (src >= ps.image_ids.size()) throw io_error(path + ": record source index out of range");
        p.source_id = ps.image_ids[src];
        p.values = Tensor<float>({ps.patch_size, ps.patch_size});
        is.read(reinterpret_cast<char*>(p.values.data()),
                static_cast<std::streamsize>(area * sizeof(float)));
        is.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(area));
        if (!is.good()) throw io_error(path + ": truncated patch records");
        if (labels[0] != 0xFF) {
            p.label = Tensor<uint8_t>({ps.patch_size, ps.patch_size});
            for (int64_t j = 0; j < area; ++j) {
                if (labels[static_cast<size_t>(j)] > 1)
                    throw io_error(path + ": label plane holds values other than 0/1");
                p.label[j] = labels[static_cast<size_t>(j)];
            }
        }
        if (i < labeled_count)
            ps.labeled.push_back(std::move(p));
        else
            ps.unlabeled.push_back(std::move(p));
    }
    return ps;
}

}  // namespace vesselgan::io

#endif
