#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "testutil.hpp"
#include "vesselgan/io/patchset.hpp"
#include "vesselgan/io/prep_cache.hpp"
#include "vesselgan/io/raster.hpp"

using namespace vesselgan;
using vgtest::Rng;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    static int counter = 0;
    const fs::path p = fs::temp_directory_path() / ("vgio_" + std::to_string(::getpid()) + "_" +
                                                    std::to_string(counter++));
    fs::create_directories(p);
    return p;
}

io::Raster random_raster(int64_t h, int64_t w, int64_t ch, int depth, uint64_t seed) {
    io::Raster r;
    r.height = h;
    r.width = w;
    r.channels = ch;
    r.bit_depth = depth;
    r.data.resize(static_cast<size_t>(h * w * ch));
    Rng rng(seed);
    for (auto& v : r.data) v = static_cast<uint16_t>(rng.next_below(depth == 16 ? 65536 : 256));
    return r;
}

void expect_equal(const io::Raster& a, const io::Raster& b) {
    ASSERT_EQ(a.height, b.height);
    ASSERT_EQ(a.width, b.width);
    ASSERT_EQ(a.channels, b.channels);
    ASSERT_EQ(a.data.size(), b.data.size());
    for (size_t i = 0; i < a.data.size(); ++i) ASSERT_EQ(a.data[i], b.data[i]) << i;
}

TEST(PngIo, RoundTripsGrayAndRgb) {
    const auto dir = temp_dir();
    for (auto [ch, depth] : {std::pair<int64_t, int>{1, 8}, {1, 16}, {3, 8}}) {
        const auto orig = random_raster(13, 9, ch, depth, 100 + static_cast<uint64_t>(ch * depth));
        const std::string path = (dir / ("t" + std::to_string(ch) + "_" + std::to_string(depth) +
                                         ".png")).string();
        io::write_png(path, orig);
        expect_equal(io::read_raster(path), orig);
    }
}

TEST(PnmIo, RoundTripsBinaryForms) {
    const auto dir = temp_dir();
    for (int64_t ch : {int64_t{1}, int64_t{3}}) {
        const auto orig = random_raster(7, 11, ch, 8, 7 + static_cast<uint64_t>(ch));
        const std::string path = (dir / ("t" + std::to_string(ch) + ".ppm")).string();
        io::write_pnm(path, orig);
        expect_equal(io::read_raster(path), orig);
    }
}

TEST(PnmIo, ReadsAsciiWithComments) {
    const auto dir = temp_dir();
    const std::string path = (dir / "ascii.pgm").string();
    std::ofstream out(path);
    out << "P2\n# comment line\n3 2\n255\n0 10 20\n30 40 255\n";
    out.close();
    const auto r = io::read_raster(path);
    EXPECT_EQ(r.width, 3);
    EXPECT_EQ(r.height, 2);
    EXPECT_EQ(r.at(1, 2, 0), 255);
    EXPECT_EQ(r.at(0, 1, 0), 10);
}

// Test-side GIF encoder: literal LZW codes only (min code size 8, so 9-bit
// codes, LSB-first). A clear before every 200 literals keeps the decoder
// table under 512 entries and the code width fixed at 9 bits.
std::vector<uint8_t> encode_gif(const std::vector<uint8_t>& indices, int64_t w, int64_t h,
                                const std::vector<std::array<uint8_t, 3>>& palette256,
                                bool interlaced = false) {
    std::vector<uint8_t> out;
    auto u16 = [&](int64_t v) {
        out.push_back(static_cast<uint8_t>(v & 0xff));
        out.push_back(static_cast<uint8_t>((v >> 8) & 0xff));
    };
    for (char c : std::string("GIF89a")) out.push_back(static_cast<uint8_t>(c));
    u16(w);
    u16(h);
    out.push_back(0x80 | 0x07);  // global palette, 256 entries
    out.push_back(0);
    out.push_back(0);
    for (int i = 0; i < 256; ++i) {
        const auto& rgb = palette256[static_cast<size_t>(i) % palette256.size()];
        out.push_back(rgb[0]);
        out.push_back(rgb[1]);
        out.push_back(rgb[2]);
    }
    out.push_back(0x2c);  // image descriptor
    u16(0);
    u16(0);
    u16(w);
    u16(h);
    out.push_back(interlaced ? 0x40 : 0x00);
    out.push_back(8);  // min LZW code size: clear = 256, end = 257

    std::vector<uint8_t> stream;
    uint32_t bitbuf = 0;
    int bits = 0;
    auto put = [&](int code) {
        bitbuf |= static_cast<uint32_t>(code) << bits;
        bits += 9;
        while (bits >= 8) {
            stream.push_back(static_cast<uint8_t>(bitbuf & 0xff));
            bitbuf >>= 8;
            bits -= 8;
        }
    };
    put(256);
    int since_clear = 0;
    for (uint8_t px : indices) {
        if (since_clear == 200) {
            put(256);
            since_clear = 0;
        }
        put(px);
        ++since_clear;
    }
    put(257);
    if (bits > 0) stream.push_back(static_cast<uint8_t>(bitbuf & 0xff));

    for (size_t i = 0; i < stream.size(); i += 255) {
        const size_t n = std::min<size_t>(255, stream.size() - i);
        out.push_back(static_cast<uint8_t>(n));
        out.insert(out.end(), stream.begin() + static_cast<long>(i),
                   stream.begin() + static_cast<long>(i + n));
    }
    out.push_back(0);     // block terminator
    out.push_back(0x3b);  // trailer
    return out;
}

TEST(GifIo, DecodesLiteralLzwStream) {
    std::vector<std::array<uint8_t, 3>> palette(256);
    for (int i = 0; i < 256; ++i)
        palette[static_cast<size_t>(i)] = {static_cast<uint8_t>(i), static_cast<uint8_t>(255 - i),
                                           static_cast<uint8_t>(i / 2)};
    Rng rng(55);
    const int64_t w = 21, h = 17;
    std::vector<uint8_t> indices(static_cast<size_t>(w * h));
    for (auto& v : indices) v = static_cast<uint8_t>(rng.next_below(256));

    const auto dir = temp_dir();
    const std::string path = (dir / "t.gif").string();
    const auto bytes = encode_gif(indices, w, h, palette);
    std::ofstream(path, std::ios::binary)
        .write(reinterpret_cast<const char*>(bytes.data()), static_cast<long>(bytes.size()));

    const auto r = io::read_raster(path);
    ASSERT_EQ(r.width, w);
    ASSERT_EQ(r.height, h);
    ASSERT_EQ(r.channels, 3);
    for (int64_t i = 0; i < w * h; ++i) {
        const auto& rgb = palette[indices[static_cast<size_t>(i)]];
        EXPECT_EQ(r.data[static_cast<size_t>(3 * i)], rgb[0]);
        EXPECT_EQ(r.data[static_cast<size_t>(3 * i + 1)], rgb[1]);
        EXPECT_EQ(r.data[static_cast<size_t>(3 * i + 2)], rgb[2]);
    }
}

TEST(GifIo, HandlesInterlacedRows) {
    std::vector<std::array<uint8_t, 3>> palette(256);
    for (int i = 0; i < 256; ++i)
        palette[static_cast<size_t>(i)] = {static_cast<uint8_t>(i), 0, 0};
    const int64_t w = 4, h = 11;
    std::vector<uint8_t> row_major(static_cast<size_t>(w * h));
    for (int64_t r = 0; r < h; ++r)
        for (int64_t c = 0; c < w; ++c)
            row_major[static_cast<size_t>(r * w + c)] = static_cast<uint8_t>(r * 10 + c);
    // Reorder rows into GIF interlace pass order for the encoder payload.
    std::vector<uint8_t> interlaced;
    for (int64_t start : {0, 4, 2, 1}) {
        const int64_t step = start == 0 || start == 4 ? 8 : (start == 2 ? 4 : 2);
        for (int64_t r = start; r < h; r += step)
            for (int64_t c = 0; c < w; ++c)
                interlaced.push_back(row_major[static_cast<size_t>(r * w + c)]);
    }
    const auto dir = temp_dir();
    const std::string path = (dir / "i.gif").string();
    const auto bytes = encode_gif(interlaced, w, h, palette, true);
    std::ofstream(path, std::ios::binary)
        .write(reinterpret_cast<const char*>(bytes.data()), static_cast<long>(bytes.size()));
    const auto r = io::read_raster(path);
    for (int64_t i = 0; i < w * h; ++i)
        EXPECT_EQ(r.data[static_cast<size_t>(3 * i)], row_major[static_cast<size_t>(i)]);
}

// Test-side minimal TIFF encoder (little endian, one strip).
std::vector<uint8_t> encode_tiff(const std::vector<uint8_t>& pixels, int64_t w, int64_t h,
                                 int64_t spp, uint16_t compression,
                                 const std::vector<uint8_t>& payload) {
    std::vector<uint8_t> out;
    auto u16 = [&](uint32_t v) {
        out.push_back(static_cast<uint8_t>(v));
        out.push_back(static_cast<uint8_t>(v >> 8));
    };
    auto u32 = [&](uint32_t v) {
        u16(v & 0xffff);
        u16(v >> 16);
    };
    (void)pixels;
    out.push_back('I');
    out.push_back('I');
    u16(42);
    const uint32_t data_offset = 8;
    u32(data_offset + static_cast<uint32_t>(payload.size()));  // IFD offset
    out.insert(out.end(), payload.begin(), payload.end());

    struct E {
        uint16_t tag, type;
        uint32_t count, value;
    };
    std::vector<E> entries = {
        {256, 4, 1, static_cast<uint32_t>(w)},   {257, 4, 1, static_cast<uint32_t>(h)},
        {258, 3, 1, 8},                          {259, 3, 1, compression},
        {262, 3, 1, spp == 3 ? 2u : 1u},         {273, 4, 1, data_offset},
        {277, 3, 1, static_cast<uint32_t>(spp)}, {278, 4, 1, static_cast<uint32_t>(h)},
        {279, 4, 1, static_cast<uint32_t>(payload.size())},
    };
    u16(static_cast<uint16_t>(entries.size()));
    for (const auto& e : entries) {
        u16(e.tag);
        u16(e.type);
        u32(e.count);
        if (e.type == 3) {
            u16(e.value);
            u16(0);
        } else {
            u32(e.value);
        }
    }
    u32(0);  // no next IFD
    return out;
}

std::vector<uint8_t> packbits_encode(const std::vector<uint8_t>& in) {
    // Simplest valid form: emit literal runs of <=128 bytes.
    std::vector<uint8_t> out;
    for (size_t i = 0; i < in.size(); i += 128) {
        const size_t n = std::min<size_t>(128, in.size() - i);
        out.push_back(static_cast<uint8_t>(n - 1));
        out.insert(out.end(), in.begin() + static_cast<long>(i),
                   in.begin() + static_cast<long>(i + n));
    }
    return out;
}

// TIFF LZW with literal codes only; a clear code is emitted often enough to
// keep the code width at 9 bits (early-change counting included).
std::vector<uint8_t> tiff_lzw_encode(const std::vector<uint8_t>& in) {
    std::vector<uint8_t> out;
    uint32_t bitbuf = 0;
    int bits = 0;
    auto put = [&](int code) {
        bitbuf = (bitbuf << 9) | static_cast<uint32_t>(code);
        bits += 9;
        while (bits >= 8) {
            out.push_back(static_cast<uint8_t>(bitbuf >> (bits - 8)));
            bits -= 8;
        }
    };
    put(256);
    int since_clear = 0;
    for (uint8_t b : in) {
        if (since_clear == 200) {
            put(256);
            since_clear = 0;
        }
        put(b);
        ++since_clear;
    }
    put(257);
    if (bits > 0) out.push_back(static_cast<uint8_t>(bitbuf << (8 - bits)));
    return out;
}

TEST(TiffIo, DecodesUncompressedPackbitsAndLzw) {
    Rng rng(77);
    const int64_t w = 19, h = 13, spp = 3;
    std::vector<uint8_t> pixels(static_cast<size_t>(w * h * spp));
    for (auto& v : pixels) v = static_cast<uint8_t>(rng.next_below(256));

    const auto dir = temp_dir();
    struct Case {
        uint16_t compression;
        std::vector<uint8_t> payload;
        const char* name;
    };
    const std::vector<Case> cases = {
        {1, pixels, "raw.tif"},
        {32773, packbits_encode(pixels), "pb.tif"},
        {5, tiff_lzw_encode(pixels), "lzw.tif"},
    };
    for (const auto& c : cases) {
        const std::string path = (dir / c.name).string();
        const auto bytes = encode_tiff(pixels, w, h, spp, c.compression, c.payload);
        std::ofstream(path, std::ios::binary)
            .write(reinterpret_cast<const char*>(bytes.data()), static_cast<long>(bytes.size()));
        const auto r = io::read_raster(path);
        ASSERT_EQ(r.width, w) << c.name;
        ASSERT_EQ(r.height, h) << c.name;
        ASSERT_EQ(r.channels, spp) << c.name;
        for (size_t i = 0; i < pixels.size(); ++i)
            ASSERT_EQ(r.data[i], pixels[i]) << c.name << " @" << i;
    }
}

TEST(RasterIo, RejectsUnknownFormat) {
    const auto dir = temp_dir();
    const std::string path = (dir / "junk.bin").string();
    std::ofstream(path) << "not an image at all";
    EXPECT_THROW(io::read_raster(path), data_error);
    EXPECT_THROW(io::read_raster((dir / "missing.png").string()), data_error);
}

TEST(PatchSetIo, RoundTripsLabeledAndUnlabeled) {
    Rng rng(91);
    io::PatchSetFile ps;
    ps.patch_size = 8;
    ps.meta = {{"budget", 3}, {"pool", 2}, {"seed", 7}, {"dataset", "drive"}};
    ps.image_ids = {"img_a", "img_b"};
    for (int i = 0; i < 3; ++i) {
        Patch p;
        p.values = Tensor<float>({8, 8});
        for (int64_t j = 0; j < 64; ++j) p.values[j] = static_cast<float>(rng.next_unit());
        p.label = Tensor<uint8_t>({8, 8});
        for (int64_t j = 0; j < 64; ++j) p.label[j] = rng.next_below(2) ? 1 : 0;
        p.center_row = 10 + i;
        p.center_col = 20 + i;
        p.source_id = i % 2 ? "img_b" : "img_a";
        ps.labeled.push_back(std::move(p));
    }
    for (int i = 0; i < 5; ++i) {
        Patch p;
        p.values = Tensor<float>({8, 8});
        for (int64_t j = 0; j < 64; ++j) p.values[j] = static_cast<float>(rng.next_unit());
        p.center_row = 30 + i;
        p.center_col = 40 + i;
        p.source_id = "img_b";
        ps.unlabeled.push_back(std::move(p));
    }

    const auto dir = temp_dir();
    const std::string path = (dir / "set.vgps").string();
    io::save_patchset(path, ps);
    const auto back = io::load_patchset(path);
    ASSERT_EQ(back.labeled.size(), 3u);
    ASSERT_EQ(back.unlabeled.size(), 5u);
    EXPECT_EQ(back.meta["budget"], 3);
    EXPECT_EQ(back.patch_size, 8);
    for (size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(back.labeled[i].source_id, ps.labeled[i].source_id);
        EXPECT_EQ(back.labeled[i].center_row, ps.labeled[i].center_row);
        ASSERT_TRUE(back.labeled[i].labeled());
        for (int64_t j = 0; j < 64; ++j) {
            EXPECT_EQ(back.labeled[i].values[j], ps.labeled[i].values[j]);
            EXPECT_EQ(back.labeled[i].label[j], ps.labeled[i].label[j]);
        }
    }
    EXPECT_FALSE(back.unlabeled[0].labeled());

    // Bad magic rejected.
    std::ofstream(path, std::ios::binary) << "XXXX garbage";
    EXPECT_THROW(io::load_patchset(path), io_error);
}

TEST(PrepCache, RoundTripsImagesAndChecksums) {
    std::vector<PreparedImage> imgs;
    Rng rng(93);
    for (int i = 0; i < 2; ++i) {
        PreparedImage p;
        p.id = "img" + std::to_string(i);
        p.split = i ? SplitTag::test : SplitTag::train;
        p.gray.values = Tensor<float>({12, 10});
        for (int64_t j = 0; j < p.gray.values.size(); ++j)
            p.gray.values[j] = static_cast<float>(rng.next_unit());
        p.fov = Tensor<uint8_t>({12, 10});
        p.fov.fill(1);
        if (i == 0) {
            p.gt = Tensor<uint8_t>({12, 10});
            for (int64_t j = 0; j < p.gt.size(); ++j) p.gt[j] = rng.next_below(2) ? 1 : 0;
        }
        imgs.push_back(std::move(p));
    }
    const auto dir = temp_dir();
    io::save_prepared(dir.string(), imgs);
    const auto back = io::load_prepared(dir.string());
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].id, "img0");
    EXPECT_EQ(back[1].split, SplitTag::test);
    EXPECT_FALSE(back[0].gt.empty());
    EXPECT_TRUE(back[1].gt.empty());
    for (int64_t j = 0; j < imgs[0].gray.values.size(); ++j)
        EXPECT_NEAR(back[0].gray.values[j], imgs[0].gray.values[j], 1.0 / 65535.0);
    for (int64_t j = 0; j < imgs[0].gt.size(); ++j)
        EXPECT_EQ(back[0].gt[j], imgs[0].gt[j]);

    // Tampering with the cached PNG trips the checksum.
    {
        std::ofstream f(dir / "img0.png", std::ios::binary | std::ios::app);
        f << "tamper";
    }
    EXPECT_THROW(io::load_prepared(dir.string()), data_error);
}

}  // namespace
