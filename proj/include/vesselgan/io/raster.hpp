#ifndef VESSELGAN_IO_RASTER_HPP
#define VESSELGAN_IO_RASTER_HPP

#include <png.h>

#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "vesselgan/core/common.hpp"

namespace vesselgan::io {

// Decoded raster: interleaved rows, 1 or 3 channels, 8- or 16-bit samples.
struct Raster {
    int64_t height = 0, width = 0, channels = 1;
    int bit_depth = 8;
    std::vector<uint16_t> data;

    uint16_t max_value() const { return bit_depth == 16 ? 65535 : 255; }
    uint16_t at(int64_t r, int64_t c, int64_t ch) const {
        return data[static_cast<size_t>((r * width + c) * channels + ch)];
    }
};

inline std::vector<uint8_t> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) throw data_error("cannot open " + path);
    return std::vector<uint8_t>((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
}

// --------------------------------------------------------------------------
// PPM / PGM (P2, P3, P5, P6).
// --------------------------------------------------------------------------

inline Raster decode_pnm(const std::vector<uint8_t>& bytes, const std::string& path) {
    size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto next_int = [&]() -> int64_t {
        skip_ws();
        int64_t v = 0;
        bool any = false;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos++] - '0');
            any = true;
        }
        if (!any) throw data_error(path + ": malformed PNM header");
        return v;
    };
    if (bytes.size() < 2 || bytes[0] != 'P') throw data_error(path + ": not a PNM file");
    const char kind = static_cast<char>(bytes[1]);
    pos = 2;
    Raster r;
    r.width = next_int();
    r.height = next_int();
    const int64_t maxval = next_int();
    r.bit_depth = maxval > 255 ? 16 : 8;
    r.channels = (kind == '3' || kind == '6') ? 3 : 1;
    const int64_t n = r.height * r.width * r.channels;
    r.data.resize(static_cast<size_t>(n));
    if (kind == '2' || kind == '3') {
        for (int64_t i = 0; i < n; ++i) r.data[static_cast<size_t>(i)] = static_cast<uint16_t>(next_int());
    } else if (kind == '5' || kind == '6') {
        ++pos;  // single whitespace after maxval
        const int bytes_per = maxval > 255 ? 2 : 1;
        if (pos + static_cast<size_t>(n * bytes_per) > bytes.size())
            throw data_error(path + ": truncated PNM payload");
        for (int64_t i = 0; i < n; ++i) {
            if (bytes_per == 1) {
                r.data[static_cast<size_t>(i)] = bytes[pos++];
            } else {
                r.data[static_cast<size_t>(i)] =
                    static_cast<uint16_t>((bytes[pos] << 8) | bytes[pos + 1]);
                pos += 2;
            }
        }
    } else {
        throw data_error(path + ": unsupported PNM kind P" + std::string(1, kind));
    }
    return r;
}

inline void write_pnm(const std::string& path, const Raster& r) {
    std::ofstream out(path, std::ios::binary);
    if (!out.good()) throw data_error("cannot write " + path);
    out << (r.channels == 3 ? "P6" : "P5") << "\n"
        << r.width << " " << r.height << "\n"
        << (r.bit_depth == 16 ? 65535 : 255) << "\n";
    for (uint16_t v : r.data) {
        if (r.bit_depth == 16) out.put(static_cast<char>(v >> 8));
        out.put(static_cast<char>(v & 0xff));
    }
}

// --------------------------------------------------------------------------
// PNG via libpng: 8/16-bit gray, 8-bit RGB (palette and alpha folded in).
// --------------------------------------------------------------------------

inline Raster decode_png(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw data_error("cannot open " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw data_error(path + ": PNG decode failed");
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    Raster r;
    r.width = png_get_image_width(png, info);
    r.height = png_get_image_height(png, info);
    r.channels = png_get_channels(png, info);
    r.bit_depth = png_get_bit_depth(png, info);
    if (r.channels != 1 && r.channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw data_error(path + ": unsupported PNG channel count");
    }
    const size_t row_bytes = png_get_rowbytes(png, info);
    std::vector<uint8_t> raw(static_cast<size_t>(r.height) * row_bytes);
    std::vector<png_bytep> rows(static_cast<size_t>(r.height));
    for (int64_t y = 0; y < r.height; ++y) rows[static_cast<size_t>(y)] = raw.data() + y * row_bytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);

    const int64_t n = r.height * r.width * r.channels;
    r.data.resize(static_cast<size_t>(n));
    if (r.bit_depth == 16) {
        for (int64_t i = 0; i < n; ++i)
            r.data[static_cast<size_t>(i)] =
                static_cast<uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
    } else {
        for (int64_t i = 0; i < n; ++i) r.data[static_cast<size_t>(i)] = raw[static_cast<size_t>(i)];
    }
    return r;
}

inline void write_png(const std::string& path, const Raster& r) {
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw data_error("cannot write " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw data_error(path + ": PNG encode failed");
    }
    png_init_io(png, fp);
    const int color = r.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
    png_set_IHDR(png, info, static_cast<png_uint_32>(r.width), static_cast<png_uint_32>(r.height),
                 r.bit_depth, color, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const int64_t row_samples = r.width * r.channels;
    std::vector<uint8_t> row(static_cast<size_t>(row_samples * (r.bit_depth == 16 ? 2 : 1)));
    for (int64_t y = 0; y < r.height; ++y) {
        for (int64_t i = 0; i < row_samples; ++i) {
            const uint16_t v = r.data[static_cast<size_t>(y * row_samples + i)];
            if (r.bit_depth == 16) {
                row[static_cast<size_t>(2 * i)] = static_cast<uint8_t>(v >> 8);
                row[static_cast<size_t>(2 * i + 1)] = static_cast<uint8_t>(v & 0xff);
            } else {
                row[static_cast<size_t>(i)] = static_cast<uint8_t>(v);
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

// --------------------------------------------------------------------------
// GIF87a/89a decoder (first image only), enough for dataset mask files.
// --------------------------------------------------------------------------

inline Raster decode_gif(const std::vector<uint8_t>& bytes, const std::string& path) {
    if (bytes.size() < 13 || std::memcmp(bytes.data(), "GIF8", 4) != 0)
        throw data_error(path + ": not a GIF file");
    size_t pos = 6;
    auto u16 = [&](size_t p) { return static_cast<int64_t>(bytes[p]) | (bytes[p + 1] << 8); };
    const int64_t screen_w = u16(pos), screen_h = u16(pos + 2);
    const uint8_t packed = bytes[pos + 4];
    pos += 7;
    std::vector<std::array<uint8_t, 3>> global_palette;
    if (packed & 0x80) {
        const size_t n = size_t{2} << (packed & 0x07);
        for (size_t i = 0; i < n; ++i) {
            global_palette.push_back({bytes[pos], bytes[pos + 1], bytes[pos + 2]});
            pos += 3;
        }
    }
    while (pos < bytes.size()) {
        const uint8_t block = bytes[pos++];
        if (block == 0x21) {  // extension: label + sub-blocks
            ++pos;
            while (pos < bytes.size() && bytes[pos] != 0) pos += bytes[pos] + 1;
            ++pos;
        } else if (block == 0x2c) {  // image descriptor
            const int64_t img_w = u16(pos + 4), img_h = u16(pos + 6);
            const uint8_t ipacked = bytes[pos + 8];
            pos += 9;
            std::vector<std::array<uint8_t, 3>> palette = global_palette;
            if (ipacked & 0x80) {
                palette.clear();
                const size_t n = size_t{2} << (ipacked & 0x07);
                for (size_t i = 0; i < n; ++i) {
                    palette.push_back({bytes[pos], bytes[pos + 1], bytes[pos + 2]});
                    pos += 3;
                }
            }
            if (palette.empty()) throw data_error(path + ": GIF image without palette");
            const bool interlaced = ipacked & 0x40;

            const int min_code_size = bytes[pos++];
            // Concatenate LZW sub-blocks.
            std::vector<uint8_t> lzw;
            while (pos < bytes.size() && bytes[pos] != 0) {
                const uint8_t len = bytes[pos++];
                lzw.insert(lzw.end(), bytes.begin() + static_cast<long>(pos),
                           bytes.begin() + static_cast<long>(pos + len));
                pos += len;
            }

            // LZW decode, LSB-first bit packing.
            const int clear_code = 1 << min_code_size;
            const int end_code = clear_code + 1;
            std::vector<std::vector<uint8_t>> table;
            auto reset_table = [&] {
                table.clear();
                for (int i = 0; i < clear_code; ++i) table.push_back({static_cast<uint8_t>(i)});
                table.push_back({});  // clear
                table.push_back({});  // end
            };
            reset_table();
            int code_size = min_code_size + 1;
            size_t bitpos = 0;
            auto read_code = [&]() -> int {
                int code = 0;
                for (int b = 0; b < code_size; ++b) {
                    const size_t byte = bitpos >> 3;
                    if (byte >= lzw.size()) return end_code;
                    code |= ((lzw[byte] >> (bitpos & 7)) & 1) << b;
                    ++bitpos;
                }
                return code;
            };
            std::vector<uint8_t> indices;
            indices.reserve(static_cast<size_t>(img_w * img_h));
            int prev = -1;
            while (true) {
                const int code = read_code();
                if (code == end_code) break;
                if (code == clear_code) {
                    reset_table();
                    code_size = min_code_size + 1;
                    prev = -1;
                    continue;
                }
                std::vector<uint8_t> entry;
                if (code < static_cast<int>(table.size())) {
                    entry = table[static_cast<size_t>(code)];
                } else if (prev >= 0) {
                    entry = table[static_cast<size_t>(prev)];
                    entry.push_back(table[static_cast<size_t>(prev)][0]);
                } else {
                    throw data_error(path + ": corrupt GIF LZW stream");
                }
                indices.insert(indices.end(), entry.begin(), entry.end());
                if (prev >= 0) {
                    auto grown = table[static_cast<size_t>(prev)];
                    grown.push_back(entry[0]);
                    table.push_back(std::move(grown));
                    if (static_cast<int>(table.size()) == (1 << code_size) && code_size < 12)
                        ++code_size;
                }
                prev = code;
                if (static_cast<int64_t>(indices.size()) >= img_w * img_h) break;
            }
            if (static_cast<int64_t>(indices.size()) < img_w * img_h)
                throw data_error(path + ": GIF pixel data truncated");

            Raster r;
            r.width = img_w > 0 ? img_w : screen_w;
            r.height = img_h > 0 ? img_h : screen_h;
            r.channels = 3;
            r.bit_depth = 8;
            r.data.resize(static_cast<size_t>(r.width * r.height * 3));
            auto put_row = [&](int64_t src_row, int64_t dst_row) {
                for (int64_t c = 0; c < r.width; ++c) {
                    const auto& rgb =
                        palette[indices[static_cast<size_t>(src_row * r.width + c)] %
                                palette.size()];
                    for (int ch = 0; ch < 3; ++ch)
                        r.data[static_cast<size_t>((dst_row * r.width + c) * 3 + ch)] = rgb[static_cast<size_t>(ch)];
                }
            };
            if (interlaced) {
                static constexpr int64_t start[4] = {0, 4, 2, 1};
                static constexpr int64_t step[4] = {8, 8, 4, 2};
                int64_t src = 0;
                for (int pass = 0; pass < 4; ++pass)
                    for (int64_t y = start[pass]; y < r.height; y += step[pass]) put_row(src++, y);
            } else {
                for (int64_t y = 0; y < r.height; ++y) put_row(y, y);
            }
            return r;
        } else if (block == 0x3b) {
            break;
        } else {
            throw data_error(path + ": unexpected GIF block");
        }
    }
    throw data_error(path + ": GIF contains no image");
}

// --------------------------------------------------------------------------
// Baseline TIFF reader: strips, 8-bit samples, 1 or 3 channels, compression
// none / PackBits / LZW (with horizontal predictor).
// --------------------------------------------------------------------------

namespace tiff_detail {

struct Reader {
    const std::vector<uint8_t>& b;
    bool big_endian;
    uint16_t u16(size_t p) const {
        return big_endian ? static_cast<uint16_t>((b[p] << 8) | b[p + 1])
                          : static_cast<uint16_t>(b[p] | (b[p + 1] << 8));
    }
    uint32_t u32(size_t p) const {
        return big_endian ? (static_cast<uint32_t>(b[p]) << 24) | (b[p + 1] << 16) |
                                (b[p + 2] << 8) | b[p + 3]
                          : static_cast<uint32_t>(b[p]) | (b[p + 1] << 8) | (b[p + 2] << 16) |
                                (static_cast<uint32_t>(b[p + 3]) << 24);
    }
};

inline std::vector<uint8_t> unpackbits(const std::vector<uint8_t>& in, size_t expect) {
    std::vector<uint8_t> out;
    out.reserve(expect);
    size_t p = 0;
    while (p < in.size() && out.size() < expect) {
        const int8_t n = static_cast<int8_t>(in[p++]);
        if (n >= 0) {
            for (int i = 0; i <= n && p < in.size(); ++i) out.push_back(in[p++]);
        } else if (n != -128) {
            if (p >= in.size()) break;
            const uint8_t v = in[p++];
            for (int i = 0; i < 1 - n; ++i) out.push_back(v);
        }
    }
    return out;
}

// TIFF-variant LZW: MSB-first bits, early code-size change.
inline std::vector<uint8_t> lzw_decode(const std::vector<uint8_t>& in, size_t expect,
                                       const std::string& path) {
    constexpr int kClear = 256, kEoi = 257;
    std::vector<std::vector<uint8_t>> table;
    auto reset = [&] {
        table.clear();
        table.reserve(4096);
        for (int i = 0; i < 256; ++i) table.push_back({static_cast<uint8_t>(i)});
        table.push_back({});
        table.push_back({});
    };
    reset();
    int code_size = 9;
    size_t bitpos = 0;
    auto read_code = [&]() -> int {
        int code = 0;
        for (int i = 0; i < code_size; ++i) {
            const size_t byte = bitpos >> 3;
            if (byte >= in.size()) return kEoi;
            code = (code << 1) | ((in[byte] >> (7 - (bitpos & 7))) & 1);
            ++bitpos;
        }
        return code;
    };
    std::vector<uint8_t> out;
    out.reserve(expect);
    int prev = -1;
    while (out.size() < expect) {
        const int code = read_code();
        if (code == kEoi) break;
        if (code == kClear) {
            reset();
            code_size = 9;
            prev = -1;
            continue;
        }
        std::vector<uint8_t> entry;
        if (code < static_cast<int>(table.size())) {
            entry = table[static_cast<size_t>(code)];
        } else if (prev >= 0) {
            entry = table[static_cast<size_t>(prev)];
            entry.push_back(table[static_cast<size_t>(prev)][0]);
        } else {
            throw data_error(path + ": corrupt TIFF LZW stream");
        }
        out.insert(out.end(), entry.begin(), entry.end());
        if (prev >= 0) {
            auto grown = table[static_cast<size_t>(prev)];
            grown.push_back(entry[0]);
            table.push_back(std::move(grown));
        }
        // Early change: bump the code width one entry before the table fills.
        if (table.size() + 1 >= (size_t{1} << code_size) && code_size < 12) ++code_size;
        prev = code;
    }
    return out;
}

}  // namespace tiff_detail

inline Raster decode_tiff(const std::vector<uint8_t>& bytes, const std::string& path) {
    if (bytes.size() < 8) throw data_error(path + ": truncated TIFF");
    tiff_detail::Reader rd{bytes, bytes[0] == 'M'};
    if (!((bytes[0] == 'I' && bytes[1] == 'I') || (bytes[0] == 'M' && bytes[1] == 'M')))
        throw data_error(path + ": not a TIFF file");
    size_t ifd = rd.u32(4);
    const uint16_t entries = rd.u16(ifd);
    int64_t width = 0, height = 0, spp = 1, rows_per_strip = 0;
    int64_t compression = 1, predictor = 1, bits = 8;
    std::vector<uint32_t> strip_offsets, strip_counts;
    auto read_values = [&](size_t entry, std::vector<uint32_t>& out) {
        const uint16_t type = rd.u16(entry + 2);
        const uint32_t count = rd.u32(entry + 4);
        const size_t size = type == 3 ? 2 : 4;
        size_t src = entry + 8;
        if (count * size > 4) src = rd.u32(entry + 8);
        for (uint32_t i = 0; i < count; ++i)
            out.push_back(type == 3 ? rd.u16(src + 2 * i) : rd.u32(src + 4 * i));
    };
    for (uint16_t e = 0; e < entries; ++e) {
        const size_t entry = ifd + 2 + e * 12;
        const uint16_t tag = rd.u16(entry);
        std::vector<uint32_t> v;
        switch (tag) {
            case 256: read_values(entry, v); width = v[0]; break;
            case 257: read_values(entry, v); height = v[0]; break;
            case 258: read_values(entry, v); bits = v[0]; break;
            case 259: read_values(entry, v); compression = v[0]; break;
            case 273: read_values(entry, strip_offsets); break;
            case 277: read_values(entry, v); spp = v[0]; break;
            case 278: read_values(entry, v); rows_per_strip = v[0]; break;
            case 279: read_values(entry, strip_counts); break;
            case 317: read_values(entry, v); predictor = v[0]; break;
            default: break;
        }
    }
    if (width <= 0 || height <= 0 || strip_offsets.empty())
        throw data_error(path + ": TIFF missing required tags");
    if (bits != 8 || (spp != 1 && spp != 3))
        throw data_error(path + ": only 8-bit gray/RGB TIFF supported");
    if (rows_per_strip == 0) rows_per_strip = height;

    std::vector<uint8_t> pixels;
    pixels.reserve(static_cast<size_t>(width * height * spp));
    for (size_t s = 0; s < strip_offsets.size(); ++s) {
        const size_t off = strip_offsets[s];
        const size_t cnt = s < strip_counts.size() ? strip_counts[s] : bytes.size() - off;
        if (off + cnt > bytes.size()) throw data_error(path + ": TIFF strip out of bounds");
        std::vector<uint8_t> strip(bytes.begin() + static_cast<long>(off),
                                   bytes.begin() + static_cast<long>(off + cnt));
        const int64_t rows =
            std::min<int64_t>(rows_per_strip, height - static_cast<int64_t>(s) * rows_per_strip);
        const size_t expect = static_cast<size_t>(rows * width * spp);
        std::vector<uint8_t> raw;
        if (compression == 1) {
            raw = std::move(strip);
        } else if (compression == 32773) {
            raw = tiff_detail::unpackbits(strip, expect);
        } else if (compression == 5) {
            raw = tiff_detail::lzw_decode(strip, expect, path);
        } else {
            throw data_error(path + ": unsupported TIFF compression " +
                             std::to_string(compression));
        }
        if (raw.size() < expect) throw data_error(path + ": TIFF strip shorter than expected");
        if (predictor == 2) {
            for (int64_t r = 0; r < rows; ++r)
                for (int64_t c = 1; c < width; ++c)
                    for (int64_t ch = 0; ch < spp; ++ch)
                        raw[static_cast<size_t>((r * width + c) * spp + ch)] = static_cast<uint8_t>(
                            raw[static_cast<size_t>((r * width + c) * spp + ch)] +
                            raw[static_cast<size_t>((r * width + c - 1) * spp + ch)]);
        }
        pixels.insert(pixels.end(), raw.begin(), raw.begin() + static_cast<long>(expect));
    }

    Raster r;
    r.width = width;
    r.height = height;
    r.channels = spp;
    r.bit_depth = 8;
    r.data.assign(pixels.begin(), pixels.end());
    return r;
}

// Dispatch on magic bytes; the file extension is not trusted.
inline Raster read_raster(const std::string& path) {
    const auto bytes = read_bytes(path);
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), "\x89PNG\r\n\x1a\n", 8) == 0)
        return decode_png(path);
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), "GIF8", 4) == 0)
        return decode_gif(bytes, path);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] >= '1' && bytes[1] <= '6')
        return decode_pnm(bytes, path);
    if (bytes.size() >= 2 && ((bytes[0] == 'I' && bytes[1] == 'I') ||
                              (bytes[0] == 'M' && bytes[1] == 'M')))
        return decode_tiff(bytes, path);
    throw data_error(path + ": unrecognized raster format");
}

}  // namespace vesselgan::io

#endif
