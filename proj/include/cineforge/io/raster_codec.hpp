// SPDX-License-Identifier: Apache-2.0

#pragma once

// Raster carriers. Depth: 16-bit grayscale PNG holding round(depth / scale) with
// 0 reserved for "no depth", or PFM (32-bit float, lossless for float data).
// Entity ids: 8-bit palette PNG where the palette index is the id.

#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include <png.h>

#include "cineforge/error.hpp"
#include "cineforge/render.hpp"

namespace cineforge::io {

using Bytes = std::vector<std::uint8_t>;

inline constexpr double kMillimeter = 0.001;

namespace detail {

struct PngWriteState {
    Bytes out;
    std::string error;
};

struct PngReadState {
    std::span<const std::uint8_t> in;
    std::size_t pos = 0;
    std::string error;
};

inline void png_error_fn(png_structp png, png_const_charp msg) {
    auto* msg_slot = static_cast<std::string*>(png_get_error_ptr(png));
    if (msg_slot) *msg_slot = msg;
    png_longjmp(png, 1);
}

inline void png_warning_fn(png_structp, png_const_charp) {}

inline void png_write_fn(png_structp png, png_bytep data, png_size_t len) {
    auto* st = static_cast<PngWriteState*>(png_get_io_ptr(png));
    st->out.insert(st->out.end(), data, data + len);
}

inline void png_flush_fn(png_structp) {}

inline void png_read_fn(png_structp png, png_bytep data, png_size_t len) {
    auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
    if (st->pos + len > st->in.size()) png_error(png, "unexpected end of PNG data");
    std::memcpy(data, st->in.data() + st->pos, len);
    st->pos += len;
}

/// Writes a single-channel PNG. `rows` holds height rows of `row_bytes` each,
/// already in PNG byte order.
inline Bytes write_png(int width, int height, int bit_depth, int color_type, const Bytes& rows,
                       std::size_t row_bytes, const std::vector<png_color>* palette) {
    PngWriteState st;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &st.error, png_error_fn, png_warning_fn);
    if (!png) throw Error(ErrorCode::IoError, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw Error(ErrorCode::IoError, "png_create_info_struct failed");
    }
    std::vector<png_bytep> row_ptrs(height);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorCode::IoError, "PNG encode: " + st.error);
    }
    png_set_write_fn(png, &st, png_write_fn, png_flush_fn);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    if (palette) png_set_PLTE(png, info, palette->data(), static_cast<int>(palette->size()));
    for (int y = 0; y < height; ++y) row_ptrs[y] = const_cast<png_bytep>(rows.data() + static_cast<std::size_t>(y) * row_bytes);
    png_set_rows(png, info, row_ptrs.data());
    png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
    png_destroy_write_struct(&png, &info);
    return std::move(st.out);
}

struct DecodedPng {
    int width = 0;
    int height = 0;
    int bit_depth = 0;
    int color_type = 0;
    /// One sample per pixel, widened to 16 bits, no palette expansion.
    std::vector<std::uint16_t> samples;
};

inline DecodedPng read_png(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
        throw Error(ErrorCode::ParseError, "not a PNG stream");
    }
    PngReadState st{bytes, 0, {}};
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &st.error, png_error_fn, png_warning_fn);
    if (!png) throw Error(ErrorCode::IoError, "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw Error(ErrorCode::IoError, "png_create_info_struct failed");
    }
    DecodedPng out;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorCode::ParseError, "PNG decode: " + st.error);
    }
    png_set_read_fn(png, &st, png_read_fn);
    png_read_png(png, info, PNG_TRANSFORM_PACKING, nullptr);
    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.bit_depth = png_get_bit_depth(png, info);
    out.color_type = png_get_color_type(png, info);
    const int channels = png_get_channels(png, info);
    png_bytepp rows = png_get_rows(png, info);
    out.samples.resize(static_cast<std::size_t>(out.width) * out.height);
    for (int y = 0; y < out.height; ++y) {
        const png_bytep row = rows[y];
        for (int x = 0; x < out.width; ++x) {
            std::uint16_t v;
            if (out.bit_depth == 16) {
                const std::size_t o = (static_cast<std::size_t>(x) * channels) * 2;
                v = static_cast<std::uint16_t>((row[o] << 8) | row[o + 1]);
            } else {
                v = row[static_cast<std::size_t>(x) * channels];
            }
            out.samples[static_cast<std::size_t>(y) * out.width + x] = v;
        }
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

} // namespace detail

/// Stored value = round(depth / scale); positive depths that would round to 0 are
/// stored as 1 so they stay distinguishable from the sentinel.
inline Bytes encode_depth_png16(const DepthMap& d, double scale = kMillimeter) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw Error(ErrorCode::InvalidArgument, "depth scale must be positive");
    Bytes rows(static_cast<std::size_t>(d.width) * d.height * 2);
    double max_depth = 0.0;
    for (double v : d.data) {
        if (!std::isfinite(v) || v < 0.0) throw Error(ErrorCode::NonFiniteValue, "depth values must be finite and >= 0");
        max_depth = std::max(max_depth, v);
    }
    if (std::llround(max_depth / scale) > 65535) {
        throw Error(ErrorCode::DepthOverflow, "max depth " + std::to_string(max_depth) + " m exceeds 65535 units of " +
                                                  std::to_string(scale) + " m; use a scale of at least " +
                                                  std::to_string(max_depth / 65535.0));
    }
    for (std::size_t i = 0; i < d.data.size(); ++i) {
        const double v = d.data[i];
        long long q = v == kNoDepth ? 0 : std::llround(v / scale);
        if (v > 0.0 && q == 0) q = 1;
        rows[2 * i] = static_cast<std::uint8_t>(q >> 8);
        rows[2 * i + 1] = static_cast<std::uint8_t>(q & 0xff);
    }
    return detail::write_png(d.width, d.height, 16, PNG_COLOR_TYPE_GRAY, rows, static_cast<std::size_t>(d.width) * 2, nullptr);
}

inline DepthMap decode_depth_png16(std::span<const std::uint8_t> bytes, double scale = kMillimeter) {
    const detail::DecodedPng p = detail::read_png(bytes);
    if (p.color_type != PNG_COLOR_TYPE_GRAY || p.bit_depth != 16) {
        throw Error(ErrorCode::ParseError, "depth PNG must be 16-bit grayscale");
    }
    DepthMap d(p.width, p.height, kNoDepth);
    for (std::size_t i = 0; i < p.samples.size(); ++i) d.data[i] = p.samples[i] == 0 ? kNoDepth : p.samples[i] * scale;
    return d;
}

/// Fixed, deterministic palette: index 0 black, the rest spread over hue.
inline std::vector<png_color> id_palette(int entries) {
    std::vector<png_color> pal(entries);
    for (int i = 1; i < entries; ++i) {
        const auto h = static_cast<unsigned>(i) * 2654435761u;
        pal[i] = {static_cast<png_byte>(64 + (h >> 24) % 192), static_cast<png_byte>(64 + (h >> 16) % 192),
                  static_cast<png_byte>(64 + (h >> 8) % 192)};
    }
    return pal;
}

inline Bytes encode_idmap_png(const IdMap& ids) {
    int max_id = 0;
    for (auto v : ids.data) max_id = std::max<int>(max_id, v);
    if (max_id > 255) throw Error(ErrorCode::InvalidArgument, "id maps hold at most 255 entities, found id " + std::to_string(max_id));
    Bytes rows(ids.data.begin(), ids.data.end());
    const auto pal = id_palette(256);
    return detail::write_png(ids.width, ids.height, 8, PNG_COLOR_TYPE_PALETTE, rows, static_cast<std::size_t>(ids.width), &pal);
}

/// Accepts palette PNGs (index = id) and 8- or 16-bit grayscale (value = id).
inline IdMap decode_idmap_png(std::span<const std::uint8_t> bytes) {
    const detail::DecodedPng p = detail::read_png(bytes);
    if (p.color_type != PNG_COLOR_TYPE_PALETTE && p.color_type != PNG_COLOR_TYPE_GRAY) {
        throw Error(ErrorCode::ParseError, "id map PNG must be indexed or grayscale");
    }
    IdMap m(p.width, p.height, 0);
    for (std::size_t i = 0; i < p.samples.size(); ++i) m.data[i] = p.samples[i];
    return m;
}

/// Portable float map, little-endian, rows stored bottom to top.
inline Bytes encode_depth_pfm(const DepthMap& d) {
    const std::string header = "Pf\n" + std::to_string(d.width) + " " + std::to_string(d.height) + "\n-1.0\n";
    Bytes out(header.begin(), header.end());
    out.reserve(out.size() + d.data.size() * 4);
    for (int y = d.height - 1; y >= 0; --y) {
        for (int x = 0; x < d.width; ++x) {
            const float f = static_cast<float>(d.at(x, y));
            std::uint32_t u;
            std::memcpy(&u, &f, 4);
            for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(u >> (8 * b)));
        }
    }
    return out;
}

inline DepthMap decode_depth_pfm(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 0;
    auto token = [&]() {
        while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
        const std::size_t start = pos;
        while (pos < bytes.size() && !std::isspace(bytes[pos])) ++pos;
        return std::string(bytes.begin() + start, bytes.begin() + pos);
    };
    const std::string magic = token();
    if (magic != "Pf") throw Error(ErrorCode::ParseError, "PFM: expected single-channel \"Pf\" header, got \"" + magic + "\"");
    const std::string ws = token(), hs = token(), ss = token();
    int w = 0, h = 0;
    double sc = 0;
    try {
        w = std::stoi(ws);
        h = std::stoi(hs);
        sc = std::stod(ss);
    } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, "PFM: malformed header");
    }
    if (w <= 0 || h <= 0 || sc == 0.0) throw Error(ErrorCode::ParseError, "PFM: bad dimensions or scale");
    ++pos;  // single whitespace byte after the scale
    const bool little = sc < 0.0;
    const std::size_t need = static_cast<std::size_t>(w) * h * 4;
    if (bytes.size() < pos + need) {
        throw Error(ErrorCode::ParseError, "PFM: truncated at byte " + std::to_string(bytes.size()) + ", need " +
                                               std::to_string(pos + need));
    }
    DepthMap d(w, h, 0.0);
    for (int y = h - 1; y >= 0; --y) {
        for (int x = 0; x < w; ++x) {
            std::uint32_t u = 0;
            for (int b = 0; b < 4; ++b) {
                const std::uint32_t byte = bytes[pos + b];
                u |= little ? byte << (8 * b) : byte << (8 * (3 - b));
            }
            pos += 4;
            float f;
            std::memcpy(&f, &u, 4);
            if (!std::isfinite(f)) throw Error(ErrorCode::NonFiniteValue, "PFM: non-finite sample");
            d.at(x, y) = f;
        }
    }
    return d;
}

} // namespace cineforge::io
