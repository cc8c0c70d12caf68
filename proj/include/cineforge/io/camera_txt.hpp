// SPDX-License-Identifier: Apache-2.0

#pragma once

// Camera sequences as text.
//
// Native: one line per frame, 12 space-separated decimals (row-major R, then t),
// LF endings. RealEstate10K: optional URL line, then per frame
//   timestamp fx fy cx cy 0 0 r00 r01 r02 t0 r10 r11 r12 t1 r20 r21 r22 t2
// with intrinsics normalized by the image size and a world-to-camera 3x4 pose.

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "cineforge/error.hpp"
#include "cineforge/io/file.hpp"
#include "cineforge/scene.hpp"

namespace cineforge::io {

namespace detail {

inline std::vector<double> parse_fields(std::string_view line, std::size_t expected, std::size_t line_no) {
    const auto tokens = split_ws(line);
    if (tokens.size() != expected) {
        throw Error(ErrorCode::FieldCountError, "line " + std::to_string(line_no) + ": expected " +
                                                    std::to_string(expected) + " fields, got " +
                                                    std::to_string(tokens.size()));
    }
    std::vector<double> out;
    out.reserve(expected);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto v = parse_double(tokens[i]);
        if (!v) {
            throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ", field " + std::to_string(i + 1) +
                                                   ": not a number: \"" + std::string(tokens[i]) + "\"");
        }
        if (!std::isfinite(*v)) {
            throw Error(ErrorCode::NonFiniteValue, "line " + std::to_string(line_no) + ", field " + std::to_string(i + 1));
        }
        out.push_back(*v);
    }
    return out;
}

inline bool blank(std::string_view line) { return split_ws(line).empty(); }

} // namespace detail

inline std::string format_camera_txt(const CameraSequence& seq) {
    std::string out;
    for (std::size_t f = 0; f < seq.size(); ++f) {
        for (std::size_t i = 0; i < 12; ++i) {
            if (!std::isfinite(seq[f][i])) {
                throw Error(ErrorCode::NonFiniteValue, "frame " + std::to_string(f) + ", field " + std::to_string(i + 1));
            }
            if (i) out += ' ';
            out += format_double(seq[f][i]);
        }
        out += '\n';
    }
    return out;
}

/// Blank lines are skipped; line numbers in errors are 1-based file lines.
inline CameraSequence parse_camera_txt(std::string_view text) {
    CameraSequence seq;
    const auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (detail::blank(lines[i])) continue;
        const auto v = detail::parse_fields(lines[i], 12, i + 1);
        CameraRow row;
        std::copy(v.begin(), v.end(), row.begin());
        seq.push_back(row);
    }
    return seq;
}

inline void write_camera_txt(const fs::path& path, const CameraSequence& seq) {
    write_atomic(path, format_camera_txt(seq));
}

inline CameraSequence read_camera_txt(const fs::path& path) {
    try {
        return parse_camera_txt(read_text(path));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::IoError) throw;
        throw Error(e.code(), path.string() + ": " + e.message());
    }
}

struct RealEstateClip {
    std::string url;
    std::vector<long long> timestamps;
    /// Converted to native rows (R row-major, then t).
    CameraSequence rows;
    /// Normalized intrinsics from the first frame (fractions of width/height).
    double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;

    Intrinsics intrinsics(int width, int height) const {
        return {fx * width, fy * height, cx * width, cy * height, width, height};
    }
};

inline RealEstateClip parse_realestate10k(std::string_view text) {
    RealEstateClip clip;
    const auto lines = split_lines(text);
    bool first = true;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (detail::blank(lines[i])) continue;
        if (first) {
            first = false;
            const auto tokens = split_ws(lines[i]);
            if (tokens.size() == 1 && !parse_double(tokens[0])) {
                clip.url = std::string(tokens[0]);
                continue;
            }
        }
        const auto v = detail::parse_fields(lines[i], 19, i + 1);
        if (clip.rows.empty()) {
            clip.fx = v[1];
            clip.fy = v[2];
            clip.cx = v[3];
            clip.cy = v[4];
        }
        clip.timestamps.push_back(static_cast<long long>(v[0]));
        const double* p = v.data() + 7;
        clip.rows.push_back({p[0], p[1], p[2], p[4], p[5], p[6], p[8], p[9], p[10], p[3], p[7], p[11]});
    }
    return clip;
}

inline RealEstateClip read_realestate10k(const fs::path& path) {
    try {
        return parse_realestate10k(read_text(path));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::IoError) throw;
        throw Error(e.code(), path.string() + ": " + e.message());
    }
}

} // namespace cineforge::io
