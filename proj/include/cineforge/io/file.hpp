// SPDX-License-Identifier: Apache-2.0

#pragma once

// File plumbing shared by the format readers and writers: whole-file reads,
// atomic replacement (temp file in the same directory, then rename), and
// locale-independent number formatting.

#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <unistd.h>

#include "cineforge/error.hpp"

namespace cineforge::io {

namespace fs = std::filesystem;

inline std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, path.string() + ": cannot open for reading");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::vector<std::uint8_t> read_bytes(const fs::path& path) {
    const std::string s = read_text(path);
    return {s.begin(), s.end()};
}

/// Readers never observe a partially written file: the bytes go to a sibling
/// temp file that is renamed over `path` once complete.
inline void write_atomic_raw(const fs::path& path, std::span<const char> bytes) {
    static std::atomic<unsigned> counter{0};
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    std::error_code ec;
    fs::create_directories(dir, ec);
    const fs::path tmp = dir / ("." + path.filename().string() + ".tmp." + std::to_string(::getpid()) + "." +
                                std::to_string(counter.fetch_add(1)));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, tmp.string() + ": cannot open for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            fs::remove(tmp, ec);
            throw Error(ErrorCode::IoError, tmp.string() + ": write failed");
        }
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorCode::IoError, path.string() + ": rename failed: " + ec.message());
    }
}

inline void write_atomic(const fs::path& path, std::string_view text) {
    write_atomic_raw(path, std::span<const char>(text.data(), text.size()));
}

inline void write_atomic(const fs::path& path, std::span<const std::uint8_t> bytes) {
    write_atomic_raw(path, std::span<const char>(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

inline void write_atomic(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    write_atomic(path, std::span<const std::uint8_t>(bytes));
}

/// Shortest decimal that parses back to the same double; -0 prints as 0.
inline std::string format_double(double v) {
    if (v == 0.0) v = 0.0;
    std::array<char, 32> buf{};
    const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), r.ptr);
}

/// Parses a whole token as a double; nullopt unless every character is used.
inline std::optional<double> parse_double(std::string_view s) {
    double v = 0.0;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::optional<long long> parse_int(std::string_view s) {
    long long v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

/// Splits on runs of spaces and tabs.
inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

/// Lines without their terminators; a trailing "\r" is stripped.
inline std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        out.push_back(line);
        start = end + 1;
    }
    return out;
}

/// "00042" style zero-padded frame names.
inline std::string frame_name(int frame, std::string_view ext) {
    std::array<char, 16> buf{};
    auto r = std::to_chars(buf.data(), buf.data() + buf.size(), frame);
    std::string digits(buf.data(), r.ptr);
    if (digits.size() < 5) digits.insert(0, 5 - digits.size(), '0');
    return digits + std::string(ext);
}

} // namespace cineforge::io
