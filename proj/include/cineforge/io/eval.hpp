// SPDX-License-Identifier: Apache-2.0

#pragma once

// Metric evaluation files. Input is JSON lines, one frame per line:
//   {"frame": 0, "pred_box": [x0, y0, x1, y1], "gt_box": [...], "pred_depth": 2.1, "gt_depth": 2.0}
// Any of the four values may be null or absent. An optional first line
// {"width": 640, "height": 480} records the image resolution for the report.

#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "cineforge/error.hpp"
#include "cineforge/io/file.hpp"
#include "cineforge/io/scene_json.hpp"
#include "cineforge/metrics.hpp"

namespace cineforge::io {

struct EvalInput {
    metrics::TrackEval pairs;
    std::optional<int> width;
    std::optional<int> height;
};

namespace detail {

inline std::optional<metrics::Box2> opt_box(const json& j, const char* key, const std::string& path) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    const auto a = get_reals<4>(*it, path + "." + key);
    const metrics::Box2 b{a[0], a[1], a[2], a[3]};
    if (!b.valid()) field_error(path + "." + key, "need x0 < x1 and y0 < y1");
    return b;
}

inline std::optional<double> opt_real(const json& j, const char* key, const std::string& path) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    const double v = get_real(*it, path + "." + key);
    if (!std::isfinite(v)) field_error(path + "." + key, "non-finite");
    return v;
}

} // namespace detail

inline EvalInput parse_eval_jsonl(std::string_view text) {
    EvalInput in;
    const auto lines = split_lines(text);
    bool first = true;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (split_ws(lines[i]).empty()) continue;
        const std::string where = "line " + std::to_string(i + 1);
        json j;
        try {
            j = json::parse(lines[i]);
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::ParseError, where + ", byte " + std::to_string(e.byte) + ": " + e.what());
        }
        if (!j.is_object()) detail::field_error(where, "expected a JSON object");
        if (first && !j.contains("frame") && (j.contains("width") || j.contains("height"))) {
            in.width = static_cast<int>(detail::get_int(detail::member(j, "width", where), where + ".width"));
            in.height = static_cast<int>(detail::get_int(detail::member(j, "height", where), where + ".height"));
            first = false;
            continue;
        }
        first = false;
        metrics::FrameEval fe;
        fe.frame = static_cast<int>(detail::get_int(detail::member(j, "frame", where), where + ".frame"));
        fe.pred_box = detail::opt_box(j, "pred_box", where);
        fe.gt_box = detail::opt_box(j, "gt_box", where);
        fe.pred_depth = detail::opt_real(j, "pred_depth", where);
        fe.gt_depth = detail::opt_real(j, "gt_depth", where);
        in.pairs.push_back(fe);
    }
    return in;
}

inline EvalInput read_eval_jsonl(const fs::path& path) {
    try {
        return parse_eval_jsonl(read_text(path));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::IoError) throw;
        throw Error(e.code(), path.string() + ": " + e.message());
    }
}

inline json coverage_json(const metrics::Coverage& c) {
    return {{"used", c.used}, {"total", c.total}, {"fraction", c.fraction()}};
}

/// Metrics without a valid pair are null.
inline json report_json(const metrics::MetricsReport& r, const EvalInput& in) {
    auto value = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json res = nullptr;
    if (in.width && in.height) res = {{"width", *in.width}, {"height", *in.height}};
    return {{"frames", in.pairs.size()},
            {"resolution", res},
            {"miou", value(r.miou)},
            {"traj_d_px", value(r.traj_d)},
            {"depth_rmse_m", value(r.depth_d)},
            {"coverage", {{"box", coverage_json(r.box)}, {"depth", coverage_json(r.depth)}}}};
}

} // namespace cineforge::io
