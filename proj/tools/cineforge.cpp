// SPDX-License-Identifier: Apache-2.0

// cineforge: batch entry point.
//
//   cineforge render --scene s.json --out bundle/ [--width W --height H]
//   cineforge label --input ingest/ --output scene.json [--report r.json]
//   cineforge metrics --pairs eval.jsonl [--output -]
//   cineforge export-camera --scene s.json [--output camera.txt]
//   cineforge validate <scene.json | bundle/>
//   cineforge synth --seed 7 --out clip/
//   cineforge serve --listen 127.0.0.1:8080 [--data-dir scenes/]
//
// Exit codes: 0 success, 1 failed validation or unusable input, 2 usage.

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cineforge/autolabel.hpp"
#include "cineforge/io/bundle.hpp"
#include "cineforge/io/camera_txt.hpp"
#include "cineforge/io/eval.hpp"
#include "cineforge/io/ingest.hpp"
#include "cineforge/io/scene_json.hpp"
#include "cineforge/metrics.hpp"
#include "cineforge/service/http_server.hpp"
#include "cineforge/synth.hpp"

using namespace cineforge;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("cineforge");
    logger->set_pattern("cineforge: %l: %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::info);
    if (const char* env = std::getenv("CINEFORGE_LOG")) {
        const std::string v = env;
        if (v == "error") spdlog::set_level(spdlog::level::err);
        else if (v == "warn") spdlog::set_level(spdlog::level::warn);
        else if (v == "info") spdlog::set_level(spdlog::level::info);
        else if (v == "debug") spdlog::set_level(spdlog::level::debug);
        else spdlog::warn("ignoring CINEFORGE_LOG={} (expected error|warn|info|debug)", v);
    }
}

/// "-" writes to standard output, anything else atomically to the file.
void emit(const std::string& output, const std::string& text) {
    if (output == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    io::write_atomic(output, text);
    spdlog::info("wrote {}", output);
}

void require_parent(const std::string& flag, const fs::path& out) {
    if (out == "-") return;
    fs::path abs = fs::absolute(out);
    if (!abs.has_filename()) abs = abs.parent_path();
    const fs::path parent = abs.parent_path();
    if (!fs::is_directory(parent)) throw UsageError(flag + ": directory " + parent.string() + " does not exist");
}

io::SceneDocument load_valid_scene(const fs::path& path) {
    io::SceneDocument doc = io::load_scene(path);
    const auto violations = validate(doc.scene);
    for (const auto& v : violations) {
        spdlog::error("{}: {}{}: {}", path.string(), v.subject, v.frame >= 0 ? " frame " + std::to_string(v.frame) : "",
                      v.message);
    }
    if (!violations.empty()) throw Error(ErrorCode::InvalidArgument, path.string() + ": scene is not valid");
    return doc;
}

json violation_list(const std::vector<Violation>& vs) {
    json a = json::array();
    for (const auto& v : vs) a.push_back(service::detail::violation_json(v));
    return a;
}

// ---------------------------------------------------------------------------

struct RenderArgs {
    std::string scene, out, encoding = "png16";
    int width = 0, height = 0;
    double scale = io::kMillimeter, near = 0.05, far = 1000.0;
};

int run_render(const RenderArgs& a, unsigned jobs) {
    require_parent("--out", a.out);
    io::BundleSettings st;
    st.render.width = a.width;
    st.render.height = a.height;
    st.render.near = a.near;
    st.render.far = a.far;
    st.depth_encoding = io::parse_depth_encoding(a.encoding);
    st.depth_scale = a.scale;
    st.jobs = jobs;
    const io::SceneDocument doc = load_valid_scene(a.scene);
    io::export_condition_bundle(doc.scene, a.out, st);
    spdlog::info("wrote {} frames to {}", doc.scene.frame_count, a.out);
    return kOk;
}

struct LabelArgs {
    std::string input, output = "-", report;
    double fps = 0.0;
    bool no_outliers = false;
    double mad_factor = 3.0, gap_factor = 1.0;
};

int run_label(const LabelArgs& a, unsigned jobs) {
    require_parent("--output", a.output);
    if (!a.report.empty()) require_parent("--report", a.report);
    const io::LabelInputs in = io::ingest_label_inputs(a.input);
    autolabel::LabelOptions opts;
    opts.jobs = jobs;
    opts.fps = a.fps > 0.0 ? a.fps : in.fps;
    opts.cloud.reject_outliers = !a.no_outliers;
    opts.cloud.mad_factor = a.mad_factor;
    opts.cloud.gap_factor = a.gap_factor;
    const autolabel::LabelResult res = autolabel::label_clip(in.observations, in.tracks, in.poses, in.intrinsics, in.labels, opts);

    json ents = json::array();
    for (const auto& e : res.entities) {
        if (!e.recovered) spdlog::warn("entity {} ({}) dropped: {}", e.id, e.label, e.reason);
        if (!e.missing_frames.empty()) {
            spdlog::warn("entity {}: {} frame(s) without co-observed tracks, interpolated", e.id, e.missing_frames.size());
        }
        json j = {{"id", e.id}, {"label", e.label}, {"recovered", e.recovered}};
        if (e.recovered) {
            j["anchor_frame"] = e.anchor_frame;
            j["cloud_points"] = e.cloud_points;
            j["volume"] = e.volume;
            j["obb_method"] = to_string(e.method);
            j["missing_frames"] = e.missing_frames;
        } else {
            j["reason"] = e.reason;
        }
        ents.push_back(std::move(j));
    }
    emit(a.output, io::dump_scene(io::to_document(res.scene)));
    if (!a.report.empty()) {
        emit(a.report, json{{"frame_count", res.scene.frame_count}, {"entities", ents}}.dump(2) + "\n");
    }
    const auto violations = validate(res.scene);
    for (const auto& v : violations) spdlog::error("labeled scene: {}: {}", v.subject, v.message);
    return violations.empty() ? kOk : kFailed;
}

int run_metrics(const std::string& pairs, const std::string& output) {
    require_parent("--output", output);
    const io::EvalInput in = io::read_eval_jsonl(pairs);
    const metrics::MetricsReport r = metrics::evaluate(in.pairs);
    if (r.box.used == 0 && r.depth.used == 0) {
        throw Error(ErrorCode::NoValidPairs, pairs + ": no frame has both a predicted and a ground-truth value");
    }
    emit(output, io::report_json(r, in).dump(2) + "\n");
    return kOk;
}

int run_export_camera(const std::string& scene, const std::string& output) {
    require_parent("--output", output);
    const io::SceneDocument doc = load_valid_scene(scene);
    emit(output, io::format_camera_txt(export_camera_rt(doc.scene)));
    return kOk;
}

int run_validate(const std::string& target, const std::string& output) {
    require_parent("--output", output);
    json out;
    bool ok = true;
    if (fs::is_directory(target)) {
        const auto problems = io::validate_bundle(target);
        for (const auto& p : problems) spdlog::error("{}", p);
        ok = problems.empty();
        out = {{"kind", "bundle"}, {"path", target}, {"valid", ok}, {"problems", problems}};
    } else {
        const io::SceneDocument doc = io::load_scene(target);
        const auto rep = validate_report(doc.scene);
        for (const auto& v : rep.errors) spdlog::error("{}: {}: {}", target, v.subject, v.message);
        for (const auto& v : rep.warnings) spdlog::warn("{}: {}: {}", target, v.subject, v.message);
        ok = rep.errors.empty();
        out = {{"kind", "scene"},
               {"path", target},
               {"valid", ok},
               {"violations", violation_list(rep.errors)},
               {"warnings", violation_list(rep.warnings)}};
    }
    emit(output, out.dump(2) + "\n");
    return ok ? kOk : kFailed;
}

struct SynthArgs {
    std::uint64_t seed = 0;
    std::string out, encoding = "pfm";
    synth::SynthOptions opts;
    bool static_camera = false;
};

int run_synth(SynthArgs a) {
    require_parent("--out", a.out);
    a.opts.moving_camera = !a.static_camera;
    const synth::SynthClip clip = synth::make_clip(a.seed, a.opts);
    const fs::path out = a.out;
    io::write_label_inputs(out, clip.frames, clip.poses, clip.truth.camera.intrinsics, clip.labels, clip.tracks,
                           clip.truth.fps, io::parse_depth_encoding(a.encoding));
    io::save_scene(out / "truth.json", io::to_document(clip.truth));
    spdlog::info("seed {}: {} entities, {} frames in {}", a.seed, clip.truth.entities.size(), clip.truth.frame_count, a.out);
    return kOk;
}

std::atomic<service::HttpServer*> g_server{nullptr};

extern "C" void on_signal(int) {
    if (auto* s = g_server.load()) s->stop();
}

int run_serve(const std::string& listen, const std::string& data_dir, std::size_t cache) {
    const auto [host, port] = service::parse_listen(listen);
    service::ServiceOptions opts;
    opts.data_dir = data_dir;
    opts.preview_cache_entries = cache;
    service::SceneService svc(opts);
    service::HttpServer server(svc);
    server.set_logger([](const httplib::Request& req, const httplib::Response& res) {
        spdlog::debug("{} {} -> {}", req.method, req.path, res.status);
    });
    const int bound = server.bind(host, port);
    if (bound < 0) throw Error(ErrorCode::IoError, "cannot listen on " + listen);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    spdlog::info("listening on http://{}:{}", host, bound);
    // Lets scripts that passed port 0 discover the port.
    std::cout << "listening " << host << ":" << bound << std::endl;
    server.serve();
    g_server = nullptr;
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    setup_logging();

    CLI::App app{"cineforge: 3D scene authoring, rendering and auto-labeling for controllable video generation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "cineforge 0.1.0");
    unsigned jobs = 0;
    app.add_option("--jobs,-j", jobs, "Worker threads (0 = all processors)")->capture_default_str();

    RenderArgs ra;
    auto* render = app.add_subcommand("render", "Render a scene into a condition bundle");
    render->add_option("--scene", ra.scene, "Scene JSON")->required()->check(CLI::ExistingFile);
    render->add_option("--out", ra.out, "Bundle directory")->required();
    render->add_option("--width", ra.width, "Raster width (default: scene intrinsics)")->check(CLI::Range(1, 16384));
    render->add_option("--height", ra.height, "Raster height (default: scene intrinsics)")->check(CLI::Range(1, 16384));
    render->add_option("--depth-encoding", ra.encoding, "png16 or pfm")
        ->check(CLI::IsMember({"png16", "pfm"}))
        ->capture_default_str();
    render->add_option("--depth-scale", ra.scale, "Meters per PNG16 unit")->check(CLI::PositiveNumber)->capture_default_str();
    render->add_option("--near", ra.near, "Near clip plane (m)")->check(CLI::PositiveNumber)->capture_default_str();
    render->add_option("--far", ra.far, "Far clip plane (m)")->check(CLI::PositiveNumber)->capture_default_str();

    LabelArgs la;
    auto* label = app.add_subcommand("label", "Reconstruct 3D box tracks from an ingest directory");
    label->add_option("--input", la.input, "Ingest directory")->required()->check(CLI::ExistingDirectory);
    label->add_option("--output,-o", la.output, "Scene JSON, or - for standard output")->capture_default_str();
    label->add_option("--report", la.report, "Per-entity report JSON");
    label->add_option("--fps", la.fps, "Override the frame rate from meta.json");
    label->add_flag("--no-outlier-rejection", la.no_outliers, "Keep every masked depth sample");
    label->add_option("--mad-factor", la.mad_factor, "Outlier fence in MADs")->check(CLI::PositiveNumber)->capture_default_str();
    label->add_option("--gap-factor", la.gap_factor, "Fence extension step in MADs (0 disables)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();

    std::string pairs, metrics_out = "-";
    auto* metrics_cmd = app.add_subcommand("metrics", "mIoU, Traj-D and depth RMSE from an evaluation JSONL file");
    metrics_cmd->add_option("--pairs", pairs, "Evaluation JSONL")->required()->check(CLI::ExistingFile);
    metrics_cmd->add_option("--output,-o", metrics_out, "Report JSON, or - for standard output")->capture_default_str();

    std::string cam_scene, cam_out = "-";
    auto* export_camera = app.add_subcommand("export-camera", "Write the F x 12 camera sequence");
    export_camera->add_option("--scene", cam_scene, "Scene JSON")->required()->check(CLI::ExistingFile);
    export_camera->add_option("--output,-o", cam_out, "camera.txt, or - for standard output")->capture_default_str();

    std::string val_target, val_out = "-";
    auto* validate_cmd = app.add_subcommand("validate", "Check a scene document or a condition bundle");
    validate_cmd->add_option("path", val_target, "Scene JSON or bundle directory")->required()->check(CLI::ExistingPath);
    validate_cmd->add_option("--output,-o", val_out, "Violations JSON, or - for standard output")->capture_default_str();

    SynthArgs sa;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic clip: ingest directory plus truth.json");
    synth_cmd->add_option("--seed", sa.seed, "Random seed")->required();
    synth_cmd->add_option("--out", sa.out, "Output directory")->required();
    synth_cmd->add_option("--frames", sa.opts.frame_count, "Frame count")->check(CLI::Range(1, 100000))->capture_default_str();
    synth_cmd->add_option("--width", sa.opts.width, "Raster width")->check(CLI::Range(16, 16384))->capture_default_str();
    synth_cmd->add_option("--height", sa.opts.height, "Raster height")->check(CLI::Range(16, 16384))->capture_default_str();
    synth_cmd->add_option("--min-entities", sa.opts.min_entities)->check(CLI::Range(1, 255))->capture_default_str();
    synth_cmd->add_option("--max-entities", sa.opts.max_entities)->check(CLI::Range(1, 255))->capture_default_str();
    synth_cmd->add_option("--tracks", sa.opts.tracks_per_entity, "Tracks per entity")->check(CLI::Range(1, 100000))->capture_default_str();
    synth_cmd->add_flag("--static-camera", sa.static_camera, "Keep the camera fixed");
    synth_cmd->add_flag("--camera-tracks", sa.opts.camera_frame_tracks, "Write tracks in camera coordinates");
    synth_cmd->add_option("--depth-encoding", sa.encoding, "png16 or pfm")
        ->check(CLI::IsMember({"png16", "pfm"}))
        ->capture_default_str();

    std::string listen = "127.0.0.1:8080", data_dir;
    std::size_t cache = 256;
    auto* serve = app.add_subcommand("serve", "Run the HTTP scene service");
    serve->add_option("--listen", listen, "host:port")->capture_default_str();
    serve->add_option("--data-dir", data_dir, "Directory for persisted scenes (default: in memory)");
    serve->add_option("--preview-cache", cache, "Cached preview images")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*render) return run_render(ra, jobs);
        if (*label) return run_label(la, jobs);
        if (*metrics_cmd) return run_metrics(pairs, metrics_out);
        if (*export_camera) return run_export_camera(cam_scene, cam_out);
        if (*validate_cmd) return run_validate(val_target, val_out);
        if (*synth_cmd) {
            if (sa.opts.max_entities < sa.opts.min_entities) throw UsageError("--max-entities is below --min-entities");
            return run_synth(sa);
        }
        if (*serve) return run_serve(listen, data_dir, cache);
    } catch (const UsageError& e) {
        spdlog::error("{}", e.what());
        return kUsage;
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return kFailed;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kFailed;
    }
    return kUsage;
}
