#include "commands.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "cli_config.hpp"
#include "manifest.hpp"
#include "rgbdnav/binary_io.hpp"
#include "rgbdnav/data/dataset.hpp"
#include "rgbdnav/data/record.hpp"
#include "rgbdnav/error.hpp"
#include "rgbdnav/eval/ablation.hpp"
#include "rgbdnav/eval/metrics.hpp"
#include "rgbdnav/eval/trials.hpp"
#include "rgbdnav/models/fusion_net.hpp"
#include "rgbdnav/nn/checkpoint.hpp"
#include "rgbdnav/sim/world_map.hpp"
#include "rgbdnav/teleop/server.hpp"
#include "rgbdnav/train/trainer.hpp"

namespace rgbdnav::cli {

namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_stop_requested{false};

extern "C" void on_stop_signal(int) { g_stop_requested = true; }

struct Options {
    std::optional<std::string> config_path;
    std::string map_dir;
    std::string maps;
    std::string arch;
    std::string data_dir;
    std::string out_dir;
    std::string ckpt;
    std::string run_dir;
    std::string what;
    std::string manifest_path;
    std::string split = "test";
    std::string bind = "127.0.0.1";
    std::string initial_map;
    std::size_t episodes = 60;
    std::size_t trials = 3;
    std::uint64_t seed = 1;
    int port = 8765;
    double duration = 0.0;
    bool expert = false;
    bool fail_color = false;
    bool fail_depth = false;
    bool lockstep = false;
};

struct Context {
    const Options& opt;
    CliConfig config;
    std::vector<std::string> argv;  // canonical form stored in manifests
    std::ostream& out;
    std::ostream& err;
    std::string map_dir;
};

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) != nullptr) return kExitUsage;
    if (dynamic_cast<const IoError*>(&e) != nullptr) return kExitMissing;
    if (dynamic_cast<const ShapeError*>(&e) != nullptr) return kExitMissing;
    return kExitFailure;
}

std::string absolute(const std::string& p) { return fs::absolute(p).lexically_normal().string(); }

// Path flags are made absolute and --config is dropped: the manifest carries
// the resolved config itself.
std::vector<std::string> canonical_args(const std::vector<std::string>& args, const std::string& map_dir) {
    static const std::set<std::string> path_flags = {"--data", "--ckpt", "--run", "--map-dir", "--out", "--manifest"};
    std::vector<std::string> canon;
    bool has_map_dir = false;
    for (std::size_t i = 0; i < args.size(); ++i) {
        std::string flag = args[i];
        std::optional<std::string> value;
        if (const auto eq = flag.find('='); flag.rfind("--", 0) == 0 && eq != std::string::npos) {
            value = flag.substr(eq + 1);
            flag = flag.substr(0, eq);
        }
        if (flag == "--config") {
            if (!value) ++i;
            continue;
        }
        if (path_flags.contains(flag)) {
            if (!value && i + 1 < args.size()) value = args[++i];
            if (flag == "--map-dir") has_map_dir = true;
            canon.push_back(flag);
            canon.push_back(value ? absolute(*value) : std::string());
            continue;
        }
        canon.push_back(value ? flag + "=" + *value : flag);
    }
    if (!has_map_dir) {
        canon.push_back("--map-dir");
        canon.push_back(absolute(map_dir));
    }
    return canon;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
}

void require_dir(const std::string& dir, const char* what) {
    if (!fs::is_directory(dir)) throw IoError(std::string(what) + " not found: " + dir);
}

void require_file(const std::string& path, const char* what) {
    if (!fs::is_regular_file(path)) throw IoError(std::string(what) + " not found: " + path);
}

void write_manifest(const Context& ctx, const std::string& command, KeyValue seeds, std::vector<std::string> inputs,
                    const std::string& started) {
    RunManifest m;
    m.command = command;
    m.argv = ctx.argv;
    m.config = to_keyvalue(ctx.config);
    m.seeds = std::move(seeds);
    for (auto& in : inputs) in = absolute(in);
    m.inputs = std::move(inputs);
    m.output_dir = ctx.opt.out_dir;
    m.started = started;
    m.finished = utc_timestamp();
    m.write();
}

KeyValue seed_block(std::uint64_t seed) {
    KeyValue kv;
    kv.set("seed", std::to_string(seed));
    return kv;
}

std::vector<std::shared_ptr<const sim::WorldMap>> resolve_maps(const std::string& spec, const std::string& dir) {
    std::vector<std::shared_ptr<const sim::WorldMap>> maps;
    if (spec == "known" || spec == "unknown" || spec == "all") {
        require_dir(dir, "map directory");
        for (const auto& id : sim::list_maps(dir)) {
            auto map = std::make_shared<const sim::WorldMap>(sim::load_map_by_id(id, dir));
            const bool keep = spec == "all" || (spec == "known") == (map->tag == sim::MapTag::Known);
            if (keep) maps.push_back(std::move(map));
        }
    } else {
        std::istringstream in(spec);
        std::string id;
        while (std::getline(in, id, ',')) {
            if (id.empty()) continue;
            const auto path = (fs::path(dir) / (id + ".map")).string();
            require_file(path, "map");
            maps.push_back(std::make_shared<const sim::WorldMap>(sim::load_map_by_id(id, dir)));
        }
    }
    if (maps.empty()) throw ConfigError("no maps match '" + spec + "' in " + dir);
    return maps;
}

std::vector<std::string> map_ids(const std::vector<std::shared_ptr<const sim::WorldMap>>& maps) {
    std::vector<std::string> ids;
    for (const auto& m : maps) ids.push_back(m->id);
    return ids;
}

std::string join(const std::vector<std::string>& items, const char* sep) {
    std::string s;
    for (std::size_t i = 0; i < items.size(); ++i) s += (i ? sep : "") + items[i];
    return s;
}

std::vector<data::Episode> load_data(const std::string& dir) {
    require_dir(dir, "dataset");
    require_file((fs::path(dir) / "index.txt").string(), "dataset index");
    return data::load_dataset(dir);
}

models::ModelConfig model_config_for(models::FusionKind kind, const data::DatasetView& view) {
    auto mc = models::default_config(kind);
    mc.input_h = view.image_h();
    mc.input_w = view.image_w();
    return mc;
}

train::TrainConfig train_config(const Context& ctx) {
    auto tc = ctx.config.train;
    tc.seed = ctx.opt.seed;
    return tc;
}

void print_progress(std::ostream& out) {
    train::set_progress_sink([&out](const std::string& line) { out << "  " << line << '\n' << std::flush; });
}

std::string dims(std::size_t c, std::size_t h, std::size_t w) {
    return std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w);
}

void check_model_input(const models::ModelConfig& mc, std::size_t color_c, std::size_t depth_c, std::size_t h,
                       std::size_t w, const std::string& what) {
    if (mc.input_h == h && mc.input_w == w && mc.color_channels == color_c && mc.depth_channels == depth_c) return;
    throw ShapeError("shape mismatch: checkpoint expects color " + dims(mc.color_channels, mc.input_h, mc.input_w) +
                     " and depth " + dims(mc.depth_channels, mc.input_h, mc.input_w) + ", " + what + " has color " +
                     dims(color_c, h, w) + " and depth " + dims(depth_c, h, w));
}

std::string metrics_header() { return "network,input,split,n,mae,rmse,medae,vs\n"; }

std::string metrics_row(std::string_view network, std::string_view input, std::string_view split,
                        const eval::MetricsReport& m) {
    std::ostringstream os;
    os << network << ',' << input << ',' << split << ',' << m.n << ',' << format_number(m.mae) << ','
       << format_number(m.rmse) << ',' << format_number(m.medae) << ','
       << (m.vs_defined() ? format_number(m.vs) : std::string("undefined")) << '\n';
    return os.str();
}

int cmd_collect(Context& ctx) {
    const auto& o = ctx.opt;
    const auto started = utc_timestamp();
    const auto maps = resolve_maps(o.maps.empty() ? "known" : o.maps, ctx.map_dir);
    auto cc = collect_config(ctx.config);
    cc.map_ids = map_ids(maps);
    cc.map_dir = ctx.map_dir;
    cc.episodes = o.episodes;
    cc.seed = o.seed;
    if (cc.episodes == 0) throw ConfigError("--episodes must be positive");
    const auto episodes = data::collect_expert(cc);
    ensure_dir(o.out_dir);
    data::save_dataset(o.out_dir, episodes);
    std::size_t samples = 0, flagged = 0;
    for (const auto& e : episodes) {
        samples += e.samples.size();
        flagged += e.flagged ? 1 : 0;
    }
    write_manifest(ctx, "collect", seed_block(o.seed), {ctx.map_dir}, started);
    ctx.out << "collected " << episodes.size() << " episodes, " << samples << " samples, " << flagged
            << " flagged, maps " << join(cc.map_ids, ",") << " -> " << o.out_dir << '\n';
    return kExitOk;
}

int cmd_teleop(Context& ctx) {
    const auto& o = ctx.opt;
    const auto started = utc_timestamp();
    const auto maps = resolve_maps(o.maps.empty() ? "all" : o.maps, ctx.map_dir);
    if (o.port < 0 || o.port > 65535) throw ConfigError("--port must be in [0, 65535]");
    ensure_dir(o.out_dir);
    teleop::ServerConfig sc;
    sc.bind = o.bind;
    sc.port = static_cast<std::uint16_t>(o.port);
    sc.out_dir = o.out_dir;
    sc.initial_map = o.initial_map;
    sc.mode = o.lockstep ? teleop::TickMode::Lockstep : teleop::TickMode::Realtime;
    sc.omega_max = ctx.config.omega_max;
    sc.camera = ctx.config.camera;
    teleop::TeleopServer server(sc, std::make_shared<const teleop::MapSet>(maps));
    server.start();
    ctx.out << "teleop listening on ws://" << o.bind << ':' << server.port() << " maps " << join(map_ids(maps), ",")
            << '\n'
            << std::flush;
    g_stop_requested = false;
    auto prev_int = std::signal(SIGINT, on_stop_signal);
    auto prev_term = std::signal(SIGTERM, on_stop_signal);
    const auto t0 = std::chrono::steady_clock::now();
    while (!g_stop_requested) {
        if (o.duration > 0.0 &&
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() >= o.duration) {
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    std::signal(SIGINT, prev_int);
    std::signal(SIGTERM, prev_term);
    server.stop();
    write_manifest(ctx, "teleop", KeyValue{}, {ctx.map_dir}, started);
    ctx.out << "teleop stopped after " << server.sessions_started() << " sessions\n";
    return kExitOk;
}

int cmd_gridsearch(Context& ctx) {
    const auto& o = ctx.opt;
    const auto started = utc_timestamp();
    const auto kind = models::parse_fusion_kind(o.arch);
    const auto parts = data::make_parts(load_data(o.data_dir), o.seed);
    const auto tc = train_config(ctx);
    const auto mc = model_config_for(kind, parts.train);
    const auto seeds = train::experiment_seeds(tc.seed, kind);
    print_progress(ctx.out);
    const train::TargetFactory factory = [&]() -> std::unique_ptr<train::TrainTarget> {
        return std::make_unique<train::ModelTarget>(models::FusionNet<float>::build(mc, seeds.init), parts.train,
                                                    parts.val, tc.batch_size, seeds.shuffle);
    };
    const auto grid = train::grid_search_lr(factory, tc);
    ensure_dir(o.out_dir);
    write_file((fs::path(o.out_dir) / "grid.csv").string(), train::grid_csv(grid));
    write_manifest(ctx, "gridsearch", seed_block(o.seed), {o.data_dir}, started);
    ctx.out << "lr          final_train_loss\n";
    for (const auto& row : grid.rows) {
        ctx.out << format_number(row.lr) << std::string(12 - std::min<std::size_t>(11, format_number(row.lr).size()), ' ')
                << format_number(row.final_train_loss) << '\n';
    }
    ctx.out << "selected lr " << format_number(grid.best_lr) << " for " << models::fusion_tag(kind) << '\n';
    return kExitOk;
}

int cmd_train(Context& ctx) {
    const auto& o = ctx.opt;
    const auto started = utc_timestamp();
    const auto kind = models::parse_fusion_kind(o.arch);
    const auto parts = data::make_parts(load_data(o.data_dir), o.seed);
    const auto tc = train_config(ctx);
    const auto mc = model_config_for(kind, parts.train);
    print_progress(ctx.out);
    const auto result = train::run_experiment(kind, parts, tc, o.out_dir, &mc);
    const auto test = eval::evaluate_offline(result.model, parts.test);
    write_file((fs::path(o.out_dir) / "metrics.csv").string(),
               metrics_header() + metrics_row(models::fusion_tag(kind), "RGB-D", "test", test));
    KeyValue seeds = seed_block(o.seed);
    seeds.set("init", std::to_string(result.seeds.init));
    seeds.set("shuffle", std::to_string(result.seeds.shuffle));
    write_manifest(ctx, "train", seeds, {o.data_dir}, started);
    ctx.out << models::fusion_tag(kind) << ": lr " << format_number(result.grid.best_lr) << ", best epoch "
            << result.record.best_epoch << " of " << result.record.stop_epoch << ", val loss "
            << format_number(result.record.best_val_loss) << ", test " << eval::format_metrics(test) << '\n';
    return kExitOk;
}

data::DatasetView select_split(const data::DatasetParts& parts, const std::string& split) {
    if (split == "train") return parts.train;
    if (split == "val") return parts.val;
    if (split == "test") return parts.test;
    std::vector<std::size_t> rows(parts.samples->size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return data::DatasetView(parts.samples, std::move(rows));
}

int cmd_eval(Context& ctx) {
    const auto& o = ctx.opt;
    const auto started = utc_timestamp();
    require_file(o.ckpt, "checkpoint");
    const auto model = models::FusionNet<float>::from_checkpoint(nn::load_checkpoint(o.ckpt));
    const auto parts = data::make_parts(load_data(o.data_dir), o.seed, o.split == "all");
    const auto view = select_split(parts, o.split);
    if (view.empty()) throw InvalidInput("split '" + o.split + "' is empty");
    const auto& first = view.raw(0);
    check_model_input(model.config(), first.color.dim(0), first.depth.dim(0), view.image_h(), view.image_w(),
                      "dataset");
    const auto m = eval::evaluate_offline(model, view);
    ensure_dir(o.out_dir);
    write_file((fs::path(o.out_dir) / "metrics.csv").string(),
               metrics_header() + metrics_row(models::fusion_tag(model.kind()), "RGB-D", o.split, m));
    write_manifest(ctx, "eval", seed_block(o.seed), {o.ckpt, o.data_dir}, started);
    ctx.out << models::fusion_tag(model.kind()) << ' ' << o.split << ": " << eval::format_metrics(m) << '\n';
    return kExitOk;
}

int cmd_ablate(Context& ctx) {
    const auto& o = ctx.opt;
    const auto started = utc_timestamp();
    const auto kind = models::parse_fusion_kind(o.arch);
    const auto parts = data::make_parts(load_data(o.data_dir), o.seed);
    const auto tc = train_config(ctx);
    const auto mc = model_config_for(kind, parts.train);
    print_progress(ctx.out);
    const auto result = eval::run_ablation(kind, parts, tc, o.out_dir, &mc);
    const std::vector<eval::AblationRow> rows = {result.color_only, result.depth_only};
    const auto table = eval::format_ablation_table(rows);
    std::string csv = metrics_header();
    for (const auto& r : rows) {
        csv += metrics_row(models::fusion_tag(kind), r.kept == data::Modality::Color ? "RGB" : "Depth", "test",
                           r.metrics);
    }
    write_file((fs::path(o.out_dir) / "ablation.txt").string(), table);
    write_file((fs::path(o.out_dir) / "metrics.csv").string(), csv);
    write_manifest(ctx, "ablate", seed_block(o.seed), {o.data_dir}, started);
    ctx.out << table;
    return kExitOk;
}

data::Pilot zeroing(data::Pilot inner, data::Modality m) {
    return [inner = std::move(inner), m](const sim::RgbdFrame& frame) {
        sim::RgbdFrame copy = frame;
        (m == data::Modality::Color ? copy.color : copy.depth).fill(0.0f);
        return inner(copy);
    };
}

int cmd_navigate(Context& ctx) {
    const auto& o = ctx.opt;
    const auto started = utc_timestamp();
    if (o.expert == !o.ckpt.empty()) throw ConfigError("navigate needs exactly one of --expert or --ckpt");
    if (o.fail_color && o.fail_depth) throw ConfigError("--fail-color and --fail-depth are exclusive");
    const auto maps = resolve_maps(o.maps.empty() ? "known" : o.maps, ctx.map_dir);
    std::optional<data::Modality> failed;
    if (o.fail_color) failed = data::Modality::Color;
    if (o.fail_depth) failed = data::Modality::Depth;
    const auto& cam = ctx.config.camera;

    data::Pilot pilot;
    std::string name;
    std::vector<std::string> inputs = {ctx.map_dir};
    if (o.expert) {
        sim::ExpertParams params;
        params.omega_max = ctx.config.omega_max;
        pilot = data::expert_pilot(params, cam);
        if (failed) pilot = zeroing(std::move(pilot), *failed);
        name = "expert";
    } else {
        require_file(o.ckpt, "checkpoint");
        auto model =
            std::make_shared<const models::FusionNet<float>>(models::FusionNet<float>::from_checkpoint(nn::load_checkpoint(o.ckpt)));
        check_model_input(model->config(), 3, 1, cam.image_h, cam.image_w, "camera");
        name = std::string(models::fusion_tag(model->kind()));
        pilot = eval::model_pilot(std::move(model), failed);
        inputs.push_back(o.ckpt);
    }
    if (failed) name += *failed == data::Modality::Color ? "-nocolor" : "-nodepth";

    auto tcfg = trial_config(ctx.config);
    tcfg.n_trials = o.trials;
    tcfg.seed = o.seed;
    const auto summary = eval::run_trials(pilot, name, maps, tcfg);
    ensure_dir(o.out_dir);
    eval::export_paths(summary.results, o.out_dir);
    std::ostringstream rates;
    rates << "map,successes,trials,rate\n";
    for (const auto& [map, rate] : summary.rate_by_map) {
        std::size_t n = 0, ok = 0;
        for (const auto& r : summary.results) {
            if (r.map_id != map) continue;
            ++n;
            ok += r.outcome == eval::Outcome::Success ? 1 : 0;
        }
        rates << map << ',' << ok << ',' << n << ',' << format_number(rate) << '\n';
        ctx.out << map << ": " << ok << '/' << n << " success\n";
    }
    rates << "all," << summary.successes << ',' << summary.results.size() << ',' << format_number(summary.pooled_rate)
          << '\n';
    write_file((fs::path(o.out_dir) / "rates.csv").string(), rates.str());
    write_manifest(ctx, "navigate", seed_block(o.seed), inputs, started);
    ctx.out << name << " success rate " << format_number(summary.pooled_rate) << " (" << summary.successes << '/'
            << summary.results.size() << ")\n";
    return kExitOk;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::istringstream in(read_file(path));
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

std::vector<fs::path> find_files(const std::string& root, const std::string& name) {
    std::vector<fs::path> found;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (entry.is_regular_file() && entry.path().filename() == name) found.push_back(entry.path());
    }
    std::sort(found.begin(), found.end());
    return found;
}

std::string run_label(const std::string& root, const fs::path& file) {
    const auto rel = fs::relative(file.parent_path(), root).generic_string();
    return rel.empty() ? "." : rel;
}

// Concatenates every `name` file under root, prefixing each row with its run.
std::string gather(const std::string& root, const std::string& name) {
    const auto files = find_files(root, name);
    if (files.empty()) throw IoError("no " + name + " under " + root);
    std::string header, body;
    for (const auto& f : files) {
        const auto lines = read_lines(f.string());
        if (lines.empty()) continue;
        if (header.empty()) {
            header = lines[0];
        } else if (lines[0] != header) {
            throw FormatError(f.string() + ": header differs from '" + header + "'");
        }
        for (std::size_t i = 1; i < lines.size(); ++i) body += run_label(root, f) + ',' + lines[i] + '\n';
    }
    return "run," + header + '\n' + body;
}

int cmd_export(Context& ctx) {
    const auto& o = ctx.opt;
    const auto started = utc_timestamp();
    require_dir(o.run_dir, "run directory");
    std::vector<std::pair<std::string, std::string>> files;
    if (o.what == "paths") {
        const auto summary_path = (fs::path(o.run_dir) / "summary.csv").string();
        require_file(summary_path, "trial summary");
        const auto rows = read_lines(summary_path);
        std::string csv = "map,pilot,trial,t,x,y,theta,v,omega\n";
        for (std::size_t i = 1; i < rows.size(); ++i) {
            std::istringstream row(rows[i]);
            eval::TrialResult r;
            std::string trial;
            std::getline(row, r.map_id, ',');
            std::getline(row, r.pilot, ',');
            std::getline(row, trial, ',');
            r.trial = static_cast<std::size_t>(std::stoull(trial));
            const auto path = (fs::path(o.run_dir) / eval::trial_file_name(r)).string();
            require_file(path, "trial path");
            const auto lines = read_lines(path);
            for (std::size_t k = 1; k < lines.size(); ++k) {
                csv += r.map_id + ',' + r.pilot + ',' + trial + ',' + lines[k] + '\n';
            }
        }
        files.emplace_back("paths.csv", csv);
    } else if (o.what == "losses") {
        files.emplace_back("losses.csv", gather(o.run_dir, "loss_curve.csv"));
        files.emplace_back("grid.csv", gather(o.run_dir, "grid.csv"));
    } else {
        files.emplace_back("metrics.csv", gather(o.run_dir, "metrics.csv"));
    }
    ensure_dir(o.out_dir);
    for (const auto& [name, bytes] : files) write_file((fs::path(o.out_dir) / name).string(), bytes);
    write_manifest(ctx, "export", KeyValue{}, {o.run_dir}, started);
    for (const auto& f : files) ctx.out << "wrote " << (fs::path(o.out_dir) / f.first).string() << '\n';
    return kExitOk;
}

int cmd_describe(Context& ctx) {
    const auto kind = models::parse_fusion_kind(ctx.opt.arch);
    auto mc = models::default_config(kind);
    mc.input_h = ctx.config.camera.image_h;
    mc.input_w = ctx.config.camera.image_w;
    const auto model = models::FusionNet<float>::build(mc, ctx.opt.seed);
    ctx.out << models::format_report(model.describe());
    ctx.out << "post-fusion width " << models::post_fusion_width(mc) << '\n';
    ctx.out << "parameters " << model.count_params() << '\n';
    return kExitOk;
}

int cmd_replay(Context& ctx) {
    const auto& o = ctx.opt;
    require_file(o.manifest_path, "manifest");
    const auto m = read_manifest(o.manifest_path);
    if (m.command == "teleop" || m.command == "replay") {
        throw ConfigError("'" + m.command + "' runs cannot be replayed");
    }
    std::vector<std::string> args;
    bool has_out = false;
    for (std::size_t i = 0; i < m.argv.size(); ++i) {
        if (m.argv[i] == "--out" && i + 1 < m.argv.size()) {
            args.push_back("--out");
            args.push_back(absolute(o.out_dir));
            has_out = true;
            ++i;
            continue;
        }
        args.push_back(m.argv[i]);
    }
    if (!has_out) throw FormatError(o.manifest_path + ": recorded command has no --out");
    const int code = run_with_config(args, m.config, ctx.out, ctx.err);
    if (code != kExitOk) return code;
    const auto again = read_manifest((fs::path(o.out_dir) / "manifest.txt").string());
    std::map<std::string, std::string> before(m.artifacts.begin(), m.artifacts.end());
    std::map<std::string, std::string> after(again.artifacts.begin(), again.artifacts.end());
    std::vector<std::string> differ;
    for (const auto& [path, sha] : before) {
        const auto it = after.find(path);
        if (it == after.end() || it->second != sha) differ.push_back(path);
    }
    for (const auto& [path, sha] : after) {
        if (!before.contains(path)) differ.push_back(path);
    }
    if (!differ.empty()) {
        ctx.err << "rgbdnav: replay differs in " << join(differ, ", ") << '\n';
        return kExitFailure;
    }
    ctx.out << "replay identical: " << before.size() << " artifacts\n";
    return kExitOk;
}

int run_impl(const std::vector<std::string>& args, const KeyValue* config_snapshot, std::ostream& out,
             std::ostream& err) {
    Options o;
    CLI::App app{"RGB-D imitation-learning navigation pipeline", "rgbdnav"};
    app.require_subcommand(1, 1);
    app.fallthrough();
    app.add_option("--config", o.config_path, "key=value config file (default: $RGBDNAV_CONFIG)");
    app.add_option("--map-dir", o.map_dir, "directory of *.map files");

    const std::vector<std::string> arch_names = {"emb", "conemb", "gated"};
    auto* collect = app.add_subcommand("collect", "record expert demonstrations");
    collect->add_option("--maps", o.maps, "known, unknown, all or comma-separated ids");
    collect->add_option("--episodes", o.episodes)->capture_default_str();
    collect->add_option("--seed", o.seed)->capture_default_str();
    collect->add_option("--out", o.out_dir)->required();

    auto* teleop = app.add_subcommand("teleop", "serve the WebSocket teleoperation bridge");
    teleop->add_option("--bind", o.bind)->capture_default_str();
    teleop->add_option("--port", o.port, "0 picks a free port")->capture_default_str();
    teleop->add_option("--maps", o.maps, "known, unknown, all or comma-separated ids");
    teleop->add_option("--initial-map", o.initial_map);
    teleop->add_option("--out", o.out_dir, "dataset directory for recordings")->required();
    teleop->add_flag("--lockstep", o.lockstep, "advance one tick per steering command");
    teleop->add_option("--duration", o.duration, "stop after this many wall seconds (0: until SIGINT)");

    auto* gridsearch = app.add_subcommand("gridsearch", "learning-rate grid table");
    gridsearch->add_option("--arch", o.arch)->required()->check(CLI::IsMember(arch_names));
    gridsearch->add_option("--data", o.data_dir)->required();
    gridsearch->add_option("--seed", o.seed)->capture_default_str();
    gridsearch->add_option("--out", o.out_dir)->required();

    auto* train = app.add_subcommand("train", "grid search plus full training run");
    train->add_option("--arch", o.arch)->required()->check(CLI::IsMember(arch_names));
    train->add_option("--data", o.data_dir)->required();
    train->add_option("--seed", o.seed)->capture_default_str();
    train->add_option("--out", o.out_dir)->required();

    auto* evalc = app.add_subcommand("eval", "offline metrics of a checkpoint");
    evalc->add_option("--ckpt", o.ckpt)->required();
    evalc->add_option("--data", o.data_dir)->required();
    evalc->add_option("--split", o.split)->check(CLI::IsMember({"train", "val", "test", "all"}))->capture_default_str();
    evalc->add_option("--seed", o.seed, "split seed")->capture_default_str();
    evalc->add_option("--out", o.out_dir)->required();

    auto* ablate = app.add_subcommand("ablate", "single-modality retraining report");
    ablate->add_option("--arch", o.arch)->required()->check(CLI::IsMember(arch_names));
    ablate->add_option("--data", o.data_dir)->required();
    ablate->add_option("--seed", o.seed)->capture_default_str();
    ablate->add_option("--out", o.out_dir)->required();

    auto* navigate = app.add_subcommand("navigate", "closed-loop trials");
    navigate->add_option("--ckpt", o.ckpt);
    navigate->add_flag("--expert", o.expert);
    navigate->add_option("--maps", o.maps, "known, unknown, all or comma-separated ids");
    navigate->add_option("--trials", o.trials)->capture_default_str()->check(CLI::PositiveNumber);
    navigate->add_option("--seed", o.seed)->capture_default_str();
    navigate->add_flag("--fail-color", o.fail_color, "zero the color input at test time");
    navigate->add_flag("--fail-depth", o.fail_depth, "zero the depth input at test time");
    navigate->add_option("--out", o.out_dir)->required();

    auto* exportc = app.add_subcommand("export", "plotting-ready comma-separated files");
    exportc->add_option("--run", o.run_dir)->required();
    exportc->add_option("--what", o.what)->required()->check(CLI::IsMember({"paths", "losses", "metrics"}));
    exportc->add_option("--out", o.out_dir)->required();

    auto* replay = app.add_subcommand("replay", "re-run a manifest and compare artifact checksums");
    replay->add_option("--manifest", o.manifest_path)->required();
    replay->add_option("--out", o.out_dir)->required();

    auto* describe = app.add_subcommand("describe", "layer table of an architecture");
    describe->add_option("--arch", o.arch)->required()->check(CLI::IsMember(arch_names));
    describe->add_option("--seed", o.seed)->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e, out, err);
        err << "rgbdnav: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        Context ctx{o, {}, {}, out, err, o.map_dir.empty() ? sim::default_map_dir() : o.map_dir};
        ctx.config = config_snapshot != nullptr ? from_keyvalue(*config_snapshot) : load_config(o.config_path);
        ctx.argv = canonical_args(args, ctx.map_dir);
        if (*collect) return cmd_collect(ctx);
        if (*teleop) return cmd_teleop(ctx);
        if (*gridsearch) return cmd_gridsearch(ctx);
        if (*train) return cmd_train(ctx);
        if (*evalc) return cmd_eval(ctx);
        if (*ablate) return cmd_ablate(ctx);
        if (*navigate) return cmd_navigate(ctx);
        if (*exportc) return cmd_export(ctx);
        if (*replay) return cmd_replay(ctx);
        if (*describe) return cmd_describe(ctx);
        return kExitUsage;
    } catch (const std::exception& e) {
        train::set_progress_sink(nullptr);
        err << "rgbdnav: " << e.what() << '\n';
        return exit_code_for(e);
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    const int code = run_impl(args, nullptr, out, err);
    train::set_progress_sink(nullptr);
    return code;
}

int run_with_config(const std::vector<std::string>& args, const KeyValue& config, std::ostream& out,
                    std::ostream& err) {
    const int code = run_impl(args, &config, out, err);
    train::set_progress_sink(nullptr);
    return code;
}

}  // namespace rgbdnav::cli
