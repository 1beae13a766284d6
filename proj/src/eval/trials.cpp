#include "rgbdnav/eval/trials.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "rgbdnav/binary_io.hpp"
#include "rgbdnav/error.hpp"
#include "rgbdnav/keyvalue.hpp"
#include "rgbdnav/random.hpp"
#include "rgbdnav/sim/simulator.hpp"

namespace rgbdnav::eval {

std::string_view outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Success: return "success";
        case Outcome::Collision: return "collision";
        case Outcome::Timeout: return "timeout";
        case Outcome::Stall: return "stall";
    }
    return "timeout";
}

Outcome parse_outcome(std::string_view name) {
    for (const auto o : {Outcome::Success, Outcome::Collision, Outcome::Timeout, Outcome::Stall}) {
        if (outcome_name(o) == name) return o;
    }
    throw FormatError("unknown trial outcome '" + std::string(name) + "'");
}

void validate(const TrialConfig& c) {
    if (c.n_trials < 1) throw ConfigError("trials need n_trials >= 1");
    if (!(c.budget > 0) || !(c.cadence > 0) || !(c.stall_window > 0)) {
        throw ConfigError("trial budget, cadence and stall window must be positive");
    }
    if (!(c.omega_max > 0)) throw ConfigError("omega_max must be positive");
    if (!(c.lateral_jitter >= 0) || !(c.heading_jitter >= 0) || !(c.stall_distance >= 0)) {
        throw ConfigError("trial jitter and stall distance must be >= 0");
    }
    sim::validate(c.camera);
}

TrialResult run_trial(const std::shared_ptr<const sim::WorldMap>& map, const sim::Pose& start, const data::Pilot& pilot,
                      std::string_view pilot_name, std::size_t trial, const TrialConfig& config) {
    validate(config);
    if (!map) throw InvalidInput("trial needs a map");
    TrialResult r;
    r.map_id = map->id;
    r.pilot = std::string(pilot_name);
    r.trial = trial;
    sim::SimState state = sim::initial_state(map, start);
    if (state.collided) throw InvalidInput("trial start pose is in collision on map " + map->id);
    const auto window = static_cast<std::size_t>(std::llround(config.stall_window / config.cadence));
    const auto max_ticks = static_cast<std::size_t>(std::ceil(config.budget / config.cadence - 1e-9));
    // Poses after each tick, with the start at index 0.
    std::vector<sim::Pose> trace{state.pose};
    for (std::size_t k = 0; k < max_ticks; ++k) {
        const double t = static_cast<double>(k) * config.cadence;
        const auto frame = sim::render_rgbd(*map, state.pose, config.camera, t);
        const double omega = sim::clamp_omega(pilot(frame), config.omega_max);
        r.path.push_back({t, state.pose.x, state.pose.y, state.pose.theta, config.v, omega});
        const auto next = sim::step(state, config.v, omega, config.cadence, config.omega_max);
        r.duration = static_cast<double>(k + 1) * config.cadence;
        if (next.collided) {
            r.outcome = Outcome::Collision;
            return r;
        }
        if (sim::crosses_goal(*map, state.pose, next.pose)) {
            r.outcome = Outcome::Success;
            return r;
        }
        state = next;
        trace.push_back(state.pose);
        if (trace.size() > window) {
            const auto& old = trace[trace.size() - 1 - window];
            if (std::hypot(state.pose.x - old.x, state.pose.y - old.y) < config.stall_distance) {
                r.outcome = Outcome::Stall;
                return r;
            }
        }
    }
    r.outcome = Outcome::Timeout;
    return r;
}

namespace {

std::uint64_t id_hash(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

sim::Pose trial_start(const sim::WorldMap& map, std::size_t trial, const TrialConfig& config) {
    if (trial == 0) return map.spawn;
    Rng rng(mix_seed(mix_seed(config.seed, id_hash(map.id)), trial));
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const double lateral = rng.uniform(-config.lateral_jitter, config.lateral_jitter);
        const double heading = rng.uniform(-config.heading_jitter, config.heading_jitter);
        const sim::Pose p{map.spawn.x - lateral * std::sin(map.spawn.theta),
                          map.spawn.y + lateral * std::cos(map.spawn.theta),
                          kinematics::normalize_angle(map.spawn.theta + heading)};
        if (!sim::check_collision(map, p, sim::kDefaultRobotRadius)) return p;
    }
    throw InvalidState("no collision-free trial start on map " + map.id);
}

TrialSummary run_trials(const data::Pilot& pilot, std::string_view pilot_name,
                        const std::vector<std::shared_ptr<const sim::WorldMap>>& maps, const TrialConfig& config) {
    validate(config);
    if (maps.empty()) throw InvalidInput("trials need at least one map");
    for (const auto& m : maps) {
        if (!m) throw InvalidInput("null map in trial list");
        sim::validate_map(*m);
    }
    TrialSummary s;
    for (const auto& m : maps) {
        std::size_t ok = 0;
        for (std::size_t k = 0; k < config.n_trials; ++k) {
            auto r = run_trial(m, trial_start(*m, k, config), pilot, pilot_name, k, config);
            ok += r.outcome == Outcome::Success;
            s.results.push_back(std::move(r));
        }
        s.rate_by_map[m->id] = static_cast<double>(ok) / static_cast<double>(config.n_trials);
        s.successes += ok;
    }
    s.pooled_rate = static_cast<double>(s.successes) / static_cast<double>(s.results.size());
    return s;
}

data::Pilot model_pilot(std::shared_ptr<const models::FusionNet<float>> model, std::optional<data::Modality> zeroed) {
    if (!model) throw InvalidInput("model pilot needs a model");
    return [model, zeroed](const sim::RgbdFrame& frame) {
        nn::Tensor<float> color = frame.color;
        nn::Tensor<float> depth = frame.depth;
        if (zeroed == data::Modality::Color) color.fill(0.0f);
        if (zeroed == data::Modality::Depth) depth.fill(0.0f);
        nn::Shape cs{1}, ds{1};
        cs.insert(cs.end(), color.shape().begin(), color.shape().end());
        ds.insert(ds.end(), depth.shape().begin(), depth.shape().end());
        color.reshape(cs);
        depth.reshape(ds);
        return static_cast<double>(model->forward(color, depth)[0]);
    };
}

std::string path_csv(const TrialResult& r) {
    std::ostringstream os;
    os << "t,x,y,theta,v,omega\n";
    for (const auto& p : r.path) {
        os << format_number(p.t) << ',' << format_number(p.x) << ',' << format_number(p.y) << ','
           << format_number(p.theta) << ',' << format_number(p.v) << ',' << format_number(p.omega) << '\n';
    }
    return os.str();
}

std::string summary_csv(const std::vector<TrialResult>& results) {
    std::ostringstream os;
    os << "map,pilot,trial,outcome,duration\n";
    for (const auto& r : results) {
        os << r.map_id << ',' << r.pilot << ',' << r.trial << ',' << outcome_name(r.outcome) << ','
           << format_number(r.duration) << '\n';
    }
    return os.str();
}

std::string trial_file_name(const TrialResult& r) {
    return r.pilot + "_" + r.map_id + "_" + std::to_string(r.trial) + ".csv";
}

std::vector<std::string> export_paths(const std::vector<TrialResult>& results, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
    std::vector<std::string> written;
    for (const auto& r : results) {
        const auto p = (std::filesystem::path(dir) / trial_file_name(r)).string();
        write_file(p, path_csv(r));
        written.push_back(p);
    }
    const auto summary = (std::filesystem::path(dir) / "summary.csv").string();
    write_file(summary, summary_csv(results));
    written.push_back(summary);
    return written;
}

}  // namespace rgbdnav::eval
