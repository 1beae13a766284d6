#include "rgbdnav/data/record.hpp"

#include <cmath>
#include <cstdio>

#include "rgbdnav/error.hpp"
#include "rgbdnav/random.hpp"

namespace rgbdnav::data {

Pilot expert_pilot(const sim::ExpertParams& params, const sim::CameraModel& cam) {
    return [params, fov = cam.horizontal_fov](const sim::RgbdFrame& frame) {
        return sim::expert_policy(frame.depth, params, fov);
    };
}

Episode record_rollout(const sim::SimState& start, const Pilot& pilot, const RecordConfig& config, Source source,
                       std::string id) {
    if (!start.map) throw InvalidInput("rollout needs a map");
    if (!(config.cadence > 0.0) || !(config.duration > 0.0)) throw InvalidInput("cadence and duration must be positive");
    if (start.collided) throw InvalidState("rollout starts in collision");
    Episode e;
    e.id = std::move(id);
    e.source = source;
    e.map_id = start.map->id;
    const auto ticks = static_cast<std::size_t>(std::ceil(config.duration / config.cadence - 1e-9));
    sim::SimState state = start;
    for (std::size_t k = 0; k < ticks; ++k) {
        const double t = start.t + static_cast<double>(k) * config.cadence;
        sim::RgbdFrame frame = sim::render_rgbd(*state.map, state.pose, config.camera, t);
        const double omega = sim::clamp_omega(pilot(frame), config.omega_max);
        const sim::SimState next = sim::step(state, config.v, omega, config.cadence, config.omega_max);
        if (next.collided) {
            e.flagged = true;
            break;
        }
        Sample s;
        s.color = std::move(frame.color);
        s.depth = std::move(frame.depth);
        s.omega_label = static_cast<float>(omega);
        s.v = config.v;
        s.pose = state.pose;
        s.t = t;
        s.map_id = e.map_id;
        e.samples.push_back(std::move(s));
        const bool reached = sim::crosses_goal(*state.map, state.pose, next.pose);
        state = next;
        if (config.stop_at_goal && reached) break;
    }
    return e;
}

std::vector<Pose> reference_route(const sim::WorldMap& map, const RecordConfig& config, const sim::ExpertParams& expert) {
    constexpr double kRouteBudget = 120.0;
    auto shared = std::make_shared<const sim::WorldMap>(map);
    sim::SimState state = sim::initial_state(shared, map.spawn);
    std::vector<Pose> route{state.pose};
    const auto ticks = static_cast<std::size_t>(kRouteBudget / config.cadence);
    for (std::size_t k = 0; k < ticks; ++k) {
        const auto frame = sim::render_rgbd(map, state.pose, config.camera, state.t);
        const double omega = sim::expert_policy(frame.depth, expert, config.camera.horizontal_fov);
        const auto next = sim::step(state, config.v, omega, config.cadence, config.omega_max);
        if (next.collided) break;
        const bool reached = sim::crosses_goal(map, state.pose, next.pose);
        state = next;
        route.push_back(state.pose);
        if (reached) break;
    }
    return route;
}

std::vector<Episode> collect_expert(const CollectConfig& config) {
    if (config.episodes == 0) throw InvalidInput("collection needs at least one episode");
    const std::string dir = config.map_dir.empty() ? sim::default_map_dir() : config.map_dir;
    std::vector<std::shared_ptr<const sim::WorldMap>> maps;
    if (config.map_ids.empty()) {
        for (const auto& id : sim::list_maps(dir)) {
            auto m = sim::load_map_by_id(id, dir);
            if (m.tag == sim::MapTag::Known) maps.push_back(std::make_shared<const sim::WorldMap>(std::move(m)));
        }
    } else {
        for (const auto& id : config.map_ids) maps.push_back(std::make_shared<const sim::WorldMap>(sim::load_map_by_id(id, dir)));
    }
    if (maps.empty()) throw InvalidInput("no maps to collect on in " + dir);

    std::vector<std::vector<Pose>> routes;
    for (const auto& m : maps) routes.push_back(reference_route(*m, config.record, config.expert));

    const Pilot pilot = expert_pilot(config.expert, config.record.camera);
    std::vector<Episode> out;
    out.reserve(config.episodes);
    for (std::size_t i = 0; i < config.episodes; ++i) {
        const std::size_t mi = i % maps.size();
        const auto& map = maps[mi];
        const auto& route = routes[mi];
        Rng rng(mix_seed(config.seed, i));
        // Start in the first three quarters of the route so episodes have length.
        const std::size_t span = std::max<std::size_t>(1, route.size() * 3 / 4);
        Pose start{};
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            const Pose& base = route[rng.index(span)];
            const double lateral = rng.uniform(-config.lateral_jitter, config.lateral_jitter);
            const double heading = rng.uniform(-config.heading_jitter, config.heading_jitter);
            start = {base.x - lateral * std::sin(base.theta), base.y + lateral * std::cos(base.theta),
                     kinematics::normalize_angle(base.theta + heading)};
            placed = !sim::check_collision(*map, start, sim::kDefaultRobotRadius);
        }
        if (!placed) throw InvalidState("no collision-free start found on map " + map->id);
        char id[32];
        std::snprintf(id, sizeof id, "expert_%04zu", i);
        out.push_back(record_rollout(sim::initial_state(map, start), pilot, config.record, Source::Expert, id));
    }
    return out;
}

}  // namespace rgbdnav::data
