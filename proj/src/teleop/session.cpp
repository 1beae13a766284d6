#include "rgbdnav/teleop/session.hpp"

#include <cstdio>
#include <filesystem>
#include <json.hpp>
#include <mutex>

#include "rgbdnav/error.hpp"

namespace rgbdnav::teleop {

using nlohmann::json;

std::shared_ptr<const MapSet> MapSet::load(const std::string& dir) {
    std::vector<std::shared_ptr<const sim::WorldMap>> maps;
    for (const auto& id : sim::list_maps(dir)) {
        maps.push_back(std::make_shared<const sim::WorldMap>(sim::load_map_by_id(id, dir)));
    }
    return std::make_shared<const MapSet>(std::move(maps));
}

MapSet::MapSet(std::vector<std::shared_ptr<const sim::WorldMap>> maps) {
    for (auto& m : maps) {
        if (!m) throw InvalidInput("null map in map set");
        const std::string id = m->id;
        if (!maps_.emplace(id, std::move(m)).second) throw InvalidInput("duplicate map id '" + id + "'");
    }
    if (maps_.empty()) throw InvalidInput("map set is empty");
}

std::shared_ptr<const sim::WorldMap> MapSet::find(const std::string& id) const {
    const auto it = maps_.find(id);
    return it == maps_.end() ? nullptr : it->second;
}

std::vector<MapEntry> MapSet::entries() const {
    std::vector<MapEntry> out;
    for (const auto& [id, m] : maps_) out.push_back({id, m->tag});
    return out;
}

const std::string& MapSet::first_id() const { return maps_.begin()->first; }

Session::Session(std::shared_ptr<const MapSet> maps, const std::string& map_id, SessionConfig config)
    : maps_(std::move(maps)), config_(std::move(config)) {
    if (!maps_) throw InvalidInput("session needs a map set");
    if (!(config_.omega_max > 0) || !(config_.cadence > 0)) throw ConfigError("session omega_max and cadence must be positive");
    const auto map = maps_->find(map_id);
    if (!map) throw InvalidInput("unknown map id '" + map_id + "'");
    state_ = sim::initial_state(map, map->spawn);
}

std::vector<std::string> Session::handle(std::string_view text) {
    ClientMessage msg;
    try {
        msg = parse_client_message(text);
    } catch (const ProtocolError& e) {
        return {error_message(e.what())};
    }
    if (const auto* c = std::get_if<CmdMsg>(&msg)) {
        if (finished_) return {error_message("session finished after a collision; send reset")};
        const double applied = sim::clamp_omega(c->omega, config_.omega_max);
        pending_omega_ = applied;
        return {json{{"type", "ack"}, {"of", "cmd"}, {"omega", applied}, {"requested", c->omega},
                     {"clamped", applied != c->omega}}
                    .dump()};
    }
    if (const auto* r = std::get_if<RecordMsg>(&msg)) {
        json a{{"type", "ack"}, {"of", "record"}, {"on", r->on}};
        if (r->on && !recording_) {
            if (finished_) return {error_message("session finished after a collision; send reset")};
            char id[96];
            std::snprintf(id, sizeof id, "teleop_%s_%03zu", config_.session_id.c_str(), recorded_);
            episode_ = data::Episode{};
            episode_.id = id;
            episode_.source = data::Source::Teleop;
            episode_.map_id = state_.map->id;
            recording_ = true;
            a["episode"] = episode_.id;
        } else if (!r->on && recording_) {
            const std::size_t n = episode_.samples.size();
            a["saved"] = finish_episode();
            a["samples"] = n;
        }
        return {a.dump()};
    }
    if (const auto* s = std::get_if<ResetMsg>(&msg)) {
        const auto map = maps_->find(s->map_id);
        if (!map) return {error_message("unknown map id '" + s->map_id + "'")};
        json a{{"type", "ack"}, {"of", "reset"}, {"map_id", s->map_id}};
        if (recording_) a["saved"] = finish_episode();
        state_ = sim::initial_state(map, map->spawn);
        tick_ = 0;
        pending_omega_ = 0.0;
        finished_ = false;
        return {a.dump()};
    }
    return {maps_message(maps_->entries())};
}

std::string Session::tick() {
    if (finished_) throw InvalidState("session finished; reset before ticking");
    const auto frame = sim::render_rgbd(*state_.map, state_.pose, config_.camera, state_.t);
    StateMessage m;
    m.t = state_.t;
    m.pose = state_.pose;
    m.omega_applied = pending_omega_;
    m.recording = recording_;
    m.width = config_.camera.image_w;
    m.height = config_.camera.image_h;
    m.color = color_bytes(frame.color);
    m.depth = depth_bytes(frame.depth);
    if (state_.collided) {
        m.collided = true;
        m.outcome = "collision";
        finished_ = true;
        if (recording_) finish_episode();
        return serialize(m);
    }
    const auto next = sim::step(state_, config_.v, pending_omega_, config_.cadence, config_.omega_max);
    if (recording_) {
        if (next.collided) {
            episode_.flagged = true;
        } else {
            data::Sample s;
            s.color = frame.color;
            s.depth = frame.depth;
            s.omega_label = static_cast<float>(pending_omega_);
            s.v = config_.v;
            s.pose = state_.pose;
            s.t = state_.t;
            s.map_id = state_.map->id;
            episode_.samples.push_back(std::move(s));
        }
    }
    state_ = next;
    ++tick_;
    return serialize(m);
}

std::string Session::finish_episode() {
    recording_ = false;
    std::string id = episode_.id;
    if (config_.out_dir && !episode_.samples.empty()) {
        // Sessions may share one dataset directory and its index.
        static std::mutex index_mutex;
        const std::lock_guard lock(index_mutex);
        data::append_episode(*config_.out_dir, episode_);
        saved_ids_.push_back(id);
    } else {
        id.clear();
    }
    ++recorded_;
    episode_ = data::Episode{};
    return id;
}

void Session::close() {
    if (recording_) finish_episode();
}

}  // namespace rgbdnav::teleop
