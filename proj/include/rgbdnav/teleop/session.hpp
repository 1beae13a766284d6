#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rgbdnav/data/dataset.hpp"
#include "rgbdnav/sim/render.hpp"
#include "rgbdnav/sim/simulator.hpp"
#include "rgbdnav/sim/world_map.hpp"
#include "rgbdnav/teleop/protocol.hpp"

namespace rgbdnav::teleop {

// Immutable map set shared by every session.
class MapSet {
public:
    static std::shared_ptr<const MapSet> load(const std::string& dir);
    explicit MapSet(std::vector<std::shared_ptr<const sim::WorldMap>> maps);

    std::shared_ptr<const sim::WorldMap> find(const std::string& id) const;  // null if absent
    std::vector<MapEntry> entries() const;
    const std::string& first_id() const;

private:
    std::map<std::string, std::shared_ptr<const sim::WorldMap>> maps_;
};

struct SessionConfig {
    double omega_max = 1.0;
    double v = 0.1;
    double cadence = 0.2;
    sim::CameraModel camera;
    std::optional<std::string> out_dir;  // dataset directory for recorded episodes
    std::string session_id = "s0";
};

// One client's sequential loop: latch commands, tick, record.
class Session {
public:
    Session(std::shared_ptr<const MapSet> maps, const std::string& map_id, SessionConfig config);

    // Handles one client text frame and returns the reply frames.
    std::vector<std::string> handle(std::string_view text);

    // Renders, emits the state message, applies the latched omega and
    // appends a sample when recording. After a collision the next tick
    // returns the final state and the session is finished.
    std::string tick();

    bool finished() const noexcept { return finished_; }
    bool recording() const noexcept { return recording_; }
    const sim::SimState& state() const noexcept { return state_; }
    double pending_omega() const noexcept { return pending_omega_; }
    std::size_t episodes_recorded() const noexcept { return recorded_; }
    const std::vector<std::string>& saved_episode_ids() const noexcept { return saved_ids_; }
    // Stops recording and saves any buffered samples.
    void close();

private:
    std::string finish_episode();

    std::shared_ptr<const MapSet> maps_;
    SessionConfig config_;
    sim::SimState state_;
    std::size_t tick_ = 0;
    double pending_omega_ = 0.0;
    bool recording_ = false;
    bool finished_ = false;
    data::Episode episode_;
    std::size_t recorded_ = 0;
    std::vector<std::string> saved_ids_;
};

}  // namespace rgbdnav::teleop
