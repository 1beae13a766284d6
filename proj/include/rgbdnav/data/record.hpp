#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rgbdnav/data/dataset.hpp"
#include "rgbdnav/sim/expert.hpp"
#include "rgbdnav/sim/render.hpp"
#include "rgbdnav/sim/simulator.hpp"

namespace rgbdnav::data {

// Returns the commanded omega for a frame; clamped by the caller.
using Pilot = std::function<double(const sim::RgbdFrame&)>;

Pilot expert_pilot(const sim::ExpertParams& params, const sim::CameraModel& cam);

struct RecordConfig {
    double cadence = 0.2;
    double v = kFixedVelocity;
    double duration = 10.0;  // samples are taken while t < duration
    double omega_max = 1.0;
    bool stop_at_goal = true;
    sim::CameraModel camera;
};

// One sample per tick, rendered at the pre-step pose and labelled with the
// clamped omega sent to the simulator. A collision drops the sample whose
// command caused it and flags the episode.
Episode record_rollout(const sim::SimState& start, const Pilot& pilot, const RecordConfig& config, Source source,
                       std::string id);

struct CollectConfig {
    std::vector<std::string> map_ids;  // empty: every known map
    std::string map_dir;               // empty: default map dir
    std::size_t episodes = 60;
    std::uint64_t seed = 1;
    double lateral_jitter = 0.2;  // m, across the route heading
    double heading_jitter = 0.8;  // rad
    RecordConfig record;
    sim::ExpertParams expert;
};

// The expert's route from the map spawn, at tick cadence, up to the goal.
std::vector<Pose> reference_route(const sim::WorldMap& map, const RecordConfig& config, const sim::ExpertParams& expert);

// Episodes round-robin over the maps. Each starts at a seeded point on the
// reference route with lateral and heading jitter, redrawn while in collision.
std::vector<Episode> collect_expert(const CollectConfig& config);

}  // namespace rgbdnav::data
