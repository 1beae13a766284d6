#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rgbdnav/data/dataset.hpp"
#include "rgbdnav/data/record.hpp"
#include "rgbdnav/models/fusion_net.hpp"
#include "rgbdnav/sim/render.hpp"
#include "rgbdnav/sim/world_map.hpp"

namespace rgbdnav::eval {

enum class Outcome { Success, Collision, Timeout, Stall };
std::string_view outcome_name(Outcome o);
Outcome parse_outcome(std::string_view name);

struct PathPoint {
    double t = 0, x = 0, y = 0, theta = 0, v = 0, omega = 0;  // pose before the command
    friend bool operator==(const PathPoint&, const PathPoint&) = default;
};

struct TrialResult {
    std::string map_id;
    std::string pilot;
    std::size_t trial = 0;
    Outcome outcome = Outcome::Timeout;
    std::vector<PathPoint> path;  // one row per tick
    double duration = 0.0;        // simulated seconds
    friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

struct TrialConfig {
    std::size_t n_trials = 3;
    double budget = 120.0;
    double v = 0.1;
    double cadence = 0.2;
    double omega_max = 1.0;
    double stall_window = 10.0;
    double stall_distance = 0.05;
    // Trial k > 0 starts at the spawn plus seeded jitter; trial 0 starts on it.
    double lateral_jitter = 0.05;
    double heading_jitter = 0.1;
    std::uint64_t seed = 1;
    sim::CameraModel camera;
};

void validate(const TrialConfig& config);

// Runs one trial from an explicit start pose.
TrialResult run_trial(const std::shared_ptr<const sim::WorldMap>& map, const sim::Pose& start, const data::Pilot& pilot,
                      std::string_view pilot_name, std::size_t trial, const TrialConfig& config);

struct TrialSummary {
    std::vector<TrialResult> results;
    std::map<std::string, double> rate_by_map;
    double pooled_rate = 0.0;
    std::size_t successes = 0;
};

// Seeded start pose of trial k on a map.
sim::Pose trial_start(const sim::WorldMap& map, std::size_t trial, const TrialConfig& config);

// Every map is validated before the first trial runs.
TrialSummary run_trials(const data::Pilot& pilot, std::string_view pilot_name,
                        const std::vector<std::shared_ptr<const sim::WorldMap>>& maps, const TrialConfig& config);

// A model as a pilot; the optional modality is zeroed at inference time.
data::Pilot model_pilot(std::shared_ptr<const models::FusionNet<float>> model,
                        std::optional<data::Modality> zeroed = std::nullopt);

std::string path_csv(const TrialResult& r);
std::string summary_csv(const std::vector<TrialResult>& results);
std::string trial_file_name(const TrialResult& r);
// Writes one path file per trial plus summary.csv; returns the paths written.
std::vector<std::string> export_paths(const std::vector<TrialResult>& results, const std::string& dir);

}  // namespace rgbdnav::eval
