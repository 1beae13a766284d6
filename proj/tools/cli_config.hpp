#pragma once

#include <optional>
#include <string>

#include "rgbdnav/data/record.hpp"
#include "rgbdnav/eval/trials.hpp"
#include "rgbdnav/keyvalue.hpp"
#include "rgbdnav/sim/render.hpp"
#include "rgbdnav/train/trainer.hpp"

namespace rgbdnav::cli {

// Built-in defaults overridden by a key=value file.
struct CliConfig {
    double omega_max = 1.0;
    sim::CameraModel camera;
    train::TrainConfig train;
    double collect_lateral_jitter = data::CollectConfig{}.lateral_jitter;
    double collect_heading_jitter = data::CollectConfig{}.heading_jitter;
    double collect_duration = data::RecordConfig{}.duration;
    double trial_budget = eval::TrialConfig{}.budget;
    double trial_stall_window = eval::TrialConfig{}.stall_window;
    double trial_stall_distance = eval::TrialConfig{}.stall_distance;
    double trial_lateral_jitter = eval::TrialConfig{}.lateral_jitter;
    double trial_heading_jitter = eval::TrialConfig{}.heading_jitter;
};

inline constexpr const char* kConfigEnv = "RGBDNAV_CONFIG";

KeyValue to_keyvalue(const CliConfig& config);
// Throws ConfigError on unknown keys or unparsable values.
CliConfig from_keyvalue(const KeyValue& kv);
// Explicit path first, then the environment variable, then defaults.
CliConfig load_config(const std::optional<std::string>& path);

data::CollectConfig collect_config(const CliConfig& config);
eval::TrialConfig trial_config(const CliConfig& config);

}  // namespace rgbdnav::cli
