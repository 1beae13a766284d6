#include "cli_config.hpp"

#include <cstdlib>
#include <utility>
#include <vector>

#include "rgbdnav/error.hpp"

namespace rgbdnav::cli {

namespace {

struct DoubleField {
    const char* key;
    double CliConfig::*member;
};

struct CameraField {
    const char* key;
    double sim::CameraModel::*member;
};

const std::vector<DoubleField>& double_fields() {
    static const std::vector<DoubleField> fields = {
        {"omega_max", &CliConfig::omega_max},
        {"collect.lateral_jitter", &CliConfig::collect_lateral_jitter},
        {"collect.heading_jitter", &CliConfig::collect_heading_jitter},
        {"collect.duration", &CliConfig::collect_duration},
        {"trial.budget", &CliConfig::trial_budget},
        {"trial.stall_window", &CliConfig::trial_stall_window},
        {"trial.stall_distance", &CliConfig::trial_stall_distance},
        {"trial.lateral_jitter", &CliConfig::trial_lateral_jitter},
        {"trial.heading_jitter", &CliConfig::trial_heading_jitter},
    };
    return fields;
}

const std::vector<CameraField>& camera_fields() {
    static const std::vector<CameraField> fields = {
        {"camera.horizontal_fov", &sim::CameraModel::horizontal_fov},
        {"camera.wall_height", &sim::CameraModel::wall_height},
        {"camera.camera_height", &sim::CameraModel::camera_height},
        {"camera.max_depth", &sim::CameraModel::max_depth},
    };
    return fields;
}

std::size_t get_size(const KeyValue& kv, const std::string& key, std::size_t fallback) {
    const long long v = kv.get_int(key, static_cast<long long>(fallback));
    if (v <= 0) throw ConfigError(key + " must be positive");
    return static_cast<std::size_t>(v);
}

}  // namespace

KeyValue to_keyvalue(const CliConfig& config) {
    KeyValue kv = train::to_keyvalue(config.train);
    for (const auto& f : double_fields()) kv.set(f.key, config.*f.member);
    for (const auto& f : camera_fields()) kv.set(f.key, config.camera.*f.member);
    kv.set("camera.image_w", static_cast<long long>(config.camera.image_w));
    kv.set("camera.image_h", static_cast<long long>(config.camera.image_h));
    return kv;
}

CliConfig from_keyvalue(const KeyValue& kv) {
    CliConfig config;
    const KeyValue known = to_keyvalue(config);
    for (const auto& [key, value] : kv.entries()) {
        if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
    }
    config.train = train::from_keyvalue(kv, config.train);
    train::validate(config.train);
    for (const auto& f : double_fields()) config.*f.member = kv.get_double(f.key, config.*f.member);
    for (const auto& f : camera_fields()) config.camera.*f.member = kv.get_double(f.key, config.camera.*f.member);
    config.camera.image_w = get_size(kv, "camera.image_w", config.camera.image_w);
    config.camera.image_h = get_size(kv, "camera.image_h", config.camera.image_h);
    try {
        sim::validate(config.camera);
        eval::validate(trial_config(config));
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    if (!(config.omega_max > 0.0)) throw ConfigError("omega_max must be positive");
    if (!(config.collect_duration > 0.0)) throw ConfigError("collect.duration must be positive");
    return config;
}

CliConfig load_config(const std::optional<std::string>& path) {
    std::optional<std::string> chosen = path;
    if (!chosen) {
        if (const char* env = std::getenv(kConfigEnv); env != nullptr && *env != '\0') chosen = env;
    }
    if (!chosen) return {};
    return from_keyvalue(KeyValue::load(*chosen));
}

data::CollectConfig collect_config(const CliConfig& config) {
    data::CollectConfig c;
    c.lateral_jitter = config.collect_lateral_jitter;
    c.heading_jitter = config.collect_heading_jitter;
    c.record.duration = config.collect_duration;
    c.record.omega_max = config.omega_max;
    c.record.camera = config.camera;
    return c;
}

eval::TrialConfig trial_config(const CliConfig& config) {
    eval::TrialConfig t;
    t.budget = config.trial_budget;
    t.omega_max = config.omega_max;
    t.stall_window = config.trial_stall_window;
    t.stall_distance = config.trial_stall_distance;
    t.lateral_jitter = config.trial_lateral_jitter;
    t.heading_jitter = config.trial_heading_jitter;
    t.camera = config.camera;
    return t;
}

}  // namespace rgbdnav::cli
