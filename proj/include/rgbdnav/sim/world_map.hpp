#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rgbdnav/kinematics.hpp"

namespace rgbdnav::sim {

using kinematics::Pose;

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kSkyColor{200, 220, 255};
inline constexpr Rgb kFloorColor{80, 80, 80};

struct Line {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
    friend bool operator==(const Line&, const Line&) = default;
};

struct Segment {
    Line line;
    Rgb color;
    friend bool operator==(const Segment&, const Segment&) = default;
};

enum class MapTag { Known, Unknown };

struct WorldMap {
    std::string id;
    std::vector<Segment> segments;
    Pose spawn;
    Line goal;
    MapTag tag = MapTag::Known;
};

inline constexpr double kDefaultRobotRadius = 0.18;

// Line-oriented text: `segment x1 y1 x2 y2 r g b`, `spawn x y theta`,
// `goal x1 y1 x2 y2`, `tag known|unknown`, `#` comments. Throws FormatError
// with the line number on bad records and InvalidInput when the map
// invariants fail for the given robot radius.
WorldMap parse_map(std::string_view text, std::string id, double robot_radius = kDefaultRobotRadius);
std::string format_map(const WorldMap& map);

// Map id is the file stem.
WorldMap load_map(const std::string& path, double robot_radius = kDefaultRobotRadius);

void validate_map(const WorldMap& map, double robot_radius = kDefaultRobotRadius);

// Directory compiled in at build time; RGBDNAV_MAP_DIR overrides it.
std::string default_map_dir();

// Sorted ids of every *.map file in dir.
std::vector<std::string> list_maps(const std::string& dir);
WorldMap load_map_by_id(const std::string& id, const std::string& dir);

std::string_view tag_name(MapTag tag);

}  // namespace rgbdnav::sim
