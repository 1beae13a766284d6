#include "rgbdnav/sim/world_map.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "rgbdnav/binary_io.hpp"
#include "rgbdnav/error.hpp"
#include "rgbdnav/keyvalue.hpp"
#include "rgbdnav/sim/simulator.hpp"

#ifndef RGBDNAV_DEFAULT_MAP_DIR
#define RGBDNAV_DEFAULT_MAP_DIR "maps"
#endif

namespace rgbdnav::sim {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

struct LineReader {
    std::size_t line_no;
    std::string_view id;

    [[noreturn]] void fail(const std::string& msg) const {
        throw FormatError("map " + std::string(id) + " line " + std::to_string(line_no) + ": " + msg);
    }

    double number(std::string_view token) const {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec != std::errc{} || ptr != token.data() + token.size() || !std::isfinite(v)) {
            fail("bad number '" + std::string(token) + "'");
        }
        return v;
    }

    std::uint8_t channel(std::string_view token) const {
        int v = 0;
        const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec != std::errc{} || ptr != token.data() + token.size() || v < 0 || v > 255) {
            fail("bad color channel '" + std::string(token) + "'");
        }
        return static_cast<std::uint8_t>(v);
    }
};

}  // namespace

std::string_view tag_name(MapTag tag) { return tag == MapTag::Known ? "known" : "unknown"; }

WorldMap parse_map(std::string_view text, std::string id, double robot_radius) {
    WorldMap map;
    map.id = std::move(id);
    bool have_spawn = false, have_goal = false, have_tag = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = std::min(text.find('\n', pos), text.size());
        auto line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const auto tok = split_ws(line);
        if (tok.empty()) {
            if (end == text.size()) break;
            continue;
        }
        const LineReader rd{line_no, map.id};
        const auto expect = [&](std::size_t n) {
            if (tok.size() != n) rd.fail("'" + std::string(tok[0]) + "' takes " + std::to_string(n - 1) + " fields");
        };
        if (tok[0] == "segment") {
            expect(8);
            Segment s;
            s.line = {rd.number(tok[1]), rd.number(tok[2]), rd.number(tok[3]), rd.number(tok[4])};
            s.color = {rd.channel(tok[5]), rd.channel(tok[6]), rd.channel(tok[7])};
            map.segments.push_back(s);
        } else if (tok[0] == "spawn") {
            expect(4);
            map.spawn = {rd.number(tok[1]), rd.number(tok[2]), kinematics::normalize_angle(rd.number(tok[3]))};
            have_spawn = true;
        } else if (tok[0] == "goal") {
            expect(5);
            map.goal = {rd.number(tok[1]), rd.number(tok[2]), rd.number(tok[3]), rd.number(tok[4])};
            have_goal = true;
        } else if (tok[0] == "tag") {
            expect(2);
            if (tok[1] == "known") {
                map.tag = MapTag::Known;
            } else if (tok[1] == "unknown") {
                map.tag = MapTag::Unknown;
            } else {
                rd.fail("tag must be known or unknown");
            }
            have_tag = true;
        } else {
            rd.fail("unknown record '" + std::string(tok[0]) + "'");
        }
        if (end == text.size()) break;
    }
    if (!have_spawn) throw FormatError("map " + map.id + ": missing spawn");
    if (!have_goal) throw FormatError("map " + map.id + ": missing goal");
    if (!have_tag) throw FormatError("map " + map.id + ": missing tag");
    validate_map(map, robot_radius);
    return map;
}

void validate_map(const WorldMap& map, double robot_radius) {
    if (map.segments.empty()) throw InvalidInput("map " + map.id + ": no segments");
    if (check_collision(map, map.spawn, robot_radius)) throw InvalidInput("map " + map.id + ": spawn is in collision");
    if (point_segment_distance(map.spawn.x, map.spawn.y, map.goal) <= robot_radius) {
        throw InvalidInput("map " + map.id + ": goal line intersects the spawn disc");
    }
}

std::string format_map(const WorldMap& map) {
    std::ostringstream os;
    const auto num = [](double v) { return format_number(v); };
    os << "tag " << tag_name(map.tag) << '\n';
    os << "spawn " << num(map.spawn.x) << ' ' << num(map.spawn.y) << ' ' << num(map.spawn.theta) << '\n';
    os << "goal " << num(map.goal.x1) << ' ' << num(map.goal.y1) << ' ' << num(map.goal.x2) << ' ' << num(map.goal.y2)
       << '\n';
    for (const auto& s : map.segments) {
        os << "segment " << num(s.line.x1) << ' ' << num(s.line.y1) << ' ' << num(s.line.x2) << ' ' << num(s.line.y2)
           << ' ' << int(s.color.r) << ' ' << int(s.color.g) << ' ' << int(s.color.b) << '\n';
    }
    return os.str();
}

WorldMap load_map(const std::string& path, double robot_radius) {
    return parse_map(read_file(path), std::filesystem::path(path).stem().string(), robot_radius);
}

std::string default_map_dir() {
    if (const char* env = std::getenv("RGBDNAV_MAP_DIR"); env != nullptr && *env != '\0') return env;
    return RGBDNAV_DEFAULT_MAP_DIR;
}

std::vector<std::string> list_maps(const std::string& dir) {
    std::error_code ec;
    std::vector<std::string> ids;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
        if (entry.is_regular_file() && entry.path().extension() == ".map") ids.push_back(entry.path().stem().string());
    }
    if (ec) throw IoError("cannot list maps in " + dir + ": " + ec.message());
    std::sort(ids.begin(), ids.end());
    return ids;
}

WorldMap load_map_by_id(const std::string& id, const std::string& dir) {
    if (id.empty() || id.find('/') != std::string::npos || id.find("..") != std::string::npos) {
        throw InvalidInput("bad map id '" + id + "'");
    }
    return load_map((std::filesystem::path(dir) / (id + ".map")).string());
}

}  // namespace rgbdnav::sim
