#include "rgbdnav/sim/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "rgbdnav/error.hpp"

namespace rgbdnav::sim {

double point_segment_distance(double px, double py, const Line& l) {
    const double ex = l.x2 - l.x1;
    const double ey = l.y2 - l.y1;
    const double len2 = ex * ex + ey * ey;
    double s = 0.0;
    if (len2 > 0.0) s = std::clamp(((px - l.x1) * ex + (py - l.y1) * ey) / len2, 0.0, 1.0);
    return std::hypot(px - (l.x1 + s * ex), py - (l.y1 + s * ey));
}

double clearance(const WorldMap& map, double x, double y) {
    double best = INFINITY;
    for (const auto& s : map.segments) best = std::min(best, point_segment_distance(x, y, s.line));
    return best;
}

bool check_collision(const WorldMap& map, const Pose& pose, double radius) {
    if (!(radius > 0.0)) throw InvalidInput("collision radius must be positive");
    return clearance(map, pose.x, pose.y) < radius;
}

SimState initial_state(std::shared_ptr<const WorldMap> map, const Pose& pose, double robot_radius) {
    if (!map) throw InvalidInput("simulator needs a map");
    SimState s;
    s.map = std::move(map);
    s.pose = pose;
    s.robot_radius = robot_radius;
    s.collided = check_collision(*s.map, pose, robot_radius);
    return s;
}

double clamp_omega(double omega, double omega_max) { return std::clamp(omega, -omega_max, omega_max); }

SimState step(const SimState& state, double v, double omega, double dt, double omega_max) {
    if (state.collided) throw InvalidState("cannot step a collided robot");
    if (!state.map) throw InvalidState("simulator state has no map");
    if (!(dt > 0.0)) throw InvalidInput("step needs dt > 0");
    if (!std::isfinite(v) || !std::isfinite(omega)) throw InvalidInput("step needs finite v and omega");
    const double w = clamp_omega(omega, omega_max);
    SimState next = state;
    for (int k = 1; k <= kCollisionSubsamples && !next.collided; ++k) {
        const double frac = static_cast<double>(k) / (kCollisionSubsamples + 1);
        next.collided = check_collision(*state.map, kinematics::integrate_pose(state.pose, v, w, dt * frac),
                                        state.robot_radius);
    }
    next.pose = kinematics::integrate_pose(state.pose, v, w, dt);
    next.collided = next.collided || check_collision(*state.map, next.pose, state.robot_radius);
    next.t = state.t + dt;
    return next;
}

namespace {

double orient(double ax, double ay, double bx, double by, double cx, double cy) {
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
}

}  // namespace

bool crosses_goal(const WorldMap& map, const Pose& from, const Pose& to) {
    const auto& g = map.goal;
    const double d1 = orient(g.x1, g.y1, g.x2, g.y2, from.x, from.y);
    const double d2 = orient(g.x1, g.y1, g.x2, g.y2, to.x, to.y);
    const double d3 = orient(from.x, from.y, to.x, to.y, g.x1, g.y1);
    const double d4 = orient(from.x, from.y, to.x, to.y, g.x2, g.y2);
    // touching the line counts at the end pose only
    return ((d1 > 0 && d2 <= 0) || (d1 < 0 && d2 >= 0)) && ((d3 >= 0) != (d4 >= 0) || d3 == 0 || d4 == 0);
}

}  // namespace rgbdnav::sim
