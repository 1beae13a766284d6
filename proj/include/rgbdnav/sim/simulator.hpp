#pragma once

#include <memory>

#include "rgbdnav/sim/world_map.hpp"

namespace rgbdnav::sim {

double point_segment_distance(double px, double py, const Line& line);

// Minimum distance from (x, y) to any wall segment.
double clearance(const WorldMap& map, double x, double y);

// Strict: touching at exactly radius is not a collision.
bool check_collision(const WorldMap& map, const Pose& pose, double radius);

struct SimState {
    std::shared_ptr<const WorldMap> map;
    Pose pose;
    double t = 0.0;
    double robot_radius = kDefaultRobotRadius;
    bool collided = false;
};

SimState initial_state(std::shared_ptr<const WorldMap> map, const Pose& pose, double robot_radius = kDefaultRobotRadius);

inline constexpr double kDefaultOmegaMax = 1.0;
inline constexpr double kFixedLinearVelocity = 0.1;
inline constexpr double kTickSeconds = 0.2;
inline constexpr int kCollisionSubsamples = 4;

// Clamps omega to +-omega_max, integrates the exact arc and checks collision
// at kCollisionSubsamples interior poses plus the end pose. Throws
// InvalidState on a collided state, InvalidInput on dt <= 0.
SimState step(const SimState& state, double v, double omega, double dt, double omega_max = kDefaultOmegaMax);

double clamp_omega(double omega, double omega_max);

// True when the straight move from a to b crosses the goal line.
bool crosses_goal(const WorldMap& map, const Pose& from, const Pose& to);

}  // namespace rgbdnav::sim
