#include "rgbdnav/kinematics.hpp"

#include <cmath>
#include <numbers>

#include "rgbdnav/error.hpp"

namespace rgbdnav::kinematics {
namespace {

void require_finite(double a, double b, const char* what) {
    if (!std::isfinite(a) || !std::isfinite(b)) {
        throw InvalidInput(std::string(what) + ": non-finite input");
    }
}

}  // namespace

double normalize_angle(double theta) {
    if (!std::isfinite(theta)) throw InvalidInput("normalize_angle: non-finite angle");
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::remainder(theta, two_pi);  // [-pi, pi]
    if (r <= -std::numbers::pi) r += two_pi;
    return r;
}

void validate(const KinematicParams& params) {
    if (!(params.wheel_radius > 0.0) || !(params.half_axle > 0.0) || !std::isfinite(params.wheel_radius) ||
        !std::isfinite(params.half_axle)) {
        throw InvalidInput("kinematic params: wheel radius and half axle must be positive and finite");
    }
}

BodyTwist forward_body(const WheelSpeeds& wheels, const KinematicParams& params) {
    validate(params);
    require_finite(wheels.right, wheels.left, "forward_body");
    const double r = params.wheel_radius;
    const double l = params.half_axle;
    return BodyTwist{
        .forward = (r / 2.0) * (wheels.right + wheels.left),
        .lateral = 0.0,
        .omega = (r / (2.0 * l)) * (wheels.right - wheels.left),
    };
}

GlobalVelocity forward_global(double theta, const WheelSpeeds& wheels, const KinematicParams& params) {
    if (!std::isfinite(theta)) throw InvalidInput("forward_global: non-finite heading");
    const BodyTwist body = forward_body(wheels, params);
    return GlobalVelocity{
        .x_dot = body.forward * std::cos(theta),
        .y_dot = body.forward * std::sin(theta),
        .theta_dot = body.omega,
    };
}

WheelSpeeds inverse(double v, double omega, const KinematicParams& params) {
    validate(params);
    require_finite(v, omega, "inverse");
    const double r = params.wheel_radius;
    const double l = params.half_axle;
    return WheelSpeeds{.right = (v + omega * l) / r, .left = (v - omega * l) / r};
}

Pose integrate_pose(const Pose& pose, double v, double omega, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("integrate_pose: dt must be positive");
    require_finite(v, omega, "integrate_pose");
    Pose next = pose;
    if (std::abs(omega) < kStraightOmegaThreshold) {
        next.x += v * std::cos(pose.theta) * dt;
        next.y += v * std::sin(pose.theta) * dt;
        next.theta = normalize_angle(pose.theta);
        return next;
    }
    // sin(a+d) - sin(a) = 2 cos(a + d/2) sin(d/2), and likewise for cos; the
    // product form avoids cancellation when omega*dt is tiny.
    const double turn = omega * dt;
    const double heading = pose.theta + turn;
    const double chord = 2.0 * (v / omega) * std::sin(turn / 2.0);
    next.x += chord * std::cos(pose.theta + turn / 2.0);
    next.y += chord * std::sin(pose.theta + turn / 2.0);
    next.theta = normalize_angle(heading);
    return next;
}

}  // namespace rgbdnav::kinematics
