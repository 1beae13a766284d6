#pragma once

namespace rgbdnav::kinematics {

// Differential-drive geometry. R is the wheel radius, L the distance from the
// chassis center to each wheel.
struct KinematicParams {
    double wheel_radius = 0.035;
    double half_axle = 0.115;
};

struct WheelSpeeds {
    double right = 0.0;  // rad/s
    double left = 0.0;   // rad/s
};

// Body-frame velocity. lateral is identically zero for this drive.
struct BodyTwist {
    double forward = 0.0;  // m/s
    double lateral = 0.0;  // m/s
    double omega = 0.0;    // rad/s, positive = counter-clockwise
};

struct GlobalVelocity {
    double x_dot = 0.0;
    double y_dot = 0.0;
    double theta_dot = 0.0;
};

// Global-frame pose; theta is kept in (-pi, pi].
struct Pose {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    friend bool operator==(const Pose&, const Pose&) = default;
};

inline constexpr double kStraightOmegaThreshold = 1e-9;

// Maps any finite angle into (-pi, pi].
double normalize_angle(double theta);

void validate(const KinematicParams& params);

BodyTwist forward_body(const WheelSpeeds& wheels, const KinematicParams& params);

GlobalVelocity forward_global(double theta, const WheelSpeeds& wheels, const KinematicParams& params);

WheelSpeeds inverse(double v, double omega, const KinematicParams& params);

// Exact constant-twist (arc) integration over dt seconds.
Pose integrate_pose(const Pose& pose, double v, double omega, double dt);

}  // namespace rgbdnav::kinematics
