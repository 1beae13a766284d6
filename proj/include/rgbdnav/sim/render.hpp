#pragma once

#include <cstddef>

#include "rgbdnav/nn/tensor.hpp"
#include "rgbdnav/sim/world_map.hpp"

namespace rgbdnav::sim {

struct CameraModel {
    std::size_t image_w = 80;
    std::size_t image_h = 60;
    double horizontal_fov = 1.21;  // rad
    double wall_height = 1.0;      // m
    double camera_height = 0.5;    // m
    double max_depth = 10.0;       // m
};

void validate(const CameraModel& cam);

struct RayHit {
    double distance = 0.0;  // clamped to max_depth on a miss
    bool hit = false;
    Rgb color = kSkyColor;
    std::size_t segment = 0;  // valid when hit
};

// Nearest intersection along heading theta + offset. A hit needs
// distance < max_depth; equal distances (within 1e-12) keep the lower index.
RayHit raycast(const WorldMap& map, const Pose& origin, double offset, double max_depth);

// Ray angle offset of image column c; positive is left of the heading.
double column_offset(const CameraModel& cam, std::size_t c);

struct RgbdFrame {
    nn::Tensor<float> color;  // [3,H,W]
    nn::Tensor<float> depth;  // [1,H,W], distance / max_depth
    Pose pose;
    double t = 0.0;
};

RgbdFrame render_rgbd(const WorldMap& map, const Pose& pose, const CameraModel& cam, double t);

}  // namespace rgbdnav::sim
