#pragma once

#include <cstddef>
#include <vector>

#include "rgbdnav/nn/tensor.hpp"
#include "rgbdnav/sim/render.hpp"

namespace rgbdnav::sim {

struct ExpertParams {
    std::size_t sectors = 9;
    double kp = 2.0;
    double omega_max = 1.0;
};

// Mean center-row depth per sector. A column belongs to the sector holding
// its ray angle: floor((c + 0.5) * K / W), column 0 leftmost.
std::vector<double> sector_scores(const nn::Tensor<float>& depth, std::size_t sectors);

// Center angle of sector k, positive to the left.
double sector_center_angle(std::size_t k, std::size_t sectors, double fov);

// Widest-gap steering: deepest sector, ties to the most central then the
// leftmost, omega = clamp(kp * angle).
double expert_policy(const nn::Tensor<float>& depth, const ExpertParams& params, double fov = CameraModel{}.horizontal_fov);

}  // namespace rgbdnav::sim
