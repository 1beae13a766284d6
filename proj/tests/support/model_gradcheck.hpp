#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "rgbdnav/models/fusion_net.hpp"

namespace rgbdnav::testing {

struct ModelGradcheckResult {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
    std::size_t skipped_kinks = 0;        // perturbation flipped some relu
    std::size_t below_resolution = 0;     // 0 < |analytic| < resolution_floor
};

// Compares backward() against central differences of an MSE loss on a
// sample of parameter coordinates (every coordinate when per_tensor is 0).
// A step of 1e-5 resolves about 1e-13 in the loss, so components far below
// resolution_floor cannot be measured to 1e-6 relative and are only counted.
ModelGradcheckResult check_model_gradients(models::FusionNet<double>& net, std::size_t batch, std::size_t per_tensor,
                                           std::uint64_t seed, double resolution_floor = 0.0, double h = 1e-5);

}  // namespace rgbdnav::testing
