#include "rgbdnav/sim/expert.hpp"

#include <cmath>
#include <cstdlib>

#include "rgbdnav/error.hpp"
#include "rgbdnav/sim/simulator.hpp"

namespace rgbdnav::sim {

std::vector<double> sector_scores(const nn::Tensor<float>& depth, std::size_t sectors) {
    if (depth.rank() != 3 || depth.dim(0) != 1) throw ShapeError("expert needs a [1,H,W] depth frame");
    const std::size_t h = depth.dim(1);
    const std::size_t w = depth.dim(2);
    if (sectors == 0 || sectors > w) throw InvalidInput("sector count must lie in [1, W]");
    std::vector<double> sum(sectors, 0.0);
    std::vector<std::size_t> count(sectors, 0);
    const float* row = depth.ptr() + (h / 2) * w;
    for (std::size_t c = 0; c < w; ++c) {
        const std::size_t k = (2 * c + 1) * sectors / (2 * w);
        sum[k] += row[c];
        ++count[k];
    }
    for (std::size_t k = 0; k < sectors; ++k) sum[k] /= static_cast<double>(count[k]);
    return sum;
}

double sector_center_angle(std::size_t k, std::size_t sectors, double fov) {
    return fov * (0.5 - (static_cast<double>(k) + 0.5) / static_cast<double>(sectors));
}

double expert_policy(const nn::Tensor<float>& depth, const ExpertParams& params, double fov) {
    const auto scores = sector_scores(depth, params.sectors);
    const auto centrality = [&](std::size_t k) {
        // twice the distance from the middle sector, exact for even counts too
        return std::abs(2 * static_cast<long>(k) - static_cast<long>(params.sectors - 1));
    };
    std::size_t best = 0;
    for (std::size_t k = 1; k < scores.size(); ++k) {
        if (scores[k] > scores[best] || (scores[k] == scores[best] && centrality(k) < centrality(best))) best = k;
    }
    return clamp_omega(params.kp * sector_center_angle(best, params.sectors, fov), params.omega_max);
}

}  // namespace rgbdnav::sim
