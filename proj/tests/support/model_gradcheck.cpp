#include "model_gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "rgbdnav/nn/gradcheck.hpp"
#include "rgbdnav/nn/ops.hpp"
#include "rgbdnav/random.hpp"

namespace rgbdnav::testing {

namespace {

using nn::Tensor;

std::vector<bool> relu_mask(const models::ForwardCache<double>& c) {
    std::vector<bool> mask;
    const auto add = [&](const Tensor<double>& t) {
        for (const double v : t.data()) mask.push_back(v > 0.0);
    };
    for (std::size_t i = 1; i < c.color_acts.size(); ++i) add(c.color_acts[i]);
    for (std::size_t i = 1; i < c.depth_acts.size(); ++i) add(c.depth_acts[i]);
    add(c.color_embed);
    add(c.depth_embed);
    for (std::size_t i = 1; i + 1 < c.head_acts.size(); ++i) add(c.head_acts[i]);
    return mask;
}

}  // namespace

ModelGradcheckResult check_model_gradients(models::FusionNet<double>& net, std::size_t batch, std::size_t per_tensor,
                                           std::uint64_t seed, double resolution_floor, double h) {
    const auto& cfg = net.config();
    Rng rng(seed);
    Tensor<double> color({batch, cfg.color_channels, cfg.input_h, cfg.input_w});
    Tensor<double> depth({batch, cfg.depth_channels, cfg.input_h, cfg.input_w});
    Tensor<double> target({batch, 1});
    for (auto& v : color.data()) v = rng.uniform();
    for (auto& v : depth.data()) v = rng.uniform();
    for (auto& v : target.data()) v = rng.uniform(-0.5, 0.5);

    models::ForwardCache<double> cache;
    const auto pred = net.forward(color, depth, cache);
    net.backward(cache, nn::mse_loss_backward(pred, target));
    const auto base_mask = relu_mask(cache);

    ModelGradcheckResult result;
    for (auto& p : net.params()) {
        std::vector<std::size_t> coords(p.value.size());
        for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
        if (per_tensor != 0 && per_tensor < coords.size()) {
            rng.shuffle(std::span<std::size_t>(coords));
            coords.resize(per_tensor);
        }
        for (const auto idx : coords) {
            const double original = p.value[idx];
            models::ForwardCache<double> c_plus;
            models::ForwardCache<double> c_minus;
            p.value[idx] = original + h;
            const double l_plus = nn::mse_loss(net.forward(color, depth, c_plus), target);
            p.value[idx] = original - h;
            const double l_minus = nn::mse_loss(net.forward(color, depth, c_minus), target);
            p.value[idx] = original;
            if (relu_mask(c_plus) != base_mask || relu_mask(c_minus) != base_mask) {
                ++result.skipped_kinks;
                continue;
            }
            const double analytic = p.grad[idx];
            if (analytic != 0.0 && std::abs(analytic) < resolution_floor) {
                ++result.below_resolution;
                continue;
            }
            const double numeric = (l_plus - l_minus) / (2.0 * h);
            const double err = nn::relative_error(analytic, numeric);
            ++result.checked;
            if (err > result.max_rel_error) {
                result.max_rel_error = err;
                result.worst_param = p.name;
                result.worst_index = idx;
            }
        }
    }
    return result;
}

}  // namespace rgbdnav::testing
