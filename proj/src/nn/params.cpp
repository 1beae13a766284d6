#include "rgbdnav/nn/params.hpp"

#include <cmath>

#include "rgbdnav/error.hpp"
#include "rgbdnav/nn/simd.hpp"

namespace rgbdnav::nn {

template <typename T>
void adam_step(std::span<ParamState<T>> params, const AdamConfig& config) {
    if (!(config.lr > 0.0) || !std::isfinite(config.lr)) throw InvalidInput("adam_step: learning rate must be positive");
    for (auto& p : params) {
        ++p.step_count;
        const double t = static_cast<double>(p.step_count);
        const simd::AdamCoefficients coef{
            .beta1 = config.beta1,
            .beta2 = config.beta2,
            .eps = config.eps,
            .lr = config.lr,
            .bias_correction1 = 1.0 - std::pow(config.beta1, t),
            .bias_correction2 = 1.0 - std::pow(config.beta2, t),
        };
        simd::adam_update(p.value.size(), coef, p.grad.ptr(), p.opt_m.ptr(), p.opt_v.ptr(), p.value.ptr());
    }
}

template <typename T>
void glorot_uniform(Tensor<T>& tensor, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : tensor.data()) v = static_cast<T>(rng.uniform(-bound, bound));
}

template void adam_step(std::span<ParamState<float>>, const AdamConfig&);
template void adam_step(std::span<ParamState<double>>, const AdamConfig&);
template void glorot_uniform(Tensor<float>&, std::size_t, std::size_t, Rng&);
template void glorot_uniform(Tensor<double>&, std::size_t, std::size_t, Rng&);

}  // namespace rgbdnav::nn
