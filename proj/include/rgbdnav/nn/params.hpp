#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rgbdnav/nn/tensor.hpp"
#include "rgbdnav/random.hpp"

namespace rgbdnav::nn {

// A trainable tensor with its gradient and optimizer moments.
template <typename T>
struct ParamState {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    Tensor<T> opt_m;
    Tensor<T> opt_v;
    std::uint64_t step_count = 0;

    ParamState() = default;
    ParamState(std::string param_name, Tensor<T> initial)
        : name(std::move(param_name)),
          value(std::move(initial)),
          grad(value.shape()),
          opt_m(value.shape()),
          opt_v(value.shape()) {}

    void zero_grad() { grad.fill(T{0}); }
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// One bias-corrected adaptive-moment step on every parameter.
template <typename T>
void adam_step(std::span<ParamState<T>> params, const AdamConfig& config);

// Glorot-uniform fill: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
template <typename T>
void glorot_uniform(Tensor<T>& tensor, std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace rgbdnav::nn
