#pragma once

#include <cstddef>
#include <functional>

#include "rgbdnav/nn/tensor.hpp"

namespace rgbdnav::nn {

using ScalarFunction = std::function<double(const Tensor<double>&)>;

// Central difference (f(x + h e_i) - f(x - h e_i)) / 2h for one coordinate.
double finite_diff_component(const ScalarFunction& f, const Tensor<double>& x, std::size_t index, double h = 1e-5);

// Central differences for every coordinate of x.
Tensor<double> finite_diff_grad(const ScalarFunction& f, const Tensor<double>& x, double h = 1e-5);

// |a - b| / max(|a|, |b|), 0 when both are 0.
double relative_error(double analytic, double numeric);

}  // namespace rgbdnav::nn
