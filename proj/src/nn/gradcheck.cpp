#include "rgbdnav/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace rgbdnav::nn {

double finite_diff_component(const ScalarFunction& f, const Tensor<double>& x, std::size_t index, double h) {
    Tensor<double> probe = x;
    probe[index] = x[index] + h;
    const double plus = f(probe);
    probe[index] = x[index] - h;
    const double minus = f(probe);
    return (plus - minus) / (2.0 * h);
}

Tensor<double> finite_diff_grad(const ScalarFunction& f, const Tensor<double>& x, double h) {
    Tensor<double> grad(x.shape());
    Tensor<double> probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + h;
        const double plus = f(probe);
        probe[i] = x[i] - h;
        const double minus = f(probe);
        probe[i] = x[i];
        grad[i] = (plus - minus) / (2.0 * h);
    }
    return grad;
}

double relative_error(double analytic, double numeric) {
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    return scale == 0.0 ? 0.0 : std::abs(analytic - numeric) / scale;
}

}  // namespace rgbdnav::nn
