#include "rgbdnav/nn/tensor.hpp"

#include <cmath>

namespace rgbdnav::nn {

std::string shape_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += 'x';
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

void require_shape(const Shape& actual, const Shape& expected, const char* what) {
    if (actual != expected) {
        throw ShapeError(std::string(what) + ": expected shape " + shape_string(expected) + ", got " +
                         shape_string(actual));
    }
}

template <typename T>
bool all_finite(const Tensor<T>& t) {
    for (const T v : t.data()) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

template bool all_finite(const Tensor<float>&);
template bool all_finite(const Tensor<double>&);

}  // namespace rgbdnav::nn
