#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "rgbdnav/nn/tensor.hpp"

// Differentiable compute kernels. Each forward op has a matching *_backward
// that maps the upstream gradient onto gradients of the op's inputs.
namespace rgbdnav::nn {

struct ConvGeometry {
    std::size_t stride = 1;
    std::size_t padding = 0;
};

// floor((in + 2*pad - k) / stride) + 1; throws ShapeError when < 1.
std::size_t conv_output_size(std::size_t in, std::size_t k, const ConvGeometry& g);

// input [N,Cin,H,W], kernel [Cout,Cin,kH,kW], bias [Cout] -> [N,Cout,H',W'].
// Zero-padded cross-correlation; per output the accumulator starts at bias
// and adds taps in (ci, ky, kx) order.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias, const ConvGeometry& g);

template <typename T>
struct Conv2dGrads {
    Tensor<T> input;  // empty when not requested
    Tensor<T> kernel;
    Tensor<T> bias;
};

template <typename T>
Conv2dGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& grad_out,
                               const ConvGeometry& g, bool need_input_grad = true);

template <typename T>
struct PoolResult {
    Tensor<T> output;
    std::vector<std::uint32_t> argmax;  // flat input index per output element
};

// 2x2 window, stride 2. Ties resolve to the first element in row-major order.
template <typename T>
PoolResult<T> maxpool2(const Tensor<T>& input);

template <typename T>
Tensor<T> maxpool2_backward(const Shape& input_shape, const std::vector<std::uint32_t>& argmax,
                            const Tensor<T>& grad_out);

// input [N,F], weight [F,G], bias [G] -> [N,G].
template <typename T>
Tensor<T> linear(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias);

template <typename T>
struct LinearGrads {
    Tensor<T> input;
    Tensor<T> weight;
    Tensor<T> bias;
};

template <typename T>
LinearGrads<T> linear_backward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& grad_out,
                               bool need_input_grad = true);

template <typename T>
Tensor<T> relu(const Tensor<T>& input);

// Subgradient 0 at exactly 0.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& grad_out);

// [N,F1] ++ [N,F2] -> [N,F1+F2], a's columns first.
template <typename T>
Tensor<T> concat(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
std::pair<Tensor<T>, Tensor<T>> concat_backward(const Tensor<T>& grad_out, std::size_t left_width);

// Row-wise softmax over [N,K], stabilized by subtracting the row max.
template <typename T>
Tensor<T> softmax(const Tensor<T>& input);

// Takes the softmax output, not its input.
template <typename T>
Tensor<T> softmax_backward(const Tensor<T>& output, const Tensor<T>& grad_out);

// fused[n,:] = w[n,0]*a[n,:] + w[n,1]*b[n,:] with w [N,2].
template <typename T>
Tensor<T> weighted_sum(const Tensor<T>& a, const Tensor<T>& b, const Tensor<T>& weights);

template <typename T>
struct WeightedSumGrads {
    Tensor<T> a;
    Tensor<T> b;
    Tensor<T> weights;
};

template <typename T>
WeightedSumGrads<T> weighted_sum_backward(const Tensor<T>& a, const Tensor<T>& b, const Tensor<T>& weights,
                                          const Tensor<T>& grad_out);

// Mean of squared differences over [N,1] pairs.
template <typename T>
T mse_loss(const Tensor<T>& pred, const Tensor<T>& target);

// 2 (pred - target) / N.
template <typename T>
Tensor<T> mse_loss_backward(const Tensor<T>& pred, const Tensor<T>& target);

}  // namespace rgbdnav::nn
