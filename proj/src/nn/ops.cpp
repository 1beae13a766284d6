#include "rgbdnav/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rgbdnav/nn/simd.hpp"

namespace rgbdnav::nn {
namespace {

template <typename T>
void require_rank(const Tensor<T>& t, std::size_t rank, const char* what) {
    if (t.rank() != rank) {
        throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got shape " +
                         shape_string(t.shape()));
    }
}

struct ConvDims {
    std::size_t n, cin, h, w, cout, kh, kw, ho, wo;
    std::size_t patch() const { return cin * kh * kw; }
    std::size_t positions() const { return ho * wo; }
};

template <typename T>
ConvDims conv_dims(const Tensor<T>& input, const Tensor<T>& kernel, const ConvGeometry& g) {
    require_rank(input, 4, "conv2d input");
    require_rank(kernel, 4, "conv2d kernel");
    if (g.stride == 0) throw ShapeError("conv2d: stride must be positive");
    if (kernel.dim(1) != input.dim(1)) {
        throw ShapeError("conv2d: kernel expects " + std::to_string(kernel.dim(1)) + " input channels, input has " +
                         std::to_string(input.dim(1)));
    }
    ConvDims d{input.dim(0), input.dim(1), input.dim(2), input.dim(3), kernel.dim(0), kernel.dim(2), kernel.dim(3),
               0, 0};
    d.ho = conv_output_size(d.h, d.kh, g);
    d.wo = conv_output_size(d.w, d.kw, g);
    return d;
}

// col[k, p] for k = (ci, ky, kx), p = (oy, ox); padded taps are zero.
template <typename T>
void im2col(const T* image, const ConvDims& d, const ConvGeometry& g, T* col) {
    const std::size_t positions = d.positions();
    for (std::size_t ci = 0; ci < d.cin; ++ci) {
        for (std::size_t ky = 0; ky < d.kh; ++ky) {
            for (std::size_t kx = 0; kx < d.kw; ++kx) {
                T* row = col + ((ci * d.kh + ky) * d.kw + kx) * positions;
                for (std::size_t oy = 0; oy < d.ho; ++oy) {
                    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                              static_cast<std::ptrdiff_t>(g.padding);
                    T* out = row + oy * d.wo;
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) {
                        for (std::size_t ox = 0; ox < d.wo; ++ox) out[ox] = T{0};
                        continue;
                    }
                    const T* in_row = image + (ci * d.h + static_cast<std::size_t>(iy)) * d.w;
                    for (std::size_t ox = 0; ox < d.wo; ++ox) {
                        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                                                  static_cast<std::ptrdiff_t>(g.padding);
                        out[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(d.w)) ? T{0}
                                                                                    : in_row[static_cast<std::size_t>(ix)];
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im_add(const T* col, const ConvDims& d, const ConvGeometry& g, T* image) {
    const std::size_t positions = d.positions();
    for (std::size_t ci = 0; ci < d.cin; ++ci) {
        for (std::size_t ky = 0; ky < d.kh; ++ky) {
            for (std::size_t kx = 0; kx < d.kw; ++kx) {
                const T* row = col + ((ci * d.kh + ky) * d.kw + kx) * positions;
                for (std::size_t oy = 0; oy < d.ho; ++oy) {
                    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                              static_cast<std::ptrdiff_t>(g.padding);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.h)) continue;
                    T* in_row = image + (ci * d.h + static_cast<std::size_t>(iy)) * d.w;
                    for (std::size_t ox = 0; ox < d.wo; ++ox) {
                        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                                                  static_cast<std::ptrdiff_t>(g.padding);
                        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(d.w)) continue;
                        in_row[static_cast<std::size_t>(ix)] += row[oy * d.wo + ox];
                    }
                }
            }
        }
    }
}

template <typename T>
void transpose(const T* src, std::size_t rows, std::size_t cols, T* dst) {
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
    }
}

}  // namespace

std::size_t conv_output_size(std::size_t in, std::size_t k, const ConvGeometry& g) {
    if (g.stride == 0) throw ShapeError("conv: stride must be positive");
    const std::size_t padded = in + 2 * g.padding;
    if (k == 0 || padded < k) {
        throw ShapeError("conv: kernel " + std::to_string(k) + " larger than padded input " + std::to_string(padded));
    }
    return (padded - k) / g.stride + 1;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias, const ConvGeometry& g) {
    const ConvDims d = conv_dims(input, kernel, g);
    require_shape(bias.shape(), {d.cout}, "conv2d bias");
    Tensor<T> out({d.n, d.cout, d.ho, d.wo});
    const std::size_t k = d.patch();
    const std::size_t p = d.positions();
    std::vector<T> col(k * p);
    for (std::size_t n = 0; n < d.n; ++n) {
        im2col(input.ptr() + n * d.cin * d.h * d.w, d, g, col.data());
        T* dst = out.ptr() + n * d.cout * p;
        for (std::size_t co = 0; co < d.cout; ++co) {
            for (std::size_t i = 0; i < p; ++i) dst[co * p + i] = bias[co];
        }
        simd::gemm_acc(d.cout, p, k, kernel.ptr(), k, col.data(), p, dst, p);
    }
    return out;
}

template <typename T>
Conv2dGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& grad_out,
                               const ConvGeometry& g, bool need_input_grad) {
    const ConvDims d = conv_dims(input, kernel, g);
    require_shape(grad_out.shape(), {d.n, d.cout, d.ho, d.wo}, "conv2d_backward grad_out");
    const std::size_t k = d.patch();
    const std::size_t p = d.positions();

    Conv2dGrads<T> grads{Tensor<T>{}, Tensor<T>(kernel.shape()), Tensor<T>({d.cout})};
    if (need_input_grad) grads.input = Tensor<T>(input.shape());

    std::vector<T> col(k * p);
    std::vector<T> col_t(p * k);
    std::vector<T> kernel_t;
    std::vector<T> dcol;
    if (need_input_grad) {
        kernel_t.resize(k * d.cout);
        transpose(kernel.ptr(), d.cout, k, kernel_t.data());
        dcol.resize(k * p);
    }

    for (std::size_t n = 0; n < d.n; ++n) {
        const T* dy = grad_out.ptr() + n * d.cout * p;
        im2col(input.ptr() + n * d.cin * d.h * d.w, d, g, col.data());
        transpose(col.data(), k, p, col_t.data());
        simd::gemm_acc(d.cout, k, p, dy, p, col_t.data(), k, grads.kernel.ptr(), k);
        for (std::size_t co = 0; co < d.cout; ++co) {
            T acc = grads.bias[co];
            for (std::size_t i = 0; i < p; ++i) acc += dy[co * p + i];
            grads.bias[co] = acc;
        }
        if (need_input_grad) {
            std::fill(dcol.begin(), dcol.end(), T{0});
            simd::gemm_acc(k, p, d.cout, kernel_t.data(), d.cout, dy, p, dcol.data(), p);
            col2im_add(dcol.data(), d, g, grads.input.ptr() + n * d.cin * d.h * d.w);
        }
    }
    return grads;
}

template <typename T>
PoolResult<T> maxpool2(const Tensor<T>& input) {
    require_rank(input, 4, "maxpool2 input");
    const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    if (h % 2 != 0 || w % 2 != 0) {
        throw ShapeError("maxpool2: spatial dims must be even, got " + shape_string(input.shape()));
    }
    PoolResult<T> result{Tensor<T>({n, c, h / 2, w / 2}), {}};
    result.argmax.resize(result.output.size());
    std::size_t o = 0;
    for (std::size_t plane = 0; plane < n * c; ++plane) {
        const std::size_t base = plane * h * w;
        for (std::size_t oy = 0; oy < h / 2; ++oy) {
            for (std::size_t ox = 0; ox < w / 2; ++ox, ++o) {
                const std::size_t cand[4] = {base + (2 * oy) * w + 2 * ox, base + (2 * oy) * w + 2 * ox + 1,
                                             base + (2 * oy + 1) * w + 2 * ox, base + (2 * oy + 1) * w + 2 * ox + 1};
                std::size_t best = cand[0];
                for (std::size_t i = 1; i < 4; ++i) {
                    if (input[cand[i]] > input[best]) best = cand[i];
                }
                result.output[o] = input[best];
                result.argmax[o] = static_cast<std::uint32_t>(best);
            }
        }
    }
    return result;
}

template <typename T>
Tensor<T> maxpool2_backward(const Shape& input_shape, const std::vector<std::uint32_t>& argmax,
                            const Tensor<T>& grad_out) {
    if (argmax.size() != grad_out.size()) throw ShapeError("maxpool2_backward: argmax/grad size mismatch");
    Tensor<T> grad(input_shape);
    for (std::size_t i = 0; i < argmax.size(); ++i) grad[argmax[i]] += grad_out[i];
    return grad;
}

template <typename T>
Tensor<T> linear(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
    require_rank(input, 2, "linear input");
    require_rank(weight, 2, "linear weight");
    const std::size_t n = input.dim(0), f = input.dim(1), g = weight.dim(1);
    if (weight.dim(0) != f) {
        throw ShapeError("linear: input width " + std::to_string(f) + " does not match weight " +
                         shape_string(weight.shape()));
    }
    require_shape(bias.shape(), {g}, "linear bias");
    Tensor<T> out({n, g});
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < g; ++j) out[r * g + j] = bias[j];
    }
    simd::gemm_acc(n, g, f, input.ptr(), f, weight.ptr(), g, out.ptr(), g);
    return out;
}

template <typename T>
LinearGrads<T> linear_backward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& grad_out,
                               bool need_input_grad) {
    require_rank(input, 2, "linear_backward input");
    const std::size_t n = input.dim(0), f = input.dim(1), g = weight.dim(1);
    require_shape(weight.shape(), {f, g}, "linear_backward weight");
    require_shape(grad_out.shape(), {n, g}, "linear_backward grad_out");

    LinearGrads<T> grads{Tensor<T>{}, Tensor<T>({f, g}), Tensor<T>({g})};
    std::vector<T> input_t(f * n);
    transpose(input.ptr(), n, f, input_t.data());
    simd::gemm_acc(f, g, n, input_t.data(), n, grad_out.ptr(), g, grads.weight.ptr(), g);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < g; ++j) grads.bias[j] += grad_out[r * g + j];
    }
    if (need_input_grad) {
        // dX^T [F,N] = W [F,G] * dY^T [G,N]
        std::vector<T> dy_t(g * n);
        transpose(grad_out.ptr(), n, g, dy_t.data());
        std::vector<T> dx_t(f * n, T{0});
        simd::gemm_acc(f, n, g, weight.ptr(), g, dy_t.data(), n, dx_t.data(), n);
        grads.input = Tensor<T>({n, f});
        transpose(dx_t.data(), f, n, grads.input.ptr());
    }
    return grads;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& input) {
    Tensor<T> out(input.shape());
    simd::relu_forward(input.size(), input.ptr(), out.ptr());
    return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& grad_out) {
    require_shape(grad_out.shape(), input.shape(), "relu_backward grad_out");
    Tensor<T> grad(input.shape());
    simd::relu_backward(input.size(), input.ptr(), grad_out.ptr(), grad.ptr());
    return grad;
}

template <typename T>
Tensor<T> concat(const Tensor<T>& a, const Tensor<T>& b) {
    require_rank(a, 2, "concat lhs");
    require_rank(b, 2, "concat rhs");
    if (a.dim(0) != b.dim(0)) {
        throw ShapeError("concat: batch mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
    }
    const std::size_t n = a.dim(0), f1 = a.dim(1), f2 = b.dim(1);
    Tensor<T> out({n, f1 + f2});
    for (std::size_t r = 0; r < n; ++r) {
        std::copy_n(a.ptr() + r * f1, f1, out.ptr() + r * (f1 + f2));
        std::copy_n(b.ptr() + r * f2, f2, out.ptr() + r * (f1 + f2) + f1);
    }
    return out;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> concat_backward(const Tensor<T>& grad_out, std::size_t left_width) {
    require_rank(grad_out, 2, "concat_backward grad_out");
    const std::size_t n = grad_out.dim(0), total = grad_out.dim(1);
    if (left_width > total) throw ShapeError("concat_backward: split point beyond width");
    const std::size_t f2 = total - left_width;
    Tensor<T> ga({n, left_width});
    Tensor<T> gb({n, f2});
    for (std::size_t r = 0; r < n; ++r) {
        std::copy_n(grad_out.ptr() + r * total, left_width, ga.ptr() + r * left_width);
        std::copy_n(grad_out.ptr() + r * total + left_width, f2, gb.ptr() + r * f2);
    }
    return {std::move(ga), std::move(gb)};
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& input) {
    require_rank(input, 2, "softmax input");
    const std::size_t n = input.dim(0), k = input.dim(1);
    if (k == 0) throw ShapeError("softmax: need at least one column");
    Tensor<T> out(input.shape());
    for (std::size_t r = 0; r < n; ++r) {
        const T* x = input.ptr() + r * k;
        T* y = out.ptr() + r * k;
        T row_max = x[0];
        for (std::size_t j = 1; j < k; ++j) row_max = std::max(row_max, x[j]);
        T sum{0};
        for (std::size_t j = 0; j < k; ++j) {
            y[j] = std::exp(x[j] - row_max);
            sum += y[j];
        }
        for (std::size_t j = 0; j < k; ++j) y[j] /= sum;
    }
    return out;
}

template <typename T>
Tensor<T> softmax_backward(const Tensor<T>& output, const Tensor<T>& grad_out) {
    require_shape(grad_out.shape(), output.shape(), "softmax_backward grad_out");
    const std::size_t n = output.dim(0), k = output.dim(1);
    Tensor<T> grad(output.shape());
    for (std::size_t r = 0; r < n; ++r) {
        const T* y = output.ptr() + r * k;
        const T* dy = grad_out.ptr() + r * k;
        T dot{0};
        for (std::size_t j = 0; j < k; ++j) dot += y[j] * dy[j];
        for (std::size_t j = 0; j < k; ++j) grad[r * k + j] = y[j] * (dy[j] - dot);
    }
    return grad;
}

template <typename T>
Tensor<T> weighted_sum(const Tensor<T>& a, const Tensor<T>& b, const Tensor<T>& weights) {
    require_rank(a, 2, "weighted_sum lhs");
    require_shape(b.shape(), a.shape(), "weighted_sum rhs");
    require_shape(weights.shape(), {a.dim(0), 2}, "weighted_sum weights");
    const std::size_t n = a.dim(0), e = a.dim(1);
    Tensor<T> out(a.shape());
    for (std::size_t r = 0; r < n; ++r) {
        const T wa = weights[2 * r], wb = weights[2 * r + 1];
        for (std::size_t j = 0; j < e; ++j) out[r * e + j] = wa * a[r * e + j] + wb * b[r * e + j];
    }
    return out;
}

template <typename T>
WeightedSumGrads<T> weighted_sum_backward(const Tensor<T>& a, const Tensor<T>& b, const Tensor<T>& weights,
                                          const Tensor<T>& grad_out) {
    require_shape(grad_out.shape(), a.shape(), "weighted_sum_backward grad_out");
    const std::size_t n = a.dim(0), e = a.dim(1);
    WeightedSumGrads<T> grads{Tensor<T>(a.shape()), Tensor<T>(b.shape()), Tensor<T>(weights.shape())};
    for (std::size_t r = 0; r < n; ++r) {
        const T wa = weights[2 * r], wb = weights[2 * r + 1];
        T dwa{0}, dwb{0};
        for (std::size_t j = 0; j < e; ++j) {
            const T g = grad_out[r * e + j];
            grads.a[r * e + j] = wa * g;
            grads.b[r * e + j] = wb * g;
            dwa += a[r * e + j] * g;
            dwb += b[r * e + j] * g;
        }
        grads.weights[2 * r] = dwa;
        grads.weights[2 * r + 1] = dwb;
    }
    return grads;
}

template <typename T>
T mse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
    require_shape(target.shape(), pred.shape(), "mse_loss target");
    if (pred.size() == 0) throw ShapeError("mse_loss: empty batch");
    T sum{0};
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const T d = pred[i] - target[i];
        sum += d * d;
    }
    return sum / static_cast<T>(pred.size());
}

template <typename T>
Tensor<T> mse_loss_backward(const Tensor<T>& pred, const Tensor<T>& target) {
    require_shape(target.shape(), pred.shape(), "mse_loss_backward target");
    Tensor<T> grad(pred.shape());
    const T scale = T{2} / static_cast<T>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) grad[i] = scale * (pred[i] - target[i]);
    return grad;
}

#define RGBDNAV_INSTANTIATE(T)                                                                                    \
    template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const ConvGeometry&);        \
    template Conv2dGrads<T> conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,                \
                                            const ConvGeometry&, bool);                                          \
    template PoolResult<T> maxpool2(const Tensor<T>&);                                                           \
    template Tensor<T> maxpool2_backward(const Shape&, const std::vector<std::uint32_t>&, const Tensor<T>&);     \
    template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                             \
    template LinearGrads<T> linear_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, bool);         \
    template Tensor<T> relu(const Tensor<T>&);                                                                   \
    template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);                                        \
    template Tensor<T> concat(const Tensor<T>&, const Tensor<T>&);                                               \
    template std::pair<Tensor<T>, Tensor<T>> concat_backward(const Tensor<T>&, std::size_t);                     \
    template Tensor<T> softmax(const Tensor<T>&);                                                                \
    template Tensor<T> softmax_backward(const Tensor<T>&, const Tensor<T>&);                                     \
    template Tensor<T> weighted_sum(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                       \
    template WeightedSumGrads<T> weighted_sum_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,     \
                                                       const Tensor<T>&);                                        \
    template T mse_loss(const Tensor<T>&, const Tensor<T>&);                                                     \
    template Tensor<T> mse_loss_backward(const Tensor<T>&, const Tensor<T>&);

RGBDNAV_INSTANTIATE(float)
RGBDNAV_INSTANTIATE(double)
#undef RGBDNAV_INSTANTIATE

}  // namespace rgbdnav::nn
