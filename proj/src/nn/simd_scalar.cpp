#include <cmath>

#include "rgbdnav/nn/simd.hpp"

namespace rgbdnav::nn::simd::scalar {

template <typename T>
void gemm_acc(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
              std::size_t ldb, T* c, std::size_t ldc) {
    // i-p-j order: every C element still receives its k contributions in
    // ascending order, one rounded multiply and one rounded add each.
    for (std::size_t i = 0; i < m; ++i) {
        T* c_row = c + i * ldc;
        for (std::size_t p = 0; p < k; ++p) {
            const T a_ip = a[i * lda + p];
            const T* b_row = b + p * ldb;
            for (std::size_t j = 0; j < n; ++j) {
                const T prod = a_ip * b_row[j];
                c_row[j] = c_row[j] + prod;
            }
        }
    }
}

template <typename T>
void relu_forward(std::size_t n, const T* x, T* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > T{0} ? x[i] : T{0};
}

template <typename T>
void relu_backward(std::size_t n, const T* x, const T* dy, T* dx) {
    for (std::size_t i = 0; i < n; ++i) dx[i] = x[i] > T{0} ? dy[i] : T{0};
}

template <typename T>
void adam_update(std::size_t n, const AdamCoefficients& coef, const T* grad, T* m, T* v, T* value) {
    const T b1 = static_cast<T>(coef.beta1);
    const T b2 = static_cast<T>(coef.beta2);
    const T one_minus_b1 = static_cast<T>(1.0 - coef.beta1);
    const T one_minus_b2 = static_cast<T>(1.0 - coef.beta2);
    const T bc1 = static_cast<T>(coef.bias_correction1);
    const T bc2 = static_cast<T>(coef.bias_correction2);
    const T lr = static_cast<T>(coef.lr);
    const T eps = static_cast<T>(coef.eps);
    for (std::size_t i = 0; i < n; ++i) {
        const T g = grad[i];
        const T mi = b1 * m[i] + one_minus_b1 * g;
        const T gg = g * g;
        const T vi = b2 * v[i] + one_minus_b2 * gg;
        m[i] = mi;
        v[i] = vi;
        const T m_hat = mi / bc1;
        const T v_hat = vi / bc2;
        const T denom = std::sqrt(v_hat) + eps;
        value[i] = value[i] - (lr * m_hat) / denom;
    }
}

#define RGBDNAV_INSTANTIATE(T)                                                                              \
    template void gemm_acc<T>(std::size_t, std::size_t, std::size_t, const T*, std::size_t, const T*,      \
                              std::size_t, T*, std::size_t);                                               \
    template void relu_forward<T>(std::size_t, const T*, T*);                                              \
    template void relu_backward<T>(std::size_t, const T*, const T*, T*);                                   \
    template void adam_update<T>(std::size_t, const AdamCoefficients&, const T*, T*, T*, T*);

RGBDNAV_INSTANTIATE(float)
RGBDNAV_INSTANTIATE(double)
#undef RGBDNAV_INSTANTIATE

}  // namespace rgbdnav::nn::simd::scalar
