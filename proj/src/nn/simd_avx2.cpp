// AVX2 kernels. This translation unit is the only one compiled with -mavx2;
// it avoids standard-library templates so no AVX2 code can leak into inline
// functions shared with the rest of the program.

#include <immintrin.h>

#include "rgbdnav/nn/simd.hpp"

namespace rgbdnav::nn::simd::avx2 {
namespace {

struct F32 {
    using T = float;
    using V = __m256;
    static constexpr std::size_t lanes = 8;
    static V load(const T* p) { return _mm256_loadu_ps(p); }
    static void store(T* p, V v) { _mm256_storeu_ps(p, v); }
    static V broadcast(T x) { return _mm256_set1_ps(x); }
    static V zero() { return _mm256_setzero_ps(); }
    static V add(V a, V b) { return _mm256_add_ps(a, b); }
    static V sub(V a, V b) { return _mm256_sub_ps(a, b); }
    static V mul(V a, V b) { return _mm256_mul_ps(a, b); }
    static V div(V a, V b) { return _mm256_div_ps(a, b); }
    static V sqrt(V a) { return _mm256_sqrt_ps(a); }
    static V max(V a, V b) { return _mm256_max_ps(a, b); }
    static V gt_mask(V a, V b) { return _mm256_cmp_ps(a, b, _CMP_GT_OQ); }
    static V and_(V a, V b) { return _mm256_and_ps(a, b); }
};

struct F64 {
    using T = double;
    using V = __m256d;
    static constexpr std::size_t lanes = 4;
    static V load(const T* p) { return _mm256_loadu_pd(p); }
    static void store(T* p, V v) { _mm256_storeu_pd(p, v); }
    static V broadcast(T x) { return _mm256_set1_pd(x); }
    static V zero() { return _mm256_setzero_pd(); }
    static V add(V a, V b) { return _mm256_add_pd(a, b); }
    static V sub(V a, V b) { return _mm256_sub_pd(a, b); }
    static V mul(V a, V b) { return _mm256_mul_pd(a, b); }
    static V div(V a, V b) { return _mm256_div_pd(a, b); }
    static V sqrt(V a) { return _mm256_sqrt_pd(a); }
    static V max(V a, V b) { return _mm256_max_pd(a, b); }
    static V gt_mask(V a, V b) { return _mm256_cmp_pd(a, b, _CMP_GT_OQ); }
    static V and_(V a, V b) { return _mm256_and_pd(a, b); }
};

constexpr std::size_t kBlockK = 256;
constexpr std::size_t kRows = 4;

inline float sqrt_scalar(float x) { return __builtin_sqrtf(x); }
inline double sqrt_scalar(double x) { return __builtin_sqrt(x); }

inline std::size_t min_size(std::size_t a, std::size_t b) { return a < b ? a : b; }

// 4 rows x (2 vectors) tile over k in [k0, k1).
template <typename S>
inline void tile_4x2(std::size_t k0, std::size_t k1, const typename S::T* a, std::size_t lda,
                     const typename S::T* b, std::size_t ldb, typename S::T* c, std::size_t ldc) {
    using V = typename S::V;
    constexpr std::size_t w = S::lanes;
    V c00 = S::load(c), c01 = S::load(c + w);
    V c10 = S::load(c + ldc), c11 = S::load(c + ldc + w);
    V c20 = S::load(c + 2 * ldc), c21 = S::load(c + 2 * ldc + w);
    V c30 = S::load(c + 3 * ldc), c31 = S::load(c + 3 * ldc + w);
    for (std::size_t p = k0; p < k1; ++p) {
        const V b0 = S::load(b + p * ldb);
        const V b1 = S::load(b + p * ldb + w);
        V a0 = S::broadcast(a[p]);
        c00 = S::add(c00, S::mul(a0, b0));
        c01 = S::add(c01, S::mul(a0, b1));
        a0 = S::broadcast(a[lda + p]);
        c10 = S::add(c10, S::mul(a0, b0));
        c11 = S::add(c11, S::mul(a0, b1));
        a0 = S::broadcast(a[2 * lda + p]);
        c20 = S::add(c20, S::mul(a0, b0));
        c21 = S::add(c21, S::mul(a0, b1));
        a0 = S::broadcast(a[3 * lda + p]);
        c30 = S::add(c30, S::mul(a0, b0));
        c31 = S::add(c31, S::mul(a0, b1));
    }
    S::store(c, c00), S::store(c + w, c01);
    S::store(c + ldc, c10), S::store(c + ldc + w, c11);
    S::store(c + 2 * ldc, c20), S::store(c + 2 * ldc + w, c21);
    S::store(c + 3 * ldc, c30), S::store(c + 3 * ldc + w, c31);
}

template <typename S>
inline void tile_1x2(std::size_t k0, std::size_t k1, const typename S::T* a, const typename S::T* b,
                     std::size_t ldb, typename S::T* c) {
    using V = typename S::V;
    constexpr std::size_t w = S::lanes;
    V c0 = S::load(c), c1 = S::load(c + w);
    for (std::size_t p = k0; p < k1; ++p) {
        const V a0 = S::broadcast(a[p]);
        c0 = S::add(c0, S::mul(a0, S::load(b + p * ldb)));
        c1 = S::add(c1, S::mul(a0, S::load(b + p * ldb + w)));
    }
    S::store(c, c0), S::store(c + w, c1);
}

template <typename S>
inline void tile_4x1(std::size_t k0, std::size_t k1, const typename S::T* a, std::size_t lda,
                     const typename S::T* b, std::size_t ldb, typename S::T* c, std::size_t ldc) {
    using V = typename S::V;
    V c0 = S::load(c), c1 = S::load(c + ldc), c2 = S::load(c + 2 * ldc), c3 = S::load(c + 3 * ldc);
    for (std::size_t p = k0; p < k1; ++p) {
        const V b0 = S::load(b + p * ldb);
        c0 = S::add(c0, S::mul(S::broadcast(a[p]), b0));
        c1 = S::add(c1, S::mul(S::broadcast(a[lda + p]), b0));
        c2 = S::add(c2, S::mul(S::broadcast(a[2 * lda + p]), b0));
        c3 = S::add(c3, S::mul(S::broadcast(a[3 * lda + p]), b0));
    }
    S::store(c, c0), S::store(c + ldc, c1), S::store(c + 2 * ldc, c2), S::store(c + 3 * ldc, c3);
}

template <typename S>
inline void tile_1x1(std::size_t k0, std::size_t k1, const typename S::T* a, const typename S::T* b,
                     std::size_t ldb, typename S::T* c) {
    using V = typename S::V;
    V c0 = S::load(c);
    for (std::size_t p = k0; p < k1; ++p) c0 = S::add(c0, S::mul(S::broadcast(a[p]), S::load(b + p * ldb)));
    S::store(c, c0);
}

template <typename S>
void gemm_acc_impl(std::size_t m, std::size_t n, std::size_t k, const typename S::T* a, std::size_t lda,
                   const typename S::T* b, std::size_t ldb, typename S::T* c, std::size_t ldc) {
    using T = typename S::T;
    constexpr std::size_t w = S::lanes;
    for (std::size_t k0 = 0; k0 < k; k0 += kBlockK) {
        const std::size_t k1 = min_size(k, k0 + kBlockK);
        std::size_t j = 0;
        for (; j + 2 * w <= n; j += 2 * w) {
            std::size_t i = 0;
            for (; i + kRows <= m; i += kRows) tile_4x2<S>(k0, k1, a + i * lda, lda, b + j, ldb, c + i * ldc + j, ldc);
            for (; i < m; ++i) tile_1x2<S>(k0, k1, a + i * lda, b + j, ldb, c + i * ldc + j);
        }
        for (; j + w <= n; j += w) {
            std::size_t i = 0;
            for (; i + kRows <= m; i += kRows) tile_4x1<S>(k0, k1, a + i * lda, lda, b + j, ldb, c + i * ldc + j, ldc);
            for (; i < m; ++i) tile_1x1<S>(k0, k1, a + i * lda, b + j, ldb, c + i * ldc + j);
        }
        for (; j < n; ++j) {
            for (std::size_t i = 0; i < m; ++i) {
                T acc = c[i * ldc + j];
                for (std::size_t p = k0; p < k1; ++p) {
                    const T prod = a[i * lda + p] * b[p * ldb + j];
                    acc = acc + prod;
                }
                c[i * ldc + j] = acc;
            }
        }
    }
}

template <typename S>
void relu_forward_impl(std::size_t n, const typename S::T* x, typename S::T* y) {
    using T = typename S::T;
    std::size_t i = 0;
    const auto zero = S::zero();
    for (; i + S::lanes <= n; i += S::lanes) S::store(y + i, S::max(S::load(x + i), zero));
    for (; i < n; ++i) y[i] = x[i] > T{0} ? x[i] : T{0};
}

template <typename S>
void relu_backward_impl(std::size_t n, const typename S::T* x, const typename S::T* dy, typename S::T* dx) {
    using T = typename S::T;
    std::size_t i = 0;
    const auto zero = S::zero();
    for (; i + S::lanes <= n; i += S::lanes) {
        S::store(dx + i, S::and_(S::gt_mask(S::load(x + i), zero), S::load(dy + i)));
    }
    for (; i < n; ++i) dx[i] = x[i] > T{0} ? dy[i] : T{0};
}

template <typename S>
void adam_update_impl(std::size_t n, const AdamCoefficients& coef, const typename S::T* grad, typename S::T* m,
                      typename S::T* v, typename S::T* value) {
    using T = typename S::T;
    const T b1 = static_cast<T>(coef.beta1);
    const T b2 = static_cast<T>(coef.beta2);
    const T omb1 = static_cast<T>(1.0 - coef.beta1);
    const T omb2 = static_cast<T>(1.0 - coef.beta2);
    const T bc1 = static_cast<T>(coef.bias_correction1);
    const T bc2 = static_cast<T>(coef.bias_correction2);
    const T lr = static_cast<T>(coef.lr);
    const T eps = static_cast<T>(coef.eps);
    const auto vb1 = S::broadcast(b1), vb2 = S::broadcast(b2), vomb1 = S::broadcast(omb1),
               vomb2 = S::broadcast(omb2), vbc1 = S::broadcast(bc1), vbc2 = S::broadcast(bc2),
               vlr = S::broadcast(lr), veps = S::broadcast(eps);
    std::size_t i = 0;
    for (; i + S::lanes <= n; i += S::lanes) {
        const auto g = S::load(grad + i);
        const auto mi = S::add(S::mul(vb1, S::load(m + i)), S::mul(vomb1, g));
        const auto vi = S::add(S::mul(vb2, S::load(v + i)), S::mul(vomb2, S::mul(g, g)));
        S::store(m + i, mi);
        S::store(v + i, vi);
        const auto m_hat = S::div(mi, vbc1);
        const auto v_hat = S::div(vi, vbc2);
        const auto denom = S::add(S::sqrt(v_hat), veps);
        S::store(value + i, S::sub(S::load(value + i), S::div(S::mul(vlr, m_hat), denom)));
    }
    for (; i < n; ++i) {
        const T g = grad[i];
        const T mi = b1 * m[i] + omb1 * g;
        const T gg = g * g;
        const T vi = b2 * v[i] + omb2 * gg;
        m[i] = mi;
        v[i] = vi;
        const T m_hat = mi / bc1;
        const T v_hat = vi / bc2;
        const T root = sqrt_scalar(v_hat);
        const T denom = root + eps;
        value[i] = value[i] - (lr * m_hat) / denom;
    }
}

}  // namespace

void gemm_acc_f32(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda, const float* b,
                  std::size_t ldb, float* c, std::size_t ldc) {
    gemm_acc_impl<F32>(m, n, k, a, lda, b, ldb, c, ldc);
}
void gemm_acc_f64(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                  const double* b, std::size_t ldb, double* c, std::size_t ldc) {
    gemm_acc_impl<F64>(m, n, k, a, lda, b, ldb, c, ldc);
}
void relu_forward_f32(std::size_t n, const float* x, float* y) { relu_forward_impl<F32>(n, x, y); }
void relu_forward_f64(std::size_t n, const double* x, double* y) { relu_forward_impl<F64>(n, x, y); }
void relu_backward_f32(std::size_t n, const float* x, const float* dy, float* dx) {
    relu_backward_impl<F32>(n, x, dy, dx);
}
void relu_backward_f64(std::size_t n, const double* x, const double* dy, double* dx) {
    relu_backward_impl<F64>(n, x, dy, dx);
}
void adam_update_f32(std::size_t n, const AdamCoefficients& coef, const float* grad, float* m, float* v,
                     float* value) {
    adam_update_impl<F32>(n, coef, grad, m, v, value);
}
void adam_update_f64(std::size_t n, const AdamCoefficients& coef, const double* grad, double* m, double* v,
                     double* value) {
    adam_update_impl<F64>(n, coef, grad, m, v, value);
}

}  // namespace rgbdnav::nn::simd::avx2
