#pragma once

#include <cstddef>
#include <string_view>

// Runtime-selected compute kernels. Every entry point has a portable scalar
// reference and, where the CPU supports it, an AVX2 variant. Both variants
// perform the same floating-point operations in the same order, so results
// are bitwise identical and selection never changes model outputs.
namespace rgbdnav::nn::simd {

enum class Backend { Scalar, Avx2 };

std::string_view backend_name(Backend b);

// CPU capability probe (cached).
bool cpu_has_avx2();

// Currently selected backend. Defaults to the best supported one; the
// RGBDNAV_SIMD=scalar environment variable forces the reference path.
Backend active_backend();
void set_backend(Backend b);  // throws InvalidInput if unsupported

// C[M,N] += A[M,K] * B[K,N]. Each C element is updated as c = c + a*b for
// k = 0..K-1 in ascending order (no fused multiply-add).
void gemm_acc(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda, const float* b,
              std::size_t ldb, float* c, std::size_t ldc);
void gemm_acc(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda, const double* b,
              std::size_t ldb, double* c, std::size_t ldc);

// y[i] = max(0, x[i]).
void relu_forward(std::size_t n, const float* x, float* y);
void relu_forward(std::size_t n, const double* x, double* y);

// dx[i] = x[i] > 0 ? dy[i] : 0.
void relu_backward(std::size_t n, const float* x, const float* dy, float* dx);
void relu_backward(std::size_t n, const double* x, const double* dy, double* dx);

struct AdamCoefficients {
    double beta1;
    double beta2;
    double eps;
    double lr;
    double bias_correction1;  // 1 - beta1^t
    double bias_correction2;  // 1 - beta2^t
};

// In-place moment update and parameter step over n elements.
void adam_update(std::size_t n, const AdamCoefficients& coef, const float* grad, float* m, float* v, float* value);
void adam_update(std::size_t n, const AdamCoefficients& coef, const double* grad, double* m, double* v,
                 double* value);

// Explicit-backend entry points, used by the equivalence tests.
namespace scalar {
template <typename T>
void gemm_acc(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
              std::size_t ldb, T* c, std::size_t ldc);
template <typename T>
void relu_forward(std::size_t n, const T* x, T* y);
template <typename T>
void relu_backward(std::size_t n, const T* x, const T* dy, T* dx);
template <typename T>
void adam_update(std::size_t n, const AdamCoefficients& coef, const T* grad, T* m, T* v, T* value);
}  // namespace scalar

namespace avx2 {
void gemm_acc_f32(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda, const float* b,
                  std::size_t ldb, float* c, std::size_t ldc);
void gemm_acc_f64(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                  const double* b, std::size_t ldb, double* c, std::size_t ldc);
void relu_forward_f32(std::size_t n, const float* x, float* y);
void relu_forward_f64(std::size_t n, const double* x, double* y);
void relu_backward_f32(std::size_t n, const float* x, const float* dy, float* dx);
void relu_backward_f64(std::size_t n, const double* x, const double* dy, double* dx);
void adam_update_f32(std::size_t n, const AdamCoefficients& coef, const float* grad, float* m, float* v,
                     float* value);
void adam_update_f64(std::size_t n, const AdamCoefficients& coef, const double* grad, double* m, double* v,
                     double* value);
}  // namespace avx2

}  // namespace rgbdnav::nn::simd
