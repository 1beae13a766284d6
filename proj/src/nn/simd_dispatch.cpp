#include <atomic>
#include <cstdlib>
#include <string>

#include "rgbdnav/error.hpp"
#include "rgbdnav/nn/simd.hpp"

namespace rgbdnav::nn::simd {
namespace {

Backend initial_backend() {
    if (const char* env = std::getenv("RGBDNAV_SIMD"); env != nullptr && std::string(env) == "scalar") {
        return Backend::Scalar;
    }
    return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& backend_slot() {
    static std::atomic<Backend> slot{initial_backend()};
    return slot;
}

}  // namespace

std::string_view backend_name(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    static const bool has = [] {
        __builtin_cpu_init();
        return __builtin_cpu_supports("avx2") != 0;
    }();
    return has;
#else
    return false;
#endif
}

Backend active_backend() { return backend_slot().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
    if (b == Backend::Avx2 && !cpu_has_avx2()) throw InvalidInput("AVX2 backend not supported on this CPU");
    backend_slot().store(b, std::memory_order_relaxed);
}

void gemm_acc(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda, const float* b,
                     std::size_t ldb, float* c, std::size_t ldc) {
    if (active_backend() == Backend::Avx2) return avx2::gemm_acc_f32(m, n, k, a, lda, b, ldb, c, ldc);
    scalar::gemm_acc(m, n, k, a, lda, b, ldb, c, ldc);
}

void gemm_acc(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                      const double* b, std::size_t ldb, double* c, std::size_t ldc) {
    if (active_backend() == Backend::Avx2) return avx2::gemm_acc_f64(m, n, k, a, lda, b, ldb, c, ldc);
    scalar::gemm_acc(m, n, k, a, lda, b, ldb, c, ldc);
}

void relu_forward(std::size_t n, const float* x, float* y) {
    if (active_backend() == Backend::Avx2) return avx2::relu_forward_f32(n, x, y);
    scalar::relu_forward(n, x, y);
}

void relu_forward(std::size_t n, const double* x, double* y) {
    if (active_backend() == Backend::Avx2) return avx2::relu_forward_f64(n, x, y);
    scalar::relu_forward(n, x, y);
}

void relu_backward(std::size_t n, const float* x, const float* dy, float* dx) {
    if (active_backend() == Backend::Avx2) return avx2::relu_backward_f32(n, x, dy, dx);
    scalar::relu_backward(n, x, dy, dx);
}

void relu_backward(std::size_t n, const double* x, const double* dy, double* dx) {
    if (active_backend() == Backend::Avx2) return avx2::relu_backward_f64(n, x, dy, dx);
    scalar::relu_backward(n, x, dy, dx);
}

void adam_update(std::size_t n, const AdamCoefficients& coef, const float* grad, float* m, float* v,
                        float* value) {
    if (active_backend() == Backend::Avx2) return avx2::adam_update_f32(n, coef, grad, m, v, value);
    scalar::adam_update(n, coef, grad, m, v, value);
}

void adam_update(std::size_t n, const AdamCoefficients& coef, const double* grad, double* m, double* v,
                         double* value) {
    if (active_backend() == Backend::Avx2) return avx2::adam_update_f64(n, coef, grad, m, v, value);
    scalar::adam_update(n, coef, grad, m, v, value);
}

}  // namespace rgbdnav::nn::simd
