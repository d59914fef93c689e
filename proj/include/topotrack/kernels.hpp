#pragma once

#include <cstddef>

// Arithmetic inner loops shared by the solver, the TDA distance code and the
// metric suite. Every kernel has a scalar reference implementation and an
// AVX2 variant; the dispatched entry points select a backend at runtime.
//
// Reductions reassociate under SIMD, so scalar and AVX2 results agree to
// rounding, not bitwise. A fixed backend is bitwise deterministic.

namespace topotrack::kernels {

enum class Backend { Auto, Scalar, Avx2 };

/// Backend used by the dispatched entry points. Auto resolves to Avx2 when
/// the CPU supports it, Scalar otherwise.
Backend active_backend();

/// Force a backend (tests, --no-simd). Forcing Avx2 on a CPU without AVX2
/// throws. Not thread-safe; call before any concurrent use.
void set_backend(Backend backend);

// Dispatched entry points.
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double sum_sq(const double* a, std::size_t n);
/// sum of (a[i] - b[i])^2
double sum_sq_diff(const double* a, const double* b, std::size_t n);
/// sum of max(a[i] - b[i], 0)^2
double sum_sq_pos_diff(const double* a, const double* b, std::size_t n);
/// sum of |a[i] - b[i]|
double sum_abs_diff(const double* a, const double* b, std::size_t n);
/// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::size_t n);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double sum_sq(const double* a, std::size_t n);
double sum_sq_diff(const double* a, const double* b, std::size_t n);
double sum_sq_pos_diff(const double* a, const double* b, std::size_t n);
double sum_abs_diff(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace scalar

namespace avx2 {
/// True when the AVX2 variants were compiled in and the CPU supports them.
bool available();
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double sum_sq(const double* a, std::size_t n);
double sum_sq_diff(const double* a, const double* b, std::size_t n);
double sum_sq_pos_diff(const double* a, const double* b, std::size_t n);
double sum_abs_diff(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace avx2

}  // namespace topotrack::kernels
