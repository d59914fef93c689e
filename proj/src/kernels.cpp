#include "topotrack/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace topotrack::kernels {

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

double sum_sq(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
  return acc;
}

double sum_sq_diff(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double sum_sq_pos_diff(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    if (d > 0.0) acc += d * d;
  }
  return acc;
}

double sum_abs_diff(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::fabs(a[i] - b[i]);
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace scalar

#if !defined(TOPOTRACK_HAVE_AVX2)
namespace avx2 {
bool available() { return false; }
double dot(const double* a, const double* b, std::size_t n) { return scalar::dot(a, b, n); }
double sum(const double* a, std::size_t n) { return scalar::sum(a, n); }
double sum_sq(const double* a, std::size_t n) { return scalar::sum_sq(a, n); }
double sum_sq_diff(const double* a, const double* b, std::size_t n) {
  return scalar::sum_sq_diff(a, b, n);
}
double sum_sq_pos_diff(const double* a, const double* b, std::size_t n) {
  return scalar::sum_sq_pos_diff(a, b, n);
}
double sum_abs_diff(const double* a, const double* b, std::size_t n) {
  return scalar::sum_abs_diff(a, b, n);
}
void axpy(double alpha, const double* x, double* y, std::size_t n) {
  scalar::axpy(alpha, x, y, n);
}
}  // namespace avx2
#endif

namespace {

Backend g_backend = Backend::Auto;

Backend resolve(Backend backend) {
  if (backend == Backend::Auto) return avx2::available() ? Backend::Avx2 : Backend::Scalar;
  return backend;
}

}  // namespace

Backend active_backend() { return resolve(g_backend); }

void set_backend(Backend backend) {
  if (backend == Backend::Avx2 && !avx2::available())
    throw std::runtime_error("AVX2 backend requested but not available on this CPU");
  g_backend = backend;
}

#define TOPOTRACK_DISPATCH(call) \
  return active_backend() == Backend::Avx2 ? avx2::call : scalar::call

double dot(const double* a, const double* b, std::size_t n) { TOPOTRACK_DISPATCH(dot(a, b, n)); }
double sum(const double* a, std::size_t n) { TOPOTRACK_DISPATCH(sum(a, n)); }
double sum_sq(const double* a, std::size_t n) { TOPOTRACK_DISPATCH(sum_sq(a, n)); }
double sum_sq_diff(const double* a, const double* b, std::size_t n) {
  TOPOTRACK_DISPATCH(sum_sq_diff(a, b, n));
}
double sum_sq_pos_diff(const double* a, const double* b, std::size_t n) {
  TOPOTRACK_DISPATCH(sum_sq_pos_diff(a, b, n));
}
double sum_abs_diff(const double* a, const double* b, std::size_t n) {
  TOPOTRACK_DISPATCH(sum_abs_diff(a, b, n));
}
void axpy(double alpha, const double* x, double* y, std::size_t n) {
  if (active_backend() == Backend::Avx2)
    avx2::axpy(alpha, x, y, n);
  else
    scalar::axpy(alpha, x, y, n);
}

#undef TOPOTRACK_DISPATCH

}  // namespace topotrack::kernels
