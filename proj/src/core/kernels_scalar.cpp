#include <algorithm>

#include "kernels_impl.hpp"

namespace mkv::kernels::detail {
namespace {

double sum_scalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += x[j];
  return s;
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += x[j] * y[j];
  return s;
}

double sum_sq_diff_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

void euler_step_scalar(double* out, const double* x, const double* drift, const double* dw,
                       double dt, double sigma, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) out[j] = x[j] + drift[j] * dt + sigma * dw[j];
}

void blend_scalar(double* out, const double* a, const double* b, double wa, double wb,
                  std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) out[j] = wa * a[j] + wb * b[j];
}

void standardize_scalar(double* out, const double* x, double shift, double scale, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) out[j] = (x[j] - shift) * scale;
}

void polyval_scalar(double* out, const double* c, std::size_t n_coeffs, const double* u,
                    std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t k = n_coeffs; k-- > 0;) acc = acc * u[j] + c[k];
    out[j] = acc;
  }
}

}  // namespace

void joint_moments_scalar(const double* u, const double* w, const double* v, std::size_t n,
                          std::size_t degree, JointMoments& m) {
  const std::size_t n_pow = 2 * degree + 1;
  std::fill(std::begin(m.s0), std::end(m.s0), 0.0);
  std::fill(std::begin(m.s1), std::end(m.s1), 0.0);
  std::fill(std::begin(m.s2), std::end(m.s2), 0.0);
  std::fill(std::begin(m.t0), std::end(m.t0), 0.0);
  std::fill(std::begin(m.t1), std::end(m.t1), 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double ww = w[j] * w[j];
    const double vw = v[j] * w[j];
    double p = 1.0;
    for (std::size_t k = 0; k < n_pow; ++k) {
      m.s0[k] += p;
      m.s1[k] += p * w[j];
      m.s2[k] += p * ww;
      if (k <= degree) {
        m.t0[k] += p * v[j];
        m.t1[k] += p * vw;
      }
      p *= u[j];
    }
  }
}

const KernelTable kScalarTable{
    Isa::scalar,       "scalar",       sum_scalar,           dot_scalar,
    sum_sq_diff_scalar, euler_step_scalar, blend_scalar,     standardize_scalar,
    joint_moments_scalar, polyval_scalar,
};

}  // namespace mkv::kernels::detail
