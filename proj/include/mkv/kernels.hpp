#pragma once

// Data-parallel inner loops over a particle slice. Every kernel exists as a
// scalar reference and, when the CPU supports it, an AVX2+FMA variant. The
// active table is picked once at first use; MKV_SIMD=scalar forces the
// reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace mkv::kernels {

enum class Isa { scalar, avx2 };

// Highest supported regression degree; joint moment buffers are sized from it.
inline constexpr std::size_t kMaxDegree = 5;
inline constexpr std::size_t kMaxPowers = 2 * kMaxDegree + 1;

// Sums needed for least squares of v on {u^k} x {1, w}, k <= degree:
//   s0[k] = sum u^k, s1[k] = sum u^k w, s2[k] = sum u^k w^2   (k <= 2*degree)
//   t0[k] = sum v u^k, t1[k] = sum v u^k w                     (k <= degree)
struct JointMoments {
  double s0[kMaxPowers];
  double s1[kMaxPowers];
  double s2[kMaxPowers];
  double t0[kMaxDegree + 1];
  double t1[kMaxDegree + 1];
};

struct KernelTable {
  Isa isa;
  std::string_view name;
  double (*sum)(const double* x, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);
  double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);
  // out = x + drift*dt + sigma*dw
  void (*euler_step)(double* out, const double* x, const double* drift, const double* dw, double dt,
                     double sigma, std::size_t n);
  // out = wa*a + wb*b
  void (*blend)(double* out, const double* a, const double* b, double wa, double wb, std::size_t n);
  // out = (x - shift) * scale
  void (*standardize)(double* out, const double* x, double shift, double scale, std::size_t n);
  void (*joint_moments)(const double* u, const double* w, const double* v, std::size_t n,
                        std::size_t degree, JointMoments& m);
  // out[j] = sum_k c[k] u[j]^k
  void (*polyval)(double* out, const double* c, std::size_t n_coeffs, const double* u, std::size_t n);
};

const KernelTable& scalar_table();
// nullptr when the variant was not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table();
const KernelTable& active();

// Span conveniences over the active table.
double sum(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);
double sum_sq_diff(std::span<const double> a, std::span<const double> b);
void euler_step(std::span<double> out, std::span<const double> x, std::span<const double> drift,
                std::span<const double> dw, double dt, double sigma);
void blend(std::span<double> out, std::span<const double> a, std::span<const double> b, double wa,
           double wb);
void standardize(std::span<double> out, std::span<const double> x, double shift, double scale);
JointMoments joint_moments(std::span<const double> u, std::span<const double> w,
                           std::span<const double> v, std::size_t degree);
void polyval(std::span<double> out, std::span<const double> coeffs, std::span<const double> u);

}  // namespace mkv::kernels
