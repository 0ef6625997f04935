#include "mkv/regression.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "mkv/error.hpp"
#include "mkv/kernels.hpp"

namespace mkv {
namespace {

std::vector<double>& scratch() {
  thread_local std::vector<double> buf;
  return buf;
}

std::span<const double> standardized(std::span<const double> x, double shift, double scale) {
  auto& buf = scratch();
  buf.resize(x.size());
  kernels::standardize(buf, x, shift, scale);
  return buf;
}

// Solves the normal equations; false if the Gram matrix is numerically singular.
bool solve_normal(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs, Eigen::VectorXd& out) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success) return false;
  const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
  if (d.minCoeff() <= 1e-11 * std::max(d.maxCoeff(), 1e-300)) return false;
  out = ldlt.solve(rhs);
  return out.allFinite();
}

}  // namespace

void SliceFit::conditional_mean(std::span<const double> regressor, std::span<double> out) const {
  if (mean_coeffs.size() == 1) {
    std::fill(out.begin(), out.end(), mean_coeffs[0]);
    return;
  }
  kernels::polyval(out, mean_coeffs, standardized(regressor, shift, scale));
}

void SliceFit::integrand(std::span<const double> regressor, double dt, std::span<double> out) const {
  if (noise_coeffs.empty()) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const double inv = 1.0 / std::sqrt(dt);
  if (noise_coeffs.size() == 1) {
    std::fill(out.begin(), out.end(), noise_coeffs[0] * inv);
    return;
  }
  kernels::polyval(out, noise_coeffs, standardized(regressor, shift, scale));
  for (double& v : out) v *= inv;
}

SliceFit fit_slice(std::span<const double> regressor, std::span<const double> normalized_noise,
                   std::span<const double> target, std::size_t degree) {
  const std::size_t n = regressor.size();
  if (n == 0 || normalized_noise.size() != n || target.size() != n) {
    throw DimensionError("regression: regressor, noise and target lengths differ");
  }
  if (degree > kernels::kMaxDegree) throw CapabilityError("regression: degree above 5 is not supported");

  SliceFit fit;
  const double nd = static_cast<double>(n);
  fit.shift = kernels::sum(regressor) / nd;
  const double var = std::max(0.0, kernels::dot(regressor, regressor) / nd - fit.shift * fit.shift);
  const double sd = std::sqrt(var);
  // A flat regressor carries no information; use the constant basis.
  if (!(sd > 1e-12 * std::max(1.0, std::abs(fit.shift)))) degree = 0;
  fit.scale = degree == 0 ? 1.0 : 1.0 / sd;

  const auto u = standardized(regressor, fit.shift, fit.scale);
  const bool with_noise = kernels::dot(normalized_noise, normalized_noise) > 1e-12 * nd;

  for (std::size_t deg = degree;; --deg) {
    const kernels::JointMoments m = kernels::joint_moments(u, normalized_noise, target, deg);
    const std::size_t p = deg + 1;
    const std::size_t dim = with_noise ? 2 * p : p;
    Eigen::MatrixXd gram(dim, dim);
    Eigen::VectorXd rhs(dim);
    for (std::size_t i = 0; i < p; ++i) {
      rhs(i) = m.t0[i];
      for (std::size_t j = 0; j < p; ++j) gram(i, j) = m.s0[i + j];
      if (!with_noise) continue;
      rhs(p + i) = m.t1[i];
      for (std::size_t j = 0; j < p; ++j) {
        gram(i, p + j) = m.s1[i + j];
        gram(p + j, i) = m.s1[i + j];
        gram(p + i, p + j) = m.s2[i + j];
      }
    }
    Eigen::VectorXd coeffs;
    if (solve_normal(gram, rhs, coeffs)) {
      fit.mean_coeffs.assign(coeffs.data(), coeffs.data() + p);
      if (with_noise) fit.noise_coeffs.assign(coeffs.data() + p, coeffs.data() + 2 * p);
      return fit;
    }
    if (deg == 0) break;
    fit.fallback = true;
  }
  // Even the constant basis is singular: plain ensemble mean.
  fit.fallback = true;
  fit.mean_coeffs = {kernels::sum(target) / nd};
  fit.noise_coeffs.clear();
  return fit;
}

}  // namespace mkv
