#include "mkv/empirical_law.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "mkv/error.hpp"
#include "mkv/kernels.hpp"

namespace mkv {
namespace {

// Fresh ids are multiples of 4 so a marginal can reuse its parent's id + k + 1.
std::uint64_t next_law_id() {
  static std::atomic<std::uint64_t> counter{1};
  return 4 * counter.fetch_add(1, std::memory_order_relaxed);
}

void require_finite(const std::vector<double>& v) {
  if (!std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); })) {
    throw ValidationError("empirical law: non-finite coordinate");
  }
}

}  // namespace

EmpiricalLaw::EmpiricalLaw(std::vector<double> points) {
  cols_[0] = std::make_shared<const std::vector<double>>(std::move(points));
  finish();
}

EmpiricalLaw::EmpiricalLaw(std::vector<double> first, std::vector<double> second) {
  if (first.size() != second.size()) throw DimensionError("empirical law: column lengths differ");
  cols_[0] = std::make_shared<const std::vector<double>>(std::move(first));
  cols_[1] = std::make_shared<const std::vector<double>>(std::move(second));
  finish();
}

EmpiricalLaw::EmpiricalLaw(std::span<const double> first, std::span<const double> second)
    : EmpiricalLaw(std::vector<double>(first.begin(), first.end()),
                   std::vector<double>(second.begin(), second.end())) {}

EmpiricalLaw EmpiricalLaw::from_points(std::span<const std::array<double, 2>> points) {
  std::vector<double> a(points.size()), b(points.size());
  for (std::size_t j = 0; j < points.size(); ++j) {
    a[j] = points[j][0];
    b[j] = points[j][1];
  }
  return EmpiricalLaw(std::move(a), std::move(b));
}

void EmpiricalLaw::finish() {
  if (cols_[0]->empty()) throw ValidationError("empirical law: needs at least one atom");
  const double n = static_cast<double>(cols_[0]->size());
  for (std::size_t k = 0; k < 2; ++k) {
    if (!cols_[k]) continue;
    require_finite(*cols_[k]);
    stats_[k].mean = kernels::sum(*cols_[k]) / n;
    stats_[k].second_moment = kernels::dot(*cols_[k], *cols_[k]) / n;
  }
  if (cols_[1]) cross_moment_ = kernels::dot(*cols_[0], *cols_[1]) / n;
  id_ = next_law_id();
}

std::span<const double> EmpiricalLaw::column(std::size_t k) const {
  if (k >= dim()) throw DimensionError("empirical law: column index out of range");
  return *cols_[k];
}

double EmpiricalLaw::variance(std::size_t k) const {
  const double m = mean(k);
  return std::max(0.0, second_moment(k) - m * m);
}

double EmpiricalLaw::covariance() const {
  if (dim() != 2) throw DimensionError("empirical law: covariance needs d = 2");
  return cross_moment_ - stats_[0].mean * stats_[1].mean;
}

EmpiricalLaw EmpiricalLaw::marginal(std::size_t k) const {
  if (k >= dim()) throw DimensionError("empirical law: marginal index out of range");
  if (dim() == 1) return *this;
  EmpiricalLaw out;
  out.cols_[0] = cols_[k];
  out.stats_[0] = stats_[k];
  out.id_ = id_ + k + 1;
  return out;
}

}  // namespace mkv
