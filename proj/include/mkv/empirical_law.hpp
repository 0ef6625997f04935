#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace mkv {

// Equal-weight atom cloud in dimension 1 or 2. Columns are shared, so taking
// a marginal is O(1); moments are computed once at construction. Each law
// carries a process-unique id that coefficient closures use as a cache key.
class EmpiricalLaw {
 public:
  explicit EmpiricalLaw(std::vector<double> points);
  EmpiricalLaw(std::vector<double> first, std::vector<double> second);
  EmpiricalLaw(std::span<const double> first, std::span<const double> second);
  static EmpiricalLaw from_points(std::span<const std::array<double, 2>> points);

  std::size_t dim() const noexcept { return cols_[1] ? 2 : 1; }
  std::size_t size() const noexcept { return cols_[0]->size(); }
  std::uint64_t id() const noexcept { return id_; }

  std::span<const double> column(std::size_t k) const;
  double mean(std::size_t k = 0) const { return stats_.at(k).mean; }
  double second_moment(std::size_t k = 0) const { return stats_.at(k).second_moment; }
  double variance(std::size_t k = 0) const;
  // Population covariance of the two columns (d = 2 only).
  double covariance() const;

  EmpiricalLaw marginal(std::size_t k) const;

 private:
  struct ColumnStats {
    double mean = 0.0;
    double second_moment = 0.0;
  };
  EmpiricalLaw() = default;
  void finish();

  std::array<std::shared_ptr<const std::vector<double>>, 2> cols_{};
  std::array<ColumnStats, 2> stats_{};
  double cross_moment_ = 0.0;
  std::uint64_t id_ = 0;
};

}  // namespace mkv
