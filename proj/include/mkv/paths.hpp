#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mkv/time_grid.hpp"

namespace mkv {

// Time-major particle array: slice(i) holds the values of every particle at
// time index i contiguously, which is what the per-slice kernels consume.
class Paths {
 public:
  Paths() = default;
  Paths(std::size_t n_particles, std::size_t n_times, double fill = 0.0);

  std::size_t n_particles() const noexcept { return n_particles_; }
  std::size_t n_times() const noexcept { return n_times_; }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> slice(std::size_t i) noexcept {
    return {data_.data() + i * n_particles_, n_particles_};
  }
  std::span<const double> slice(std::size_t i) const noexcept {
    return {data_.data() + i * n_particles_, n_particles_};
  }

  double& operator()(std::size_t particle, std::size_t time) noexcept {
    return data_[time * n_particles_ + particle];
  }
  double operator()(std::size_t particle, std::size_t time) const noexcept {
    return data_[time * n_particles_ + particle];
  }

  std::span<const double> values() const noexcept { return data_; }
  std::vector<double> particle_path(std::size_t particle) const;
  bool all_finite() const noexcept;

  // Every slice set to the same per-particle values.
  static Paths constant_in_time(std::span<const double> values, std::size_t n_times);

  friend bool operator==(const Paths&, const Paths&) = default;

 private:
  std::size_t n_particles_ = 0;
  std::size_t n_times_ = 0;
  std::vector<double> data_;
};

// Simulated (X, Y, Z) on a grid: x and y have n_steps+1 slices, z has n_steps.
struct ParticleEnsemble {
  TimeGrid grid;
  Paths x;
  Paths y;
  Paths z;

  ParticleEnsemble(TimeGrid g, std::size_t n_particles);
  std::size_t n_particles() const noexcept { return x.n_particles(); }
};

}  // namespace mkv
