#include "mkv/paths.hpp"

#include <algorithm>
#include <cmath>

namespace mkv {

Paths::Paths(std::size_t n_particles, std::size_t n_times, double fill)
    : n_particles_(n_particles), n_times_(n_times), data_(n_particles * n_times, fill) {}

std::vector<double> Paths::particle_path(std::size_t particle) const {
  std::vector<double> out(n_times_);
  for (std::size_t i = 0; i < n_times_; ++i) out[i] = (*this)(particle, i);
  return out;
}

bool Paths::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Paths Paths::constant_in_time(std::span<const double> values, std::size_t n_times) {
  Paths p(values.size(), n_times);
  for (std::size_t i = 0; i < n_times; ++i) std::copy(values.begin(), values.end(), p.slice(i).begin());
  return p;
}

ParticleEnsemble::ParticleEnsemble(TimeGrid g, std::size_t n_particles)
    : grid(g),
      x(n_particles, g.n_points()),
      y(n_particles, g.n_points()),
      z(n_particles, g.n_steps()) {}

}  // namespace mkv
