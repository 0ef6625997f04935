#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "mkv/paths.hpp"
#include "mkv/time_grid.hpp"

namespace mkv {

// Domain tags keep streams for different purposes independent under one seed.
enum class StreamTag : std::uint64_t {
  brownian = 1,
  initial = 2,
  cloud = 3,
  perturbation = 4,
};

// Independent generator for (seed, index, tag); index is usually a particle.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t index, StreamTag tag);

// Brownian increments for n_particles paths, stored time-major. Particle j's
// increments depend only on (seed, j, grid), not on the particle count.
class BrownianDriver {
 public:
  BrownianDriver(std::uint64_t seed, std::size_t n_particles, const TimeGrid& grid);
  // Driver with all increments zero (deterministic dynamics).
  static BrownianDriver zero(std::size_t n_particles, const TimeGrid& grid);

  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t n_particles() const noexcept { return increments_.n_particles(); }
  std::size_t n_steps() const noexcept { return increments_.n_times(); }
  const TimeGrid& grid() const noexcept { return grid_; }

  std::span<const double> increments(std::size_t step) const { return increments_.slice(step); }
  double increment(std::size_t particle, std::size_t step) const { return increments_(particle, step); }
  const Paths& all_increments() const noexcept { return increments_; }

  // W at every grid point, W_0 = 0.
  Paths cumulative() const;

 private:
  BrownianDriver(std::uint64_t seed, Paths increments, const TimeGrid& grid);

  std::uint64_t seed_;
  Paths increments_;
  TimeGrid grid_;
};

struct DeterministicXi {
  double value = 0.0;
};
struct GaussianXi {
  double mean = 0.0;
  double variance = 1.0;
};
struct UniformXi {
  double lo = 0.0;
  double hi = 1.0;
};
using XiSpec = std::variant<DeterministicXi, GaussianXi, UniformXi>;

void validate(const XiSpec& xi);
double xi_mean(const XiSpec& xi);
double xi_variance(const XiSpec& xi);

// n initial states; deterministic specs give n copies.
std::vector<double> sample_initial(const XiSpec& xi, std::size_t n, std::uint64_t seed);

}  // namespace mkv
