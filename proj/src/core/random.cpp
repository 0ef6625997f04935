#include "mkv/random.hpp"

#include <algorithm>
#include <cmath>

#include "mkv/error.hpp"

namespace mkv {

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t index, StreamTag tag) {
  const auto tag_value = static_cast<std::uint64_t>(tag);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(tag_value)};
  return std::mt19937_64(seq);
}

BrownianDriver::BrownianDriver(std::uint64_t seed, std::size_t n_particles, const TimeGrid& grid)
    : seed_(seed), increments_(n_particles, grid.n_steps()), grid_(grid) {
  if (n_particles == 0) throw ValidationError("brownian driver: n_particles must be positive");
  const double scale = std::sqrt(grid.dt());
  const std::size_t n = grid.n_steps();
  for (std::size_t j = 0; j < n_particles; ++j) {
    auto gen = make_stream(seed, j, StreamTag::brownian);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) increments_(j, i) = scale * normal(gen);
  }
}

BrownianDriver::BrownianDriver(std::uint64_t seed, Paths increments, const TimeGrid& grid)
    : seed_(seed), increments_(std::move(increments)), grid_(grid) {}

BrownianDriver BrownianDriver::zero(std::size_t n_particles, const TimeGrid& grid) {
  if (n_particles == 0) throw ValidationError("brownian driver: n_particles must be positive");
  return BrownianDriver(0, Paths(n_particles, grid.n_steps()), grid);
}

Paths BrownianDriver::cumulative() const {
  const std::size_t n = n_particles();
  Paths w(n, n_steps() + 1);
  for (std::size_t i = 0; i < n_steps(); ++i) {
    auto prev = w.slice(i);
    auto next = w.slice(i + 1);
    auto dw = increments_.slice(i);
    for (std::size_t j = 0; j < n; ++j) next[j] = prev[j] + dw[j];
  }
  return w;
}

void validate(const XiSpec& xi) {
  if (const auto* g = std::get_if<GaussianXi>(&xi)) {
    if (!std::isfinite(g->mean) || !std::isfinite(g->variance) || g->variance < 0.0) {
      throw ValidationError("initial condition: Gaussian variance must be finite and nonnegative");
    }
  } else if (const auto* u = std::get_if<UniformXi>(&xi)) {
    if (!std::isfinite(u->lo) || !std::isfinite(u->hi) || u->lo > u->hi) {
      throw ValidationError("initial condition: uniform bounds need lo <= hi");
    }
  } else if (!std::isfinite(std::get<DeterministicXi>(xi).value)) {
    throw ValidationError("initial condition: value must be finite");
  }
}

double xi_mean(const XiSpec& xi) {
  if (const auto* g = std::get_if<GaussianXi>(&xi)) return g->mean;
  if (const auto* u = std::get_if<UniformXi>(&xi)) return 0.5 * (u->lo + u->hi);
  return std::get<DeterministicXi>(xi).value;
}

double xi_variance(const XiSpec& xi) {
  if (const auto* g = std::get_if<GaussianXi>(&xi)) return g->variance;
  if (const auto* u = std::get_if<UniformXi>(&xi)) return (u->hi - u->lo) * (u->hi - u->lo) / 12.0;
  return 0.0;
}

std::vector<double> sample_initial(const XiSpec& xi, std::size_t n, std::uint64_t seed) {
  validate(xi);
  if (n == 0) throw ValidationError("initial condition: sample count must be positive");
  std::vector<double> out(n);
  if (const auto* d = std::get_if<DeterministicXi>(&xi)) {
    std::fill(out.begin(), out.end(), d->value);
    return out;
  }
  for (std::size_t j = 0; j < n; ++j) {
    auto gen = make_stream(seed, j, StreamTag::initial);
    if (const auto* g = std::get_if<GaussianXi>(&xi)) {
      std::normal_distribution<double> normal(0.0, 1.0);
      out[j] = g->mean + std::sqrt(g->variance) * normal(gen);
    } else {
      const auto& u = std::get<UniformXi>(xi);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      out[j] = u.lo + (u.hi - u.lo) * unit(gen);
    }
  }
  return out;
}

}  // namespace mkv
