#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mkv/coefficients.hpp"
#include "mkv/random.hpp"

namespace mkvfb {

// Parse or schema error; what() is "file:line: message".
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ModelKind { lq, synthetic_monotone };

struct ModelConfig {
  ModelKind kind = ModelKind::lq;
  mkv::Problem problem = mkv::Problem::mfg;
  mkv::LQModel lq;
  // synthetic_monotone: B = -kappa x + coupling (y + mean y), F = -kappa y + coupling (x + mean x)
  double kappa = 5.0;
  double coupling = 1.0;
  double sigma = 1.0;
};

struct GridConfig {
  double horizon = 10.0;
  double dt = 0.01;
  std::optional<double> K;  // defaults to r for LQ models
};

struct SolverSettings {
  std::string method = "picard";  // picard | continuation
  std::size_t n_particles = 1000;
  double picard_tol = 1e-4;
  std::size_t max_picard_iters = 50;
  std::size_t inner_law_iters = 3;
  std::size_t regression_degree = 1;
  double damping = 0.0;
  std::size_t max_inner_solves = 10000;
  std::optional<double> kappa;  // continuation constants
  std::optional<double> l;
};

struct CheckRequest {
  std::string id;
  std::map<std::string, double> params;
  int line = 0;
};

struct OracleConfig {
  bool enabled = true;
  double tolerance = 0.05;
};

struct Lambda0Config {
  double kappa = 1.0;
  double sigma = 1.0;
  mkv::TimeFunction phi;
  mkv::TimeFunction psi;
};

struct OutputConfig {
  std::optional<std::string> dir;  // --out takes precedence
};

struct RunConfig {
  std::uint64_t seed = 0;
  ModelConfig model;
  mkv::XiSpec xi = mkv::DeterministicXi{0.0};
  GridConfig grid;
  SolverSettings solver;
  std::vector<CheckRequest> checks;
  OracleConfig oracle;
  Lambda0Config lambda0;
  OutputConfig output;
  nlohmann::ordered_json echo;  // the parsed document, for the manifest
};

RunConfig parse_config_text(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

// Check ids understood by the check command.
const std::vector<std::string>& known_check_ids();

}  // namespace mkvfb
