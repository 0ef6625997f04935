#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "mkv/error.hpp"

namespace mkvfb {
namespace {

using nlohmann::ordered_json;

const std::map<std::string, std::set<std::string>>& check_params() {
  static const std::map<std::string, std::set<std::string>> params{
      {"A1-i", {"l", "n_samples", "cloud_size"}},
      {"A1-ii", {"K", "kappa", "n_pairs", "cloud_size"}},
      {"A2-i", {"kappa1", "kappa2", "n_samples"}},
      {"A2-ii", {"l1", "l2", "n_samples", "cloud_size"}},
      {"A2-iii", {"kappa1", "kappa2", "l1", "l2", "eps1", "eps2", "K"}},
      {"A2-iv", {}},
      {"A3-i", {"kappa", "l", "n_samples"}},
      {"A3-ii", {"kappa", "l", "n_samples"}},
      {"A3-iii", {"kappa", "l", "n_samples"}},
      {"T31-fwd", {"eta", "zeta", "iota", "l"}},
      {"T31-alt", {"eta", "zeta", "iota", "l"}},
      {"T32-fwd", {"eta", "zeta", "iota", "l"}},
      {"T32-alt", {"eta", "zeta", "iota", "l"}},
  };
  return params;
}

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const {
    const int line = at.IsDefined() && at.Mark().line >= 0 ? at.Mark().line + 1 : 1;
    throw ConfigError(source_ + ":" + std::to_string(line) + ": " + msg);
  }

  void expect_map(const YAML::Node& node, const std::string& path, const std::set<std::string>& allowed) const {
    if (!node.IsMap()) fail(node, path + " must be a mapping");
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) {
        fail(kv.first, "unknown key '" + key + "'" + (path.empty() ? "" : " in " + path));
      }
    }
  }

  double number(const YAML::Node& node, const std::string& path) const {
    if (!node.IsScalar()) fail(node, path + ": expected a number");
    double v = 0.0;
    try {
      v = node.as<double>();
    } catch (const YAML::Exception&) {
      fail(node, path + ": expected a number, got '" + node.Scalar() + "'");
    }
    if (!std::isfinite(v)) fail(node, path + " must be finite");
    return v;
  }

  double positive(const YAML::Node& node, const std::string& path) const {
    const double v = number(node, path);
    if (!(v > 0.0)) fail(node, path + " must be positive");
    return v;
  }

  double nonnegative(const YAML::Node& node, const std::string& path) const {
    const double v = number(node, path);
    if (v < 0.0) fail(node, path + " must be nonnegative");
    return v;
  }

  std::uint64_t count(const YAML::Node& node, const std::string& path, std::uint64_t min) const {
    if (!node.IsScalar() || !std::regex_match(node.Scalar(), std::regex("[0-9]+"))) {
      fail(node, path + ": expected a nonnegative integer");
    }
    std::uint64_t v = 0;
    try {
      v = node.as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      fail(node, path + ": integer out of range");
    }
    if (v < min) fail(node, path + " must be at least " + std::to_string(min));
    return v;
  }

  std::string text(const YAML::Node& node, const std::string& path, const std::set<std::string>& choices) const {
    if (!node.IsScalar()) fail(node, path + ": expected a string");
    const auto s = node.Scalar();
    if (!choices.empty() && !choices.count(s)) {
      std::string list;
      for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
      fail(node, path + ": '" + s + "' is not one of " + list);
    }
    return s;
  }

  bool flag(const YAML::Node& node, const std::string& path) const {
    try {
      return node.as<bool>();
    } catch (const YAML::Exception&) {
      fail(node, path + ": expected true or false");
    }
  }

  // A constant or a list of [start_time, value] pairs.
  mkv::TimeFunction time_function(const YAML::Node& node, const std::string& path) const {
    if (node.IsScalar()) return number(node, path);
    if (!node.IsSequence() || node.size() == 0) fail(node, path + ": expected a number or [[t, value], ...]");
    std::vector<std::pair<double, double>> pts;
    for (const auto& item : node) {
      if (!item.IsSequence() || item.size() != 2) fail(item, path + ": each breakpoint must be [t, value]");
      pts.emplace_back(number(item[0], path), number(item[1], path));
    }
    try {
      return mkv::TimeFunction::piecewise(std::move(pts));
    } catch (const mkv::Error& e) {
      fail(node, path + ": " + e.what());
    }
  }

 private:
  std::string source_;
};

ordered_json to_json(const YAML::Node& node) {
  if (node.IsMap()) {
    ordered_json obj = ordered_json::object();
    for (const auto& kv : node) obj[kv.first.as<std::string>()] = to_json(kv.second);
    return obj;
  }
  if (node.IsSequence()) {
    ordered_json arr = ordered_json::array();
    for (const auto& item : node) arr.push_back(to_json(item));
    return arr;
  }
  if (!node.IsScalar()) return nullptr;
  const std::string s = node.Scalar();
  if (node.Tag() == "!") return s;  // quoted
  static const std::regex integer("[-+]?[0-9]+");
  if (std::regex_match(s, integer)) {
    try {
      return node.as<long long>();
    } catch (const YAML::Exception&) {
    }
  }
  if (s == "true" || s == "false") return s == "true";
  if (s == "null" || s == "~") return nullptr;
  try {
    return node.as<double>();
  } catch (const YAML::Exception&) {
    return s;
  }
}

void parse_model(const Reader& rd, const YAML::Node& node, ModelConfig& out) {
  rd.expect_map(node, "model",
                {"kind", "problem", "b1", "b1_bar", "b2", "q", "q_bar", "p", "r", "sigma", "kappa", "coupling"});
  if (!node["kind"]) rd.fail(node, "model.kind is required");
  const auto kind = rd.text(node["kind"], "model.kind", {"lq", "synthetic_monotone"});
  out.kind = kind == "lq" ? ModelKind::lq : ModelKind::synthetic_monotone;
  const std::set<std::string> lq_only{"problem", "b1", "b1_bar", "b2", "q", "q_bar", "p", "r"};
  const std::set<std::string> synthetic_only{"kappa", "coupling"};
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (out.kind == ModelKind::lq && synthetic_only.count(key)) {
      rd.fail(kv.first, "model." + key + " only applies to synthetic_monotone");
    }
    if (out.kind == ModelKind::synthetic_monotone && lq_only.count(key)) {
      rd.fail(kv.first, "model." + key + " only applies to lq");
    }
  }
  if (out.kind == ModelKind::lq) {
    if (node["problem"]) {
      out.problem = rd.text(node["problem"], "model.problem", {"mfc", "mfg"}) == "mfc" ? mkv::Problem::mfc
                                                                                       : mkv::Problem::mfg;
    }
    auto fn = [&](const char* key, mkv::TimeFunction& target) {
      if (node[key]) target = rd.time_function(node[key], std::string("model.") + key);
    };
    fn("b1", out.lq.b1);
    fn("b1_bar", out.lq.b1_bar);
    fn("b2", out.lq.b2);
    fn("q", out.lq.q);
    fn("q_bar", out.lq.q_bar);
    fn("p", out.lq.p);
    if (node["r"]) out.lq.r = rd.positive(node["r"], "model.r");
    if (node["sigma"]) out.lq.sigma = rd.nonnegative(node["sigma"], "model.sigma");
    out.sigma = out.lq.sigma;
  } else {
    if (node["kappa"]) out.kappa = rd.number(node["kappa"], "model.kappa");
    if (node["coupling"]) out.coupling = rd.number(node["coupling"], "model.coupling");
    if (node["sigma"]) out.sigma = rd.positive(node["sigma"], "model.sigma");
  }
}

mkv::XiSpec parse_xi(const Reader& rd, const YAML::Node& node) {
  rd.expect_map(node, "xi", {"kind", "value", "mean", "variance", "lo", "hi"});
  if (!node["kind"]) rd.fail(node, "xi.kind is required");
  const auto kind = rd.text(node["kind"], "xi.kind", {"deterministic", "gaussian", "uniform"});
  const std::map<std::string, std::set<std::string>> fields{
      {"deterministic", {"value"}}, {"gaussian", {"mean", "variance"}}, {"uniform", {"lo", "hi"}}};
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (key != "kind" && !fields.at(kind).count(key)) rd.fail(kv.first, "xi." + key + " does not apply to " + kind);
  }
  auto get = [&](const char* key, double fallback) {
    return node[key] ? rd.number(node[key], std::string("xi.") + key) : fallback;
  };
  mkv::XiSpec xi;
  if (kind == "deterministic") {
    xi = mkv::DeterministicXi{get("value", 0.0)};
  } else if (kind == "gaussian") {
    xi = mkv::GaussianXi{get("mean", 0.0), get("variance", 1.0)};
  } else {
    xi = mkv::UniformXi{get("lo", 0.0), get("hi", 1.0)};
  }
  try {
    mkv::validate(xi);
  } catch (const mkv::Error& e) {
    rd.fail(node, std::string("xi: ") + e.what());
  }
  return xi;
}

void parse_grid(const Reader& rd, const YAML::Node& node, GridConfig& out) {
  rd.expect_map(node, "grid", {"horizon", "dt", "K"});
  if (node["horizon"]) out.horizon = rd.positive(node["horizon"], "grid.horizon");
  if (node["dt"]) out.dt = rd.positive(node["dt"], "grid.dt");
  if (node["K"]) out.K = rd.positive(node["K"], "grid.K");
  if (out.dt > out.horizon) rd.fail(node["dt"] ? node["dt"] : node, "grid.dt must not exceed grid.horizon");
}

void parse_solver(const Reader& rd, const YAML::Node& node, SolverSettings& out) {
  rd.expect_map(node, "solver",
                {"method", "n_particles", "picard_tol", "max_picard_iters", "inner_law_iters", "regression_degree",
                 "damping", "max_inner_solves", "kappa", "l"});
  if (node["method"]) out.method = rd.text(node["method"], "solver.method", {"picard", "continuation"});
  if (node["n_particles"]) out.n_particles = rd.count(node["n_particles"], "solver.n_particles", 2);
  if (node["picard_tol"]) out.picard_tol = rd.positive(node["picard_tol"], "solver.picard_tol");
  if (node["max_picard_iters"]) {
    out.max_picard_iters = rd.count(node["max_picard_iters"], "solver.max_picard_iters", 1);
  }
  if (node["inner_law_iters"]) out.inner_law_iters = rd.count(node["inner_law_iters"], "solver.inner_law_iters", 1);
  if (node["regression_degree"]) {
    out.regression_degree = rd.count(node["regression_degree"], "solver.regression_degree", 0);
  }
  if (node["damping"]) {
    out.damping = rd.nonnegative(node["damping"], "solver.damping");
    if (out.damping >= 1.0) rd.fail(node["damping"], "solver.damping must be below 1");
  }
  if (node["max_inner_solves"]) {
    out.max_inner_solves = rd.count(node["max_inner_solves"], "solver.max_inner_solves", 1);
  }
  if (node["kappa"]) out.kappa = rd.positive(node["kappa"], "solver.kappa");
  if (node["l"]) out.l = rd.nonnegative(node["l"], "solver.l");
}

std::vector<CheckRequest> parse_checks(const Reader& rd, const YAML::Node& node) {
  if (!node.IsSequence()) rd.fail(node, "checks must be a list");
  std::vector<CheckRequest> out;
  for (const auto& item : node) {
    CheckRequest req;
    req.line = item.Mark().line + 1;
    if (item.IsScalar()) {
      req.id = item.Scalar();
    } else if (item.IsMap()) {
      if (!item["id"]) rd.fail(item, "each check needs an id");
      req.id = rd.text(item["id"], "checks.id", {});
    } else {
      rd.fail(item, "each check is an id or a mapping with an id");
    }
    const auto known = check_params().find(req.id);
    if (known == check_params().end()) rd.fail(item, "unknown check id '" + req.id + "'");
    if (item.IsMap()) {
      for (const auto& kv : item) {
        const auto key = kv.first.as<std::string>();
        if (key == "id") continue;
        if (!known->second.count(key)) rd.fail(kv.first, "check " + req.id + " takes no parameter '" + key + "'");
        req.params[key] = rd.number(kv.second, "checks." + req.id + "." + key);
      }
    }
    out.push_back(std::move(req));
  }
  return out;
}

void parse_oracle(const Reader& rd, const YAML::Node& node, OracleConfig& out) {
  rd.expect_map(node, "oracle", {"enabled", "tolerance"});
  if (node["enabled"]) out.enabled = rd.flag(node["enabled"], "oracle.enabled");
  if (node["tolerance"]) out.tolerance = rd.nonnegative(node["tolerance"], "oracle.tolerance");
}

void parse_lambda0(const Reader& rd, const YAML::Node& node, Lambda0Config& out) {
  rd.expect_map(node, "lambda0", {"kappa", "sigma", "phi", "psi"});
  if (node["kappa"]) out.kappa = rd.positive(node["kappa"], "lambda0.kappa");
  if (node["sigma"]) out.sigma = rd.positive(node["sigma"], "lambda0.sigma");
  if (node["phi"]) out.phi = rd.time_function(node["phi"], "lambda0.phi");
  if (node["psi"]) out.psi = rd.time_function(node["psi"], "lambda0.psi");
}

}  // namespace

const std::vector<std::string>& known_check_ids() {
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> v;
    for (const auto& [id, _] : check_params()) v.push_back(id);
    return v;
  }();
  return ids;
}

RunConfig parse_config_text(const std::string& text, const std::string& source) {
  Reader rd(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  RunConfig cfg;
  if (!root.IsDefined() || root.IsNull()) throw ConfigError(source + ":1: empty configuration");
  rd.expect_map(root, "", {"seed", "model", "xi", "grid", "solver", "checks", "oracle", "lambda0", "output"});
  if (root["seed"]) cfg.seed = rd.count(root["seed"], "seed", 0);
  if (!root["model"]) rd.fail(root, "model section is required");
  parse_model(rd, root["model"], cfg.model);
  if (root["xi"]) cfg.xi = parse_xi(rd, root["xi"]);
  if (root["grid"]) parse_grid(rd, root["grid"], cfg.grid);
  if (root["solver"]) parse_solver(rd, root["solver"], cfg.solver);
  if (root["checks"] && !root["checks"].IsNull()) cfg.checks = parse_checks(rd, root["checks"]);
  if (root["oracle"]) parse_oracle(rd, root["oracle"], cfg.oracle);
  if (root["lambda0"]) parse_lambda0(rd, root["lambda0"], cfg.lambda0);
  if (root["output"]) {
    rd.expect_map(root["output"], "output", {"dir"});
    if (root["output"]["dir"]) cfg.output.dir = rd.text(root["output"]["dir"], "output.dir", {});
  }
  if (cfg.model.kind == ModelKind::synthetic_monotone && !cfg.grid.K) {
    rd.fail(root["grid"] ? root["grid"] : root, "grid.K is required for the synthetic_monotone model");
  }
  cfg.echo = to_json(root);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ":0: cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

}  // namespace mkvfb
