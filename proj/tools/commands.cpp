#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "mkv/error.hpp"
#include "mkv/kernels.hpp"
#include "mkv/lq_oracle.hpp"
#include "mkv/norms.hpp"

namespace mkvfb {
namespace {

using nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double slice_mean(std::span<const double> s) { return mkv::kernels::sum(s) / static_cast<double>(s.size()); }

double slice_variance(std::span<const double> s) {
  const double m = slice_mean(s);
  double acc = 0.0;
  for (double v : s) acc += (v - m) * (v - m);
  return acc / static_cast<double>(s.size());
}

std::string solution_csv(const mkv::ParticleEnsemble& e) {
  std::ostringstream out;
  out << "t,mean_x,var_x,mean_y,var_y,mean_z\n";
  const std::size_t n = e.grid.n_steps();
  for (std::size_t i = 0; i <= n; ++i) {
    out << fmt(e.grid.t(i)) << ',' << fmt(slice_mean(e.x.slice(i))) << ',' << fmt(slice_variance(e.x.slice(i)))
        << ',' << fmt(slice_mean(e.y.slice(i))) << ',' << fmt(slice_variance(e.y.slice(i))) << ',';
    // z lives on steps; the terminal row has none
    if (i < n) out << fmt(slice_mean(e.z.slice(i)));
    out << '\n';
  }
  return out.str();
}

// Collects output files and writes them together with the manifest.
class Artifacts {
 public:
  Artifacts(const CommandOptions& opts, const RunConfig& cfg, std::string command)
      : dir_(opts.out_dir ? *opts.out_dir : cfg.output.dir.value_or(".")), cfg_(cfg), command_(std::move(command)), start_(Clock::now()) {}

  void add(const std::string& name, std::string content) { files_[name] = std::move(content); }
  void add_timing(const std::string& key, ordered_json value) { timing_[key] = std::move(value); }

  void write() {
    std::filesystem::create_directories(dir_);
    ordered_json checksums = ordered_json::object();
    for (const auto& [name, content] : files_) {
      write_file(name, content);
      checksums[name] = sha256_hex(content);
    }
    ordered_json manifest;
    manifest["version"] = kArtifactVersion;
    manifest["command"] = command_;
    manifest["seed"] = cfg_.seed;
    manifest["config"] = cfg_.echo;
    manifest["wall_clock_seconds"] = std::chrono::duration<double>(Clock::now() - start_).count();
    for (auto& [k, v] : timing_.items()) manifest[k] = v;
    manifest["files"] = checksums;
    write_file("manifest.json", manifest.dump(2) + "\n");
  }

 private:
  void write_file(const std::string& name, const std::string& content) const {
    const auto path = dir_ / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw mkv::Error("cannot write " + path.string());
    out << content;
  }

  std::filesystem::path dir_;
  const RunConfig& cfg_;
  std::string command_;
  Clock::time_point start_;
  std::map<std::string, std::string> files_;
  ordered_json timing_ = ordered_json::object();
};

RunConfig load(const CommandOptions& opts) {
  RunConfig cfg = load_config(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  return cfg;
}

const mkv::LQModel& require_lq(const RunConfig& cfg, const std::string& what) {
  if (cfg.model.kind != ModelKind::lq) throw mkv::ValidationError(what + " needs an lq model");
  return cfg.model.lq;
}

ordered_json iterate_wall_times(const mkv::SolveReport& rep) {
  ordered_json arr = ordered_json::array();
  for (const auto& it : rep.iterates) arr.push_back(it.wall_time);
  return arr;
}

class Params {
 public:
  explicit Params(const CheckRequest& req) : req_(req) {}
  double get(const std::string& key, std::optional<double> fallback) const {
    if (auto it = req_.params.find(key); it != req_.params.end()) return it->second;
    if (!fallback) {
      throw mkv::ValidationError("check " + req_.id + " (line " + std::to_string(req_.line) +
                                 ") needs parameter '" + key + "'");
    }
    return *fallback;
  }
  std::size_t count(const std::string& key, std::size_t fallback) const {
    const double v = get(key, static_cast<double>(fallback));
    if (v < 1.0 || v != std::floor(v)) throw mkv::ValidationError("check " + req_.id + ": " + key + " must be a positive integer");
    return static_cast<std::size_t>(v);
  }

 private:
  const CheckRequest& req_;
};

mkv::ConditionReport run_one(const RunConfig& cfg, const CheckRequest& req, const mkv::TimeGrid& grid) {
  const Params p(req);
  const bool lq = cfg.model.kind == ModelKind::lq;
  const bool synthetic = !lq;
  std::optional<mkv::MonotoneConstants> mono;
  if (lq) mono = mkv::lq_monotone_constants(cfg.model.lq, cfg.model.problem, grid);
  auto lq_or = [&](std::optional<double> v) { return lq ? v : std::nullopt; };
  auto syn_or = [&](double v) { return synthetic ? std::optional<double>(v) : std::nullopt; };
  const double kappa_s = cfg.model.kappa, c = cfg.model.coupling;
  const auto& id = req.id;

  if (id.rfind("T3", 0) == 0) {
    const auto variant = id.ends_with("fwd") ? mkv::TheoremVariant::primary : mkv::TheoremVariant::alternate;
    auto in = mkv::condition_inputs(require_lq(cfg, "check " + id), grid, variant);
    in.convexity.eta = p.get("eta", in.convexity.eta);
    in.convexity.zeta = p.get("zeta", in.convexity.zeta);
    in.convexity.iota = p.get("iota", in.convexity.iota);
    in.convexity.l = p.get("l", in.convexity.l);
    return id.rfind("T31", 0) == 0 ? mkv::check_theorem31_conditions(in, grid, variant).report
                                   : mkv::check_theorem32_conditions(in, grid, variant).report;
  }
  if (id.rfind("A3", 0) == 0) {
    const auto& m = require_lq(cfg, "check " + id);
    const double kappa = p.get("kappa", -m.b1.max_on(grid));
    const double l = p.get("l", m.b1_bar.max_abs_on(grid));
    const auto reps = mkv::check_assumption3(mkv::lq_control_model(m), kappa, l, grid, p.count("n_samples", 500),
                                             cfg.seed);
    for (const auto& r : reps) {
      if (r.condition_id == id) return r;
    }
    throw mkv::Error("check " + id + " produced no report");
  }
  const auto coeffs = make_coefficients(cfg, grid);
  if (id == "A1-i") {
    return mkv::check_assumption1_lipschitz_mc(coeffs, p.get("l", lq_or(mono ? std::optional(mono->l) : std::nullopt)),
                                               p.count("n_samples", 500), p.count("cloud_size", 64), cfg.seed);
  }
  if (id == "A1-ii") {
    return mkv::check_assumption1_mc(coeffs, p.get("K", grid.discount_weight()),
                                     p.get("kappa", lq_or(mono ? std::optional(mono->kappa) : std::nullopt)),
                                     p.count("n_pairs", 200), p.count("cloud_size", 256), cfg.seed);
  }
  if (id == "A2-i") {
    return mkv::check_assumption2_monotone_mc(coeffs, p.get("kappa1", syn_or(kappa_s)),
                                              p.get("kappa2", syn_or(kappa_s)), p.count("n_samples", 500), cfg.seed);
  }
  if (id == "A2-ii") {
    return mkv::check_assumption2_lipschitz_mc(coeffs, p.get("l1", syn_or(c)), p.get("l2", syn_or(c)),
                                               p.count("n_samples", 500), p.count("cloud_size", 64), cfg.seed);
  }
  if (id == "A2-iii") {
    return mkv::check_assumption2_constants(p.get("kappa1", syn_or(kappa_s)), p.get("kappa2", syn_or(kappa_s)),
                                            p.get("l1", syn_or(c)), p.get("l2", syn_or(c)), p.get("eps1", 1.0),
                                            p.get("eps2", 1.0), p.get("K", grid.discount_weight()))
        .report;
  }
  if (id == "A2-iv") return mkv::check_assumption2_integrability(coeffs, grid);
  throw mkv::ValidationError("unknown check id '" + id + "'");
}

int fail(std::ostream& log, const std::string& msg) {
  log << "error: " << msg << '\n';
  return kExitError;
}

template <class Body>
int guarded(std::ostream& log, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    return fail(log, e.what());
  } catch (const mkv::Error& e) {
    return fail(log, e.what());
  } catch (const std::exception& e) {
    return fail(log, e.what());
  }
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw mkv::Error("sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

ordered_json to_json(const mkv::ConditionReport& r) {
  ordered_json j;
  j["condition_id"] = r.condition_id;
  j["holds"] = r.holds;
  j["margin"] = r.margin;
  j["method"] = mkv::to_string(r.method);
  j["samples_used"] = r.samples_used;
  if (r.std_error) j["std_error"] = *r.std_error;
  return j;
}

ordered_json to_json(const mkv::SolveReport& r) {
  ordered_json j;
  j["method"] = r.method;
  j["converged"] = r.converged;
  j["iterations"] = r.iterates.size();
  j["contraction_ratio_estimate"] = r.contraction_ratio_estimate;  // NaN serializes as null
  j["truncation_T"] = r.truncation_T;
  j["dt"] = r.dt;
  j["n_particles"] = r.n_particles;
  j["regression_fallbacks"] = r.regression_fallbacks;
  j["inner_solves"] = r.inner_solves;
  ordered_json its = ordered_json::array();
  for (const auto& it : r.iterates) {
    its.push_back({{"iter", it.iter}, {"delta_norm", it.delta_norm}, {"y_delta_norm", it.y_delta_norm}});
  }
  j["iterates"] = its;
  return j;
}

mkv::TimeGrid make_grid(const RunConfig& cfg) {
  const double K = cfg.grid.K ? *cfg.grid.K : cfg.model.lq.r;
  return mkv::TimeGrid(cfg.grid.horizon, cfg.grid.dt, K);
}

mkv::SolverConfig make_solver_config(const RunConfig& cfg, const mkv::TimeGrid& grid) {
  mkv::SolverConfig s(grid);
  const auto& in = cfg.solver;
  s.n_particles = in.n_particles;
  s.picard_tol = in.picard_tol;
  s.max_picard_iters = in.max_picard_iters;
  s.inner_law_iters = in.inner_law_iters;
  s.regression_degree = in.regression_degree;
  s.damping = in.damping;
  s.max_inner_solves = in.max_inner_solves;
  mkv::validate(s);
  return s;
}

mkv::CoefficientSet make_coefficients(const RunConfig& cfg, const mkv::TimeGrid& grid) {
  if (cfg.model.kind == ModelKind::lq) {
    mkv::validate(cfg.model.lq, grid);
    return mkv::lq_fbsde_coefficients(cfg.model.lq, cfg.model.problem);
  }
  const double k = cfg.model.kappa, c = cfg.model.coupling;
  mkv::CoefficientSet set;
  set.drift = [k, c](double, double x, double y, const mkv::EmpiricalLaw& m) { return -k * x + c * y + c * m.mean(1); };
  set.driver = [k, c](double, double x, double y, const mkv::EmpiricalLaw& m) { return -k * y + c * x + c * m.mean(0); };
  set.sigma = cfg.model.sigma;
  set.split = mkv::SplitConstants{k, k, std::abs(c), std::abs(c), 1.0, 1.0, grid.discount_weight()};
  return set;
}

std::vector<mkv::ConditionReport> run_checks(const RunConfig& cfg) {
  const auto grid = make_grid(cfg);
  std::vector<mkv::ConditionReport> out;
  for (const auto& req : cfg.checks) out.push_back(run_one(cfg, req, grid));
  return out;
}

int cmd_solve(const CommandOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    const RunConfig cfg = load(opts);
    Artifacts art(opts, cfg, "solve");
    const auto grid = make_grid(cfg);
    const auto scfg = make_solver_config(cfg, grid);
    const auto coeffs = make_coefficients(cfg, grid);
    const mkv::BrownianDriver driver(cfg.seed, scfg.n_particles, grid);

    std::optional<mkv::SolveReport> rep;
    if (cfg.solver.method == "continuation") {
      std::optional<double> kappa = cfg.solver.kappa, l = cfg.solver.l;
      if (cfg.model.kind == ModelKind::lq) {
        const auto mono = mkv::lq_monotone_constants(cfg.model.lq, cfg.model.problem, grid);
        if (!kappa) kappa = mono.kappa;
        if (!l) l = mono.l;
      }
      if (!kappa || !l) throw mkv::ValidationError("continuation needs solver.kappa and solver.l for this model");
      try {
        rep = mkv::continuation_solve(coeffs, cfg.xi, scfg, driver, *kappa, *l);
      } catch (const mkv::BudgetError& e) {
        log << "continuation: " << e.what() << '\n';
        rep = e.partial();
      }
    } else {
      rep = mkv::picard_solve(coeffs, cfg.xi, scfg, driver);
    }
    art.add("solution.csv", solution_csv(rep->final));
    art.add("report.json", to_json(*rep).dump(2) + "\n");
    art.add_timing("iterate_wall_times", iterate_wall_times(*rep));
    art.write();
    log << rep->method << ": " << (rep->converged ? "converged" : "not converged") << " after "
        << rep->iterates.size() << " iterations\n";
    return rep->converged ? kExitOk : kExitNotConverged;
  });
}

int cmd_check(const CommandOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    const RunConfig cfg = load(opts);
    Artifacts art(opts, cfg, "check");
    const auto reports = run_checks(cfg);
    ordered_json arr = ordered_json::array();
    bool all = true;
    for (const auto& r : reports) {
      arr.push_back(to_json(r));
      all = all && r.holds;
      log << r.condition_id << ": " << (r.holds ? "holds" : "fails") << " (margin " << fmt(r.margin) << ")\n";
    }
    art.add("checks.json", arr.dump(2) + "\n");
    art.write();
    return all ? kExitOk : kExitCheckFailed;
  });
}

int cmd_oracle_compare(const CommandOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    const RunConfig cfg = load(opts);
    const auto& m = require_lq(cfg, "oracle-compare");
    if (!cfg.oracle.enabled) {
      throw mkv::ValidationError("oracle comparison is disabled in the config (oracle.enabled: false)");
    }
    Artifacts art(opts, cfg, "oracle-compare");
    const auto grid = make_grid(cfg);
    const auto scfg = make_solver_config(cfg, grid);
    const auto coeffs = make_coefficients(cfg, grid);
    const mkv::BrownianDriver driver(cfg.seed, scfg.n_particles, grid);

    const auto rep = mkv::picard_solve(coeffs, cfg.xi, scfg, driver);
    const auto ric = mkv::riccati_solve(m, grid, mkv::xi_mean(cfg.xi));
    const auto closed = mkv::lq_closed_loop(m, ric, cfg.xi, driver);

    // Oracle evaluated along the solver's own states.
    const std::size_t n_part = scfg.n_particles;
    mkv::Paths along(n_part, grid.n_points());
    for (std::size_t i = 0; i < grid.n_points(); ++i) {
      const auto x = rep.final.x.slice(i);
      auto o = along.slice(i);
      for (std::size_t j = 0; j < n_part; ++j) o[j] = ric.eta[i] * x[j] + ric.chi[i];
    }
    const double denom = mkv::weighted_l2_norm(along, grid);
    const double num = mkv::weighted_l2_distance(rep.final.y, along, grid);
    const double gap = denom > 0.0 ? num / denom : num;

    std::ostringstream csv;
    csv << "t,y_solver_mean,y_oracle_mean,abs_gap\n";
    for (std::size_t i = 0; i < grid.n_points(); ++i) {
      const double ys = slice_mean(rep.final.y.slice(i)), yo = slice_mean(closed.y.slice(i));
      csv << fmt(grid.t(i)) << ',' << fmt(ys) << ',' << fmt(yo) << ',' << fmt(std::abs(ys - yo)) << '\n';
    }
    std::ostringstream ric_csv;
    ric.write_csv(ric_csv);

    ordered_json summary;
    summary["converged"] = rep.converged;
    summary["relative_gap"] = gap;
    summary["tolerance"] = cfg.oracle.tolerance;
    summary["y0_solver_mean"] = slice_mean(rep.final.y.slice(0));
    summary["y0_oracle_mean"] = slice_mean(along.slice(0));
    summary["within_tolerance"] = gap <= cfg.oracle.tolerance;

    art.add("compare.csv", csv.str());
    art.add("riccati.csv", ric_csv.str());
    art.add("compare.json", summary.dump(2) + "\n");
    art.add("report.json", to_json(rep).dump(2) + "\n");
    art.add_timing("iterate_wall_times", iterate_wall_times(rep));
    art.write();
    log << "relative gap " << fmt(gap) << " (tolerance " << fmt(cfg.oracle.tolerance) << ")\n";
    return gap <= cfg.oracle.tolerance ? kExitOk : kExitGapTooLarge;
  });
}

int cmd_lambda0(const CommandOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    const RunConfig cfg = load(opts);
    Artifacts art(opts, cfg, "lambda0");
    const auto grid = make_grid(cfg);
    const auto scfg = make_solver_config(cfg, grid);
    const mkv::BrownianDriver driver(cfg.seed, scfg.n_particles, grid);
    const auto& l0 = cfg.lambda0;
    mkv::Paths phi(scfg.n_particles, grid.n_points()), psi(scfg.n_particles, grid.n_points());
    for (std::size_t i = 0; i < grid.n_points(); ++i) {
      std::fill(phi.slice(i).begin(), phi.slice(i).end(), l0.phi(grid.t(i)));
      std::fill(psi.slice(i).begin(), psi.slice(i).end(), l0.psi(grid.t(i)));
    }
    const auto sol = mkv::solve_lambda0(l0.kappa, l0.sigma, phi, psi, cfg.xi, scfg, driver);
    art.add("solution.csv", solution_csv(sol));
    art.write();
    log << "lambda0: solved " << grid.n_steps() << " steps for " << scfg.n_particles << " particles\n";
    return kExitOk;
  });
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Particle solver for McKean-Vlasov forward-backward SDEs"};
  app.require_subcommand(1);
  CommandOptions opts;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"solve", "run the fixed-point or continuation solver"},
           {"check", "evaluate sufficient conditions listed in the config"},
           {"oracle-compare", "compare the solver with the Riccati solution of an LQ model"},
           {"lambda0", "solve the decoupled linear base system"}}) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opts.config_path, "YAML configuration file")->required();
    sub->add_option("--seed", seed, "overrides the config seed");
    sub->add_option("--out", out_dir, "output directory (default: output.dir or .)");
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }
  for (auto* sub : subs) {
    if (sub->parsed() && sub->count("--seed") > 0) opts.seed = seed;
    if (sub->parsed() && sub->count("--out") > 0) opts.out_dir = out_dir;
  }
  if (subs[0]->parsed()) return cmd_solve(opts, std::cerr);
  if (subs[1]->parsed()) return cmd_check(opts, std::cerr);
  if (subs[2]->parsed()) return cmd_oracle_compare(opts, std::cerr);
  return cmd_lambda0(opts, std::cerr);
}

}  // namespace mkvfb
