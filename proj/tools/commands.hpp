#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include <json.hpp>

#include "config.hpp"
#include "mkv/solvers.hpp"
#include "mkv/verification.hpp"

namespace mkvfb {

inline constexpr const char* kArtifactVersion = "0.1.0";

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotConverged = 2;
inline constexpr int kExitCheckFailed = 3;
inline constexpr int kExitGapTooLarge = 4;

struct CommandOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;  // falls back to output.dir, then "."
};

int cmd_solve(const CommandOptions& opts, std::ostream& log);
int cmd_check(const CommandOptions& opts, std::ostream& log);
int cmd_oracle_compare(const CommandOptions& opts, std::ostream& log);
int cmd_lambda0(const CommandOptions& opts, std::ostream& log);

// Full command line: mkvfb <solve|check|oracle-compare|lambda0> --config PATH [--seed N] [--out DIR]
int run_cli(int argc, char** argv);

nlohmann::ordered_json to_json(const mkv::ConditionReport& report);
nlohmann::ordered_json to_json(const mkv::SolveReport& report);

std::string sha256_hex(const std::string& bytes);

// Builders shared by the commands.
mkv::TimeGrid make_grid(const RunConfig& cfg);
mkv::SolverConfig make_solver_config(const RunConfig& cfg, const mkv::TimeGrid& grid);
mkv::CoefficientSet make_coefficients(const RunConfig& cfg, const mkv::TimeGrid& grid);
std::vector<mkv::ConditionReport> run_checks(const RunConfig& cfg);

}  // namespace mkvfb
