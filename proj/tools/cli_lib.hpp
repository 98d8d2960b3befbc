#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

// Command-line driver logic, separated from main() so the test suite can run
// every subcommand in-process and inspect the reports it produces.

namespace finhol::cli {

using json = nlohmann::ordered_json;

// Values supplied as command-line flags; each one overrides the matching
// config key when set.
struct Overrides {
  std::optional<std::uint64_t> seed;       // --seed      -> seed
  std::optional<double> tol_ode;           // --tol-ode   -> tolerances.ode_abs / ode_rel
  std::optional<double> tol_rank;          // --tol-rank  -> tolerances.rank_rel
  std::optional<int> depth_cap;            // --depth-cap -> depth_cap
  std::optional<std::string> out;          // --out       -> output.report
};

struct RunOutcome {
  json report;
  // 0 success, 1 validation/geometry failure, 2 config error, 3 numerical
  // failure (matches the error taxonomy in errors.hpp)
  int exit_code = 0;
};

// Executes one subcommand ("classify", "transport", "holonomy", "validate")
// against an already-parsed config object (pass an empty object for
// defaults).  Never throws: failures are folded into the report's "error"
// section and the exit code.
RunOutcome run_command(const std::string& command, const json& config, const Overrides& overrides);

// Reads and parses a JSON config file; throws ConfigError on I/O or syntax
// problems.
json load_config_file(const std::string& path);

// The report with its volatile timing section removed.  Two runs with the
// same config and seed agree byte-for-byte on dump() of this view.
json stable_view(json report);

// Where the report should be written ("" means stdout), as resolved from the
// config echo inside the report.
std::string report_destination(const json& report);

// Full argv-level entry point used by main().
int cli_main(int argc, char** argv);

}  // namespace finhol::cli
