#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "restore/report.hpp"

namespace restore {

class RunnerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  BuildConfig build;
  SolverConfig solver;
  double cone_tol = 1e-5;
  double ac_tol = 5e-4;
  std::size_t threads = 0;  // batch workers; 0 picks the hardware concurrency
};

/// Keys: mode ("lex" | "weighted"), priorities {node: factor},
/// freeze_regulators, frozen_regulators [ids], w1, w2, curtailment
/// ("nominal" | "voltage_dependent"), tightening_stage, solver {epsilon,
/// gap, abs_gap, node_limit, time_limit, w_re, w_sw, w_op}, tolerances
/// {cone, ac}, threads. Unknown keys are rejected.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);  // empty path: defaults

struct FaultSpec {
  std::string id;
  std::string faulted_line;
  Horizon horizon;  // defaults to 8:00-22:00

  bool operator==(const FaultSpec&) const = default;
};

/// {"id", "faulted_line", "horizon": [start, end]}; id defaults to the line.
FaultSpec parse_fault(const nlohmann::json& doc);
FaultSpec load_fault_file(const std::string& path);

/// A JSON array of fault objects, or {"faults": [...]}.
std::vector<FaultSpec> parse_fault_list(const nlohmann::json& doc);
std::vector<FaultSpec> load_fault_list(const std::string& path);

std::string mode_name(StageMode m);
StageMode parse_mode(const std::string& s);

/// Every intermediate product of one pipeline run.
struct CaseRun {
  FaultSpec fault;
  RestorationCase rc;
  BuiltProgram built;
  Solution solution;
  VerificationReport verification;
  RestorationReport report;
};

CaseRun run_case(std::shared_ptr<const Grid> grid, const FaultSpec& fault, const RunConfig& config);

/// Optimal, with an incumbent, and verified.
bool report_ok(const RestorationReport& r);

RestorationReport run(const std::string& grid_path, const std::string& fault_path, const std::string& config_path);

struct BatchResult {
  std::vector<RestorationReport> reports;
  std::vector<std::string> warnings;
  std::string summary;  // CSV
};

/// One report per distinct fault id, in input order. Faults run concurrently.
BatchResult run_batch(std::shared_ptr<const Grid> grid, const std::vector<FaultSpec>& faults,
                      const RunConfig& config);
BatchResult run_batch(const std::string& grid_path, const std::string& faults_path, const std::string& config_path);

struct ModeComparison {
  RestorationReport lexicographic;
  RestorationReport weighted;
  DiscretePlan lexicographic_plan;
  DiscretePlan weighted_plan;
  bool identical = false;
  std::string difference;  // empty when identical
};

ModeComparison compare_modes(std::shared_ptr<const Grid> grid, const FaultSpec& fault, const RunConfig& config);
ModeComparison compare_modes(const std::string& grid_path, const std::string& fault_path,
                             const std::string& config_path = {});

/// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::string& path, const std::string& text);

}  // namespace restore
