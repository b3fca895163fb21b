#pragma once

#include <optional>
#include <string>
#include <vector>

#include "restore/relaxation.hpp"

namespace restore {

enum class StageMode { lexicographic, weighted };

struct SolverConfig {
  double feasibility_tol = 1e-7;
  double integrality_tol = 1e-5;
  double gap = 1e-6;          // relative
  double abs_gap = 1e-9;
  std::size_t node_limit = 200000;
  double time_limit = 600.0;  // seconds, per branch-and-bound run
  StageMode mode = StageMode::lexicographic;
  double epsilon = 1e-6;      // stage slack in lexicographic mode
  double w_re = 1e4;
  double w_sw = 1e2;
  double w_op = 1.0;
  bool tie_break = true;      // canonical dive after the last stage
  bool keep_log = true;
  IpmSettings ipm;
};

enum class SolveStatus { optimal, infeasible, node_limit, time_limit, numeric_failure };

std::string to_string(SolveStatus s);

struct BnbStats {
  std::size_t nodes = 0;
  std::size_t relaxations = 0;
  std::size_t sos_branches = 0;
  std::size_t variable_branches = 0;
  std::size_t max_depth = 0;
  double seconds = 0.0;
};

/// Open subproblem: bounds on the discrete variables plus the parent bound.
struct BnbNode {
  std::size_t id = 0;
  std::size_t depth = 0;
  double parent_bound = -kInf;
  std::vector<double> lb, ub;
};

struct Solution {
  SolveStatus status = SolveStatus::infeasible;
  std::vector<double> x;
  double objective = kInf;
  double bound = -kInf;
  double gap = kInf;
  std::vector<double> stage_values;  // at x, indexed by stage, [0] unused
  std::vector<double> stage_optima;  // optimal value of each staged solve, same indexing
  BnbStats stats;
  std::vector<std::string> log;
  std::vector<std::string> notes;

  bool has_incumbent() const { return !x.empty(); }
};

struct BnbProblem {
  const ConicProgram* program = nullptr;
  AffineExpr objective;
  std::vector<LinearRow> extra_rows;
  std::vector<double> lb, ub;  // empty: program bounds
  std::optional<std::vector<double>> incumbent;  // known feasible point
};

/// Best-bound branch and bound over the discrete variables. SOS1 groups
/// are branched by splitting the ordered set; otherwise the most
/// fractional variable (lowest index on ties) is branched.
Solution branch_and_bound(const BnbProblem& problem, const SolverConfig& cfg, ConicEngine& engine);

/// Minimizes the weighted sum of all objective stages.
Solution branch_and_bound(const ConicProgram& program, const SolverConfig& cfg);

/// True when every discrete variable of `x` is within tolerance of an integer.
bool is_integral(const ConicProgram& program, const std::vector<double>& x, double tol);

}  // namespace restore
