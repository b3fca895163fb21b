#pragma once

#include <string>
#include <vector>

#include "restore/conic_ipm.hpp"
#include "restore/program.hpp"

namespace restore {

/// Continuous relaxation request: the program with overridden variable
/// bounds, extra linear rows, and a single linear objective to minimize.
struct RelaxationRequest {
  const ConicProgram* program = nullptr;
  AffineExpr objective;
  std::vector<double> lb;  // empty: program bounds
  std::vector<double> ub;
  std::vector<LinearRow> extra_rows;
};

struct PresolveResult {
  bool infeasible = false;
  bool unbounded = false;
  std::string reason;
  std::vector<double> lb, ub;  // tightened bounds in program space
  std::vector<int> column;     // program variable -> problem column, -1 if eliminated
  std::vector<double> value;   // value of eliminated variables
  ConeProblem problem;
  double objective_constant = 0.0;
  std::size_t rows_removed = 0;
  std::size_t cones_removed = 0;
};

/// Substitutes fixed variables, turns singleton rows into bounds, resolves
/// degenerate cones, and emits the standard conic form.
PresolveResult presolve(const RelaxationRequest& req);

enum class RelaxStatus { optimal, infeasible, unbounded, failed };

std::string to_string(RelaxStatus s);

struct RelaxationResult {
  RelaxStatus status = RelaxStatus::failed;
  std::vector<double> x;
  double objective = 0.0;
  int iterations = 0;
  bool inaccurate = false;
  double max_row_violation = 0.0;
  double max_cone_violation = 0.0;
  std::string detail;
};

/// Throws std::invalid_argument when the request loosens a program bound.
RelaxationResult solve_relaxation(const RelaxationRequest& req, ConicEngine& engine);

}  // namespace restore
