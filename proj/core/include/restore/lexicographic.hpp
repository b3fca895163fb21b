#pragma once

#include <string>
#include <vector>

#include "restore/branch_and_bound.hpp"

namespace restore {

/// Continuous OLTC ratio variable that must land on a tap after solving.
struct OltcSpec {
  std::string id;
  std::size_t var = 0;
  double sigma = 0.0;
  int n_steps = 0;
  double initial = 0.0;
};

/// Nearest tap to alpha/sigma within [-n, n]; an exact half rounds toward
/// the initial tap.
int nearest_tap(double alpha, double sigma, int n_steps, double alpha0);

/// Second-nearest tap (the other neighbour of alpha/sigma), clamped to range.
int second_nearest_tap(double alpha, double sigma, int n_steps, double alpha0);

/// |(1 + a)^2 - (1 + 2a)| for the linearized OLTC voltage.
inline double binomial_error(double alpha) { return alpha * alpha; }

/// w_re * stage1 + w_sw * stage2 + w_op * stage3; later stages get no weight.
AffineExpr weighted_objective(const ConicProgram& program, const SolverConfig& cfg);

/// Row "expr <= value + slack".
LinearRow stage_row(const std::string& name, const AffineExpr& expr, double value, double slack);

/// Solves the staged program: each stage under the earlier stages' values
/// (epsilon-constraint), or one weighted solve. Then applies the canonical
/// tie-break dive, rounds OLTC ratios to taps, and re-solves the continuous
/// part with every discrete choice fixed.
Solution solve_lexicographic(const ConicProgram& program, const SolverConfig& cfg, ConicEngine& engine,
                             const std::vector<OltcSpec>& oltcs = {});

/// Snaps each OLTC ratio in `solution` to a tap (nearest first, then the
/// second-nearest if the fixed re-solve is infeasible) and re-solves the
/// continuous variables stage by stage with all discrete values fixed.
Solution round_oltc_taps(const Solution& solution, const ConicProgram& program, const std::vector<OltcSpec>& oltcs,
                         const SolverConfig& cfg, ConicEngine& engine);

}  // namespace restore
