#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "restore/verification.hpp"

namespace restore {

struct BruteForceCaps {
  std::size_t max_combos = 1000000;
};

class BruteForceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BruteForceResult {
  bool feasible = false;
  std::vector<double> x;
  std::vector<double> stage_values;  // at x, indexed by stage, [0] unused
  std::vector<double> stage_optima;  // best value reached at each stage
  DiscretePlan plan;
  std::size_t combos = 0;   // assignments in the enumeration
  std::size_t solved = 0;   // continuous solves performed
  std::size_t pruned = 0;   // assignments discarded by a valid bound
  double seconds = 0.0;
  std::string message;
};

/// Enumerates every assignment of switch states, load pickups, CB/SVR taps
/// and OLTC taps. Switch patterns that cannot be radial are dropped
/// structurally; the rest are screened with an exact lower bound on the
/// first stage before their continuous program is solved. Stages are then
/// filtered in order with the same epsilon as the lexicographic solver, and
/// remaining ties go to the assignment that is smallest in program order.
BruteForceResult brute_force(const RestorationCase& rc, const BuiltProgram& built, const BruteForceCaps& caps,
                             const SolverConfig& cfg, ConicEngine& engine);

}  // namespace restore
