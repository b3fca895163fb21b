#pragma once

#include <string>
#include <vector>

#include "restore/builder.hpp"
#include "restore/verification.hpp"

namespace restore {

/// Branch-flow state of one step. Voltages are squared magnitudes per node
/// (zero when de-energized); flows use the line's from -> to orientation,
/// measured at the from end.
struct SweepResult {
  bool converged = false;
  std::size_t iterations = 0;
  std::vector<double> v2;
  std::vector<double> p, q, F;
  std::string message;
};

/// Backward/forward sweep over the energized forest of `x` at step `t`,
/// holding topology, served loads, taps and DG dispatch at their solver
/// values. Losses and the voltage-dependent load model are exact; ratio
/// links apply 1 + 2 sigma k to the squared voltage.
SweepResult sweep_step(const RestorationCase& rc, const BuiltProgram& built, const std::vector<double>& x,
                       std::size_t t, double tol = 1e-10, std::size_t max_iter = 500);

/// Sweeps every step and compares with the solver's voltages and flows.
AcCheck resimulate_ac(const RestorationCase& rc, const BuiltProgram& built, const std::vector<double>& x,
                      double tol = 1e-10, std::size_t max_iter = 500);

}  // namespace restore
