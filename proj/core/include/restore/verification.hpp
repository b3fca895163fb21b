#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "restore/builder.hpp"
#include "restore/lexicographic.hpp"

namespace restore {

/// Integral values of every discrete decision, in program order, followed
/// by the OLTC taps. Two solutions share a plan when these agree.
struct DiscretePlan {
  std::vector<std::string> names;
  std::vector<int> values;

  bool operator==(const DiscretePlan&) const = default;
  std::string describe() const;  // "name=value" pairs for values that differ from zero
  std::string diff(const DiscretePlan& other) const;
};

/// OLTC ratio variables of a built program, in regulator order.
std::vector<OltcSpec> oltc_specs(const BuiltProgram& built, const Grid& grid);

DiscretePlan discrete_plan(const BuiltProgram& built, const std::vector<OltcSpec>& oltcs, const std::vector<double>& x);

/// Rounds the continuous switch-operation indicators (S, B) that sit within
/// `tol` of 0 or 1. They are integral at every optimum; the interior-point
/// engine leaves them slightly off. Returns the largest adjustment.
double snap_indicators(const BuiltProgram& built, std::vector<double>& x, double tol = 1e-4);

struct IsolatedComponent {
  std::vector<std::string> nodes;
  double flow_norm = 0.0;  // max |p|, |q|, F over the component's lines and steps
};

struct RadialityCheck {
  bool pass = true;
  std::vector<std::string> offending_lines;  // lines closing a cycle or joining two sources
  std::vector<std::string> failures;         // human-readable reasons
  std::vector<IsolatedComponent> isolated;
  std::size_t energized_nodes = 0;
  std::size_t energized_lines = 0;
  std::size_t energized_sources = 0;
};

/// Energized subgraph is a forest with one substation per component;
/// de-energized lines carry nothing and switched ones are open; isolated
/// nodes have zero voltage, zero served load and no operated breaker.
RadialityCheck check_radiality(const RestorationCase& rc, const BuiltProgram& built, const std::vector<double>& x,
                               double tol = 1e-6);

struct ConeResidual {
  std::string line;
  std::size_t step = 0;
  double residual = 0.0;  // F V - (p^2 + q^2)
};

struct ConeCheck {
  bool pass = true;
  double max_residual = 0.0;
  double min_residual = 0.0;
  std::vector<ConeResidual> flagged;  // |residual| > tol
};

ConeCheck check_cone_exactness(const RestorationCase& rc, const BuiltProgram& built, const std::vector<double>& x,
                               double tol = 1e-5);

struct AcCheck {
  bool converged = false;
  std::size_t iterations = 0;
  double voltage_mismatch = 0.0;  // max |sqrt(V_solver) - |V_exact||, p.u.
  double flow_mismatch = 0.0;     // max |p, q, F difference|, p.u.
  std::string message;
};

struct VerificationReport {
  RadialityCheck radiality;
  ConeCheck cone;
  AcCheck ac;
  std::optional<double> oracle_gap;  // relative gap vs enumeration, when run
  double cone_tol = 1e-5;
  double ac_tol = 5e-4;

  bool pass() const;
  std::string summary() const;
};

/// Runs the radiality, cone and AC checks on one solution.
VerificationReport verify_solution(const RestorationCase& rc, const BuiltProgram& built, const std::vector<double>& x,
                                   double cone_tol = 1e-5, double ac_tol = 5e-4);

struct RandomInstanceSpec {
  std::size_t min_nodes = 5;
  std::size_t max_nodes = 20;
  std::size_t min_ties = 1;
  std::size_t max_ties = 3;
  double load_min = 0.01;
  double load_max = 0.2;
  double cb_probability = 0.5;
  int cb_max_steps = 2;
  double sectionalizer_probability = 0.3;
  std::size_t max_off_outage_nodes = 10;  // keeps enumeration small
};

struct RandomInstance {
  std::uint64_t seed = 0;
  std::shared_ptr<const Grid> grid;
  std::string faulted_line;
};

/// Seeded grid of two or three tree feeders joined by normally open ties,
/// with a fault whose off-outage area has at least one restoration path.
RandomInstance random_instance(std::uint64_t seed, const RandomInstanceSpec& spec = {});

}  // namespace restore
