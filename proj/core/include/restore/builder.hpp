#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "restore/program.hpp"
#include "restore/topology.hpp"

namespace restore {

inline constexpr std::size_t kNoVar = static_cast<std::size_t>(-1);

/// Maps every model symbol to its program variable. Per-step symbols are
/// indexed [t][element]; kNoVar marks elements outside the model.
struct VariableIndex {
  std::size_t steps = 0;

  // Time-invariant decisions.
  std::vector<std::size_t> Y;         // per line, W_S only
  std::vector<std::size_t> Z_fwd;     // per line, orientation from -> to
  std::vector<std::size_t> Z_bwd;     // per line, orientation to -> from
  std::vector<std::size_t> S;         // per line, W_sec only
  std::vector<std::size_t> X_line;    // per line in W
  std::vector<std::size_t> L;         // per node in N
  std::vector<std::size_t> X_node;    // per node in N
  std::vector<std::size_t> B;         // per node in N*
  std::vector<std::size_t> E;         // per zone in Z*

  std::vector<std::size_t> alpha;     // per regulator (OLTC)
  std::vector<std::size_t> tap;       // per regulator: integer tap (SVR/CB)
  std::vector<std::size_t> T;         // per regulator: tap-change epigraph
  std::vector<std::vector<std::size_t>> delta;  // per regulator (SVR): binaries k = -n..n

  // Per step.
  std::vector<std::vector<std::size_t>> V, PD, QD, Pcur, Qcur, Psub, Qsub;  // [t][node]
  std::vector<std::vector<std::size_t>> p, q, F, Fstar;                     // [t][line]
  std::vector<std::vector<std::size_t>> beta, Qcb;                          // [t][regulator]
  std::vector<std::vector<std::vector<std::size_t>>> b;                     // [t][regulator][k]
  std::vector<std::vector<std::size_t>> Pdg, Qdg;                           // [t][dg]
};

/// How rejected load enters the curtailment objective.
enum class CurtailmentBasis {
  nominal,           // P0 + Q0 per rejected node, independent of voltage
  voltage_dependent  // the curtailed demand at the node's modeled voltage
};

struct BuildConfig {
  double w1 = 0.5;  // current-deviation share of the operational term
  double w2 = 0.5;  // tap-change share
  double load_floor = 1e-6;
  bool freeze_regulators = false;
  std::set<std::string> frozen_regulators;
  std::map<std::string, double> priority_overrides;
  bool tighten_big_m = true;
  bool tightening_stage = true;  // add the stage that drives cone rows tight
  CurtailmentBasis curtailment = CurtailmentBasis::nominal;
};

struct BuiltProgram {
  ConicProgram program;
  VariableIndex index;
  std::vector<std::string> warnings;
  std::vector<std::string> notes;
  double m_energize = 0.0;  // multiplier used in Y <= M * F
  std::vector<std::vector<double>> P0, Q0;  // [t][node] nominal demand after the floor
};

/// Assembly context shared by the constraint-group builders.
struct ModelContext {
  const RestorationCase& rc;
  const BuildConfig& cfg;
  BuiltProgram& out;
  BigM big_m;
  std::vector<int> hours;
  std::vector<std::vector<double>> P0, Q0;  // [t][node], after the demand floor

  ConicProgram& prog() { return out.program; }
  VariableIndex& ix() { return out.index; }
  const Grid& g() const { return rc.g(); }
  double priority(std::size_t node) const;
  bool frozen(std::size_t regulator) const;
};

/// Declares every variable in a fixed order.
void declare_variables(ModelContext& ctx);

void build_reconfiguration(ModelContext& ctx);
void build_switching(ModelContext& ctx);
void build_regulators(ModelContext& ctx);
void build_load_model(ModelContext& ctx);
void build_opf(ModelContext& ctx);
void build_objective(ModelContext& ctx);

class BuildError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Deterministic assembly of the full restoration program.
BuiltProgram assemble(const RestorationCase& rc, const BuildConfig& cfg);

/// Replaces big-M coefficients on binary indicators by the tightest constant
/// implied by the other variables' bounds. Returns the number of rows changed.
std::size_t tighten_big_m(ConicProgram& program);

}  // namespace restore
