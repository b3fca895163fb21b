#include "restore/lexicographic.hpp"

#include <algorithm>
#include <cmath>

namespace restore {

int nearest_tap(double alpha, double sigma, int n_steps, double alpha0) {
  const double r = alpha / sigma;
  const double k0 = alpha0 / sigma;
  const double f = std::floor(r);
  int k;
  if (std::abs(r - f - 0.5) < 1e-9)
    k = static_cast<int>(std::abs(f - k0) <= std::abs(f + 1 - k0) ? f : f + 1);
  else
    k = static_cast<int>(std::lround(r));
  return std::clamp(k, -n_steps, n_steps);
}

int second_nearest_tap(double alpha, double sigma, int n_steps, double alpha0) {
  const int k = nearest_tap(alpha, sigma, n_steps, alpha0);
  const double r = alpha / sigma;
  int other = r >= k ? k + 1 : k - 1;
  if (other > n_steps) other = k - 1;
  if (other < -n_steps) other = k + 1;
  return std::clamp(other, -n_steps, n_steps);
}

AffineExpr weighted_objective(const ConicProgram& program, const SolverConfig& cfg) {
  AffineExpr obj;
  const double w[] = {0.0, cfg.w_re, cfg.w_sw, cfg.w_op};
  for (int s = 1; s <= std::min(3, program.max_stage()); ++s) {
    AffineExpr e = program.stage_objective(s);
    e *= w[s];
    obj += e;
  }
  return obj;
}

LinearRow stage_row(const std::string& name, const AffineExpr& expr, double value, double slack) {
  return {name, expr.terms, Sense::le, value + slack - expr.constant};
}

namespace {

void merge(Solution& into, const Solution& from, const std::string& prefix) {
  into.stats.nodes += from.stats.nodes;
  into.stats.relaxations += from.stats.relaxations;
  into.stats.sos_branches += from.stats.sos_branches;
  into.stats.variable_branches += from.stats.variable_branches;
  into.stats.max_depth = std::max(into.stats.max_depth, from.stats.max_depth);
  into.stats.seconds += from.stats.seconds;
  for (const auto& l : from.log) into.log.push_back(prefix + l);
  for (const auto& n : from.notes) into.notes.push_back(prefix + n);
}

double slack(const SolverConfig& cfg, double v) { return cfg.epsilon * std::max(1.0, std::abs(v)); }

struct Staged {
  Solution last;
  std::vector<LinearRow> rows;
  AffineExpr final_objective;
  std::vector<double> optima;  // per stage, lexicographic mode only
  bool ok = false;
};

// Runs the stage sequence under the given bounds.
Staged run_stages(const ConicProgram& P, const std::vector<double>& lb, const std::vector<double>& ub,
                  const SolverConfig& cfg, ConicEngine& engine, std::optional<std::vector<double>> start,
                  Solution& acc) {
  Staged st;
  std::vector<std::pair<std::string, AffineExpr>> plan;
  if (cfg.mode == StageMode::weighted) {
    plan.emplace_back("weighted", weighted_objective(P, cfg));
    for (int s = 4; s <= P.max_stage(); ++s) plan.emplace_back("stage" + std::to_string(s), P.stage_objective(s));
  } else {
    for (int s = 1; s <= P.max_stage(); ++s) plan.emplace_back("stage" + std::to_string(s), P.stage_objective(s));
  }
  if (plan.empty()) plan.emplace_back("feasibility", AffineExpr{});
  for (const auto& [name, obj] : plan) {
    BnbProblem bp{&P, obj, st.rows, lb, ub, start};
    Solution s = branch_and_bound(bp, cfg, engine);
    merge(acc, s, name + ": ");
    st.last = s;
    st.final_objective = obj;
    if (!s.has_incumbent()) return st;
    const double v = obj.eval(s.x);
    if (cfg.mode == StageMode::lexicographic) st.optima.push_back(v);
    st.rows.push_back(stage_row("stage." + name, obj, v, slack(cfg, v)));
    start = s.x;
  }
  st.ok = true;
  return st;
}

std::vector<double> bounds_of(const ConicProgram& P, bool lower) {
  std::vector<double> b(P.size());
  for (std::size_t i = 0; i < P.size(); ++i) b[i] = lower ? P.variables()[i].lb : P.variables()[i].ub;
  return b;
}

// Stage values at x; optima default to them when the stages were not solved
// one by one.
void finish(Solution& sol, const ConicProgram& P, const std::vector<double>& optima) {
  sol.stage_values.assign(static_cast<std::size_t>(P.max_stage()) + 1, 0.0);
  for (int s = 1; s <= P.max_stage(); ++s) sol.stage_values[static_cast<std::size_t>(s)] = P.stage_value(s, sol.x);
  sol.stage_optima = sol.stage_values;
  for (std::size_t k = 0; k < optima.size() && k + 1 < sol.stage_optima.size(); ++k) sol.stage_optima[k + 1] = optima[k];
}

}  // namespace

Solution round_oltc_taps(const Solution& solution, const ConicProgram& program, const std::vector<OltcSpec>& oltcs,
                         const SolverConfig& cfg, ConicEngine& engine) {
  Solution out = solution;
  if (!solution.has_incumbent()) return out;
  auto lb = bounds_of(program, true), ub = bounds_of(program, false);
  for (auto v : program.discrete_variables()) lb[v] = ub[v] = std::round(solution.x[v]);

  std::vector<int> taps;
  for (const auto& o : oltcs) {
    if (program.variables()[o.var].lb == program.variables()[o.var].ub) {
      taps.push_back(static_cast<int>(std::lround(program.variables()[o.var].lb / o.sigma)));
      continue;
    }
    taps.push_back(nearest_tap(solution.x[o.var], o.sigma, o.n_steps, o.initial));
  }
  auto pin = [&] {
    for (std::size_t k = 0; k < oltcs.size(); ++k) lb[oltcs[k].var] = ub[oltcs[k].var] = taps[k] * oltcs[k].sigma;
  };
  SolverConfig fixed_cfg = cfg;
  fixed_cfg.tie_break = false;
  Solution acc;
  pin();
  Staged st = run_stages(program, lb, ub, fixed_cfg, engine, std::nullopt, acc);
  for (std::size_t k = 0; k < oltcs.size() && !st.ok; ++k) {
    const auto& o = oltcs[k];
    if (program.variables()[o.var].lb == program.variables()[o.var].ub) continue;
    const int first = taps[k];
    taps[k] = second_nearest_tap(solution.x[o.var], o.sigma, o.n_steps, o.initial);
    out.notes.push_back("OLTC " + o.id + ": tap " + std::to_string(first) + " infeasible, trying " +
                        std::to_string(taps[k]));
    pin();
    st = run_stages(program, lb, ub, fixed_cfg, engine, std::nullopt, acc);
    if (!st.ok) taps[k] = first;
  }
  merge(out, acc, "rounding: ");
  if (!st.ok) {
    out.notes.push_back("OLTC rounding: no tap assignment admits a feasible re-solve; keeping continuous ratios");
    finish(out, program, {});
    return out;
  }
  out.x = st.last.x;
  out.objective = st.final_objective.eval(out.x);
  finish(out, program, st.optima);
  return out;
}

Solution solve_lexicographic(const ConicProgram& program, const SolverConfig& cfg, ConicEngine& engine,
                             const std::vector<OltcSpec>& oltcs) {
  Solution sol;
  const auto lb0 = bounds_of(program, true), ub0 = bounds_of(program, false);
  Staged st = run_stages(program, lb0, ub0, cfg, engine, std::nullopt, sol);
  if (!st.ok) {
    sol.status = st.last.status;
    return sol;
  }
  sol.status = st.last.status;
  sol.x = st.last.x;
  sol.bound = st.last.bound;
  sol.gap = st.last.gap;

  if (cfg.tie_break) {
    // Canonical dive: fix discrete variables in program order to the
    // smallest value that keeps every stage within its epsilon.
    auto lb = lb0, ub = ub0;
    std::vector<double> witness = sol.x;
    SolverConfig dive = cfg;
    dive.keep_log = false;
    for (auto v : program.discrete_variables()) {
      if (lb[v] == ub[v]) continue;
      const double current = std::round(witness[v]);
      for (double c = std::ceil(lb[v] - 1e-9); c <= current; c += 1.0) {
        if (c == current) {
          lb[v] = ub[v] = c;
          break;
        }
        auto tlb = lb, tub = ub;
        tlb[v] = tub[v] = c;
        BnbProblem bp{&program, st.final_objective, st.rows, tlb, tub, std::nullopt};
        Solution trial = branch_and_bound(bp, dive, engine);
        merge(sol, trial, "tie-break: ");
        if (trial.has_incumbent()) {
          lb = std::move(tlb);
          ub = std::move(tub);
          witness = trial.x;
          break;
        }
      }
    }
    sol.x = witness;
  }

  if (!oltcs.empty()) return round_oltc_taps(sol, program, oltcs, cfg, engine);
  sol.objective = st.final_objective.eval(sol.x);
  finish(sol, program, st.optima);
  return sol;
}

}  // namespace restore
