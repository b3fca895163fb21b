#include "restore/branch_and_bound.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <queue>

#include "restore/lexicographic.hpp"

namespace restore {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::node_limit: return "node_limit";
    case SolveStatus::time_limit: return "time_limit";
    case SolveStatus::numeric_failure: return "numeric_failure";
  }
  return "unknown";
}

bool is_integral(const ConicProgram& program, const std::vector<double>& x, double tol) {
  for (auto v : program.discrete_variables())
    if (std::abs(x[v] - std::round(x[v])) > tol) return false;
  return true;
}

namespace {

struct Open {
  double bound;
  std::size_t id;
  std::size_t slot;
};

struct OpenOrder {
  bool operator()(const Open& a, const Open& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

// Chooses how to split a node. Returns false when `x` is integral.
struct Branch {
  bool sos = false;
  std::size_t group = 0;
  std::size_t split = 0;  // members [0, split) go left
  std::size_t var = 0;
  double value = 0.0;
};

bool choose_branch(const ConicProgram& P, const std::vector<double>& x, const std::vector<double>& ub, double tol,
                   Branch& br) {
  for (std::size_t g = 0; g < P.sos1().size(); ++g) {
    const auto& grp = P.sos1()[g];
    std::size_t nonzero = 0;
    double total = 0.0, weighted = 0.0;
    for (std::size_t k = 0; k < grp.vars.size(); ++k) {
      const double v = std::max(0.0, x[grp.vars[k]]);
      if (v > tol) ++nonzero;
      total += v;
      weighted += v * grp.weights[k];
    }
    if (nonzero <= 1) continue;
    // Split at the weighted centre, keeping at least one open member per side.
    const double centre = weighted / total;
    std::size_t split = 0;
    while (split < grp.vars.size() && grp.weights[split] <= centre) ++split;
    auto open = [&](std::size_t k) { return ub[grp.vars[k]] > 0.0; };
    auto any_open = [&](std::size_t a, std::size_t b) {
      for (std::size_t k = a; k < b; ++k)
        if (open(k)) return true;
      return false;
    };
    while (split > 1 && !any_open(split, grp.vars.size())) --split;
    while (split < grp.vars.size() - 1 && !any_open(0, split)) ++split;
    if (split == 0 || split >= grp.vars.size()) continue;
    br.sos = true;
    br.group = g;
    br.split = split;
    return true;
  }
  double best = -1.0;
  for (auto v : P.discrete_variables()) {
    const double f = x[v] - std::floor(x[v]);
    const double frac = std::min(f, 1.0 - f);
    if (frac > tol && frac > best + 1e-12) {
      best = frac;
      br.sos = false;
      br.var = v;
      br.value = x[v];
    }
  }
  return best >= 0.0;
}

}  // namespace

Solution branch_and_bound(const BnbProblem& problem, const SolverConfig& cfg, ConicEngine& engine) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  const ConicProgram& P = *problem.program;
  const auto n = P.size();
  Solution sol;

  std::vector<double> lb0 = problem.lb, ub0 = problem.ub;
  if (lb0.empty()) {
    lb0.resize(n);
    for (std::size_t i = 0; i < n; ++i) lb0[i] = P.variables()[i].lb;
  }
  if (ub0.empty()) {
    ub0.resize(n);
    for (std::size_t i = 0; i < n; ++i) ub0[i] = P.variables()[i].ub;
  }

  double incumbent = kInf;
  auto tolerance = [&](double inc) { return std::isfinite(inc) ? std::max(cfg.abs_gap, cfg.gap * std::abs(inc)) : 0.0; };
  if (problem.incumbent) {
    const auto& x = *problem.incumbent;
    const bool ok = P.max_row_violation(x) <= 1e-6 && P.max_cone_violation(x) <= 1e-6 &&
                    std::all_of(problem.extra_rows.begin(), problem.extra_rows.end(),
                                [&](const LinearRow& r) { return r.violation(x) <= 1e-6; }) &&
                    is_integral(P, x, cfg.integrality_tol);
    bool in_bounds = true;
    for (std::size_t i = 0; i < n && in_bounds; ++i)
      in_bounds = x[i] >= lb0[i] - 1e-7 && x[i] <= ub0[i] + 1e-7;
    if (ok && in_bounds) {
      sol.x = x;
      incumbent = problem.objective.eval(x);
    }
  }

  auto relax = [&](const std::vector<double>& lb, const std::vector<double>& ub) {
    RelaxationRequest req{&P, problem.objective, lb, ub, problem.extra_rows};
    ++sol.stats.relaxations;
    return solve_relaxation(req, engine);
  };

  std::vector<BnbNode> store;
  std::vector<std::size_t> free_slots;
  std::priority_queue<Open, std::vector<Open>, OpenOrder> open;
  std::size_t next_id = 0;
  auto push = [&](BnbNode node) {
    node.id = next_id++;
    std::size_t slot;
    if (!free_slots.empty()) {
      slot = free_slots.back();
      free_slots.pop_back();
      store[slot] = std::move(node);
    } else {
      slot = store.size();
      store.push_back(std::move(node));
    }
    open.push({store[slot].parent_bound, store[slot].id, slot});
  };
  push({0, 0, -kInf, lb0, ub0});

  bool numeric_trouble = false;
  bool limited = false;
  double best_open_bound = -kInf;
  while (!open.empty()) {
    const Open top = open.top();
    if (top.bound >= incumbent - tolerance(incumbent)) {
      best_open_bound = top.bound;
      break;  // best-first: every remaining node is dominated
    }
    const double elapsed = std::chrono::duration<double>(clock::now() - start).count();
    if (sol.stats.nodes >= cfg.node_limit || elapsed > cfg.time_limit) {
      limited = true;
      sol.status = sol.stats.nodes >= cfg.node_limit ? SolveStatus::node_limit : SolveStatus::time_limit;
      best_open_bound = top.bound;
      break;
    }
    open.pop();
    BnbNode node = std::move(store[top.slot]);
    free_slots.push_back(top.slot);
    ++sol.stats.nodes;
    sol.stats.max_depth = std::max(sol.stats.max_depth, node.depth);

    const auto r = relax(node.lb, node.ub);
    char line[256];
    auto log = [&](const char* action) {
      if (!cfg.keep_log) return;
      std::snprintf(line, sizeof line, "node %zu depth %zu parent %.10g bound %.10g status %s action %s", node.id,
                    node.depth, node.parent_bound, r.objective, to_string(r.status).c_str(), action);
      sol.log.emplace_back(line);
    };
    if (r.status == RelaxStatus::infeasible) {
      log("prune-infeasible");
      continue;
    }
    if (r.status != RelaxStatus::optimal) {
      numeric_trouble = true;
      log("prune-numeric");
      continue;
    }
    // Bounds are monotone along a branch; keep the parent value if the
    // solver returns a slightly lower one.
    const double bound = std::max(r.objective, node.parent_bound);
    if (bound >= incumbent - tolerance(incumbent)) {
      log("prune-bound");
      continue;
    }
    Branch br;
    if (!choose_branch(P, r.x, node.ub, cfg.integrality_tol, br)) {
      // Integral: re-solve with discrete values pinned for exact feasibility.
      auto lb = node.lb, ub = node.ub;
      for (auto v : P.discrete_variables()) lb[v] = ub[v] = std::round(r.x[v]);
      const auto pol = relax(lb, ub);
      if (pol.status == RelaxStatus::optimal && pol.objective < incumbent - tolerance(incumbent)) {
        incumbent = pol.objective;
        sol.x = pol.x;
        log("incumbent");
      } else {
        log(pol.status == RelaxStatus::optimal ? "integral-dominated" : "integral-polish-failed");
      }
      continue;
    }
    BnbNode left{0, node.depth + 1, bound, node.lb, node.ub};
    BnbNode right{0, node.depth + 1, bound, std::move(node.lb), std::move(node.ub)};
    if (br.sos) {
      ++sol.stats.sos_branches;
      const auto& grp = P.sos1()[br.group];
      for (std::size_t k = 0; k < grp.vars.size(); ++k) {
        if (k < br.split)
          right.ub[grp.vars[k]] = 0.0;
        else
          left.ub[grp.vars[k]] = 0.0;
      }
      log("branch-sos1");
    } else {
      ++sol.stats.variable_branches;
      left.ub[br.var] = std::floor(br.value);
      right.lb[br.var] = std::ceil(br.value);
      log("branch-variable");
    }
    push(std::move(left));
    push(std::move(right));
  }

  sol.stats.seconds = std::chrono::duration<double>(clock::now() - start).count();
  if (open.empty() && !limited) best_open_bound = incumbent;
  if (sol.has_incumbent()) {
    sol.objective = incumbent;
    sol.bound = std::min(incumbent, best_open_bound);
    sol.gap = std::max(0.0, incumbent - sol.bound) / std::max(1e-10, std::abs(incumbent));
    if (!limited) sol.status = SolveStatus::optimal;
    if (numeric_trouble) sol.notes.push_back("some nodes were pruned after numerical failures");
  } else if (!limited) {
    sol.status = numeric_trouble ? SolveStatus::numeric_failure : SolveStatus::infeasible;
  }
  return sol;
}

Solution branch_and_bound(const ConicProgram& program, const SolverConfig& cfg) {
  auto engine = make_default_engine(cfg.ipm);
  BnbProblem problem;
  problem.program = &program;
  problem.objective = weighted_objective(program, cfg);
  return branch_and_bound(problem, cfg, *engine);
}

}  // namespace restore
