#include "restore/relaxation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace restore {

std::string to_string(RelaxStatus s) {
  switch (s) {
    case RelaxStatus::optimal: return "optimal";
    case RelaxStatus::infeasible: return "infeasible";
    case RelaxStatus::unbounded: return "unbounded";
    case RelaxStatus::failed: return "failed";
  }
  return "unknown";
}

RelaxationResult solve_relaxation(const RelaxationRequest& req, ConicEngine& engine) {
  RelaxationResult res;
  const auto& vars = req.program->variables();
  for (std::size_t i = 0; i < req.lb.size(); ++i) {
    const double tol = 1e-9 * std::max(1.0, std::abs(vars[i].lb));
    if (req.lb[i] < vars[i].lb - tol) throw std::invalid_argument("fixing below the bound of " + vars[i].name);
  }
  for (std::size_t i = 0; i < req.ub.size(); ++i) {
    const double tol = 1e-9 * std::max(1.0, std::abs(vars[i].ub));
    if (req.ub[i] > vars[i].ub + tol) throw std::invalid_argument("fixing above the bound of " + vars[i].name);
  }
  const PresolveResult pre = presolve(req);
  if (pre.infeasible) {
    res.status = RelaxStatus::infeasible;
    res.detail = "presolve: " + pre.reason;
    return res;
  }
  if (pre.unbounded) {
    res.status = RelaxStatus::unbounded;
    res.detail = "presolve: " + pre.reason;
    return res;
  }

  const auto n = req.program->size();
  res.x = pre.value;
  if (pre.problem.n() > 0) {
    const IpmResult ipm = engine.solve(pre.problem);
    res.iterations = ipm.iterations;
    switch (ipm.status) {
      case IpmStatus::optimal: break;
      case IpmStatus::optimal_inaccurate: res.inaccurate = true; break;
      case IpmStatus::primal_infeasible:
        res.status = RelaxStatus::infeasible;
        res.detail = "conic solver: primal infeasible";
        return res;
      case IpmStatus::dual_infeasible:
        res.status = RelaxStatus::unbounded;
        res.detail = "conic solver: unbounded";
        return res;
      default:
        res.status = RelaxStatus::failed;
        res.detail = "conic solver: " + to_string(ipm.status);
        return res;
    }
    for (std::size_t i = 0; i < n; ++i)
      if (pre.column[i] >= 0) res.x[i] = ipm.x[pre.column[i]];
  }
  for (std::size_t i = 0; i < n; ++i) res.x[i] = std::clamp(res.x[i], pre.lb[i], pre.ub[i]);

  res.status = RelaxStatus::optimal;
  res.objective = req.objective.eval(res.x);
  res.max_row_violation = req.program->max_row_violation(res.x);
  for (const auto& r : req.extra_rows) res.max_row_violation = std::max(res.max_row_violation, r.violation(res.x));
  res.max_cone_violation = req.program->max_cone_violation(res.x);
  return res;
}

}  // namespace restore
