#include <algorithm>
#include <cmath>
#include <map>

#include "restore/relaxation.hpp"

namespace restore {

namespace {

constexpr double kFixTol = 1e-10;
constexpr double kFeasTol = 1e-8;

struct Expr {
  std::map<std::size_t, double> coef;
  double constant = 0.0;
};

class Reducer {
 public:
  Reducer(const RelaxationRequest& req, PresolveResult& out) : req_(req), out_(out), vars_(req.program->variables()) {
    const auto n = vars_.size();
    out_.lb = req.lb.empty() ? std::vector<double>(n) : req.lb;
    out_.ub = req.ub.empty() ? std::vector<double>(n) : req.ub;
    if (req.lb.empty())
      for (std::size_t i = 0; i < n; ++i) out_.lb[i] = vars_[i].lb;
    if (req.ub.empty())
      for (std::size_t i = 0; i < n; ++i) out_.ub[i] = vars_[i].ub;
    for (std::size_t i = 0; i < n; ++i) {
      if (vars_[i].is_discrete()) {
        out_.lb[i] = std::ceil(out_.lb[i] - 1e-6);
        out_.ub[i] = std::floor(out_.ub[i] + 1e-6);
      }
      if (!check_bounds(i)) return;
    }
    for (const auto& r : req.program->rows()) add_row(r);
    for (const auto& r : req.extra_rows) add_row(r);
    for (const auto& c : req.program->cones()) {
      std::vector<Expr> es;
      for (const auto& e : c.exprs) es.push_back(to_expr(e));
      cones_.push_back(std::move(es));
      cone_active_.push_back(true);
    }
  }

  void run() {
    bool changed = true;
    for (int pass = 0; changed && pass < 100 && !out_.infeasible; ++pass) {
      changed = false;
      for (std::size_t r = 0; r < rows_.size() && !out_.infeasible; ++r)
        if (row_active_[r]) changed |= reduce_row(r);
      for (std::size_t c = 0; c < cones_.size() && !out_.infeasible; ++c)
        if (cone_active_[c]) changed |= reduce_cone(c);
    }
    if (!out_.infeasible) emit();
  }

 private:
  struct Row {
    Expr e;  // e.coef . x  <sense>  rhs
    Sense sense;
    double rhs;
  };

  bool fixed(std::size_t i) const { return out_.lb[i] == out_.ub[i]; }

  Expr to_expr(const AffineExpr& a) const {
    Expr e;
    e.constant = a.constant;
    for (const auto& t : a.terms) e.coef[t.var] += t.coef;
    return e;
  }

  void add_row(const LinearRow& r) {
    Expr e;
    for (const auto& t : r.terms) e.coef[t.var] += t.coef;
    rows_.push_back({std::move(e), r.sense, r.rhs});
    row_active_.push_back(true);
  }

  // Substitutes fixed variables; returns the live part.
  Expr live(const Expr& e) const {
    Expr out;
    out.constant = e.constant;
    for (const auto& [v, a] : e.coef) {
      if (a == 0.0) continue;
      if (fixed(v))
        out.constant += a * out_.lb[v];
      else
        out.coef[v] += a;
    }
    std::erase_if(out.coef, [](const auto& kv) { return std::abs(kv.second) < 1e-14; });
    return out;
  }

  bool fail(std::string why) {
    out_.infeasible = true;
    out_.reason = std::move(why);
    return false;
  }

  bool check_bounds(std::size_t i) {
    double& lb = out_.lb[i];
    double& ub = out_.ub[i];
    if (lb > ub) {
      if (lb - ub <= 1e-7 * (1.0 + std::abs(ub))) {
        const double mid = vars_[i].is_discrete() ? std::round(0.5 * (lb + ub)) : 0.5 * (lb + ub);
        lb = ub = mid;
      } else {
        return fail("bounds of " + vars_[i].name + " are inconsistent");
      }
    }
    if (ub - lb <= kFixTol * std::max(1.0, std::abs(lb))) ub = lb;
    return true;
  }

  bool tighten(std::size_t i, double lo, double hi) {
    if (vars_[i].is_discrete()) {
      lo = std::ceil(lo - 1e-6);
      hi = std::floor(hi + 1e-6);
    }
    bool changed = false;
    if (lo > out_.lb[i]) {
      out_.lb[i] = lo;
      changed = true;
    }
    if (hi < out_.ub[i]) {
      out_.ub[i] = hi;
      changed = true;
    }
    check_bounds(i);
    return changed;
  }

  bool reduce_row(std::size_t r) {
    const Row& row = rows_[r];
    const Expr e = live(row.e);
    const double rhs = row.rhs - e.constant;
    if (e.coef.empty()) {
      const double tol = kFeasTol * (1.0 + std::abs(row.rhs));
      const bool ok = row.sense == Sense::eq ? std::abs(rhs) <= tol
                      : row.sense == Sense::le ? 0.0 <= rhs + tol
                                               : 0.0 >= rhs - tol;
      row_active_[r] = false;
      ++out_.rows_removed;
      if (!ok) fail("row violated after fixing variables");
      return true;
    }
    if (e.coef.size() == 1) {
      const auto [v, a] = *e.coef.begin();
      const double val = rhs / a;
      double lo = -kInf, hi = kInf;
      if (row.sense == Sense::eq) {
        lo = hi = val;
      } else if ((row.sense == Sense::le) == (a > 0)) {
        hi = val;
      } else {
        lo = val;
      }
      row_active_[r] = false;
      ++out_.rows_removed;
      tighten(v, lo, hi);
      return true;
    }
    return false;
  }

  void push_zero_row(const Expr& e) {
    Row r{e, Sense::eq, -e.constant};
    r.e.constant = 0.0;
    rows_.push_back(std::move(r));
    row_active_.push_back(true);
  }

  bool reduce_cone(std::size_t c) {
    std::vector<Expr> es;
    bool all_const = true;
    for (const auto& e : cones_[c]) {
      es.push_back(live(e));
      all_const &= es.back().coef.empty();
    }
    const double tol = kFeasTol * (1.0 + std::abs(es[0].constant));
    if (all_const) {
      double s = 0.0;
      for (std::size_t k = 1; k < es.size(); ++k) s += es[k].constant * es[k].constant;
      cone_active_[c] = false;
      ++out_.cones_removed;
      if (std::sqrt(s) > es[0].constant + tol) fail("cone violated after fixing variables");
      return true;
    }
    if (es[0].coef.empty()) {
      if (es[0].constant < -tol) {
        fail("cone head is negative after fixing variables");
        return true;
      }
      if (es[0].constant <= kFixTol) {
        for (std::size_t k = 1; k < es.size(); ++k) {
          if (es[k].coef.empty()) {
            if (std::abs(es[k].constant) > tol) fail("degenerate cone violated");
          } else {
            push_zero_row(es[k]);
          }
        }
        cone_active_[c] = false;
        ++out_.cones_removed;
        return true;
      }
      return false;
    }
    // Head identical to one member: the remaining members must vanish.
    for (std::size_t k = 1; k < es.size(); ++k) {
      Expr d = es[0];
      for (const auto& [v, a] : es[k].coef) d.coef[v] -= a;
      d.constant -= es[k].constant;
      const bool same = std::abs(d.constant) <= kFixTol &&
                        std::all_of(d.coef.begin(), d.coef.end(), [](const auto& kv) { return std::abs(kv.second) <= 1e-14; });
      if (!same) continue;
      for (std::size_t j = 1; j < es.size(); ++j) {
        if (j == k) continue;
        if (es[j].coef.empty()) {
          if (std::abs(es[j].constant) > tol) fail("degenerate cone violated");
        } else {
          push_zero_row(es[j]);
        }
      }
      Row head{es[0], Sense::ge, -es[0].constant};
      head.e.constant = 0.0;
      rows_.push_back(std::move(head));
      row_active_.push_back(true);
      cone_active_[c] = false;
      ++out_.cones_removed;
      return true;
    }
    return false;
  }

  void emit() {
    const auto n = vars_.size();
    Expr obj = live(to_expr(req_.objective));
    std::vector<bool> used(n, false);
    std::vector<Row> live_rows;
    std::vector<std::vector<Expr>> live_cones;
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      if (!row_active_[r]) continue;
      Row lr = rows_[r];
      lr.e = live(rows_[r].e);
      lr.rhs -= lr.e.constant;
      lr.e.constant = 0.0;
      for (const auto& kv : lr.e.coef) used[kv.first] = true;
      live_rows.push_back(std::move(lr));
    }
    for (std::size_t c = 0; c < cones_.size(); ++c) {
      if (!cone_active_[c]) continue;
      std::vector<Expr> es;
      for (const auto& e : cones_[c]) {
        es.push_back(live(e));
        for (const auto& kv : es.back().coef) used[kv.first] = true;
      }
      live_cones.push_back(std::move(es));
    }

    out_.column.assign(n, -1);
    out_.value.assign(n, 0.0);
    int cols = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (fixed(i)) {
        out_.value[i] = out_.lb[i];
        continue;
      }
      if (used[i]) {
        out_.column[i] = cols++;
        continue;
      }
      // Appears only in the objective (or nowhere): pick the best bound.
      const auto it = obj.coef.find(i);
      const double a = it == obj.coef.end() ? 0.0 : it->second;
      double v = std::clamp(0.0, out_.lb[i], out_.ub[i]);
      if (a > 0) v = out_.lb[i];
      if (a < 0) v = out_.ub[i];
      if (!std::isfinite(v)) {
        out_.unbounded = true;
        out_.reason = "objective unbounded along " + vars_[i].name;
        return;
      }
      out_.value[i] = v;
    }

    auto& P = out_.problem;
    out_.objective_constant = obj.constant;
    P.c = Eigen::VectorXd::Zero(cols);
    for (const auto& [v, a] : obj.coef) {
      if (out_.column[v] >= 0)
        P.c[out_.column[v]] += a;
      else
        out_.objective_constant += a * out_.value[v];
    }

    std::vector<Eigen::Triplet<double>> ta, tg;
    std::vector<double> b, h;
    auto col_of = [&](std::size_t v) { return out_.column[v]; };
    for (const auto& r : live_rows) {
      if (r.sense != Sense::eq) continue;
      for (const auto& [v, a] : r.e.coef) ta.emplace_back(static_cast<int>(b.size()), col_of(v), a);
      b.push_back(r.rhs);
    }
    for (const auto& r : live_rows) {
      if (r.sense == Sense::eq) continue;
      const double s = r.sense == Sense::le ? 1.0 : -1.0;
      for (const auto& [v, a] : r.e.coef) tg.emplace_back(static_cast<int>(h.size()), col_of(v), s * a);
      h.push_back(s * r.rhs);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const int c = out_.column[i];
      if (c < 0) continue;
      if (std::isfinite(out_.lb[i])) {
        tg.emplace_back(static_cast<int>(h.size()), c, -1.0);
        h.push_back(-out_.lb[i]);
      }
      if (std::isfinite(out_.ub[i])) {
        tg.emplace_back(static_cast<int>(h.size()), c, 1.0);
        h.push_back(out_.ub[i]);
      }
    }
    P.l = static_cast<int>(h.size());
    P.soc.clear();
    for (const auto& es : live_cones) {
      for (const auto& e : es) {
        for (const auto& [v, a] : e.coef) tg.emplace_back(static_cast<int>(h.size()), col_of(v), -a);
        h.push_back(e.constant);
      }
      P.soc.push_back(static_cast<int>(es.size()));
    }
    P.A.resize(static_cast<int>(b.size()), cols);
    P.A.setFromTriplets(ta.begin(), ta.end());
    P.G.resize(static_cast<int>(h.size()), cols);
    P.G.setFromTriplets(tg.begin(), tg.end());
    P.b = Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<int>(b.size()));
    P.h = Eigen::Map<Eigen::VectorXd>(h.data(), static_cast<int>(h.size()));
  }

  const RelaxationRequest& req_;
  PresolveResult& out_;
  const std::vector<Variable>& vars_;
  std::vector<Row> rows_;
  std::vector<bool> row_active_;
  std::vector<std::vector<Expr>> cones_;
  std::vector<bool> cone_active_;
};

}  // namespace

PresolveResult presolve(const RelaxationRequest& req) {
  PresolveResult out;
  Reducer red(req, out);
  if (!out.infeasible) red.run();
  return out;
}

}  // namespace restore
