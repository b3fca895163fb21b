#include "restore/conic_ipm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <Eigen/SparseCholesky>

namespace restore {

using Eigen::VectorXd;

std::string to_string(IpmStatus s) {
  switch (s) {
    case IpmStatus::optimal: return "optimal";
    case IpmStatus::optimal_inaccurate: return "optimal_inaccurate";
    case IpmStatus::primal_infeasible: return "primal_infeasible";
    case IpmStatus::dual_infeasible: return "dual_infeasible";
    case IpmStatus::max_iterations: return "max_iterations";
    case IpmStatus::numerical_error: return "numerical_error";
  }
  return "unknown";
}

namespace {

constexpr double kInfStep = std::numeric_limits<double>::infinity();

struct Cones {
  int l = 0;
  std::vector<int> dim;
  std::vector<int> start;
  int m = 0;

  explicit Cones(const ConeProblem& p) : l(p.l) {
    int off = l;
    for (int d : p.soc) {
      dim.push_back(d);
      start.push_back(off);
      off += d;
    }
    m = off;
  }
  int degree() const { return l + static_cast<int>(dim.size()); }
};

// Smallest "eigenvalue" of u with respect to the product cone.
double min_eig(const Cones& k, const VectorXd& u) {
  double a = kInfStep;
  for (int i = 0; i < k.l; ++i) a = std::min(a, u[i]);
  for (std::size_t c = 0; c < k.dim.size(); ++c) {
    const auto seg = u.segment(k.start[c] + 1, k.dim[c] - 1);
    a = std::min(a, u[k.start[c]] - seg.norm());
  }
  return a;
}

void add_identity(const Cones& k, VectorXd& u, double t) {
  for (int i = 0; i < k.l; ++i) u[i] += t;
  for (int s : k.start) u[s] += t;
}

void shift_into_cone(const Cones& k, VectorXd& u) {
  const double a = min_eig(k, u);
  if (a < 1e-8) add_identity(k, u, 1.0 - std::min(a, 0.0));
}

// Jordan product u o v.
VectorXd jordan(const Cones& k, const VectorXd& u, const VectorXd& v) {
  VectorXd w(u.size());
  for (int i = 0; i < k.l; ++i) w[i] = u[i] * v[i];
  for (std::size_t c = 0; c < k.dim.size(); ++c) {
    const int s = k.start[c], d = k.dim[c];
    w[s] = u.segment(s, d).dot(v.segment(s, d));
    w.segment(s + 1, d - 1) = u[s] * v.segment(s + 1, d - 1) + v[s] * u.segment(s + 1, d - 1);
  }
  return w;
}

// Solves lambda o v = r for v.
VectorXd jordan_div(const Cones& k, const VectorXd& lambda, const VectorXd& r) {
  VectorXd v(r.size());
  for (int i = 0; i < k.l; ++i) v[i] = r[i] / lambda[i];
  for (std::size_t c = 0; c < k.dim.size(); ++c) {
    const int s = k.start[c], d = k.dim[c];
    const double l0 = lambda[s];
    const auto l1 = lambda.segment(s + 1, d - 1);
    const double rho = l0 * l0 - l1.squaredNorm();
    const double v0 = (l0 * r[s] - l1.dot(r.segment(s + 1, d - 1))) / rho;
    v[s] = v0;
    v.segment(s + 1, d - 1) = (r.segment(s + 1, d - 1) - v0 * l1) / l0;
  }
  return v;
}

// Largest step keeping u + a*du in the cone.
double max_step(const Cones& k, const VectorXd& u, const VectorXd& du) {
  double a = kInfStep;
  for (int i = 0; i < k.l; ++i)
    if (du[i] < 0) a = std::min(a, -u[i] / du[i]);
  for (std::size_t c = 0; c < k.dim.size(); ++c) {
    const int s = k.start[c], d = k.dim[c];
    const double u0 = u[s], d0 = du[s];
    const auto u1 = u.segment(s + 1, d - 1);
    const auto d1 = du.segment(s + 1, d - 1);
    const long double qa = static_cast<long double>(d0) * d0 - d1.squaredNorm();
    const long double qb = static_cast<long double>(u0) * d0 - u1.dot(d1);
    const long double qc = std::max(0.0L, static_cast<long double>(u0) * u0 - u1.squaredNorm());
    double root = kInfStep;
    if (std::abs(qa) < 1e-300L) {
      if (qb < 0) root = static_cast<double>(-qc / (2 * qb));
    } else {
      const long double disc = qb * qb - qa * qc;
      if (disc >= 0) {
        const long double sq = std::sqrt(disc);
        const long double r1 = (-qb - sq) / qa, r2 = (-qb + sq) / qa;
        if (qa < 0) {
          root = static_cast<double>(std::max(r1, r2));
        } else if (qb < 0) {
          root = static_cast<double>(std::min(r1, r2));
        }
      }
    }
    if (root >= 0) a = std::min(a, root);
    if (d0 < 0) a = std::min(a, -u0 / d0);
  }
  return a;
}

// Nesterov-Todd scaling: W z = W^{-1} s = lambda.
struct Scaling {
  VectorXd w;                       // LP part
  std::vector<VectorXd> wbar;       // normalized SOC scaling points
  std::vector<double> eta;
  VectorXd lambda;
};

bool compute_scaling(const Cones& k, const VectorXd& s, const VectorXd& z, Scaling& sc) {
  sc.w.resize(k.l);
  for (int i = 0; i < k.l; ++i) {
    if (s[i] <= 0 || z[i] <= 0) return false;
    sc.w[i] = std::sqrt(s[i] / z[i]);
  }
  sc.wbar.resize(k.dim.size());
  sc.eta.resize(k.dim.size());
  for (std::size_t c = 0; c < k.dim.size(); ++c) {
    const int st = k.start[c], d = k.dim[c];
    const VectorXd sv = s.segment(st, d), zv = z.segment(st, d);
    const double sres = sv[0] * sv[0] - sv.tail(d - 1).squaredNorm();
    const double zres = zv[0] * zv[0] - zv.tail(d - 1).squaredNorm();
    if (sres <= 0 || zres <= 0 || sv[0] <= 0 || zv[0] <= 0) return false;
    const VectorXd sb = sv / std::sqrt(sres);
    const VectorXd zb = zv / std::sqrt(zres);
    const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
    VectorXd wb(d);
    wb[0] = (sb[0] + zb[0]) / (2 * gamma);
    wb.tail(d - 1) = (sb.tail(d - 1) - zb.tail(d - 1)) / (2 * gamma);
    sc.wbar[c] = wb;
    sc.eta[c] = std::pow(sres / zres, 0.25);
  }
  return true;
}

// out = W u (inverse = false) or W^{-1} u.
VectorXd apply_w(const Cones& k, const Scaling& sc, const VectorXd& u, bool inverse) {
  VectorXd out(u.size());
  for (int i = 0; i < k.l; ++i) out[i] = inverse ? u[i] / sc.w[i] : u[i] * sc.w[i];
  for (std::size_t c = 0; c < k.dim.size(); ++c) {
    const int st = k.start[c], d = k.dim[c];
    const auto& wb = sc.wbar[c];
    const double w0 = wb[0];
    const auto w1 = wb.tail(d - 1);
    const double u0 = u[st];
    const auto u1 = u.segment(st + 1, d - 1);
    const double sgn = inverse ? -1.0 : 1.0;
    const double scale = inverse ? 1.0 / sc.eta[c] : sc.eta[c];
    const double w1u1 = w1.dot(u1);
    out[st] = scale * (w0 * u0 + sgn * w1u1);
    out.segment(st + 1, d - 1) = scale * (sgn * u0 * w1 + u1 + (w1u1 / (1.0 + w0)) * w1);
  }
  return out;
}

struct Equilibration {
  VectorXd col;     // x = col .* xhat
  VectorXd row_a;   // bhat = row_a .* b
  VectorXd row_g;
};

Equilibration equilibrate(const ConeProblem& in, ConeProblem& out, const Cones& k, int passes) {
  const int n = in.n(), p = in.p(), m = in.m();
  Equilibration e{VectorXd::Ones(n), VectorXd::Ones(p), VectorXd::Ones(m)};
  out = in;
  for (int pass = 0; pass < passes; ++pass) {
    VectorXd cmax = VectorXd::Zero(n), ra = VectorXd::Zero(p), rg = VectorXd::Zero(m);
    for (int j = 0; j < out.A.outerSize(); ++j)
      for (SpMat::InnerIterator it(out.A, j); it; ++it) {
        const double v = std::abs(it.value());
        cmax[j] = std::max(cmax[j], v);
        ra[it.row()] = std::max(ra[it.row()], v);
      }
    for (int j = 0; j < out.G.outerSize(); ++j)
      for (SpMat::InnerIterator it(out.G, j); it; ++it) {
        const double v = std::abs(it.value());
        cmax[j] = std::max(cmax[j], v);
        rg[it.row()] = std::max(rg[it.row()], v);
      }
    for (std::size_t c = 0; c < k.dim.size(); ++c) {
      const double blk = rg.segment(k.start[c], k.dim[c]).maxCoeff();
      rg.segment(k.start[c], k.dim[c]).setConstant(blk);
    }
    auto fix = [](VectorXd& v) {
      for (auto& x : v) x = x < 1e-12 ? 1.0 : 1.0 / std::sqrt(x);
    };
    fix(cmax);
    fix(ra);
    fix(rg);
    out.A = ra.asDiagonal() * out.A * cmax.asDiagonal();
    out.G = rg.asDiagonal() * out.G * cmax.asDiagonal();
    e.col.array() *= cmax.array();
    e.row_a.array() *= ra.array();
    e.row_g.array() *= rg.array();
  }
  out.c = in.c.cwiseProduct(e.col);
  out.b = in.b.cwiseProduct(e.row_a);
  out.h = in.h.cwiseProduct(e.row_g);
  out.A.makeCompressed();
  out.G.makeCompressed();
  return e;
}

// Quasi-definite KKT system [0 A' G'; A 0 0; G 0 -W^2] with static
// regularization, stored lower-triangular with a fixed sparsity pattern.
class Kkt {
 public:
  Kkt(const ConeProblem& p, const Cones& k, double reg) : n_(p.n()), p_(p.p()), m_(p.m()), k_(k), base_reg_(reg), reg_(reg) {
    const int N = n_ + p_ + m_;
    std::vector<Eigen::Triplet<double>> tr;
    for (int i = 0; i < n_; ++i) tr.emplace_back(i, i, 0.0);
    for (int j = 0; j < p.A.outerSize(); ++j)
      for (SpMat::InnerIterator it(p.A, j); it; ++it) tr.emplace_back(n_ + it.row(), j, it.value());
    for (int i = 0; i < p_; ++i) tr.emplace_back(n_ + i, n_ + i, 0.0);
    for (int j = 0; j < p.G.outerSize(); ++j)
      for (SpMat::InnerIterator it(p.G, j); it; ++it) tr.emplace_back(n_ + p_ + it.row(), j, it.value());
    const int zoff = n_ + p_;
    for (int i = 0; i < k.l; ++i) tr.emplace_back(zoff + i, zoff + i, 0.0);
    for (std::size_t c = 0; c < k.dim.size(); ++c)
      for (int a = 0; a < k.dim[c]; ++a)
        for (int b = 0; b <= a; ++b) tr.emplace_back(zoff + k.start[c] + a, zoff + k.start[c] + b, 0.0);
    K_.resize(N, N);
    K_.setFromTriplets(tr.begin(), tr.end());
    K_.makeCompressed();

    diag_.resize(N);
    for (int i = 0; i < N; ++i) diag_[i] = slot(i, i);
    for (std::size_t c = 0; c < k.dim.size(); ++c) {
      std::vector<int> slots;
      for (int a = 0; a < k.dim[c]; ++a)
        for (int b = 0; b <= a; ++b) slots.push_back(slot(zoff + k.start[c] + a, zoff + k.start[c] + b));
      soc_slots_.push_back(std::move(slots));
    }
    reg_diag_ = VectorXd::Constant(N, -reg_);
    reg_diag_.head(n_).setConstant(reg_);
    ldlt_.analyzePattern(K_);
  }

  // Retries with a larger static regularization when a pivot vanishes;
  // iterative refinement against the unregularized matrix absorbs it.
  bool factor(const Scaling& sc) {
    for (double reg = base_reg_; reg <= base_reg_ * 1e6; reg *= 1e3) {
      set_values(sc, reg);
      ldlt_.factorize(K_);
      if (ldlt_.info() == Eigen::Success) return true;
    }
    return false;
  }

  void set_values(const Scaling& sc, double reg) {
    reg_ = reg;
    reg_diag_.setConstant(-reg_);
    reg_diag_.head(n_).setConstant(reg_);
    double* v = K_.valuePtr();
    const int zoff = n_ + p_;
    for (int i = 0; i < n_; ++i) v[diag_[i]] = reg_;
    for (int i = 0; i < p_; ++i) v[diag_[n_ + i]] = -reg_;
    for (int i = 0; i < k_.l; ++i) v[diag_[zoff + i]] = -sc.w[i] * sc.w[i] - reg_;
    for (std::size_t c = 0; c < k_.dim.size(); ++c) {
      const auto& wb = sc.wbar[c];
      const double e2 = sc.eta[c] * sc.eta[c];
      std::size_t s = 0;
      for (int a = 0; a < k_.dim[c]; ++a)
        for (int b = 0; b <= a; ++b) {
          double val = 2.0 * wb[a] * wb[b];
          if (a == b) val -= (a == 0 ? 1.0 : -1.0);
          val = -e2 * val;
          if (a == b) val -= reg_;
          v[soc_slots_[c][s++]] = val;
        }
    }
  }

  VectorXd solve(const VectorXd& rhs, int refine) const {
    VectorXd u = ldlt_.solve(rhs);
    const double target = 1e-14 * (1.0 + rhs.lpNorm<Eigen::Infinity>());
    for (int it = 0; it < refine; ++it) {
      VectorXd r = rhs - multiply(u);
      if (r.lpNorm<Eigen::Infinity>() <= target) break;
      u += ldlt_.solve(r);
    }
    return u;
  }

 private:
  int slot(int row, int col) const {
    const int* outer = K_.outerIndexPtr();
    const int* inner = K_.innerIndexPtr();
    const int* first = inner + outer[col];
    const int* last = inner + outer[col + 1];
    const int* hit = std::lower_bound(first, last, row);
    return static_cast<int>(hit - inner);
  }

  // Unregularized K times u.
  VectorXd multiply(const VectorXd& u) const {
    VectorXd out = K_.selfadjointView<Eigen::Lower>() * u;
    out -= reg_diag_.cwiseProduct(u);
    return out;
  }

  int n_, p_, m_;
  const Cones& k_;
  double base_reg_;
  double reg_;
  SpMat K_;
  std::vector<int> diag_;
  std::vector<std::vector<int>> soc_slots_;
  VectorXd reg_diag_;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

IpmResult solve_scaled(const ConeProblem& P, const Cones& k, const IpmSettings& cfg) {
  const int n = P.n(), p = P.p(), m = P.m();
  const int N = n + p + m;
  IpmResult res;
  Kkt kkt(P, k, cfg.static_reg);

  // Initial point from two least-squares style solves with W = I.
  Scaling unit;
  unit.w = VectorXd::Ones(k.l);
  for (std::size_t c = 0; c < k.dim.size(); ++c) {
    VectorXd e = VectorXd::Zero(k.dim[c]);
    e[0] = 1.0;
    unit.wbar.push_back(e);
    unit.eta.push_back(1.0);
  }
  if (!kkt.factor(unit)) return res;
  VectorXd rhs(N);
  rhs << VectorXd::Zero(n), P.b, P.h;
  VectorXd u = kkt.solve(rhs, cfg.refinement_steps);
  VectorXd x = u.head(n);
  VectorXd s = -u.tail(m);
  shift_into_cone(k, s);
  rhs << -P.c, VectorXd::Zero(p), VectorXd::Zero(m);
  u = kkt.solve(rhs, cfg.refinement_steps);
  VectorXd y = u.segment(n, p);
  VectorXd z = u.tail(m);
  shift_into_cone(k, z);
  double tau = 1.0, kappa = 1.0;

  const double bnorm = std::max({1.0, P.b.norm(), P.h.norm()});
  const double cnorm = std::max(1.0, P.c.norm());
  const double D = k.degree();
  const VectorXd e_id = [&] {
    VectorXd e = VectorXd::Zero(m);
    add_identity(k, e, 1.0);
    return e;
  }();

  Scaling sc;
  // Best iterate seen, kept for when late iterations drift after a stall.
  IpmResult best;
  double best_merit = std::numeric_limits<double>::infinity();
  for (int it = 0; it <= cfg.max_iterations; ++it) {
    res.iterations = it;
    const VectorXd Fx = P.A.transpose() * y + P.G.transpose() * z + P.c * tau;
    const VectorXd Fy = P.b * tau - P.A * x;
    const VectorXd Fz = P.h * tau - P.G * x - s;
    const double cx = P.c.dot(x), by_hz = P.b.dot(y) + P.h.dot(z);
    const double Ft = kappa + cx + by_hz;
    const double mu = (s.dot(z) + tau * kappa) / (D + 1.0);

    res.pres = std::max(Fy.norm(), Fz.norm()) / tau / bnorm;
    res.dres = Fx.norm() / tau / cnorm;
    res.pcost = cx / tau;
    res.dcost = -by_hz / tau;
    res.gap = s.dot(z) / (tau * tau);
    const double relgap = res.gap / std::max(1e-12, std::min(std::abs(res.pcost), std::abs(res.dcost)));
    if (cfg.verbose)
      std::fprintf(stderr, "ipm %3d pcost %+.8e dcost %+.8e gap %.2e pres %.2e dres %.2e k/t %.2e\n", it, res.pcost,
                   res.dcost, res.gap, res.pres, res.dres, kappa / tau);

    res.x = x / tau;
    res.y = y / tau;
    res.z = z / tau;
    res.s = s / tau;
    const double merit = std::max({res.pres, res.dres, std::min(res.gap, relgap * cfg.abstol / cfg.reltol)});
    if (merit < best_merit) {
      best_merit = merit;
      best = res;
    }
    if (res.pres < cfg.feastol && res.dres < cfg.feastol && (res.gap < cfg.abstol || relgap < cfg.reltol)) {
      res.status = IpmStatus::optimal;
      return res;
    }
    // Infeasibility certificates.
    if (by_hz < 0 && tau < kappa) {
      const double r = (P.A.transpose() * y + P.G.transpose() * z).norm() / std::max(1.0, (y.norm() + z.norm())) /
                       (-by_hz / std::max(1.0, y.norm() + z.norm()));
      if (r < cfg.feastol) {
        res.status = IpmStatus::primal_infeasible;
        res.y = y / -by_hz;
        res.z = z / -by_hz;
        return res;
      }
    }
    if (cx < 0 && tau < kappa) {
      const double r = std::max((P.A * x).norm(), (P.G * x + s).norm()) / -cx;
      if (r < cfg.feastol) {
        res.status = IpmStatus::dual_infeasible;
        res.x = x / -cx;
        return res;
      }
    }
    if (it == cfg.max_iterations) break;

    if (!compute_scaling(k, s, z, sc)) break;
    sc.lambda = apply_w(k, sc, z, false);
    if (!kkt.factor(sc)) break;

    rhs << -P.c, P.b, P.h;
    const VectorXd u1 = kkt.solve(rhs, cfg.refinement_steps);
    const double denom = P.c.dot(u1.head(n)) + P.b.dot(u1.segment(n, p)) + P.h.dot(u1.tail(m)) - kappa / tau;

    // Direction for residual scale `f` and complementarity targets rs, rk.
    struct Dir {
      VectorXd dx, dy, dz, ds;
      double dtau, dkappa;
    };
    auto direction = [&](double f, const VectorXd& rs, double rk) {
      const VectorXd lam_rs = jordan_div(k, sc.lambda, rs);
      const VectorXd wlr = apply_w(k, sc, lam_rs, false);
      VectorXd r2(N);
      r2 << -f * Fx, f * Fy, f * Fz + wlr;
      const VectorXd u2 = kkt.solve(r2, cfg.refinement_steps);
      Dir d;
      const double num = -f * Ft + rk / tau - P.c.dot(u2.head(n)) - P.b.dot(u2.segment(n, p)) - P.h.dot(u2.tail(m));
      d.dtau = num / denom;
      d.dx = u2.head(n) + d.dtau * u1.head(n);
      d.dy = u2.segment(n, p) + d.dtau * u1.segment(n, p);
      d.dz = u2.tail(m) + d.dtau * u1.tail(m);
      // ds = -W (lambda \ rs) - W^2 dz
      d.ds = -wlr - apply_w(k, sc, apply_w(k, sc, d.dz, false), false);
      d.dkappa = -(rk + kappa * d.dtau) / tau;
      return d;
    };
    auto step_length = [&](const Dir& d) {
      double a = std::min(max_step(k, s, d.ds), max_step(k, z, d.dz));
      if (d.dtau < 0) a = std::min(a, -tau / d.dtau);
      if (d.dkappa < 0) a = std::min(a, -kappa / d.dkappa);
      return a;
    };

    const VectorXd lamlam = jordan(k, sc.lambda, sc.lambda);
    const Dir aff = direction(1.0, lamlam, tau * kappa);
    const double a_aff = std::min(1.0, step_length(aff));
    const double sigma = std::clamp(std::pow(1.0 - a_aff, 3), 0.0, 1.0);

    const VectorXd ds_s = apply_w(k, sc, aff.ds, true);
    const VectorXd dz_s = apply_w(k, sc, aff.dz, false);
    const VectorXd rs = lamlam + jordan(k, ds_s, dz_s) - sigma * mu * e_id;
    const double rk = tau * kappa + aff.dtau * aff.dkappa - sigma * mu;
    const Dir cmb = direction(1.0 - sigma, rs, rk);
    const double amax = step_length(cmb);
    const double a = std::min(1.0, 0.99 * amax);
    if (!(a > 1e-12)) break;

    x += a * cmb.dx;
    y += a * cmb.dy;
    z += a * cmb.dz;
    s += a * cmb.ds;
    tau += a * cmb.dtau;
    kappa += a * cmb.dkappa;
    if (!(tau > 0) || !(kappa > 0) || !x.allFinite()) break;
  }

  // Stalled or out of iterations: accept a loosely converged point.
  const int iterations = res.iterations;
  if (best_merit < std::numeric_limits<double>::infinity()) res = best;
  res.iterations = iterations;
  const double loose = cfg.inaccurate_factor;
  if (res.pres < cfg.feastol * loose && res.dres < cfg.feastol * loose &&
      (res.gap < cfg.abstol * loose ||
       res.gap / std::max(1e-12, std::min(std::abs(res.pcost), std::abs(res.dcost))) < cfg.reltol * loose)) {
    res.status = IpmStatus::optimal_inaccurate;
  } else {
    res.status = res.iterations >= cfg.max_iterations ? IpmStatus::max_iterations : IpmStatus::numerical_error;
  }
  return res;
}

}  // namespace

IpmResult EmbeddedIpm::solve(const ConeProblem& problem) {
  const Cones k(problem);
  if (k.m != problem.m()) {
    IpmResult bad;
    bad.status = IpmStatus::numerical_error;
    return bad;
  }
  ConeProblem scaled;
  const auto eq = equilibrate(problem, scaled, k, settings_.equilibration_passes);
  IpmResult r = solve_scaled(scaled, k, settings_);
  if (r.x.size() == problem.n()) r.x = r.x.cwiseProduct(eq.col);
  if (r.y.size() == problem.p()) r.y = r.y.cwiseProduct(eq.row_a);
  if (r.z.size() == problem.m()) r.z = r.z.cwiseProduct(eq.row_g);
  if (r.s.size() == problem.m()) r.s = r.s.cwiseQuotient(eq.row_g);
  if (r.status == IpmStatus::optimal || r.status == IpmStatus::optimal_inaccurate) {
    r.pcost = problem.c.dot(r.x);
    r.dcost = -problem.b.dot(r.y) - problem.h.dot(r.z);
  }
  return r;
}

std::unique_ptr<ConicEngine> make_default_engine(IpmSettings settings) {
  return std::make_unique<EmbeddedIpm>(settings);
}

}  // namespace restore
