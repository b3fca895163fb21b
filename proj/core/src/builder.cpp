#include "restore/builder.hpp"

#include <algorithm>
#include <cmath>

namespace restore {

namespace {

std::string tag(const std::string& base, const std::string& a, int t = -1) {
  std::string s = base + "[" + a;
  if (t >= 0) s += "," + std::to_string(t);
  return s + "]";
}

template <typename T>
bool contains(const std::vector<T>& v, const T& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

double vmax2(const Grid& g) { return g.limits().v_max * g.limits().v_max; }
double vmin2(const Grid& g) { return g.limits().v_min * g.limits().v_min; }

// Largest demand the load model can produce at this node and step.
double peak_demand(double base, double k, double v_max_sq) {
  return base * std::max(1.0, 1.0 + 0.5 * k * (v_max_sq - 1.0));
}

bool is_oltc_modeled(const RestorationCase& rc, std::size_t r) {
  return contains(rc.omega_sub, r) || contains(rc.frozen_oltc, r);
}

}  // namespace

double ModelContext::priority(std::size_t node) const {
  const auto& n = g().nodes()[node];
  auto it = cfg.priority_overrides.find(n.id);
  return it == cfg.priority_overrides.end() ? n.priority : it->second;
}

bool ModelContext::frozen(std::size_t regulator) const {
  if (cfg.freeze_regulators) return true;
  return cfg.frozen_regulators.contains(g().regulators()[regulator].id);
}

void declare_variables(ModelContext& ctx) {
  const auto& rc = ctx.rc;
  const auto& g = ctx.g();
  auto& P = ctx.prog();
  auto& ix = ctx.ix();
  const auto nn = g.nodes().size();
  const auto nl = g.lines().size();
  const auto nr = g.regulators().size();
  const auto nt = ctx.hours.size();
  const double v2max = vmax2(g);
  ix.steps = nt;

  ix.Y.assign(nl, kNoVar);
  ix.Z_fwd.assign(nl, kNoVar);
  ix.Z_bwd.assign(nl, kNoVar);
  ix.S.assign(nl, kNoVar);
  ix.X_line.assign(nl, kNoVar);
  ix.L.assign(nn, kNoVar);
  ix.X_node.assign(nn, kNoVar);
  ix.B.assign(nn, kNoVar);
  ix.E.assign(rc.zones.zones.size(), kNoVar);
  ix.alpha.assign(nr, kNoVar);
  ix.tap.assign(nr, kNoVar);
  ix.T.assign(nr, kNoVar);
  ix.delta.assign(nr, {});

  // Switched decision lines in line order.
  for (auto l : rc.W_star) {
    if (!rc.is_switched_decision(l)) continue;
    const auto& line = g.lines()[l];
    double ub = 1.0;
    const auto zf = rc.zones.node_zone[g.line_from(l)];
    const auto zt = rc.zones.node_zone[g.line_to(l)];
    if (zf == zt) ub = 0.0;
    ix.Y[l] = P.add_variable(tag("Y", line.id), VarKind::binary, 0.0, ub);
  }
  for (auto l : rc.W_star) {
    if (ix.Y[l] == kNoVar) continue;
    const auto& line = g.lines()[l];
    double fwd_ub = 1.0, bwd_ub = 1.0;
    if (contains(rc.W_ava, l)) {
      // Orientation is fixed away from the virtual source.
      if (rc.in_N_star[g.line_from(l)])
        fwd_ub = 0.0;
      else
        bwd_ub = 0.0;
    }
    ix.Z_fwd[l] = P.add_variable(tag("Z", line.from + ">" + line.to), VarKind::continuous, 0.0, fwd_ub);
    ix.Z_bwd[l] = P.add_variable(tag("Z", line.to + ">" + line.from), VarKind::continuous, 0.0, bwd_ub);
  }
  for (auto l : rc.W_sec) ix.S[l] = P.add_variable(tag("S", g.lines()[l].id), VarKind::continuous, 0.0, 1.0);
  for (auto p : rc.Z_star) ix.E[p] = P.add_variable(tag("E", std::to_string(p)), VarKind::continuous, 0.0, 1.0);
  for (auto i : rc.N) {
    const double lb = rc.in_N_star[i] ? 0.0 : 1.0;
    ix.X_node[i] = P.add_variable(tag("X", g.nodes()[i].id), VarKind::continuous, lb, 1.0);
  }
  for (auto l : rc.W) {
    const bool star = contains(rc.W_star, l);
    ix.X_line[l] = P.add_variable(tag("Xl", g.lines()[l].id), VarKind::continuous, star ? 0.0 : 1.0, 1.0);
  }
  for (auto i : rc.N) {
    if (rc.in_N_star[i])
      ix.L[i] = P.add_variable(tag("L", g.nodes()[i].id), VarKind::binary, 0.0, 1.0);
    else
      ix.L[i] = P.add_variable(tag("L", g.nodes()[i].id), VarKind::continuous, 1.0, 1.0);
  }
  for (auto i : rc.N_star) ix.B[i] = P.add_variable(tag("B", g.nodes()[i].id), VarKind::continuous, 0.0, 1.0);

  for (std::size_t r = 0; r < nr; ++r) {
    const auto& reg = g.regulators()[r];
    const bool frozen = ctx.frozen(r);
    switch (reg.kind) {
      case RegulatorKind::oltc: {
        if (!is_oltc_modeled(rc, r)) break;
        const bool fixed = frozen || contains(rc.frozen_oltc, r);
        const double range = reg.n_steps * reg.sigma;
        ix.alpha[r] = P.add_variable(tag("alpha", reg.id), VarKind::continuous, fixed ? reg.initial : -range,
                                     fixed ? reg.initial : range);
        ix.T[r] = P.add_variable(tag("T", reg.id), VarKind::continuous, 0.0, fixed ? 0.0 : 2.0 * reg.n_steps);
        break;
      }
      case RegulatorKind::svr: {
        if (!contains(rc.omega_svr, r)) break;
        const int n = reg.n_steps;
        const int init = reg.initial_tap();
        ix.tap[r] = P.add_variable(tag("dr", reg.id), VarKind::integer, frozen ? init : -n, frozen ? init : n);
        for (int k = -n; k <= n; ++k) {
          const double ub = frozen && k != init ? 0.0 : 1.0;
          const double lb = frozen && k == init ? 1.0 : 0.0;
          ix.delta[r].push_back(P.add_variable(tag("delta", reg.id + "," + std::to_string(k)), VarKind::binary, lb, ub));
        }
        ix.T[r] = P.add_variable(tag("T", reg.id), VarKind::continuous, 0.0, frozen ? 0.0 : 2.0 * n);
        break;
      }
      case RegulatorKind::cb: {
        if (!contains(rc.omega_cb, r)) break;
        const int init = reg.initial_tap();
        ix.tap[r] = P.add_variable(tag("dr", reg.id), VarKind::integer, frozen ? init : 0, frozen ? init : reg.n_steps);
        ix.T[r] = P.add_variable(tag("T", reg.id), VarKind::continuous, 0.0, frozen ? 0.0 : reg.n_steps);
        break;
      }
    }
  }

  const BigM& bm = ctx.big_m;
  auto per_t = [nt](std::size_t n) { return std::vector<std::vector<std::size_t>>(nt, std::vector<std::size_t>(n, kNoVar)); };
  ix.V = per_t(nn);
  ix.PD = per_t(nn);
  ix.QD = per_t(nn);
  ix.Pcur = per_t(nn);
  ix.Qcur = per_t(nn);
  ix.Psub = per_t(nn);
  ix.Qsub = per_t(nn);
  ix.p = per_t(nl);
  ix.q = per_t(nl);
  ix.F = per_t(nl);
  ix.Fstar = per_t(nl);
  ix.beta = per_t(nr);
  ix.Qcb = per_t(nr);
  ix.b.assign(nt, std::vector<std::vector<std::size_t>>(nr));
  ix.Pdg = per_t(g.dgs().size());
  ix.Qdg = per_t(g.dgs().size());

  for (std::size_t t = 0; t < nt; ++t) {
    const int ti = static_cast<int>(t);
    for (auto i : rc.N) {
      const auto& node = g.nodes()[i];
      double lb = rc.in_N_star[i] ? 0.0 : vmin2(g);
      double ub = v2max;
      if (node.kind == NodeKind::substation) {
        bool has_oltc = false;
        for (std::size_t r = 0; r < nr; ++r)
          has_oltc |= ix.alpha[r] != kNoVar && g.regulators()[r].location == node.id;
        if (!has_oltc) lb = ub = 1.0;
      }
      ix.V[t][i] = P.add_variable(tag("V", node.id, ti), VarKind::continuous, lb, ub, ti);
    }
    for (auto i : rc.N) {
      const auto& node = g.nodes()[i];
      if (node.kind != NodeKind::load) continue;
      const double pmax = peak_demand(ctx.P0[t][i], node.kp, v2max);
      const double qmax = peak_demand(ctx.Q0[t][i], node.kq, v2max);
      ix.PD[t][i] = P.add_variable(tag("PD", node.id, ti), VarKind::continuous, 0.0, pmax, ti);
      ix.QD[t][i] = P.add_variable(tag("QD", node.id, ti), VarKind::continuous, 0.0, qmax, ti);
      const bool star = rc.in_N_star[i];
      ix.Pcur[t][i] = P.add_variable(tag("Pcur", node.id, ti), VarKind::continuous, 0.0, star ? pmax : 0.0, ti);
      ix.Qcur[t][i] = P.add_variable(tag("Qcur", node.id, ti), VarKind::continuous, 0.0, star ? qmax : 0.0, ti);
    }
    for (auto i : rc.N) {
      const auto& node = g.nodes()[i];
      if (node.kind != NodeKind::substation) continue;
      const double cap = node.rating.value_or(bm.flow);
      ix.Psub[t][i] = P.add_variable(tag("Psub", node.id, ti), VarKind::continuous, -cap, cap, ti);
      ix.Qsub[t][i] = P.add_variable(tag("Qsub", node.id, ti), VarKind::continuous, -cap, cap, ti);
    }
    for (auto l : rc.W) {
      const auto& line = g.lines()[l];
      const double pm = std::min(bm.flow, line.f_max * g.limits().v_max);
      ix.p[t][l] = P.add_variable(tag("p", line.id, ti), VarKind::continuous, -pm, pm, ti);
      ix.q[t][l] = P.add_variable(tag("q", line.id, ti), VarKind::continuous, -pm, pm, ti);
      ix.F[t][l] = P.add_variable(tag("F", line.id, ti), VarKind::continuous, 0.0, line.f_max * line.f_max, ti);
      if (!line.is_virtual_regulator_link)
        ix.Fstar[t][l] = P.add_variable(tag("Fstar", line.id, ti), VarKind::continuous, 0.0,
                                        line.f_max * line.f_max, ti);
    }
    for (std::size_t r = 0; r < nr; ++r) {
      const auto& reg = g.regulators()[r];
      if (reg.kind == RegulatorKind::svr && ix.tap[r] != kNoVar) {
        const double n = reg.n_steps;
        ix.beta[t][r] = P.add_variable(tag("beta", reg.id, ti), VarKind::continuous, -n * v2max, n * v2max, ti);
        for (int k = -reg.n_steps; k <= reg.n_steps; ++k) {
          if (k == 0) {
            ix.b[t][r].push_back(kNoVar);
            continue;
          }
          ix.b[t][r].push_back(
              P.add_variable(tag("b", reg.id + "," + std::to_string(k), ti), VarKind::continuous, 0.0, v2max, ti));
        }
      }
      if (reg.kind == RegulatorKind::cb && ix.tap[r] != kNoVar)
        ix.Qcb[t][r] = P.add_variable(tag("Qcb", reg.id, ti), VarKind::continuous, 0.0, reg.n_steps * reg.dq_step, ti);
    }
    for (auto d : rc.omega_dg) {
      const auto& dg = g.dgs()[d];
      ix.Pdg[t][d] = P.add_variable(tag("Pdg", dg.id, ti), VarKind::continuous, 0.0, dg.p_max, ti);
      ix.Qdg[t][d] = P.add_variable(tag("Qdg", dg.id, ti), VarKind::continuous, dg.q_min, dg.q_max, ti);
    }
  }
}

void build_reconfiguration(ModelContext& ctx) {
  const auto& rc = ctx.rc;
  const auto& g = ctx.g();
  auto& P = ctx.prog();
  const auto& ix = ctx.ix();

  for (auto l : rc.W_star) {
    if (ix.Y[l] == kNoVar) continue;
    const auto& id = g.lines()[l].id;
    if (contains(rc.W_ava, l)) {
      const auto into = rc.in_N_star[g.line_from(l)] ? ix.Z_bwd[l] : ix.Z_fwd[l];
      P.add_row(tag("recon.tie_orientation", id), {{into, 1.0}, {ix.Y[l], -1.0}}, Sense::eq, 0.0);
    } else {
      P.add_row(tag("recon.orientation", id), {{ix.Z_fwd[l], 1.0}, {ix.Z_bwd[l], 1.0}, {ix.Y[l], -1.0}}, Sense::eq,
                0.0);
    }
  }

  // One entering orientation per energized zone.
  for (auto p : rc.Z_star) {
    std::vector<Term> terms;
    for (auto l : rc.W_star) {
      if (ix.Y[l] == kNoVar) continue;
      const bool from_in = rc.zones.node_zone[g.line_from(l)] == p;
      const bool to_in = rc.zones.node_zone[g.line_to(l)] == p;
      if (from_in == to_in) continue;
      terms.push_back({to_in ? ix.Z_fwd[l] : ix.Z_bwd[l], 1.0});
    }
    if (terms.empty())
      ctx.out.warnings.push_back("zone " + std::to_string(p) + " has no switched line: structurally unrestorable");
    terms.push_back({ix.E[p], -1.0});
    P.add_row(tag("recon.zone_inflow", std::to_string(p)), std::move(terms), Sense::eq, 0.0);
  }

  // Energized switched lines must carry current at every step.
  const double inv_m = 1.0 / ctx.out.m_energize;
  for (auto l : rc.W_star) {
    if (ix.Y[l] == kNoVar) continue;
    for (std::size_t t = 0; t < ix.steps; ++t)
      P.add_row(tag("recon.energized_flow", g.lines()[l].id, static_cast<int>(t)),
                {{ix.F[t][l], 1.0}, {ix.Y[l], -inv_m}}, Sense::ge, 0.0);
  }

  for (auto i : rc.N_star) {
    const auto& id = g.nodes()[i].id;
    P.add_row(tag("recon.node_energized", id), {{ix.X_node[i], 1.0}, {ix.E[rc.zones.node_zone[i]], -1.0}}, Sense::eq,
              0.0);
    P.add_row(tag("recon.load_supplied", id), {{ix.L[i], 1.0}, {ix.X_node[i], -1.0}}, Sense::le, 0.0);
  }

  // A closed switched line is energized, so both of its ends are. Without
  // this, a DG inside a sourceless island can hold up current on closed
  // switches there.
  for (auto l : rc.W_star) {
    if (ix.Y[l] == kNoVar) continue;
    const auto& id = g.lines()[l].id;
    if (rc.in_N_star[g.line_from(l)])
      P.add_row(tag("recon.closed_from", id), {{ix.Y[l], 1.0}, {ix.X_node[g.line_from(l)], -1.0}}, Sense::le, 0.0);
    if (rc.in_N_star[g.line_to(l)])
      P.add_row(tag("recon.closed_to", id), {{ix.Y[l], 1.0}, {ix.X_node[g.line_to(l)], -1.0}}, Sense::le, 0.0);
  }

  for (auto l : rc.W_star) {
    const auto& id = g.lines()[l].id;
    if (ix.Y[l] != kNoVar) {
      P.add_row(tag("recon.line_energized", id), {{ix.X_line[l], 1.0}, {ix.Y[l], -1.0}}, Sense::eq, 0.0);
    } else {
      const auto z = *rc.zones.line_zone[l];
      P.add_row(tag("recon.line_energized", id), {{ix.X_line[l], 1.0}, {ix.E[z], -1.0}}, Sense::eq, 0.0);
    }
  }
}

void build_switching(ModelContext& ctx) {
  const auto& rc = ctx.rc;
  const auto& g = ctx.g();
  auto& P = ctx.prog();
  const auto& ix = ctx.ix();
  for (auto l : rc.W_sec) {
    const auto& id = g.lines()[l].id;
    // S >= (1 - Y) + X_end - 1 for both ends.
    P.add_row(tag("switch.sec_from", id), {{ix.S[l], 1.0}, {ix.Y[l], 1.0}, {ix.X_node[g.line_from(l)], -1.0}},
              Sense::ge, 0.0);
    P.add_row(tag("switch.sec_to", id), {{ix.S[l], 1.0}, {ix.Y[l], 1.0}, {ix.X_node[g.line_to(l)], -1.0}}, Sense::ge,
              0.0);
  }
  for (auto i : rc.N_star)
    P.add_row(tag("switch.breaker", g.nodes()[i].id), {{ix.B[i], 1.0}, {ix.L[i], 1.0}, {ix.X_node[i], -1.0}},
              Sense::ge, 0.0);
}

void build_regulators(ModelContext& ctx) {
  const auto& g = ctx.g();
  auto& P = ctx.prog();
  const auto& ix = ctx.ix();
  const double v2max = vmax2(g);
  for (std::size_t r = 0; r < g.regulators().size(); ++r) {
    const auto& reg = g.regulators()[r];
    switch (reg.kind) {
      case RegulatorKind::oltc: {
        if (ix.alpha[r] == kNoVar) break;
        const auto sub = g.node_index(reg.location);
        for (std::size_t t = 0; t < ix.steps; ++t)
          P.add_row(tag("reg.oltc_voltage", reg.id, static_cast<int>(t)), {{ix.V[t][sub], 1.0}, {ix.alpha[r], -2.0}},
                    Sense::eq, 1.0);
        // T >= |alpha - alpha0| / sigma - 1
        const double s = reg.sigma;
        P.add_row(tag("reg.oltc_change_up", reg.id), {{ix.T[r], 1.0}, {ix.alpha[r], -1.0 / s}}, Sense::ge,
                  -reg.initial / s - 1.0);
        P.add_row(tag("reg.oltc_change_down", reg.id), {{ix.T[r], 1.0}, {ix.alpha[r], 1.0 / s}}, Sense::ge,
                  reg.initial / s - 1.0);
        break;
      }
      case RegulatorKind::svr: {
        if (ix.tap[r] == kNoVar) break;
        const int n = reg.n_steps;
        const auto link = g.line_index(reg.link);
        const auto vi = g.line_from(link);
        const auto vj = g.line_to(link);
        std::vector<Term> one, expansion{{ix.tap[r], 1.0}};
        std::vector<double> weights;
        for (int k = -n; k <= n; ++k) {
          const auto d = ix.delta[r][static_cast<std::size_t>(k + n)];
          one.push_back({d, 1.0});
          if (k != 0) expansion.push_back({d, -static_cast<double>(k)});
          weights.push_back(k);
        }
        P.add_row(tag("reg.svr_select", reg.id), std::move(one), Sense::eq, 1.0);
        P.add_row(tag("reg.svr_expansion", reg.id), std::move(expansion), Sense::eq, 0.0);
        P.add_sos1(tag("sos.svr", reg.id), ix.delta[r], weights);
        const double M = v2max;
        for (std::size_t t = 0; t < ix.steps; ++t) {
          const int ti = static_cast<int>(t);
          std::vector<Term> beta_def{{ix.beta[t][r], 1.0}};
          for (int k = -n; k <= n; ++k) {
            if (k == 0) continue;
            const auto kk = static_cast<std::size_t>(k + n);
            const auto bk = ix.b[t][r][kk];
            const auto d = ix.delta[r][kk];
            const std::string key = reg.id + "," + std::to_string(k);
            P.add_row(tag("reg.svr_b_on", key, ti), {{bk, 1.0}, {d, -M}}, Sense::le, 0.0);
            P.add_row(tag("reg.svr_b_le_v", key, ti), {{bk, 1.0}, {ix.V[t][vi], -1.0}}, Sense::le, 0.0);
            P.add_row(tag("reg.svr_b_ge_v", key, ti), {{bk, 1.0}, {ix.V[t][vi], -1.0}, {d, -M}}, Sense::ge, -M);
            beta_def.push_back({bk, -static_cast<double>(k)});
          }
          P.add_row(tag("reg.svr_beta", reg.id, ti), std::move(beta_def), Sense::eq, 0.0);
          P.add_row(tag("reg.svr_voltage", reg.id, ti),
                    {{ix.V[t][vj], 1.0}, {ix.V[t][vi], -1.0}, {ix.beta[t][r], -2.0 * reg.sigma}}, Sense::eq, 0.0);
        }
        const double init = reg.initial_tap();
        P.add_row(tag("reg.svr_change_up", reg.id), {{ix.T[r], 1.0}, {ix.tap[r], -1.0}}, Sense::ge, -init);
        P.add_row(tag("reg.svr_change_down", reg.id), {{ix.T[r], 1.0}, {ix.tap[r], 1.0}}, Sense::ge, init);
        break;
      }
      case RegulatorKind::cb: {
        if (ix.tap[r] == kNoVar) break;
        for (std::size_t t = 0; t < ix.steps; ++t)
          P.add_row(tag("reg.cb_injection", reg.id, static_cast<int>(t)),
                    {{ix.Qcb[t][r], 1.0}, {ix.tap[r], -reg.dq_step}}, Sense::eq, 0.0);
        const double init = reg.initial_tap();
        P.add_row(tag("reg.cb_change_up", reg.id), {{ix.T[r], 1.0}, {ix.tap[r], -1.0}}, Sense::ge, -init);
        P.add_row(tag("reg.cb_change_down", reg.id), {{ix.T[r], 1.0}, {ix.tap[r], 1.0}}, Sense::ge, init);
        break;
      }
    }
  }
}

void build_load_model(ModelContext& ctx) {
  const auto& rc = ctx.rc;
  const auto& g = ctx.g();
  auto& P = ctx.prog();
  const auto& ix = ctx.ix();
  for (std::size_t t = 0; t < ix.steps; ++t) {
    const int ti = static_cast<int>(t);
    for (auto i : rc.N) {
      if (ix.PD[t][i] == kNoVar) continue;
      const auto& node = g.nodes()[i];
      // D = D0 (1 + k/2 (V - 1)); inside the off-outage area the nominal
      // point is scaled by X so a de-energized node reports its full demand.
      auto emit = [&](const char* name, std::size_t var, double base, double k) {
        const double h = 0.5 * k * base;
        if (rc.in_N_star[i])
          P.add_row(tag(name, node.id, ti), {{var, 1.0}, {ix.V[t][i], -h}, {ix.X_node[i], h}}, Sense::eq, base);
        else
          P.add_row(tag(name, node.id, ti), {{var, 1.0}, {ix.V[t][i], -h}}, Sense::eq, base - h);
      };
      emit("load.active", ix.PD[t][i], ctx.P0[t][i], node.kp);
      emit("load.reactive", ix.QD[t][i], ctx.Q0[t][i], node.kq);
    }
  }
}

void build_opf(ModelContext& ctx) {
  const auto& rc = ctx.rc;
  const auto& g = ctx.g();
  auto& P = ctx.prog();
  const auto& ix = ctx.ix();
  const double v2max = vmax2(g);
  const double v2min = vmin2(g);
  const double m_volt = ctx.big_m.volt;

  for (std::size_t t = 0; t < ix.steps; ++t) {
    const int ti = static_cast<int>(t);

    // Curtailment links; the multiplier is the node's peak demand.
    for (auto i : rc.N_star) {
      if (ix.PD[t][i] == kNoVar) continue;
      const auto& node = g.nodes()[i];
      const auto& vars = P.variables();
      for (int part = 0; part < 2; ++part) {
        const auto d = part == 0 ? ix.PD[t][i] : ix.QD[t][i];
        const auto c = part == 0 ? ix.Pcur[t][i] : ix.Qcur[t][i];
        const double M = std::max(vars[d].ub, 1e-9);
        const std::string key = std::string(part == 0 ? "p," : "q,") + node.id;
        P.add_row(tag("opf.served_nonneg", key, ti), {{d, 1.0}, {c, -1.0}}, Sense::ge, 0.0);
        P.add_row(tag("opf.served_if_supplied", key, ti), {{d, 1.0}, {c, -1.0}, {ix.L[i], -M}}, Sense::le, 0.0);
        P.add_row(tag("opf.curtailed_if_rejected", key, ti), {{c, 1.0}, {ix.L[i], M}}, Sense::le, M);
      }
    }

    for (auto l : rc.W) {
      const auto& line = g.lines()[l];
      const bool star = contains(rc.W_star, l);
      const auto from = g.line_from(l);
      const auto to = g.line_to(l);
      if (star) {
        const double pm = P.variables()[ix.p[t][l]].ub;
        P.add_row(tag("opf.ampacity", line.id, ti), {{ix.F[t][l], 1.0}, {ix.X_line[l], -line.f_max * line.f_max}},
                  Sense::le, 0.0);
        P.add_row(tag("opf.p_upper", line.id, ti), {{ix.p[t][l], 1.0}, {ix.X_line[l], -pm}}, Sense::le, 0.0);
        P.add_row(tag("opf.p_lower", line.id, ti), {{ix.p[t][l], 1.0}, {ix.X_line[l], pm}}, Sense::ge, 0.0);
        P.add_row(tag("opf.q_upper", line.id, ti), {{ix.q[t][l], 1.0}, {ix.X_line[l], -pm}}, Sense::le, 0.0);
        P.add_row(tag("opf.q_lower", line.id, ti), {{ix.q[t][l], 1.0}, {ix.X_line[l], pm}}, Sense::ge, 0.0);
      }
      // Linear voltage drop, relaxed on de-energized lines. Ratio links use
      // the regulator equation instead.
      if (!line.is_virtual_regulator_link) {
        std::vector<Term> drop{{ix.V[t][from], 1.0},
                               {ix.V[t][to], -1.0},
                               {ix.p[t][l], -2.0 * line.r},
                               {ix.q[t][l], -2.0 * line.x}};
        if (star) {
          auto up = drop;
          up.push_back({ix.X_line[l], m_volt});
          P.add_row(tag("opf.voltage_drop_upper", line.id, ti), std::move(up), Sense::le, m_volt);
          drop.push_back({ix.X_line[l], -m_volt});
          P.add_row(tag("opf.voltage_drop_lower", line.id, ti), std::move(drop), Sense::ge, -m_volt);
        } else {
          P.add_row(tag("opf.voltage_drop", line.id, ti), std::move(drop), Sense::eq, 0.0);
        }
      } else {
        bool regulated = false;
        for (std::size_t r = 0; r < g.regulators().size(); ++r)
          regulated |= ix.tap[r] != kNoVar && g.regulators()[r].link == line.id;
        if (!regulated)  // regulator outside the model: ideal link at its initial tap
          for (const auto& reg : g.regulators())
            if (reg.link == line.id)
              P.add_row(tag("opf.fixed_ratio", line.id, ti),
                        {{ix.V[t][to], 1.0}, {ix.V[t][from], -(1.0 + 2.0 * reg.sigma * reg.initial_tap())}}, Sense::eq,
                        0.0);
      }
      // Relaxed current definition: F V >= p^2 + q^2 as a rotated cone.
      AffineExpr e0, e1, e2, e3;
      e0.add(ix.F[t][l], 1.0).add(ix.V[t][from], 1.0);
      e1.add(ix.p[t][l], 2.0);
      e2.add(ix.q[t][l], 2.0);
      e3.add(ix.F[t][l], 1.0).add(ix.V[t][from], -1.0);
      P.add_cone(tag("opf.current_cone", line.id, ti), {e0, e1, e2, e3});
    }

    for (auto i : rc.N_star) {
      const auto& id = g.nodes()[i].id;
      P.add_row(tag("opf.voltage_min", id, ti), {{ix.V[t][i], 1.0}, {ix.X_node[i], -v2min}}, Sense::ge, 0.0);
      P.add_row(tag("opf.voltage_max", id, ti), {{ix.V[t][i], 1.0}, {ix.X_node[i], -v2max}}, Sense::le, 0.0);
    }

    // Nodal balances with signed branch flows and sending-end losses.
    for (auto j : rc.N) {
      std::vector<Term> pt, qt;
      for (auto l : g.incident(j)) {
        if (!rc.in_W[l]) continue;
        const auto& line = g.lines()[l];
        if (g.line_to(l) == j) {
          pt.push_back({ix.p[t][l], 1.0});
          pt.push_back({ix.F[t][l], -line.r});
          qt.push_back({ix.q[t][l], 1.0});
          qt.push_back({ix.F[t][l], -line.x});
        } else {
          pt.push_back({ix.p[t][l], -1.0});
          qt.push_back({ix.q[t][l], -1.0});
        }
      }
      if (ix.Psub[t][j] != kNoVar) {
        pt.push_back({ix.Psub[t][j], 1.0});
        qt.push_back({ix.Qsub[t][j], 1.0});
      }
      if (ix.PD[t][j] != kNoVar) {
        pt.push_back({ix.PD[t][j], -1.0});
        pt.push_back({ix.Pcur[t][j], 1.0});
        qt.push_back({ix.QD[t][j], -1.0});
        qt.push_back({ix.Qcur[t][j], 1.0});
      }
      for (auto d : rc.omega_dg)
        if (g.node_index(g.dgs()[d].node) == j) {
          pt.push_back({ix.Pdg[t][d], 1.0});
          qt.push_back({ix.Qdg[t][d], 1.0});
        }
      for (std::size_t r = 0; r < g.regulators().size(); ++r)
        if (ix.Qcb[t][r] != kNoVar && g.node_index(g.regulators()[r].location) == j) qt.push_back({ix.Qcb[t][r], 1.0});
      const auto& id = g.nodes()[j].id;
      P.add_row(tag("opf.balance_p", id, ti), std::move(pt), Sense::eq, 0.0);
      P.add_row(tag("opf.balance_q", id, ti), std::move(qt), Sense::eq, 0.0);
    }

    for (auto d : rc.omega_dg) {
      const auto& dg = g.dgs()[d];
      AffineExpr e0(dg.s_max), e1, e2;
      e1.add(ix.Pdg[t][d], 1.0);
      e2.add(ix.Qdg[t][d], 1.0);
      P.add_cone(tag("opf.dg_apparent", dg.id, ti), {e0, e1, e2});
    }
    for (auto i : rc.N) {
      const auto& node = g.nodes()[i];
      if (ix.Psub[t][i] == kNoVar || !node.rating) continue;
      AffineExpr e0(*node.rating), e1, e2;
      e1.add(ix.Psub[t][i], 1.0);
      e2.add(ix.Qsub[t][i], 1.0);
      P.add_cone(tag("opf.substation_rating", node.id, ti), {e0, e1, e2});
    }
  }
}

void build_objective(ModelContext& ctx) {
  const auto& rc = ctx.rc;
  const auto& g = ctx.g();
  auto& P = ctx.prog();
  const auto& ix = ctx.ix();
  auto& notes = ctx.out.notes;
  auto guard = [&notes](double v, const char* what) {
    if (v > 0.0) return v;
    notes.push_back(std::string("normalizer of ") + what + " is zero; using 1");
    return 1.0;
  };

  ObjectiveTerm re{"F_re", {}, 0.0, 1, 1.0};
  double re_max = 0.0;
  for (std::size_t t = 0; t < ix.steps; ++t)
    for (auto i : rc.N_star) {
      if (ix.Pcur[t][i] == kNoVar) continue;
      const double d = ctx.priority(i);
      if (ctx.cfg.curtailment == CurtailmentBasis::nominal) {
        // D (P0 + Q0)(1 - L): a rejected node costs its nominal demand.
        const double w = d * (ctx.P0[t][i] + ctx.Q0[t][i]);
        re.expr.constant += w;
        re.expr.add(ix.L[i], -w);
        re_max += w;
      } else {
        re.expr.add(ix.Pcur[t][i], d).add(ix.Qcur[t][i], d);
        re_max += d * (P.variables()[ix.Pcur[t][i]].ub + P.variables()[ix.Qcur[t][i]].ub);
      }
    }
  re.normalizer = guard(re_max, "F_re");
  P.add_objective(std::move(re));

  ObjectiveTerm sw{"F_sw", {}, 0.0, 2, 1.0};
  double sw_max = 0.0;
  for (auto l : rc.W_star) {
    if (ix.Y[l] == kNoVar) continue;
    const auto& line = g.lines()[l];
    if (line.is_tie()) {
      sw.expr.add(ix.Y[l], line.sw->weight);
      sw_max += line.sw->weight;
    } else {
      sw.expr.add(ix.S[l], line.sw->weight);
      sw_max += line.sw->weight;
    }
  }
  for (auto i : rc.N_star) {
    sw.expr.add(ix.B[i], g.nodes()[i].breaker_weight);
    sw_max += g.nodes()[i].breaker_weight;
  }
  sw.normalizer = guard(sw_max, "F_sw");
  P.add_objective(std::move(sw));

  ObjectiveTerm dev{"F_op_current", {}, 0.0, 3, ctx.cfg.w1};
  double dev_max = 0.0;
  for (std::size_t t = 0; t < ix.steps; ++t)
    for (auto l : rc.W) {
      if (ix.Fstar[t][l] == kNoVar) continue;
      const auto& line = g.lines()[l];
      const double thr2 = line.f_thr * line.f_thr;
      P.add_row(tag("obj.deviation", line.id, static_cast<int>(t)), {{ix.Fstar[t][l], 1.0}, {ix.F[t][l], -1.0}},
                Sense::ge, -thr2);
      dev.expr.add(ix.Fstar[t][l], 1.0);
      dev_max += line.f_max * line.f_max - thr2;
    }
  dev.normalizer = guard(dev_max, "F_op current deviation");
  P.add_objective(std::move(dev));

  ObjectiveTerm taps{"F_op_taps", {}, 0.0, 3, ctx.cfg.w2};
  double tap_max = 0.0;
  for (std::size_t r = 0; r < g.regulators().size(); ++r) {
    if (ix.T[r] == kNoVar) continue;
    const auto& reg = g.regulators()[r];
    const double ub = P.variables()[ix.T[r]].ub;
    if (ub <= 0.0) continue;
    taps.expr.add(ix.T[r], 1.0);
    tap_max += reg.kind == RegulatorKind::oltc ? 2.0 * reg.n_steps - 1.0 : ub;
  }
  taps.normalizer = guard(tap_max, "F_op tap changes");
  P.add_objective(std::move(taps));

  if (ctx.cfg.tightening_stage) {
    ObjectiveTerm tight{"tightening", {}, 0.0, 4, 1.0};
    double f_max = 0.0;
    for (std::size_t t = 0; t < ix.steps; ++t)
      for (auto l : rc.W) {
        tight.expr.add(ix.F[t][l], 1.0);
        f_max += P.variables()[ix.F[t][l]].ub;
      }
    tight.normalizer = guard(f_max, "tightening");
    P.add_objective(std::move(tight));
  }
}

BuiltProgram assemble(const RestorationCase& rc, const BuildConfig& cfg) {
  if (rc.horizon.steps() == 0) throw BuildError("empty horizon: at least one time step is required");
  BuiltProgram out;
  ModelContext ctx{rc, cfg, out, resolve_big_m(rc.g()), rc.horizon.hours(), {}, {}};
  const auto& g = rc.g();
  const auto nn = g.nodes().size();
  ctx.P0.assign(ctx.hours.size(), std::vector<double>(nn, 0.0));
  ctx.Q0 = ctx.P0;
  std::size_t floored = 0;
  for (std::size_t t = 0; t < ctx.hours.size(); ++t)
    for (std::size_t i = 0; i < nn; ++i) {
      ctx.P0[t][i] = g.load_p(i, ctx.hours[t]);
      ctx.Q0[t][i] = g.load_q(i, ctx.hours[t]);
      if (rc.in_N_star[i] && g.nodes()[i].kind == NodeKind::load && ctx.P0[t][i] < cfg.load_floor) {
        ctx.P0[t][i] = cfg.load_floor;
        ++floored;
      }
    }
  if (floored > 0)
    out.notes.push_back("demand floor of " + std::to_string(cfg.load_floor) + " p.u. applied to " +
                        std::to_string(floored) + " off-outage node-steps");
  out.m_energize = g.limits().big_m.energize.value_or(1e6);

  declare_variables(ctx);
  build_reconfiguration(ctx);
  build_switching(ctx);
  build_regulators(ctx);
  build_load_model(ctx);
  build_opf(ctx);
  build_objective(ctx);
  if (cfg.tighten_big_m) {
    const auto changed = tighten_big_m(out.program);
    if (changed > 0) out.notes.push_back("big-M tightening changed " + std::to_string(changed) + " row(s)");
  }
  out.P0 = ctx.P0;
  out.Q0 = ctx.Q0;
  out.program.validate();
  return out;
}

std::size_t tighten_big_m(ConicProgram& program) {
  const auto& vars = program.variables();
  std::size_t changed = 0;
  for (auto& row : program.mutable_rows()) {
    if (row.sense == Sense::eq) continue;
    const double sign = row.sense == Sense::le ? 1.0 : -1.0;  // work on the <= form
    double rhs = sign * row.rhs;
    double maxact = 0.0;
    bool finite = true;
    bool has_binary = false;
    for (const auto& t : row.terms) {
      const double a = sign * t.coef;
      const auto& v = vars[t.var];
      const double hi = a > 0 ? a * v.ub : a * v.lb;
      if (!std::isfinite(hi)) finite = false;
      maxact += hi;
      has_binary |= v.kind == VarKind::binary && v.lb == 0.0 && v.ub == 1.0;
    }
    if (!finite || !has_binary) continue;
    bool touched = false;
    for (auto& t : row.terms) {
      const auto& v = vars[t.var];
      if (!(v.kind == VarKind::binary && v.lb == 0.0 && v.ub == 1.0)) continue;
      double a = sign * t.coef;
      if (a > 0 && maxact - a < rhs - 1e-12) {
        const double d = rhs - (maxact - a);
        a -= d;
        rhs -= d;
        maxact -= d;
        touched = true;
      } else if (a < 0 && maxact + a < rhs - 1e-12) {
        const double d = rhs - (maxact + a);
        a += d;
        touched = true;
      }
      t.coef = sign * a;
    }
    if (touched) {
      row.rhs = sign * rhs;
      ++changed;
    }
  }
  return changed;
}

}  // namespace restore
