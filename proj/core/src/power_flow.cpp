#include "restore/power_flow.hpp"

#include <cmath>
#include <queue>

namespace restore {

namespace {

double at(const std::vector<double>& x, std::size_t var) { return var == kNoVar ? 0.0 : x[var]; }

struct Tree {
  std::vector<std::size_t> order;   // parents before children
  std::vector<std::size_t> parent;  // node -> parent node
  std::vector<std::size_t> via;     // node -> line to parent
  std::vector<bool> root;
};

Tree energized_forest(const RestorationCase& rc, const BuiltProgram& built, const std::vector<double>& x) {
  const auto& g = rc.g();
  const auto& ix = built.index;
  const auto nn = g.nodes().size();
  Tree tr{{}, std::vector<std::size_t>(nn, kNoVar), std::vector<std::size_t>(nn, kNoVar), std::vector<bool>(nn)};
  std::vector<bool> seen(nn, false);
  for (auto s : rc.N) {
    if (g.nodes()[s].kind != NodeKind::substation || at(x, ix.X_node[s]) < 0.5 || seen[s]) continue;
    std::queue<std::size_t> bfs;
    bfs.push(s);
    seen[s] = true;
    tr.root[s] = true;
    while (!bfs.empty()) {
      const auto u = bfs.front();
      bfs.pop();
      tr.order.push_back(u);
      for (auto l : g.incident(u)) {
        if (!rc.in_W[l] || at(x, ix.X_line[l]) < 0.5) continue;
        const auto c = g.line_from(l) == u ? g.line_to(l) : g.line_from(l);
        if (seen[c]) continue;
        seen[c] = true;
        tr.parent[c] = u;
        tr.via[c] = l;
        bfs.push(c);
      }
    }
  }
  return tr;
}

// Squared-voltage ratio of the ideal link, from side to to side.
double link_ratio(const Grid& g, const BuiltProgram& built, const std::vector<double>& x, std::size_t line) {
  for (std::size_t r = 0; r < g.regulators().size(); ++r) {
    const auto& reg = g.regulators()[r];
    if (reg.kind != RegulatorKind::svr || g.line_index(reg.link) != line) continue;
    const double k = built.index.tap[r] != kNoVar ? std::round(x[built.index.tap[r]]) : reg.initial_tap();
    return 1.0 + 2.0 * reg.sigma * k;
  }
  return 1.0;
}

}  // namespace

SweepResult sweep_step(const RestorationCase& rc, const BuiltProgram& built, const std::vector<double>& x,
                       std::size_t t, double tol, std::size_t max_iter) {
  const auto& g = rc.g();
  const auto& ix = built.index;
  const auto nn = g.nodes().size();
  const auto nl = g.lines().size();
  SweepResult out;
  out.v2.assign(nn, 0.0);
  out.p.assign(nl, 0.0);
  out.q.assign(nl, 0.0);
  out.F.assign(nl, 0.0);

  const Tree tr = energized_forest(rc, built, x);

  // Fixed injections: DG dispatch and capacitor output.
  std::vector<double> gen_p(nn, 0.0), gen_q(nn, 0.0);
  for (auto d : rc.omega_dg) {
    const auto j = g.node_index(g.dgs()[d].node);
    gen_p[j] += at(x, ix.Pdg[t][d]);
    gen_q[j] += at(x, ix.Qdg[t][d]);
  }
  for (std::size_t r = 0; r < g.regulators().size(); ++r)
    if (ix.Qcb[t][r] != kNoVar) gen_q[g.node_index(g.regulators()[r].location)] += x[ix.Qcb[t][r]];

  std::vector<double> ratio(nl, 1.0);
  for (auto u : tr.order)
    if (!tr.root[u] && g.lines()[tr.via[u]].is_virtual_regulator_link) ratio[tr.via[u]] = link_ratio(g, built, x, tr.via[u]);

  std::vector<double> v2(nn, 0.0), cur(nl, 0.0), send_p(nn), send_q(nn), recv_p(nn), recv_q(nn);
  for (auto u : tr.order) v2[u] = tr.root[u] ? x[ix.V[t][u]] : x[ix.V[t][u]] > 0 ? x[ix.V[t][u]] : 1.0;

  for (out.iterations = 1; out.iterations <= max_iter; ++out.iterations) {
    // Backward: power received at each node from its parent line.
    for (auto u : tr.order) {
      double pd = 0.0, qd = 0.0;
      if (ix.PD[t][u] != kNoVar && at(x, ix.L[u]) >= 0.5) {
        const auto& node = g.nodes()[u];
        pd = built.P0[t][u] * (1.0 + 0.5 * node.kp * (v2[u] - 1.0));
        qd = built.Q0[t][u] * (1.0 + 0.5 * node.kq * (v2[u] - 1.0));
      }
      recv_p[u] = pd - gen_p[u];
      recv_q[u] = qd - gen_q[u];
    }
    for (auto it = tr.order.rbegin(); it != tr.order.rend(); ++it) {
      const auto c = *it;
      if (tr.root[c]) continue;
      const auto l = tr.via[c];
      const auto& line = g.lines()[l];
      cur[l] = (recv_p[c] * recv_p[c] + recv_q[c] * recv_q[c]) / v2[c];
      send_p[c] = recv_p[c] + line.r * cur[l];
      send_q[c] = recv_q[c] + line.x * cur[l];
      recv_p[tr.parent[c]] += send_p[c];
      recv_q[tr.parent[c]] += send_q[c];
    }
    // Forward: voltages from the roots down.
    double change = 0.0;
    for (auto c : tr.order) {
      if (tr.root[c]) continue;
      const auto l = tr.via[c];
      const auto& line = g.lines()[l];
      const auto u = tr.parent[c];
      double next;
      if (line.is_virtual_regulator_link)
        next = g.line_from(l) == u ? v2[u] * ratio[l] : v2[u] / ratio[l];
      else
        next = v2[u] - 2.0 * (line.r * send_p[c] + line.x * send_q[c]) +
               (line.r * line.r + line.x * line.x) * cur[l];
      if (!(next > 0.0)) {
        out.message = "voltage collapsed at node " + g.nodes()[c].id;
        return out;
      }
      change = std::max(change, std::abs(next - v2[c]));
      v2[c] = next;
    }
    if (change < tol) {
      out.converged = true;
      break;
    }
  }
  if (!out.converged) {
    out.iterations = max_iter;
    out.message = "sweep did not converge in " + std::to_string(max_iter) + " iterations";
    return out;
  }

  out.v2 = v2;
  for (auto c : tr.order) {
    if (tr.root[c]) continue;
    const auto l = tr.via[c];
    out.F[l] = cur[l];
    if (g.line_from(l) == tr.parent[c]) {
      out.p[l] = send_p[c];
      out.q[l] = send_q[c];
    } else {
      out.p[l] = -recv_p[c];
      out.q[l] = -recv_q[c];
    }
  }
  return out;
}

AcCheck resimulate_ac(const RestorationCase& rc, const BuiltProgram& built, const std::vector<double>& x, double tol,
                      std::size_t max_iter) {
  AcCheck out;
  out.converged = true;
  const auto& ix = built.index;
  for (std::size_t t = 0; t < ix.steps; ++t) {
    const auto s = sweep_step(rc, built, x, t, tol, max_iter);
    out.iterations = std::max(out.iterations, s.iterations);
    if (!s.converged) {
      out.converged = false;
      out.message = "step " + std::to_string(t) + ": " + s.message;
      return out;
    }
    for (auto i : rc.N) {
      const double solver = std::sqrt(std::max(0.0, at(x, ix.V[t][i])));
      out.voltage_mismatch = std::max(out.voltage_mismatch, std::abs(solver - std::sqrt(s.v2[i])));
    }
    for (auto l : rc.W)
      out.flow_mismatch = std::max({out.flow_mismatch, std::abs(at(x, ix.p[t][l]) - s.p[l]),
                                    std::abs(at(x, ix.q[t][l]) - s.q[l])});
  }
  return out;
}

}  // namespace restore
