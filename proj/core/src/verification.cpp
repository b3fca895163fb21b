#include "restore/verification.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "restore/power_flow.hpp"

namespace restore {

namespace {

bool on(const std::vector<double>& x, std::size_t var) { return var != kNoVar && x[var] >= 0.5; }

double at(const std::vector<double>& x, std::size_t var) { return var == kNoVar ? 0.0 : x[var]; }

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
};

}  // namespace

std::string DiscretePlan::describe() const {
  std::ostringstream os;
  bool first = true;
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (values[k] == 0) continue;
    os << (first ? "" : " ") << names[k] << "=" << values[k];
    first = false;
  }
  return os.str();
}

std::string DiscretePlan::diff(const DiscretePlan& other) const {
  std::ostringstream os;
  if (names != other.names) return "plans cover different variables";
  for (std::size_t k = 0; k < names.size(); ++k)
    if (values[k] != other.values[k]) os << names[k] << ": " << values[k] << " vs " << other.values[k] << "; ";
  return os.str();
}

std::vector<OltcSpec> oltc_specs(const BuiltProgram& built, const Grid& grid) {
  std::vector<OltcSpec> out;
  for (std::size_t r = 0; r < grid.regulators().size(); ++r) {
    const auto var = built.index.alpha[r];
    if (var == kNoVar) continue;
    const auto& reg = grid.regulators()[r];
    out.push_back({reg.id, var, reg.sigma, reg.n_steps, reg.initial});
  }
  return out;
}

DiscretePlan discrete_plan(const BuiltProgram& built, const std::vector<OltcSpec>& oltcs, const std::vector<double>& x) {
  DiscretePlan plan;
  const auto& P = built.program;
  for (auto v : P.discrete_variables()) {
    plan.names.push_back(P.variables()[v].name);
    plan.values.push_back(static_cast<int>(std::lround(x[v])));
  }
  for (const auto& o : oltcs) {
    plan.names.push_back("tap[" + o.id + "]");
    plan.values.push_back(static_cast<int>(std::lround(x[o.var] / o.sigma)));
  }
  return plan;
}

double snap_indicators(const BuiltProgram& built, std::vector<double>& x, double tol) {
  double moved = 0.0;
  auto snap = [&](const std::vector<std::size_t>& vars) {
    for (auto v : vars) {
      if (v == kNoVar) continue;
      const double r = std::round(x[v]);
      if ((r == 0.0 || r == 1.0) && std::abs(x[v] - r) <= tol) {
        moved = std::max(moved, std::abs(x[v] - r));
        x[v] = r;
      }
    }
  };
  snap(built.index.S);
  snap(built.index.B);
  return moved;
}

RadialityCheck check_radiality(const RestorationCase& rc, const BuiltProgram& built, const std::vector<double>& x,
                               double tol) {
  RadialityCheck out;
  const auto& g = rc.g();
  const auto& ix = built.index;
  const auto nn = g.nodes().size();
  auto fail = [&](std::string why) {
    out.pass = false;
    out.failures.push_back(std::move(why));
  };

  std::vector<bool> energized(nn, false);
  for (auto i : rc.N) energized[i] = on(x, ix.X_node[i]);

  UnionFind uf(nn);
  for (auto l : rc.W) {
    const auto& line = g.lines()[l];
    const auto a = g.line_from(l), b = g.line_to(l);
    if (ix.Y[l] != kNoVar && on(x, ix.Y[l]) != on(x, ix.X_line[l]))
      fail("line " + line.id + ": switch state and energization disagree");
    if (!on(x, ix.X_line[l])) continue;
    ++out.energized_lines;
    if (!energized[a] || !energized[b]) fail("line " + line.id + " is energized but an endpoint is not");
    if (!uf.unite(a, b)) {
      out.offending_lines.push_back(line.id);
      fail("line " + line.id + " closes a cycle");
    }
  }

  // One substation per energized component.
  std::vector<std::size_t> sources(nn, 0);
  for (auto i : rc.N) {
    if (!energized[i]) continue;
    ++out.energized_nodes;
    if (g.nodes()[i].kind == NodeKind::substation) {
      ++out.energized_sources;
      ++sources[uf.find(i)];
    }
  }
  for (auto i : rc.N) {
    if (!energized[i] || uf.find(i) != i) continue;
    if (sources[i] == 0) fail("energized component containing node " + g.nodes()[i].id + " has no source");
    if (sources[i] > 1) fail("energized component containing node " + g.nodes()[i].id + " joins " +
                             std::to_string(sources[i]) + " sources");
  }
  if (out.pass && out.energized_lines + out.energized_sources != out.energized_nodes)
    fail("energized line count does not equal nodes minus sources");

  // De-energized areas: grouped by the lines between isolated nodes.
  UnionFind dead(nn);
  for (auto l : rc.W) {
    const auto a = g.line_from(l), b = g.line_to(l);
    if (rc.in_N[a] && rc.in_N[b] && !energized[a] && !energized[b]) dead.unite(a, b);
  }
  std::vector<std::optional<std::size_t>> slot(nn);
  for (auto i : rc.N) {
    if (energized[i]) continue;
    const auto root = dead.find(i);
    if (!slot[root]) {
      slot[root] = out.isolated.size();
      out.isolated.emplace_back();
    }
    out.isolated[*slot[root]].nodes.push_back(g.nodes()[i].id);
    const auto& id = g.nodes()[i].id;
    if (on(x, ix.L[i])) fail("isolated node " + id + " is marked supplied");
    if (ix.B[i] != kNoVar && at(x, ix.B[i]) > tol) fail("isolated node " + id + " has an operated breaker");
    for (std::size_t t = 0; t < ix.steps; ++t) {
      if (std::abs(at(x, ix.V[t][i])) > tol) fail("isolated node " + id + " has nonzero voltage");
      const double served = at(x, ix.PD[t][i]) - at(x, ix.Pcur[t][i]);
      if (std::abs(served) > tol) fail("isolated node " + id + " has served load");
    }
  }
  for (auto l : rc.W) {
    if (on(x, ix.X_line[l])) continue;
    double norm = 0.0;
    for (std::size_t t = 0; t < ix.steps; ++t)
      norm = std::max({norm, std::abs(at(x, ix.p[t][l])), std::abs(at(x, ix.q[t][l])), std::abs(at(x, ix.F[t][l]))});
    const auto& line = g.lines()[l];
    if (norm > tol) fail("de-energized line " + line.id + " carries flow");
    for (auto end : {g.line_from(l), g.line_to(l)}) {
      if (!rc.in_N[end] || energized[end]) continue;
      auto& comp = out.isolated[*slot[dead.find(end)]];
      comp.flow_norm = std::max(comp.flow_norm, norm);
    }
  }
  return out;
}

ConeCheck check_cone_exactness(const RestorationCase& rc, const BuiltProgram& built, const std::vector<double>& x,
                               double tol) {
  ConeCheck out;
  const auto& g = rc.g();
  const auto& ix = built.index;
  bool first = true;
  for (std::size_t t = 0; t < ix.steps; ++t)
    for (auto l : rc.W) {
      const double F = at(x, ix.F[t][l]), p = at(x, ix.p[t][l]), q = at(x, ix.q[t][l]);
      const double V = at(x, ix.V[t][g.line_from(l)]);
      const double res = F * V - (p * p + q * q);
      if (first) {
        out.max_residual = out.min_residual = res;
        first = false;
      }
      out.max_residual = std::max(out.max_residual, res);
      out.min_residual = std::min(out.min_residual, res);
      if (std::abs(res) > tol) {
        out.flagged.push_back({g.lines()[l].id, t, res});
        out.pass = false;
      }
    }
  return out;
}

bool VerificationReport::pass() const {
  return radiality.pass && cone.pass && ac.converged && ac.voltage_mismatch <= ac_tol;
}

std::string VerificationReport::summary() const {
  std::ostringstream os;
  os << "radiality " << (radiality.pass ? "pass" : "fail") << "; cone max " << cone.max_residual << " ("
     << cone.flagged.size() << " flagged); ac ";
  if (ac.converged)
    os << "dV " << ac.voltage_mismatch << " dS " << ac.flow_mismatch;
  else
    os << "not converged: " << ac.message;
  if (oracle_gap) os << "; oracle gap " << *oracle_gap;
  return os.str();
}

VerificationReport verify_solution(const RestorationCase& rc, const BuiltProgram& built, const std::vector<double>& x,
                                   double cone_tol, double ac_tol) {
  VerificationReport rep;
  rep.cone_tol = cone_tol;
  rep.ac_tol = ac_tol;
  rep.radiality = check_radiality(rc, built, x);
  rep.cone = check_cone_exactness(rc, built, x, cone_tol);
  rep.ac = resimulate_ac(rc, built, x);
  return rep;
}

RandomInstance random_instance(std::uint64_t seed, const RandomInstanceSpec& spec) {
  std::mt19937_64 rng(seed);
  auto uniform = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  auto pick = [&](std::size_t a, std::size_t b) { return std::uniform_int_distribution<std::size_t>(a, b)(rng); };
  struct LineClass {
    double r, x;
  };
  const LineClass classes[] = {{0.002, 0.0015}, {0.004, 0.003}, {0.006, 0.005}};

  for (;;) {
    GridData d;
    const std::size_t total = pick(spec.min_nodes, spec.max_nodes);
    const std::size_t ties = pick(spec.min_ties, spec.max_ties);
    const std::size_t feeders = total >= 8 && ties >= 2 ? pick(2, 3) : 2;
    std::vector<std::vector<std::size_t>> members(feeders);
    for (std::size_t f = 0; f < feeders; ++f) {
      Node s;
      s.id = "S" + std::to_string(f + 1);
      s.kind = NodeKind::substation;
      members[f].push_back(d.nodes.size());
      d.nodes.push_back(s);
    }
    for (std::size_t k = 0; d.nodes.size() < std::max(total, 3 * feeders); ++k) {
      Node n;
      n.id = "n" + std::to_string(k + 1);
      n.kind = NodeKind::load;
      n.base_load_p = uniform(spec.load_min, spec.load_max);
      n.base_load_q = n.base_load_p * uniform(0.3, 0.6);
      const double kp[] = {0.0, 0.6, 1.2};
      const double kq[] = {0.0, 1.2, 2.0};
      n.kp = kp[pick(0, 2)];
      n.kq = kq[pick(0, 2)];
      // Every feeder gets at least two loads before the rest are spread out.
      const std::size_t f = k < 2 * feeders ? k % feeders : pick(0, feeders - 1);
      const auto parent = members[f][pick(0, members[f].size() - 1)];
      const auto& cls = classes[pick(0, 2)];
      Line l;
      l.from = d.nodes[parent].id;
      l.to = n.id;
      l.id = l.from + "-" + l.to;
      l.r = cls.r;
      l.x = cls.x;
      l.f_max = 2.0;
      l.f_thr = 0.5;
      if (uniform(0.0, 1.0) < spec.sectionalizer_probability) {
        Switch sw;
        sw.remote = uniform(0.0, 1.0) < 0.5;
        sw.weight = sw.remote ? 1.0 : 2.0;
        l.sw = sw;
      }
      members[f].push_back(d.nodes.size());
      d.nodes.push_back(n);
      d.lines.push_back(l);
    }
    std::size_t placed = 0;
    for (std::size_t tries = 0; placed < ties && tries < 50; ++tries) {
      // The first ties chain the feeders so every substation is reachable.
      std::size_t fa = placed, fb = placed + 1;
      if (placed + 1 >= feeders) {
        fa = pick(0, feeders - 1);
        fb = pick(0, feeders - 2);
        if (fb >= fa) ++fb;
      }
      const auto a = members[fa][pick(1, members[fa].size() - 1)];
      const auto b = members[fb][pick(1, members[fb].size() - 1)];
      const std::string id = d.nodes[a].id + "-" + d.nodes[b].id;
      const std::string rev = d.nodes[b].id + "-" + d.nodes[a].id;
      if (std::any_of(d.lines.begin(), d.lines.end(), [&](const Line& l) { return l.id == id || l.id == rev; }))
        continue;
      const auto& cls = classes[pick(0, 2)];
      Line l;
      l.id = id;
      l.from = d.nodes[a].id;
      l.to = d.nodes[b].id;
      l.r = cls.r;
      l.x = cls.x;
      const double tie_capacity[] = {0.25, 0.5, 2.0};
      l.f_max = tie_capacity[pick(0, 2)];
      l.f_thr = std::min(0.5, l.f_max);
      Switch sw;
      sw.kind = SwitchKind::tie;
      sw.normally_open = true;
      sw.remote = uniform(0.0, 1.0) < 0.5;
      sw.weight = sw.remote ? 1.0 : 2.0;
      l.sw = sw;
      d.lines.push_back(l);
      ++placed;
    }
    if (placed + 1 < feeders) continue;
    if (uniform(0.0, 1.0) < spec.cb_probability) {
      Regulator cb;
      cb.id = "CB1";
      cb.kind = RegulatorKind::cb;
      cb.location = d.nodes[pick(feeders, d.nodes.size() - 1)].id;
      cb.n_steps = static_cast<int>(pick(1, static_cast<std::size_t>(spec.cb_max_steps)));
      cb.dq_step = uniform(0.02, 0.08);
      d.regulators.push_back(cb);
    }
    auto grid = std::make_shared<const Grid>(std::move(d));

    std::vector<std::size_t> order;
    for (std::size_t l = 0; l < grid->lines().size(); ++l)
      if (!grid->lines()[l].is_tie()) order.push_back(l);
    std::shuffle(order.begin(), order.end(), rng);
    for (auto l : order) {
      const auto& id = grid->lines()[l].id;
      try {
        const auto rc = isolate_fault(grid, id, Horizon{12, 13});
        if (rc.no_restoration_path || rc.N_star.empty() || rc.N_star.size() > spec.max_off_outage_nodes) continue;
        return {seed, grid, id};
      } catch (const TopologyError&) {
      }
    }
  }
}

}  // namespace restore
