#include "restore/brute_force.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace restore {

namespace {

struct Choice {
  std::size_t var;        // integer tap or OLTC ratio
  std::vector<double> values;
  std::vector<std::size_t> selectors;  // SVR delta binaries, one per value
};

struct Pattern {
  std::vector<bool> closed;            // per enumerated switch
  std::vector<std::size_t> free_loads; // N* nodes whose pickup is enumerated
};

struct Combo {
  std::size_t pattern;
  std::uint64_t loads;  // bit k: free_loads[k] picked up
  std::size_t taps;     // mixed-radix index over the tap choices
  double bound;         // lower bound on stage 1
};

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t a) {
  while (parent[a] != a) a = parent[a] = parent[parent[a]];
  return a;
}

}  // namespace

BruteForceResult brute_force(const RestorationCase& rc, const BuiltProgram& built, const BruteForceCaps& caps,
                             const SolverConfig& cfg, ConicEngine& engine) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  BruteForceResult out;
  const auto& g = rc.g();
  const auto& ix = built.index;
  const auto& P = built.program;
  const auto& vars = P.variables();
  const auto oltcs = oltc_specs(built, g);

  // Switches with a real choice, and the zone graph they act on.
  std::vector<std::size_t> switches;
  for (auto l : rc.W_star)
    if (ix.Y[l] != kNoVar && vars[ix.Y[l]].ub > 0.0) switches.push_back(l);
  if (switches.size() > 24) throw BruteForceError("too many switches to enumerate");
  const std::size_t nz = rc.zones.zones.size();
  const std::size_t source = nz;  // every node outside the off-outage area
  auto zone_of = [&](std::size_t node) { return rc.in_N_star[node] ? rc.zones.node_zone[node] : source; };

  std::vector<Pattern> patterns;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << switches.size()); ++mask) {
    std::vector<std::size_t> parent(nz + 1);
    std::iota(parent.begin(), parent.end(), 0);
    bool ok = true;
    Pattern pat;
    pat.closed.assign(switches.size(), false);
    for (std::size_t k = 0; k < switches.size() && ok; ++k) {
      if (!(mask >> k & 1)) continue;
      pat.closed[k] = true;
      const auto a = find_root(parent, zone_of(g.line_from(switches[k])));
      const auto b = find_root(parent, zone_of(g.line_to(switches[k])));
      if (a == b) ok = false;  // cycle, or a second path to a source
      parent[b] = a;
    }
    if (!ok) continue;
    // A closed switch outside the source's tree would carry no current.
    const auto src = find_root(parent, source);
    for (std::size_t k = 0; k < switches.size() && ok; ++k)
      if (pat.closed[k] && find_root(parent, zone_of(g.line_from(switches[k]))) != src) ok = false;
    if (!ok) continue;
    for (auto i : rc.N_star)
      if (find_root(parent, rc.zones.node_zone[i]) == src && vars[ix.L[i]].ub > 0.0) pat.free_loads.push_back(i);
    if (pat.free_loads.size() > 40) throw BruteForceError("too many load pickups to enumerate");
    patterns.push_back(std::move(pat));
  }

  std::vector<Choice> choices;
  for (std::size_t r = 0; r < g.regulators().size(); ++r) {
    const auto v = ix.tap[r];
    if (v == kNoVar) continue;
    Choice c{v, {}, {}};
    for (double k = vars[v].lb; k <= vars[v].ub; k += 1.0) {
      c.values.push_back(k);
      if (!ix.delta[r].empty()) c.selectors.push_back(ix.delta[r][static_cast<std::size_t>(k + g.regulators()[r].n_steps)]);
    }
    choices.push_back(std::move(c));
  }
  for (const auto& o : oltcs) {
    Choice c{o.var, {}, {}};
    if (vars[o.var].lb == vars[o.var].ub)
      c.values.push_back(vars[o.var].lb);
    else
      for (int k = -o.n_steps; k <= o.n_steps; ++k) c.values.push_back(k * o.sigma);
    choices.push_back(std::move(c));
  }
  std::size_t tap_combos = 1;
  for (const auto& c : choices) tap_combos *= c.values.size();

  // Stage-1 lower bound per node state. Curtailment terms use the smallest
  // demand the load model allows; load pickups enter with their value.
  enum State { dead, rejected, served };
  const auto nn = g.nodes().size();
  std::vector<std::array<double, 3>> node_cost(nn, {0.0, 0.0, 0.0});
  std::vector<std::size_t> owner(P.size(), kNoVar);
  std::vector<bool> is_p(P.size(), false);
  for (auto i : rc.N_star) {
    owner[ix.L[i]] = i;
    for (std::size_t t = 0; t < ix.steps; ++t)
      if (ix.Pcur[t][i] != kNoVar) {
        owner[ix.Pcur[t][i]] = owner[ix.Qcur[t][i]] = i;
        is_p[ix.Pcur[t][i]] = true;
      }
  }
  const double v2min = g.limits().v_min * g.limits().v_min;
  double bound_base = 0.0;
  const auto stage1 = P.stage_objective(1);
  bound_base += stage1.constant;
  for (const auto& term : stage1.terms) {
    const auto i = owner[term.var];
    if (i == kNoVar) {
      bound_base += term.coef * (term.coef > 0 ? vars[term.var].lb : vars[term.var].ub);
      continue;
    }
    if (term.var == ix.L[i]) {
      node_cost[i][served] += term.coef;
      continue;
    }
    const auto t = static_cast<std::size_t>(vars[term.var].time);
    const auto& n = g.nodes()[i];
    const double base = is_p[term.var] ? built.P0[t][i] : built.Q0[t][i];
    const double k = is_p[term.var] ? n.kp : n.kq;
    const double lo = base * std::max(0.0, 1.0 + 0.5 * k * (v2min - 1.0));
    const double hi = vars[term.var].ub;
    node_cost[i][dead] += term.coef * base;
    node_cost[i][rejected] += term.coef * (term.coef > 0 ? lo : hi);
  }

  std::vector<Combo> combos;
  std::size_t total = 0;
  for (const auto& pat : patterns) {
    const std::size_t per = (std::size_t{1} << pat.free_loads.size()) * tap_combos;
    total += per;
    if (total > caps.max_combos)
      throw BruteForceError("combination cap exceeded: more than " + std::to_string(caps.max_combos) + " assignments");
  }
  out.combos = total;
  combos.reserve(total);
  for (std::size_t pi = 0; pi < patterns.size(); ++pi) {
    const auto& pat = patterns[pi];
    double fixed = bound_base;
    std::vector<bool> live(nn, false);
    for (auto i : pat.free_loads) live[i] = true;
    for (auto i : rc.N_star)
      if (!live[i]) fixed += node_cost[i][dead];
    for (std::uint64_t lm = 0; lm < (std::uint64_t{1} << pat.free_loads.size()); ++lm) {
      double bound = fixed;
      for (std::size_t k = 0; k < pat.free_loads.size(); ++k)
        bound += node_cost[pat.free_loads[k]][(lm >> k & 1) ? served : rejected];
      for (std::size_t tc = 0; tc < tap_combos; ++tc) combos.push_back({pi, lm, tc, bound - 1e-9});
    }
  }
  std::stable_sort(combos.begin(), combos.end(), [](const Combo& a, const Combo& b) { return a.bound < b.bound; });

  std::vector<double> lb0(P.size()), ub0(P.size());
  for (std::size_t i = 0; i < P.size(); ++i) {
    lb0[i] = vars[i].lb;
    ub0[i] = vars[i].ub;
  }
  auto bounds_for = [&](const Combo& c, std::vector<double>& lb, std::vector<double>& ub) {
    lb = lb0;
    ub = ub0;
    const auto& pat = patterns[c.pattern];
    auto pin = [&](std::size_t v, double value) { lb[v] = ub[v] = value; };
    for (std::size_t k = 0; k < switches.size(); ++k) pin(ix.Y[switches[k]], pat.closed[k] ? 1.0 : 0.0);
    for (auto i : rc.N_star)
      if (vars[ix.L[i]].lb < vars[ix.L[i]].ub) pin(ix.L[i], 0.0);
    for (std::size_t k = 0; k < pat.free_loads.size(); ++k) pin(ix.L[pat.free_loads[k]], (c.loads >> k & 1) ? 1.0 : 0.0);
    std::size_t rest = c.taps;
    for (const auto& ch : choices) {
      const auto pick = rest % ch.values.size();
      rest /= ch.values.size();
      pin(ch.var, ch.values[pick]);
      for (std::size_t s = 0; s < ch.selectors.size(); ++s) pin(ch.selectors[s], s == pick ? 1.0 : 0.0);
    }
  };

  const int stages = P.max_stage();
  auto slack = [&](double v) { return cfg.epsilon * std::max(1.0, std::abs(v)); };
  struct Entry {
    std::size_t combo;
    double value;
    std::vector<double> x;
  };
  std::vector<LinearRow> rows;
  std::vector<double> best_values(static_cast<std::size_t>(std::max(stages, 0)) + 1, 0.0);

  // Stage 1 with bound screening; later stages re-solve the survivors.
  std::vector<Entry> alive;
  double best = kInf;
  std::vector<double> lb, ub;
  for (std::size_t k = 0; k < combos.size(); ++k) {
    if (std::isfinite(best) && combos[k].bound > best + slack(best)) {
      out.pruned += combos.size() - k;
      break;
    }
    bounds_for(combos[k], lb, ub);
    RelaxationRequest req{&P, stages >= 1 ? P.stage_objective(1) : AffineExpr{}, lb, ub, {}};
    const auto r = solve_relaxation(req, engine);
    ++out.solved;
    if (r.status != RelaxStatus::optimal) continue;
    alive.push_back({k, r.objective, r.x});
    best = std::min(best, r.objective);
  }
  if (alive.empty()) {
    out.message = "no assignment admits a feasible operating point";
    out.seconds = std::chrono::duration<double>(clock::now() - start).count();
    return out;
  }
  for (int s = 1;; ++s) {
    std::erase_if(alive, [&](const Entry& e) { return e.value > best + slack(best); });
    best_values[static_cast<std::size_t>(std::max(s, 0))] = best;
    if (s >= stages) break;
    rows.push_back(stage_row("stage." + std::to_string(s), P.stage_objective(s), best, slack(best)));
    const auto obj = P.stage_objective(s + 1);
    best = kInf;
    std::vector<Entry> next;
    for (const auto& e : alive) {
      bounds_for(combos[e.combo], lb, ub);
      RelaxationRequest req{&P, obj, lb, ub, rows};
      const auto r = solve_relaxation(req, engine);
      ++out.solved;
      if (r.status != RelaxStatus::optimal) continue;
      next.push_back({e.combo, r.objective, r.x});
      best = std::min(best, r.objective);
    }
    alive = std::move(next);
    if (alive.empty()) {
      out.message = "stage " + std::to_string(s + 1) + " lost every survivor";
      out.seconds = std::chrono::duration<double>(clock::now() - start).count();
      return out;
    }
  }

  // Canonical tie-break: smallest plan in program order, OLTC taps last.
  auto key = [&](const Entry& e) { return discrete_plan(built, oltcs, e.x).values; };
  const auto* pick = &alive.front();
  auto pick_key = key(*pick);
  for (const auto& e : alive) {
    auto k = key(e);
    if (k < pick_key) {
      pick = &e;
      pick_key = std::move(k);
    }
  }
  out.feasible = true;
  out.x = pick->x;
  out.plan = discrete_plan(built, oltcs, out.x);
  out.stage_values.assign(best_values.size(), 0.0);
  for (int s = 1; s <= stages; ++s) out.stage_values[static_cast<std::size_t>(s)] = P.stage_value(s, out.x);
  out.stage_optima = best_values;
  out.seconds = std::chrono::duration<double>(clock::now() - start).count();
  return out;
}

}  // namespace restore
