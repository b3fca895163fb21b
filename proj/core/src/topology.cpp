#include "restore/topology.hpp"

#include <algorithm>
#include <deque>
#include <set>

namespace restore {

namespace {

// Labels connected components over the lines accepted by `use_line`, skipping
// nodes flagged in `blocked`. Returns component id per node (npos if blocked).
template <typename Pred>
std::vector<std::size_t> components(const Grid& g, Pred use_line, const std::vector<bool>& blocked,
                                    std::size_t* count = nullptr) {
  const auto n = g.nodes().size();
  std::vector<std::size_t> comp(n, Grid::npos);
  std::size_t next = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (blocked[s] || comp[s] != Grid::npos) continue;
    std::deque<std::size_t> queue{s};
    comp[s] = next;
    while (!queue.empty()) {
      auto u = queue.front();
      queue.pop_front();
      for (auto l : g.incident(u)) {
        if (!use_line(l)) continue;
        auto v = g.line_from(l) == u ? g.line_to(l) : g.line_from(l);
        if (blocked[v] || comp[v] != Grid::npos) continue;
        comp[v] = next;
        queue.push_back(v);
      }
    }
    ++next;
  }
  if (count) *count = next;
  return comp;
}

}  // namespace

std::vector<int> Horizon::hours() const {
  std::vector<int> out;
  for (int h = start_hour; h <= end_hour; ++h) out.push_back(h);
  return out;
}

ZonePartition compute_zones(const Grid& g) {
  ZonePartition zp;
  std::size_t count = 0;
  std::vector<bool> none(g.nodes().size(), false);
  zp.node_zone = components(g, [&](std::size_t l) { return !g.lines()[l].switched(); }, none, &count);
  zp.zones.resize(count);
  for (std::size_t i = 0; i < g.nodes().size(); ++i) zp.zones[zp.node_zone[i]].nodes.push_back(i);
  zp.line_zone.assign(g.lines().size(), std::nullopt);
  for (std::size_t l = 0; l < g.lines().size(); ++l) {
    if (g.lines()[l].switched()) continue;
    const auto z = zp.node_zone[g.line_from(l)];
    zp.line_zone[l] = z;
    zp.zones[z].lines.push_back(l);
  }
  return zp;
}

bool RestorationCase::is_switched_decision(std::size_t line) const {
  auto has = [line](const std::vector<std::size_t>& v) { return std::find(v.begin(), v.end(), line) != v.end(); };
  return has(W_ava) || has(W_int) || has(W_sec);
}

RestorationCase isolate_fault(std::shared_ptr<const Grid> grid, const std::string& faulted_line, Horizon horizon) {
  const Grid& g = *grid;
  RestorationCase c;
  c.grid = grid;
  c.horizon = horizon;
  c.faulted_line = g.line_index(faulted_line);
  const auto nn = g.nodes().size();
  const auto nl = g.lines().size();
  const Line& fl = g.lines()[c.faulted_line];
  if (fl.is_tie()) throw TopologyError("fault on tie line " + fl.id + " is not a restoration case");

  c.zones = compute_zones(g);

  // Pre-fault feeders: components over normally-closed lines.
  std::vector<bool> none(nn, false);
  auto closed = [&](std::size_t l) { return !g.lines()[l].is_tie(); };
  const auto feeder = components(g, closed, none);
  c.feeder_of.assign(nn, Grid::npos);
  for (auto s : g.substations())
    for (std::size_t i = 0; i < nn; ++i)
      if (feeder[i] == feeder[s]) c.feeder_of[i] = s;
  const auto faulted_feeder = feeder[g.line_from(c.faulted_line)];

  // Lines removed by fault isolation, and nodes lost with an unswitched fault.
  std::vector<bool> removed(nl, false);
  std::vector<bool> lost(nn, false);
  if (fl.switched()) {
    removed[c.faulted_line] = true;
  } else {
    const auto zone = *c.zones.line_zone[c.faulted_line];
    for (auto i : c.zones.zones[zone].nodes) {
      if (g.nodes()[i].kind == NodeKind::substation)
        throw TopologyError("fault on line " + fl.id + " isolates substation " + g.nodes()[i].id);
      lost[i] = true;
      c.lost_nodes.push_back(i);
    }
    for (auto i : c.lost_nodes)
      for (auto l : g.incident(i)) removed[l] = true;
    c.notes.push_back("fault inside zone: " + std::to_string(c.lost_nodes.size()) +
                      " node(s) of the faulted zone stay de-energized");
  }
  for (std::size_t l = 0; l < nl; ++l)
    if (removed[l] && l != c.faulted_line && !g.lines()[l].is_tie()) c.isolation_switches.push_back(l);
  if (fl.switched()) c.isolation_switches.insert(c.isolation_switches.begin(), c.faulted_line);

  // Off-outage area: faulted-feeder nodes cut off from their substation.
  const auto after = components(g, [&](std::size_t l) { return closed(l) && !removed[l]; }, lost);
  std::vector<bool> energized_comp(nn, false);
  for (auto s : g.substations()) energized_comp[after[s]] = true;
  c.in_N_star.assign(nn, false);
  for (std::size_t i = 0; i < nn; ++i)
    if (!lost[i] && feeder[i] == faulted_feeder && !energized_comp[after[i]]) {
      c.in_N_star[i] = true;
      c.N_star.push_back(i);
    }

  // Candidate ties and available feeders.
  std::set<std::size_t> available;  // pre-fault feeder ids
  std::set<std::size_t> vsources;
  for (std::size_t l = 0; l < nl; ++l) {
    const Line& line = g.lines()[l];
    if (!line.is_tie()) continue;
    const auto u = g.line_from(l), v = g.line_to(l);
    if (lost[u] || lost[v]) continue;
    const bool su = c.in_N_star[u], sv = c.in_N_star[v];
    if (su && sv) {
      c.W_int.push_back(l);
      if (c.zones.node_zone[u] == c.zones.node_zone[v])
        c.notes.push_back("tie " + line.id + " has both ends in one zone and is held open");
    } else if (su != sv) {
      const auto outside = su ? v : u;
      c.W_ava.push_back(l);
      vsources.insert(outside);
      available.insert(feeder[outside]);
    }
  }
  c.virtual_sources.assign(vsources.begin(), vsources.end());
  c.no_restoration_path = c.W_ava.empty();
  if (c.no_restoration_path) c.notes.push_back("no restoration path: no available tie-switch");

  c.in_N.assign(nn, false);
  for (std::size_t i = 0; i < nn; ++i)
    if (!lost[i] && (feeder[i] == faulted_feeder || available.contains(feeder[i]))) {
      c.in_N[i] = true;
      c.N.push_back(i);
    }

  c.in_W.assign(nl, false);
  for (std::size_t l = 0; l < nl; ++l) {
    const auto u = g.line_from(l), v = g.line_to(l);
    bool use = false;
    if (g.lines()[l].is_tie())
      use = std::find(c.W_ava.begin(), c.W_ava.end(), l) != c.W_ava.end() ||
            std::find(c.W_int.begin(), c.W_int.end(), l) != c.W_int.end();
    else
      use = !removed[l] && c.in_N[u] && c.in_N[v] && c.in_N_star[u] == c.in_N_star[v];
    if (!use) continue;
    c.in_W[l] = true;
    c.W.push_back(l);
    const bool star = (c.in_N_star[u] && c.in_N_star[v]) || std::find(c.W_ava.begin(), c.W_ava.end(), l) != c.W_ava.end();
    if (star) {
      c.W_star.push_back(l);
      if (g.lines()[l].is_sectionalizer()) c.W_sec.push_back(l);
    }
  }

  std::vector<bool> zone_star(c.zones.zones.size(), false);
  for (auto i : c.N_star) zone_star[c.zones.node_zone[i]] = true;
  for (std::size_t p = 0; p < zone_star.size(); ++p)
    if (zone_star[p]) c.Z_star.push_back(p);

  std::set<std::size_t> available_subs;
  for (auto s : g.substations())
    if (available.contains(feeder[s])) available_subs.insert(s);
  for (std::size_t r = 0; r < g.regulators().size(); ++r) {
    const auto& reg = g.regulators()[r];
    switch (reg.kind) {
      case RegulatorKind::oltc: {
        const auto at = g.node_index(reg.location);
        if (available_subs.contains(at))
          c.omega_sub.push_back(r);
        else if (c.in_N[at])
          c.frozen_oltc.push_back(r);
        break;
      }
      case RegulatorKind::svr:
        if (c.in_W[g.line_index(reg.link)]) c.omega_svr.push_back(r);
        break;
      case RegulatorKind::cb:
        if (c.in_N[g.node_index(reg.location)]) c.omega_cb.push_back(r);
        break;
    }
  }
  for (std::size_t d = 0; d < g.dgs().size(); ++d)
    if (c.in_N[g.node_index(g.dgs()[d].node)]) c.omega_dg.push_back(d);
  return c;
}

}  // namespace restore
