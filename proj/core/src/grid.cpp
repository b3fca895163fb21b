#include "restore/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace restore {

namespace {

using nlohmann::json;

std::string id_of(const json& j, const std::string& where) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  throw GridError(where + ": identifier must be a string or integer");
}

template <typename T>
T required(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw GridError(where + ": missing field '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw GridError(where + ": field '" + key + "' has the wrong type");
  }
}

template <typename T>
T optional_field(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw GridError(where + ": field '" + key + "' has the wrong type");
  }
}

NodeKind parse_node_kind(const std::string& s, const std::string& where) {
  if (s == "substation") return NodeKind::substation;
  if (s == "load") return NodeKind::load;
  if (s == "junction") return NodeKind::junction;
  throw GridError(where + ": unknown node kind '" + s + "'");
}

RegulatorKind parse_regulator_kind(std::string s, const std::string& where) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "oltc") return RegulatorKind::oltc;
  if (s == "svr") return RegulatorKind::svr;
  if (s == "cb") return RegulatorKind::cb;
  throw GridError(where + ": unknown regulator kind '" + s + "'");
}

std::complex<double> parse_complex(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) return {0.0, 0.0};
  const auto& v = obj.at(key);
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  throw GridError(where + ": field '" + key + "' must be a number or [re, im]");
}

Node parse_node(const json& j, std::size_t k) {
  std::string where = "nodes[" + std::to_string(k) + "]";
  if (!j.is_object()) throw GridError(where + ": expected an object");
  Node n;
  if (!j.contains("id")) throw GridError(where + ": missing field 'id'");
  n.id = id_of(j.at("id"), where);
  where = "node " + n.id;
  n.kind = parse_node_kind(required<std::string>(j, "kind", where), where);
  n.base_load_p = optional_field(j, "base_load_p", 0.0, where);
  n.base_load_q = optional_field(j, "base_load_q", 0.0, where);
  n.kp = optional_field(j, "kp", 0.0, where);
  n.kq = optional_field(j, "kq", 0.0, where);
  n.priority = optional_field(j, "priority", 1.0, where);
  n.breaker_weight = optional_field(j, "breaker_weight", 2.0, where);
  n.profile = optional_field(j, "profile", std::string{}, where);
  if (j.contains("rating") && !j.at("rating").is_null()) n.rating = required<double>(j, "rating", where);
  return n;
}

Line parse_line(const json& j, std::size_t k) {
  std::string where = "lines[" + std::to_string(k) + "]";
  if (!j.is_object()) throw GridError(where + ": expected an object");
  Line l;
  if (!j.contains("id")) throw GridError(where + ": missing field 'id'");
  l.id = id_of(j.at("id"), where);
  where = "line " + l.id;
  if (!j.contains("from") || !j.contains("to")) throw GridError(where + ": missing 'from'/'to'");
  l.from = id_of(j.at("from"), where);
  l.to = id_of(j.at("to"), where);
  l.r = required<double>(j, "r", where);
  l.x = required<double>(j, "x", where);
  l.f_max = required<double>(j, "f_max", where);
  l.f_thr = required<double>(j, "f_thr", where);
  l.is_virtual_regulator_link = optional_field(j, "is_virtual_regulator_link", false, where);
  if (j.contains("switch") && !j.at("switch").is_null()) {
    const auto& s = j.at("switch");
    if (!s.is_object()) throw GridError(where + ": 'switch' must be an object");
    Switch sw;
    auto kind = required<std::string>(s, "kind", where);
    if (kind == "tie")
      sw.kind = SwitchKind::tie;
    else if (kind == "sectionalizing")
      sw.kind = SwitchKind::sectionalizing;
    else
      throw GridError(where + ": unknown switch kind '" + kind + "'");
    sw.remote = optional_field(s, "remote", false, where);
    sw.weight = optional_field(s, "weight", sw.remote ? 1.0 : 2.0, where);
    sw.normally_open = optional_field(s, "normally_open", sw.kind == SwitchKind::tie, where);
    l.sw = sw;
  }
  return l;
}

Regulator parse_regulator(const json& j, std::size_t k) {
  std::string where = "regulators[" + std::to_string(k) + "]";
  if (!j.is_object()) throw GridError(where + ": expected an object");
  Regulator r;
  r.id = j.contains("id") ? id_of(j.at("id"), where) : "reg" + std::to_string(k);
  where = "regulator " + r.id;
  r.kind = parse_regulator_kind(required<std::string>(j, "kind", where), where);
  if (!j.contains("location")) throw GridError(where + ": missing field 'location'");
  r.location = id_of(j.at("location"), where);
  r.sigma = optional_field(j, "sigma", 0.0, where);
  r.n_steps = optional_field(j, "n_steps", 1, where);
  r.initial = optional_field(j, "initial", 0.0, where);
  r.dq_step = optional_field(j, "dq_step", 0.0, where);
  r.zp = parse_complex(j, "zp", where);
  r.zs = parse_complex(j, "zs", where);
  r.link = optional_field(j, "link", std::string{}, where);
  return r;
}

DG parse_dg(const json& j, std::size_t k) {
  std::string where = "dgs[" + std::to_string(k) + "]";
  if (!j.is_object()) throw GridError(where + ": expected an object");
  DG d;
  d.id = j.contains("id") ? id_of(j.at("id"), where) : "dg" + std::to_string(k);
  where = "dg " + d.id;
  if (!j.contains("node")) throw GridError(where + ": missing field 'node'");
  d.node = id_of(j.at("node"), where);
  d.p_max = required<double>(j, "p_max", where);
  d.q_min = required<double>(j, "q_min", where);
  d.q_max = required<double>(j, "q_max", where);
  d.s_max = required<double>(j, "s_max", where);
  return d;
}

const json& array_field(const json& doc, const char* key, bool required_key) {
  static const json empty = json::array();
  if (!doc.contains(key)) {
    if (required_key) throw GridError(std::string("grid: missing top-level key '") + key + "'");
    return empty;
  }
  const auto& v = doc.at(key);
  if (!v.is_array()) throw GridError(std::string("grid: '") + key + "' must be an array");
  return v;
}

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
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

void check_unique(const std::vector<std::string>& ids, const char* what) {
  std::set<std::string> seen;
  for (const auto& id : ids)
    if (!seen.insert(id).second) throw GridError(std::string("duplicate ") + what + " id '" + id + "'");
}

// Inserts an ideal ratio link in front of every SVR line that has not been
// expanded yet. Idempotent, so a serialized grid re-parses to itself.
void expand_svrs(GridData& data) {
  for (auto& reg : data.regulators) {
    if (reg.kind != RegulatorKind::svr) continue;
    bool expanded = !reg.link.empty() && std::any_of(data.lines.begin(), data.lines.end(), [&](const Line& l) {
      return l.id == reg.link && l.is_virtual_regulator_link;
    });
    if (expanded) continue;
    auto it = std::find_if(data.lines.begin(), data.lines.end(), [&](const Line& l) { return l.id == reg.location; });
    if (it == data.lines.end()) throw GridError("regulator " + reg.id + ": line '" + reg.location + "' not found");
    Line& host = *it;
    Node mid;
    mid.id = host.id + "~svr";
    mid.kind = NodeKind::junction;
    Line link;
    link.id = host.id + "~ratio";
    link.from = host.from;
    link.to = mid.id;
    link.r = 0.0;
    link.x = 0.0;
    link.f_max = host.f_max;
    link.f_thr = host.f_thr;
    link.is_virtual_regulator_link = true;
    const auto z = reg.zp + reg.zs;
    host.from = mid.id;
    host.r += z.real();
    host.x += z.imag();
    reg.link = link.id;
    data.nodes.push_back(mid);
    data.lines.push_back(link);
  }
}

}  // namespace

std::string to_string(NodeKind k) {
  switch (k) {
    case NodeKind::substation: return "substation";
    case NodeKind::load: return "load";
    case NodeKind::junction: return "junction";
  }
  return "?";
}

std::string to_string(RegulatorKind k) {
  switch (k) {
    case RegulatorKind::oltc: return "OLTC";
    case RegulatorKind::svr: return "SVR";
    case RegulatorKind::cb: return "CB";
  }
  return "?";
}

Grid::Grid(GridData data) : data_(std::move(data)) {
  const auto& lim = data_.limits;
  if (!(lim.v_min > 0.0 && lim.v_min < 1.0 && lim.v_max > 1.0))
    throw GridError("limits: require 0 < v_min < 1 < v_max");

  for (const auto& [name, mult] : data_.profiles) {
    if (mult.empty()) throw GridError("profile " + name + ": empty multiplier series");
    for (double m : mult)
      if (!(m >= 0.0)) throw GridError("profile " + name + ": multipliers must be non-negative");
  }

  expand_svrs(data_);

  std::vector<std::string> ids;
  for (const auto& n : data_.nodes) ids.push_back(n.id);
  check_unique(ids, "node");
  ids.clear();
  for (const auto& l : data_.lines) ids.push_back(l.id);
  check_unique(ids, "line");
  ids.clear();
  for (const auto& r : data_.regulators) ids.push_back(r.id);
  check_unique(ids, "regulator");
  ids.clear();
  for (const auto& d : data_.dgs) ids.push_back(d.id);
  check_unique(ids, "dg");

  for (std::size_t i = 0; i < data_.nodes.size(); ++i) node_ix_.emplace(data_.nodes[i].id, i);
  for (std::size_t i = 0; i < data_.lines.size(); ++i) line_ix_.emplace(data_.lines[i].id, i);

  for (const auto& n : data_.nodes) {
    const std::string where = "node " + n.id;
    if (!(n.priority > 0.0)) throw GridError(where + ": priority must be positive");
    if (n.kp < 0.0 || n.kq < 0.0) throw GridError(where + ": kp, kq must be non-negative");
    if (n.base_load_p < 0.0 || n.base_load_q < 0.0) throw GridError(where + ": base loads must be non-negative");
    if (n.kind == NodeKind::substation && (n.base_load_p != 0.0 || n.base_load_q != 0.0))
      throw GridError(where + ": substation nodes carry no load");
    if (!(n.breaker_weight > 0.0)) throw GridError(where + ": breaker weight must be positive");
    if (!n.profile.empty() && !data_.profiles.contains(n.profile))
      throw GridError(where + ": unknown profile '" + n.profile + "'");
    if (n.rating && !(*n.rating > 0.0)) throw GridError(where + ": rating must be positive");
  }

  double max_remote = 0.0;
  double min_manual = std::numeric_limits<double>::infinity();
  std::string max_remote_line, min_manual_line;
  from_.resize(data_.lines.size());
  to_.resize(data_.lines.size());
  incident_.assign(data_.nodes.size(), {});
  for (std::size_t k = 0; k < data_.lines.size(); ++k) {
    const auto& l = data_.lines[k];
    const std::string where = "line " + l.id;
    auto f = node_ix_.find(l.from);
    auto t = node_ix_.find(l.to);
    if (f == node_ix_.end() || t == node_ix_.end()) throw GridError(where + ": endpoint node not found");
    if (f->second == t->second) throw GridError(where + ": endpoints must differ");
    if (l.r < 0.0 || l.x < 0.0) throw GridError(where + ": r, x must be non-negative");
    if (!(l.f_thr > 0.0 && l.f_thr <= l.f_max)) throw GridError(where + ": require 0 < f_thr <= f_max");
    if (l.is_virtual_regulator_link && (l.r != 0.0 || l.x != 0.0))
      throw GridError(where + ": virtual regulator links must have r = x = 0");
    if (l.sw) {
      if (!(l.sw->weight > 0.0)) throw GridError(where + ": switch weight must be positive");
      if (l.sw->normally_open != (l.sw->kind == SwitchKind::tie))
        throw GridError(where + ": tie switches are exactly the normally open ones");
      if (l.sw->remote && l.sw->weight > max_remote) {
        max_remote = l.sw->weight;
        max_remote_line = l.id;
      }
      if (!l.sw->remote && l.sw->weight < min_manual) {
        min_manual = l.sw->weight;
        min_manual_line = l.id;
      }
    }
    from_[k] = f->second;
    to_[k] = t->second;
    incident_[f->second].push_back(k);
    incident_[t->second].push_back(k);
  }
  if (!max_remote_line.empty() && !min_manual_line.empty() && max_remote >= min_manual)
    throw GridError("line " + max_remote_line + ": remote switch weight must be below every manual switch weight (line " +
                    min_manual_line + ")");

  for (const auto& r : data_.regulators) {
    const std::string where = "regulator " + r.id;
    if (r.n_steps < 1) throw GridError(where + ": n_steps must be at least 1");
    switch (r.kind) {
      case RegulatorKind::oltc: {
        auto it = node_ix_.find(r.location);
        if (it == node_ix_.end()) throw GridError(where + ": node '" + r.location + "' not found");
        if (data_.nodes[it->second].kind != NodeKind::substation)
          throw GridError(where + ": OLTC must sit at a substation node");
        if (!(r.sigma > 0.0)) throw GridError(where + ": sigma must be positive");
        if (std::abs(r.initial) > r.n_steps * r.sigma + 1e-12)
          throw GridError(where + ": initial ratio outside the tap range");
        break;
      }
      case RegulatorKind::svr: {
        if (!line_ix_.contains(r.location)) throw GridError(where + ": line '" + r.location + "' not found");
        if (!(r.sigma > 0.0)) throw GridError(where + ": sigma must be positive");
        if (std::abs(r.initial) > r.n_steps || r.initial != std::round(r.initial))
          throw GridError(where + ": initial tap must be an integer in [-n, n]");
        break;
      }
      case RegulatorKind::cb: {
        if (!node_ix_.contains(r.location)) throw GridError(where + ": node '" + r.location + "' not found");
        if (!(r.dq_step > 0.0)) throw GridError(where + ": dq_step must be positive");
        if (r.initial < 0 || r.initial > r.n_steps || r.initial != std::round(r.initial))
          throw GridError(where + ": initial tap must be an integer in [0, n]");
        break;
      }
    }
  }

  for (const auto& d : data_.dgs) {
    const std::string where = "dg " + d.id;
    if (!node_ix_.contains(d.node)) throw GridError(where + ": node '" + d.node + "' not found");
    if (!(d.p_max >= 0.0 && d.p_max <= d.s_max)) throw GridError(where + ": require 0 <= p_max <= s_max");
    if (d.q_min > d.q_max) throw GridError(where + ": require q_min <= q_max");
  }

  // Connectivity with every switch closed.
  UnionFind uf(data_.nodes.size());
  for (std::size_t k = 0; k < data_.lines.size(); ++k) uf.unite(from_[k], to_[k]);
  for (std::size_t i = 0; i < data_.nodes.size(); ++i)
    if (uf.find(i) != uf.find(0))
      throw GridError("node " + data_.nodes[i].id + ": not connected to the network even with all switches closed");
}

std::size_t Grid::node_index(std::string_view id) const {
  auto it = node_ix_.find(std::string(id));
  if (it == node_ix_.end()) throw GridError("unknown node '" + std::string(id) + "'");
  return it->second;
}

std::size_t Grid::line_index(std::string_view id) const {
  auto it = line_ix_.find(std::string(id));
  if (it == line_ix_.end()) throw GridError("unknown line '" + std::string(id) + "'");
  return it->second;
}

std::vector<std::size_t> Grid::substations() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < data_.nodes.size(); ++i)
    if (data_.nodes[i].kind == NodeKind::substation) out.push_back(i);
  return out;
}

double Grid::profile_multiplier(std::size_t node, int hour) const {
  const auto& name = data_.nodes[node].profile;
  if (name.empty()) return 1.0;
  const auto& series = data_.profiles.at(name);
  const auto n = static_cast<int>(series.size());
  return series[static_cast<std::size_t>(((hour % n) + n) % n)];
}

double Grid::load_p(std::size_t node, int hour) const {
  return data_.nodes[node].base_load_p * profile_multiplier(node, hour);
}

double Grid::load_q(std::size_t node, int hour) const {
  return data_.nodes[node].base_load_q * profile_multiplier(node, hour);
}

Grid parse_grid(const json& doc) {
  if (!doc.is_object()) throw GridError("grid: document must be an object");
  GridData data;
  const auto& nodes = array_field(doc, "nodes", true);
  for (std::size_t k = 0; k < nodes.size(); ++k) data.nodes.push_back(parse_node(nodes[k], k));
  const auto& lines = array_field(doc, "lines", true);
  for (std::size_t k = 0; k < lines.size(); ++k) data.lines.push_back(parse_line(lines[k], k));
  const auto& regs = array_field(doc, "regulators", false);
  for (std::size_t k = 0; k < regs.size(); ++k) data.regulators.push_back(parse_regulator(regs[k], k));
  const auto& dgs = array_field(doc, "dgs", false);
  for (std::size_t k = 0; k < dgs.size(); ++k) data.dgs.push_back(parse_dg(dgs[k], k));

  if (doc.contains("limits")) {
    const auto& lim = doc.at("limits");
    if (!lim.is_object()) throw GridError("limits: expected an object");
    data.limits.v_min = optional_field(lim, "v_min", data.limits.v_min, "limits");
    data.limits.v_max = optional_field(lim, "v_max", data.limits.v_max, "limits");
    if (lim.contains("big_m")) {
      const auto& bm = lim.at("big_m");
      auto get = [&](const char* key) -> std::optional<double> {
        if (!bm.contains(key) || bm.at(key).is_null()) return std::nullopt;
        return required<double>(bm, key, "limits.big_m");
      };
      data.limits.big_m = {get("flow"), get("volt"), get("generic"), get("energize")};
    }
  }
  if (doc.contains("profiles")) {
    const auto& prof = doc.at("profiles");
    if (!prof.is_object()) throw GridError("profiles: expected an object of name -> multipliers");
    for (auto it = prof.begin(); it != prof.end(); ++it) {
      try {
        data.profiles[it.key()] = it.value().get<std::vector<double>>();
      } catch (const json::exception&) {
        throw GridError("profile " + it.key() + ": expected an array of numbers");
      }
    }
  }
  if (data.nodes.empty()) throw GridError("grid: no nodes");
  return Grid(std::move(data));
}

Grid parse_grid_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw GridError(std::string("grid: malformed document: ") + e.what());
  }
  return parse_grid(doc);
}

Grid load_grid_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GridError("cannot open grid file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_grid_text(ss.str());
}

nlohmann::json to_json(const Grid& grid) {
  json doc;
  doc["nodes"] = json::array();
  for (const auto& n : grid.nodes()) {
    json j{{"id", n.id},
           {"kind", to_string(n.kind)},
           {"base_load_p", n.base_load_p},
           {"base_load_q", n.base_load_q},
           {"kp", n.kp},
           {"kq", n.kq},
           {"priority", n.priority},
           {"breaker_weight", n.breaker_weight}};
    if (!n.profile.empty()) j["profile"] = n.profile;
    if (n.rating) j["rating"] = *n.rating;
    doc["nodes"].push_back(j);
  }
  doc["lines"] = json::array();
  for (const auto& l : grid.lines()) {
    json j{{"id", l.id}, {"from", l.from}, {"to", l.to}, {"r", l.r}, {"x", l.x}, {"f_max", l.f_max}, {"f_thr", l.f_thr}};
    if (l.is_virtual_regulator_link) j["is_virtual_regulator_link"] = true;
    if (l.sw)
      j["switch"] = {{"kind", l.sw->kind == SwitchKind::tie ? "tie" : "sectionalizing"},
                     {"remote", l.sw->remote},
                     {"weight", l.sw->weight},
                     {"normally_open", l.sw->normally_open}};
    doc["lines"].push_back(j);
  }
  doc["regulators"] = json::array();
  for (const auto& r : grid.regulators()) {
    json j{{"id", r.id},
           {"kind", to_string(r.kind)},
           {"location", r.location},
           {"sigma", r.sigma},
           {"n_steps", r.n_steps},
           {"initial", r.initial},
           {"dq_step", r.dq_step},
           {"zp", {r.zp.real(), r.zp.imag()}},
           {"zs", {r.zs.real(), r.zs.imag()}}};
    if (!r.link.empty()) j["link"] = r.link;
    doc["regulators"].push_back(j);
  }
  doc["dgs"] = json::array();
  for (const auto& d : grid.dgs())
    doc["dgs"].push_back(
        {{"id", d.id}, {"node", d.node}, {"p_max", d.p_max}, {"q_min", d.q_min}, {"q_max", d.q_max}, {"s_max", d.s_max}});
  const auto& lim = grid.limits();
  json bm = json::object();
  if (lim.big_m.flow) bm["flow"] = *lim.big_m.flow;
  if (lim.big_m.volt) bm["volt"] = *lim.big_m.volt;
  if (lim.big_m.generic) bm["generic"] = *lim.big_m.generic;
  if (lim.big_m.energize) bm["energize"] = *lim.big_m.energize;
  doc["limits"] = {{"v_min", lim.v_min}, {"v_max", lim.v_max}, {"big_m", bm}};
  doc["profiles"] = json::object();
  for (const auto& [name, mult] : grid.data().profiles) doc["profiles"][name] = mult;
  return doc;
}

BigM resolve_big_m(const Grid& grid) {
  double peak = 0.0;
  for (std::size_t i = 0; i < grid.nodes().size(); ++i) {
    double best = 0.0;
    for (int h = 0; h < 24; ++h) best = std::max(best, grid.load_p(i, h) + grid.load_q(i, h));
    peak += best;
  }
  const auto& p = grid.limits().big_m;
  const double vmax2 = grid.limits().v_max * grid.limits().v_max;
  return BigM{p.flow.value_or(std::max(2.0 * peak, 1e-3)), p.volt.value_or(vmax2), p.generic.value_or(1e3)};
}

std::string RadialReport::summary() const {
  if (ok) return "radial: ok";
  std::ostringstream os;
  os << "radial: FAIL";
  if (!loop_lines.empty()) {
    os << "; loop closed by lines";
    for (const auto& l : loop_lines) os << ' ' << l;
  }
  if (!unreachable_nodes.empty()) {
    os << "; unreachable nodes";
    for (const auto& n : unreachable_nodes) os << ' ' << n;
  }
  if (!multi_source_nodes.empty()) {
    os << "; multiple substations joined";
    for (const auto& n : multi_source_nodes) os << ' ' << n;
  }
  return os.str();
}

RadialReport validate_radial_base(const Grid& grid, const std::vector<std::string>& forced_closed) {
  RadialReport rep;
  const auto n = grid.nodes().size();
  std::set<std::string> forced(forced_closed.begin(), forced_closed.end());
  UnionFind uf(n);
  for (std::size_t k = 0; k < grid.lines().size(); ++k) {
    const auto& l = grid.lines()[k];
    const bool closed = !(l.sw && l.sw->normally_open) || forced.contains(l.id);
    if (!closed) continue;
    if (!uf.unite(grid.line_from(k), grid.line_to(k))) rep.loop_lines.push_back(l.id);
  }
  std::vector<int> sources(n, 0);
  for (auto s : grid.substations()) sources[uf.find(s)]++;
  for (std::size_t i = 0; i < n; ++i) {
    const int c = sources[uf.find(i)];
    if (c == 0) rep.unreachable_nodes.push_back(grid.nodes()[i].id);
    if (c > 1 && grid.nodes()[i].kind == NodeKind::substation) rep.multi_source_nodes.push_back(grid.nodes()[i].id);
  }
  rep.ok = rep.loop_lines.empty() && rep.unreachable_nodes.empty() && rep.multi_source_nodes.empty();
  return rep;
}

}  // namespace restore
