#include "restore/report.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace restore {

namespace {

double at(const std::vector<double>& x, std::size_t var) { return var == kNoVar ? 0.0 : x[var]; }

RegulatorKind regulator_kind(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "oltc") return RegulatorKind::oltc;
  if (s == "svr") return RegulatorKind::svr;
  if (s == "cb") return RegulatorKind::cb;
  throw std::invalid_argument("unknown regulator kind '" + s + "'");
}

ActionKind action_kind(const std::string& s) {
  if (s == "open") return ActionKind::open;
  if (s == "close") return ActionKind::close;
  throw std::invalid_argument("unknown action '" + s + "'");
}

DeviceKind device_kind(const std::string& s) {
  if (s == "tie") return DeviceKind::tie;
  if (s == "sectionalizer") return DeviceKind::sectionalizer;
  if (s == "breaker") return DeviceKind::breaker;
  throw std::invalid_argument("unknown device '" + s + "'");
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

std::string to_string(ActionKind a) { return a == ActionKind::open ? "open" : "close"; }

std::string to_string(DeviceKind d) {
  switch (d) {
    case DeviceKind::tie: return "tie";
    case DeviceKind::sectionalizer: return "sectionalizer";
    case DeviceKind::breaker: return "breaker";
  }
  return "?";
}

std::string SwitchingAction::describe() const {
  return to_string(action) + " " + to_string(device) + " " + id + (remote ? " (remote)" : " (manual)");
}

std::vector<SwitchingAction> switching_sequence(const RestorationCase& rc, const BuiltProgram& built,
                                                const std::vector<double>& x) {
  const auto& g = rc.g();
  const auto& ix = built.index;
  std::vector<SwitchingAction> opens, closes;
  for (auto l : rc.W_star) {
    const auto& line = g.lines()[l];
    if (!line.switched() || ix.Y[l] == kNoVar) continue;
    const bool closed = at(x, ix.Y[l]) >= 0.5;
    if (line.is_tie()) {
      if (closed) closes.push_back({ActionKind::close, DeviceKind::tie, line.id, line.sw->remote});
    } else if (!closed && ix.S[l] != kNoVar && at(x, ix.S[l]) >= 0.5) {
      opens.push_back({ActionKind::open, DeviceKind::sectionalizer, line.id, line.sw->remote});
    }
  }
  for (auto i : rc.N_star)
    if (ix.B[i] != kNoVar && at(x, ix.B[i]) >= 0.5 && at(x, ix.X_node[i]) >= 0.5)
      opens.push_back({ActionKind::open, DeviceKind::breaker, g.nodes()[i].id, false});

  auto by_remote = [](const SwitchingAction& a, const SwitchingAction& b) { return a.remote && !b.remote; };
  std::stable_sort(opens.begin(), opens.end(), by_remote);
  std::stable_sort(closes.begin(), closes.end(), by_remote);
  opens.insert(opens.end(), closes.begin(), closes.end());
  return opens;
}

VerificationSummary summarize(const VerificationReport& v) {
  VerificationSummary s;
  s.pass = v.pass();
  s.radiality = v.radiality.pass;
  s.cone_residual_max = std::max(std::abs(v.cone.max_residual), std::abs(v.cone.min_residual));
  s.cone_flagged = v.cone.flagged.size();
  s.ac_converged = v.ac.converged;
  s.ac_voltage_mismatch = v.ac.voltage_mismatch;
  s.ac_flow_mismatch = v.ac.flow_mismatch;
  s.failures = v.radiality.failures;
  if (!v.cone.pass) s.failures.push_back(std::to_string(v.cone.flagged.size()) + " cone rows not tight");
  if (!v.ac.converged) s.failures.push_back("AC sweep: " + v.ac.message);
  else if (v.ac.voltage_mismatch > v.ac_tol)
    s.failures.push_back("AC voltage mismatch " + fixed(v.ac.voltage_mismatch, 6) + " p.u.");
  return s;
}

RestorationReport make_report(const std::string& fault_id, const RestorationCase& rc, const BuiltProgram& built,
                              const Solution& solution, const VerificationReport& verification, double wall_time,
                              const std::string& mode, const std::map<std::string, double>& priority_overrides) {
  const auto& g = rc.g();
  const auto& ix = built.index;
  const auto& x = solution.x;
  RestorationReport r;
  r.fault_id = fault_id;
  r.faulted_line = g.lines()[rc.faulted_line].id;
  r.mode = mode;
  r.status = to_string(solution.status);
  r.hours = rc.horizon.hours();
  r.wall_time = wall_time;
  for (auto l : rc.isolation_switches) r.isolation.push_back(g.lines()[l].id);
  r.notes = rc.notes;
  r.notes.insert(r.notes.end(), built.warnings.begin(), built.warnings.end());
  r.notes.insert(r.notes.end(), solution.notes.begin(), solution.notes.end());
  r.stage_values = solution.stage_values;
  if (!solution.has_incumbent()) return r;

  r.switching = switching_sequence(rc, built, x);
  r.verification = summarize(verification);
  for (auto i : rc.N_star) {
    if (at(x, ix.X_node[i]) < 0.5)
      r.isolated_nodes.push_back(g.nodes()[i].id);
    else if (ix.PD[0][i] != kNoVar && at(x, ix.L[i]) < 0.5)
      r.rejected_loads.push_back(g.nodes()[i].id);
  }
  for (std::size_t t = 0; t < ix.steps; ++t) {
    for (auto i : rc.N_star) {
      const double p = at(x, ix.Pcur[t][i]), q = at(x, ix.Qcur[t][i]);
      r.ens += p;
      const auto& node = g.nodes()[i];
      const auto it = priority_overrides.find(node.id);
      r.weighted_curtailment += (it == priority_overrides.end() ? node.priority : it->second) * (p + q);
    }
    for (auto l : rc.W) r.current_deviation += at(x, ix.Fstar[t][l]);
  }
  for (std::size_t k = 0; k < g.regulators().size(); ++k) {
    const auto& reg = g.regulators()[k];
    TapSetting ts{reg.id, reg.kind, 0, 0, 0.0};
    if (reg.kind == RegulatorKind::oltc) {
      if (ix.alpha[k] == kNoVar) continue;
      const double a = x[ix.alpha[k]];
      ts.initial = static_cast<int>(std::lround(reg.initial / reg.sigma));
      ts.tap = static_cast<int>(std::lround(a / reg.sigma));
      ts.setting = 1.0 + a;
    } else {
      if (ix.tap[k] == kNoVar) continue;
      ts.initial = reg.initial_tap();
      ts.tap = static_cast<int>(std::lround(x[ix.tap[k]]));
      ts.setting = reg.kind == RegulatorKind::svr ? 1.0 + reg.sigma * ts.tap : ts.tap * reg.dq_step;
    }
    r.taps.push_back(ts);
  }
  for (auto d : rc.omega_dg) {
    DgDispatch dd{g.dgs()[d].id, {}, {}};
    for (std::size_t t = 0; t < ix.steps; ++t) {
      dd.p.push_back(at(x, ix.Pdg[t][d]));
      dd.q.push_back(at(x, ix.Qdg[t][d]));
    }
    r.dgs.push_back(std::move(dd));
  }
  return r;
}

nlohmann::json to_json(const RestorationReport& r) {
  using nlohmann::json;
  json sw = json::array();
  for (const auto& a : r.switching)
    sw.push_back({{"action", to_string(a.action)}, {"device", to_string(a.device)}, {"id", a.id}, {"remote", a.remote}});
  json taps = json::array();
  for (const auto& t : r.taps)
    taps.push_back(
        {{"id", t.id}, {"kind", to_string(t.kind)}, {"initial", t.initial}, {"tap", t.tap}, {"setting", t.setting}});
  json dgs = json::array();
  for (const auto& d : r.dgs) dgs.push_back({{"id", d.id}, {"p", d.p}, {"q", d.q}});
  const auto& v = r.verification;
  return {{"fault_id", r.fault_id},
          {"faulted_line", r.faulted_line},
          {"mode", r.mode},
          {"status", r.status},
          {"hours", r.hours},
          {"isolation", r.isolation},
          {"switching", sw},
          {"rejected_loads", r.rejected_loads},
          {"isolated_nodes", r.isolated_nodes},
          {"ens", r.ens},
          {"weighted_curtailment", r.weighted_curtailment},
          {"current_deviation", r.current_deviation},
          {"taps", taps},
          {"dgs", dgs},
          {"stage_values", r.stage_values},
          {"wall_time", r.wall_time},
          {"verification",
           {{"pass", v.pass},
            {"radiality", v.radiality},
            {"cone_residual_max", v.cone_residual_max},
            {"cone_flagged", v.cone_flagged},
            {"ac_converged", v.ac_converged},
            {"ac_voltage_mismatch", v.ac_voltage_mismatch},
            {"ac_flow_mismatch", v.ac_flow_mismatch},
            {"failures", v.failures}}},
          {"notes", r.notes}};
}

RestorationReport report_from_json(const nlohmann::json& doc) {
  RestorationReport r;
  doc.at("fault_id").get_to(r.fault_id);
  doc.at("faulted_line").get_to(r.faulted_line);
  doc.at("mode").get_to(r.mode);
  doc.at("status").get_to(r.status);
  doc.at("hours").get_to(r.hours);
  doc.at("isolation").get_to(r.isolation);
  for (const auto& a : doc.at("switching"))
    r.switching.push_back({action_kind(a.at("action").get<std::string>()),
                           device_kind(a.at("device").get<std::string>()), a.at("id").get<std::string>(),
                           a.at("remote").get<bool>()});
  doc.at("rejected_loads").get_to(r.rejected_loads);
  doc.at("isolated_nodes").get_to(r.isolated_nodes);
  doc.at("ens").get_to(r.ens);
  doc.at("weighted_curtailment").get_to(r.weighted_curtailment);
  doc.at("current_deviation").get_to(r.current_deviation);
  for (const auto& t : doc.at("taps"))
    r.taps.push_back({t.at("id").get<std::string>(), regulator_kind(t.at("kind").get<std::string>()),
                      t.at("initial").get<int>(), t.at("tap").get<int>(), t.at("setting").get<double>()});
  for (const auto& d : doc.at("dgs"))
    r.dgs.push_back({d.at("id").get<std::string>(), d.at("p").get<std::vector<double>>(),
                     d.at("q").get<std::vector<double>>()});
  doc.at("stage_values").get_to(r.stage_values);
  doc.at("wall_time").get_to(r.wall_time);
  const auto& v = doc.at("verification");
  v.at("pass").get_to(r.verification.pass);
  v.at("radiality").get_to(r.verification.radiality);
  v.at("cone_residual_max").get_to(r.verification.cone_residual_max);
  v.at("cone_flagged").get_to(r.verification.cone_flagged);
  v.at("ac_converged").get_to(r.verification.ac_converged);
  v.at("ac_voltage_mismatch").get_to(r.verification.ac_voltage_mismatch);
  v.at("ac_flow_mismatch").get_to(r.verification.ac_flow_mismatch);
  v.at("failures").get_to(r.verification.failures);
  doc.at("notes").get_to(r.notes);
  return r;
}

// nlohmann serializes doubles with round-trip precision, so parse(emit(r)) == r.
std::string emit_report(const RestorationReport& r) { return to_json(r).dump(2) + "\n"; }

RestorationReport parse_report(std::string_view text) {
  return report_from_json(nlohmann::json::parse(text.begin(), text.end()));
}

std::string summary_csv_header() {
  return "scenario,fault_location,switching_sequence,ens_pu,total_current_deviation_pu,regulation_settings,"
         "computation_time_s,verification";
}

std::string summary_csv_row(const RestorationReport& r) {
  std::string seq;
  for (const auto& a : r.switching) {
    if (!seq.empty()) seq += "; ";
    seq += a.describe();
  }
  std::string regs;
  for (const auto& t : r.taps) {
    if (!regs.empty()) regs += "; ";
    regs += t.id + " " + (t.tap > 0 ? "+" : "") + std::to_string(t.tap);
  }
  std::string ver = r.verification.pass ? "pass" : "fail";
  for (const auto& f : r.verification.failures) ver += "; " + f;
  return csv_field(r.fault_id) + "," + csv_field(r.faulted_line) + "," + csv_field(seq) + "," + fixed(r.ens, 4) + "," +
         fixed(r.current_deviation, 4) + "," + csv_field(regs) + "," + fixed(r.wall_time, 3) + "," + csv_field(ver);
}

std::string summary_csv(const std::vector<RestorationReport>& reports) {
  std::string out = summary_csv_header() + "\n";
  for (const auto& r : reports) out += summary_csv_row(r) + "\n";
  return out;
}

}  // namespace restore
