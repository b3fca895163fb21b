#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "restore/branch_and_bound.hpp"
#include "restore/verification.hpp"

namespace restore {

enum class ActionKind { open, close };
enum class DeviceKind { tie, sectionalizer, breaker };

struct SwitchingAction {
  ActionKind action = ActionKind::open;
  DeviceKind device = DeviceKind::tie;
  std::string id;  // line id, or node id for a load breaker
  bool remote = false;

  bool operator==(const SwitchingAction&) const = default;
  std::string describe() const;  // "open S 2-3 (remote)"
};

struct TapSetting {
  std::string id;
  RegulatorKind kind = RegulatorKind::oltc;
  int initial = 0;
  int tap = 0;
  double setting = 0.0;  // voltage ratio (OLTC, SVR) or reactive injection (CB)

  bool operator==(const TapSetting&) const = default;
};

struct DgDispatch {
  std::string id;
  std::vector<double> p, q;

  bool operator==(const DgDispatch&) const = default;
};

struct VerificationSummary {
  bool pass = false;
  bool radiality = false;
  double cone_residual_max = 0.0;
  std::size_t cone_flagged = 0;
  bool ac_converged = false;
  double ac_voltage_mismatch = 0.0;
  double ac_flow_mismatch = 0.0;
  std::vector<std::string> failures;

  bool operator==(const VerificationSummary&) const = default;
};

struct RestorationReport {
  std::string fault_id;
  std::string faulted_line;
  std::string mode;
  std::string status;
  std::vector<int> hours;
  std::vector<std::string> isolation;  // switches opened to clear the fault
  std::vector<SwitchingAction> switching;
  std::vector<std::string> rejected_loads;  // energized nodes whose breaker opens
  std::vector<std::string> isolated_nodes;  // off-outage nodes left de-energized
  double ens = 0.0;                   // sum of curtailed active power over 1 h steps, p.u.h
  double weighted_curtailment = 0.0;  // sum of D_i (Pcur + Qcur), p.u.
  double current_deviation = 0.0;     // sum of F*, p.u.
  std::vector<TapSetting> taps;
  std::vector<DgDispatch> dgs;
  std::vector<double> stage_values;  // [0] unused
  double wall_time = 0.0;
  VerificationSummary verification;
  std::vector<std::string> notes;

  bool operator==(const RestorationReport&) const = default;
};

std::string to_string(ActionKind a);
std::string to_string(DeviceKind d);

/// Operated devices in execution order: opens before closes, remote before
/// manual within each group, then sectionalizers, breakers and ties in
/// element order. Devices of isolated areas never appear.
std::vector<SwitchingAction> switching_sequence(const RestorationCase& rc, const BuiltProgram& built,
                                                const std::vector<double>& x);

VerificationSummary summarize(const VerificationReport& v);

/// Collects everything the report shows from a solved program.
RestorationReport make_report(const std::string& fault_id, const RestorationCase& rc, const BuiltProgram& built,
                              const Solution& solution, const VerificationReport& verification, double wall_time,
                              const std::string& mode, const std::map<std::string, double>& priority_overrides = {});

nlohmann::json to_json(const RestorationReport& r);
RestorationReport report_from_json(const nlohmann::json& doc);

std::string emit_report(const RestorationReport& r);
RestorationReport parse_report(std::string_view text);

/// One CSV line per report, with a trailing verification column.
std::string summary_csv_header();
std::string summary_csv_row(const RestorationReport& r);
std::string summary_csv(const std::vector<RestorationReport>& reports);

}  // namespace restore
