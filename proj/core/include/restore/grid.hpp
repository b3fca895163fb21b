#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace restore {

/// Raised for any malformed or inconsistent network description. The
/// message always names the offending element.
class GridError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class NodeKind { substation, load, junction };

struct Node {
  std::string id;
  NodeKind kind = NodeKind::load;
  double base_load_p = 0.0;  // p.u. at 1 p.u. voltage
  double base_load_q = 0.0;
  double kp = 0.0;  // voltage sensitivity exponents
  double kq = 0.0;
  double priority = 1.0;  // importance factor of the load
  double breaker_weight = 2.0;
  std::string profile;  // empty: flat unit profile
  std::optional<double> rating;  // substation apparent-power rating, p.u.

  bool operator==(const Node&) const = default;
};

enum class SwitchKind { sectionalizing, tie };

struct Switch {
  SwitchKind kind = SwitchKind::sectionalizing;
  bool remote = false;
  double weight = 2.0;
  bool normally_open = false;

  bool operator==(const Switch&) const = default;
};

struct Line {
  std::string id;
  std::string from;
  std::string to;
  double r = 0.0;
  double x = 0.0;
  double f_max = 1.0;  // ampacity, p.u.
  double f_thr = 0.5;  // deviation threshold, p.u.
  std::optional<Switch> sw;
  bool is_virtual_regulator_link = false;

  bool switched() const { return sw.has_value(); }
  bool is_tie() const { return sw && sw->kind == SwitchKind::tie; }
  bool is_sectionalizer() const { return sw && sw->kind == SwitchKind::sectionalizing; }

  bool operator==(const Line&) const = default;
};

enum class RegulatorKind { oltc, svr, cb };

struct Regulator {
  std::string id;
  RegulatorKind kind = RegulatorKind::oltc;
  std::string location;  // node id (OLTC, CB) or line id (SVR)
  double sigma = 0.0;    // ratio change per tap step (OLTC, SVR)
  int n_steps = 1;
  double initial = 0.0;  // OLTC: ratio alpha0; SVR/CB: integer tap position
  double dq_step = 0.0;  // CB reactive step, p.u.
  std::complex<double> zp{0.0, 0.0};
  std::complex<double> zs{0.0, 0.0};
  std::string link;  // SVR: id of the ideal-ratio link created at load time

  int initial_tap() const { return static_cast<int>(initial >= 0 ? initial + 0.5 : initial - 0.5); }

  bool operator==(const Regulator&) const = default;
};

struct DG {
  std::string id;
  std::string node;
  double p_max = 0.0;
  double q_min = 0.0;
  double q_max = 0.0;
  double s_max = 0.0;

  bool operator==(const DG&) const = default;
};

/// Per-constraint-class big-M multipliers. Unset entries fall back to the
/// defaults computed by `resolve_big_m`.
struct BigMPolicy {
  std::optional<double> flow;
  std::optional<double> volt;
  std::optional<double> generic;
  std::optional<double> energize;

  bool operator==(const BigMPolicy&) const = default;
};

struct GridLimits {
  double v_min = 0.917;
  double v_max = 1.050;
  BigMPolicy big_m;

  bool operator==(const GridLimits&) const = default;
};

struct BigM {
  double flow;
  double volt;
  double generic;
};

/// Plain aggregate of everything a grid file holds. `Grid` wraps a validated
/// copy of it.
struct GridData {
  std::vector<Node> nodes;
  std::vector<Line> lines;
  std::vector<Regulator> regulators;
  std::vector<DG> dgs;
  GridLimits limits;
  std::map<std::string, std::vector<double>> profiles;

  bool operator==(const GridData&) const = default;
};

/// Immutable, validated network. SVRs are already expanded into an ideal
/// ratio link plus an impedance line, so every consumer sees ordinary lines.
class Grid {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  /// Validates `data`, expands SVRs, and builds the id indices.
  explicit Grid(GridData data);

  const GridData& data() const { return data_; }
  const std::vector<Node>& nodes() const { return data_.nodes; }
  const std::vector<Line>& lines() const { return data_.lines; }
  const std::vector<Regulator>& regulators() const { return data_.regulators; }
  const std::vector<DG>& dgs() const { return data_.dgs; }
  const GridLimits& limits() const { return data_.limits; }

  std::size_t node_index(std::string_view id) const;
  std::size_t line_index(std::string_view id) const;
  const Node& node(std::string_view id) const { return data_.nodes.at(node_index(id)); }
  const Line& line(std::string_view id) const { return data_.lines.at(line_index(id)); }
  std::size_t line_from(std::size_t l) const { return from_[l]; }
  std::size_t line_to(std::size_t l) const { return to_[l]; }

  std::vector<std::size_t> substations() const;

  /// Active/reactive demand at 1 p.u. voltage for the given hour of day.
  double load_p(std::size_t node, int hour) const;
  double load_q(std::size_t node, int hour) const;
  double profile_multiplier(std::size_t node, int hour) const;

  /// Lines incident to a node (indices into lines()).
  const std::vector<std::size_t>& incident(std::size_t node) const { return incident_[node]; }

  bool operator==(const Grid& other) const { return data_ == other.data_; }

 private:
  GridData data_;
  std::unordered_map<std::string, std::size_t> node_ix_;
  std::unordered_map<std::string, std::size_t> line_ix_;
  std::vector<std::size_t> from_;
  std::vector<std::size_t> to_;
  std::vector<std::vector<std::size_t>> incident_;
};

Grid parse_grid(const nlohmann::json& doc);
Grid parse_grid_text(std::string_view text);
Grid load_grid_file(const std::string& path);
nlohmann::json to_json(const Grid& grid);

BigM resolve_big_m(const Grid& grid);

struct RadialReport {
  bool ok = true;
  std::vector<std::string> loop_lines;        // lines closing a cycle
  std::vector<std::string> unreachable_nodes; // no substation in component
  std::vector<std::string> multi_source_nodes;  // substation joined to another
  std::string summary() const;
};

/// Checks that the normal configuration (ties open, sectionalizers closed),
/// with `forced_closed` lines additionally closed, is a spanning forest with
/// exactly one substation per component.
RadialReport validate_radial_base(const Grid& grid, const std::vector<std::string>& forced_closed = {});

std::string to_string(NodeKind k);
std::string to_string(RegulatorKind k);

}  // namespace restore
