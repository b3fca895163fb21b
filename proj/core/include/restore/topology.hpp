#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "restore/grid.hpp"

namespace restore {

/// A feeder segment bounded by switched lines.
struct Zone {
  std::vector<std::size_t> nodes;
  std::vector<std::size_t> lines;  // unswitched lines with both ends inside
};

struct ZonePartition {
  std::vector<Zone> zones;
  std::vector<std::size_t> node_zone;                 // A_{i,p}
  std::vector<std::optional<std::size_t>> line_zone;  // A_{ij,p}; empty for switched lines

  bool node_in_zone(std::size_t node, std::size_t zone) const { return node_zone[node] == zone; }
};

/// Zones are the connected components left after deleting every switched line.
ZonePartition compute_zones(const Grid& grid);

/// Inclusive range of hours of day; one optimization step per hour.
struct Horizon {
  int start_hour = 8;
  int end_hour = 22;

  std::vector<int> hours() const;
  std::size_t steps() const { return end_hour < start_hour ? 0 : static_cast<std::size_t>(end_hour - start_hour + 1); }
  bool operator==(const Horizon&) const = default;
};

class TopologyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything about the post-fault "border" the optimization needs.
struct RestorationCase {
  std::shared_ptr<const Grid> grid;
  std::size_t faulted_line = 0;
  Horizon horizon;
  ZonePartition zones;

  std::vector<std::size_t> N;          // healthy nodes of faulted + available feeders
  std::vector<std::size_t> N_star;     // off-outage nodes
  std::vector<std::size_t> Z_star;     // off-outage zones
  std::vector<std::size_t> W;          // involved lines (incl. candidate ties)
  std::vector<std::size_t> W_star;     // off-outage lines plus candidate ties
  std::vector<std::size_t> W_ava;      // available tie-switches
  std::vector<std::size_t> W_int;      // internal tie-switches
  std::vector<std::size_t> W_sec;      // internal sectionalizing switches
  std::vector<std::size_t> virtual_sources;
  std::vector<std::size_t> lost_nodes;          // inside the faulted zone
  std::vector<std::size_t> isolation_switches;  // opened to clear the fault, not counted as maneuvers

  std::vector<std::size_t> omega_sub;     // controllable OLTCs (regulator indices)
  std::vector<std::size_t> frozen_oltc;   // OLTCs in N held at their initial ratio
  std::vector<std::size_t> omega_svr;
  std::vector<std::size_t> omega_cb;
  std::vector<std::size_t> omega_dg;      // dg indices

  std::vector<std::size_t> feeder_of;     // node -> substation index (pre-fault feeder)
  bool no_restoration_path = false;
  std::vector<std::string> notes;

  std::vector<bool> in_N;
  std::vector<bool> in_N_star;
  std::vector<bool> in_W;

  const Grid& g() const { return *grid; }
  bool is_switched_decision(std::size_t line) const;  // line in W_S
};

/// Opens the switches enclosing `faulted_line` and derives the off-outage
/// area, available feeders and the restricted sets.
RestorationCase isolate_fault(std::shared_ptr<const Grid> grid, const std::string& faulted_line, Horizon horizon);

}  // namespace restore
