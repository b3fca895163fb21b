#pragma once

#include <fstream>
#include <memory>
#include <string>

#include <json.hpp>

#include "restore/runner.hpp"

namespace fixtures {

inline std::string data_path(const std::string& name) { return std::string(RESTORE_DATA_DIR) + "/" + name; }

inline nlohmann::json d12_doc() {
  std::ifstream in(data_path("d12.json"));
  return nlohmann::json::parse(in);
}

inline std::shared_ptr<const restore::Grid> grid_of(const nlohmann::json& doc) {
  return std::make_shared<const restore::Grid>(restore::parse_grid(doc));
}

inline std::shared_ptr<const restore::Grid> d12() { return grid_of(d12_doc()); }

inline nlohmann::json& line_of(nlohmann::json& doc, const std::string& id) {
  for (auto& l : doc["lines"])
    if (l["id"] == id) return l;
  throw std::out_of_range("no line " + id);
}

inline nlohmann::json& node_of(nlohmann::json& doc, const std::string& id) {
  for (auto& n : doc["nodes"])
    if (n["id"] == id) return n;
  throw std::out_of_range("no node " + id);
}

/// Two feeders of `per_feeder` load nodes each, joined by one tie at the
/// far ends. Nodes are "a1".."aN" behind substation "A" and likewise "b".
inline nlohmann::json two_feeders(int per_feeder, double load = 0.05) {
  nlohmann::json doc;
  doc["nodes"] = {{{"id", "A"}, {"kind", "substation"}}, {{"id", "B"}, {"kind", "substation"}}};
  doc["lines"] = nlohmann::json::array();
  for (const char* f : {"a", "b"}) {
    std::string prev = f[0] == 'a' ? "A" : "B";
    for (int k = 1; k <= per_feeder; ++k) {
      const std::string id = std::string(f) + std::to_string(k);
      doc["nodes"].push_back({{"id", id}, {"kind", "load"}, {"base_load_p", load}, {"base_load_q", load / 2}});
      doc["lines"].push_back({{"id", prev + "-" + id},
                              {"from", prev},
                              {"to", id},
                              {"r", 0.004},
                              {"x", 0.003},
                              {"f_max", 2.0},
                              {"f_thr", 0.5},
                              {"switch", {{"kind", "sectionalizing"}, {"remote", false}}}});
      prev = id;
    }
  }
  const auto n = std::to_string(per_feeder);
  doc["lines"].push_back({{"id", "tie"},
                          {"from", "a" + n},
                          {"to", "b" + n},
                          {"r", 0.004},
                          {"x", 0.003},
                          {"f_max", 2.0},
                          {"f_thr", 0.5},
                          {"switch", {{"kind", "tie"}, {"remote", true}}}});
  doc["regulators"] = nlohmann::json::array();
  doc["dgs"] = nlohmann::json::array();
  doc["limits"] = {{"v_min", 0.917}, {"v_max", 1.05}};
  doc["profiles"] = nlohmann::json::object();
  return doc;
}

inline restore::FaultSpec fault(const std::string& line, int start = 8, int end = 9) {
  return {line, line, {start, end}};
}

}  // namespace fixtures
