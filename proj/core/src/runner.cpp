#include "restore/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <set>
#include <sstream>
#include <thread>

namespace restore {

namespace {

nlohmann::json read_json(const std::string& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw RunnerError("cannot open " + what + " '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw RunnerError(what + " '" + path + "': " + e.what());
  }
}

void reject_unknown(const nlohmann::json& doc, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : doc.items())
    if (!known.contains(key)) throw RunnerError(where + ": unknown key '" + key + "'");
}

template <class T>
void read_opt(const nlohmann::json& doc, const char* key, T& out, const std::string& where) {
  if (!doc.contains(key)) return;
  try {
    doc.at(key).get_to(out);
  } catch (const nlohmann::json::exception&) {
    throw RunnerError(where + ": '" + key + "' has the wrong type");
  }
}

}  // namespace

std::string mode_name(StageMode m) { return m == StageMode::lexicographic ? "lex" : "weighted"; }

StageMode parse_mode(const std::string& s) {
  if (s == "lex" || s == "lexicographic") return StageMode::lexicographic;
  if (s == "weighted") return StageMode::weighted;
  throw RunnerError("unknown mode '" + s + "' (expected lex or weighted)");
}

RunConfig parse_run_config(const nlohmann::json& doc) {
  const std::string where = "config";
  if (!doc.is_object()) throw RunnerError(where + ": expected an object");
  reject_unknown(doc,
                 {"mode", "priorities", "freeze_regulators", "frozen_regulators", "w1", "w2", "curtailment",
                  "tightening_stage", "solver", "tolerances", "threads"},
                 where);
  RunConfig c;
  if (doc.contains("mode")) c.solver.mode = parse_mode(doc.at("mode").get<std::string>());
  if (doc.contains("priorities")) {
    const auto& p = doc.at("priorities");
    if (!p.is_object()) throw RunnerError(where + ": 'priorities' must map node ids to factors");
    for (const auto& [node, value] : p.items()) {
      if (!value.is_number() || value.get<double>() < 0.0)
        throw RunnerError(where + ": priority of node " + node + " must be a nonnegative number");
      c.build.priority_overrides[node] = value.get<double>();
    }
  }
  read_opt(doc, "freeze_regulators", c.build.freeze_regulators, where);
  if (doc.contains("frozen_regulators"))
    for (const auto& id : doc.at("frozen_regulators")) c.build.frozen_regulators.insert(id.get<std::string>());
  read_opt(doc, "w1", c.build.w1, where);
  read_opt(doc, "w2", c.build.w2, where);
  if (c.build.w1 < 0.0 || c.build.w2 < 0.0) throw RunnerError(where + ": w1 and w2 must be nonnegative");
  read_opt(doc, "tightening_stage", c.build.tightening_stage, where);
  if (doc.contains("curtailment")) {
    const auto s = doc.at("curtailment").get<std::string>();
    if (s == "nominal")
      c.build.curtailment = CurtailmentBasis::nominal;
    else if (s == "voltage_dependent")
      c.build.curtailment = CurtailmentBasis::voltage_dependent;
    else
      throw RunnerError(where + ": unknown curtailment basis '" + s + "'");
  }
  if (doc.contains("solver")) {
    const auto& s = doc.at("solver");
    const std::string sw = where + ".solver";
    reject_unknown(s, {"epsilon", "gap", "abs_gap", "node_limit", "time_limit", "w_re", "w_sw", "w_op"}, sw);
    read_opt(s, "epsilon", c.solver.epsilon, sw);
    read_opt(s, "gap", c.solver.gap, sw);
    read_opt(s, "abs_gap", c.solver.abs_gap, sw);
    read_opt(s, "node_limit", c.solver.node_limit, sw);
    read_opt(s, "time_limit", c.solver.time_limit, sw);
    read_opt(s, "w_re", c.solver.w_re, sw);
    read_opt(s, "w_sw", c.solver.w_sw, sw);
    read_opt(s, "w_op", c.solver.w_op, sw);
  }
  if (doc.contains("tolerances")) {
    const auto& t = doc.at("tolerances");
    reject_unknown(t, {"cone", "ac"}, where + ".tolerances");
    read_opt(t, "cone", c.cone_tol, where);
    read_opt(t, "ac", c.ac_tol, where);
  }
  read_opt(doc, "threads", c.threads, where);
  return c;
}

RunConfig load_run_config(const std::string& path) {
  if (path.empty()) return {};
  return parse_run_config(read_json(path, "config"));
}

FaultSpec parse_fault(const nlohmann::json& doc) {
  if (!doc.is_object()) throw RunnerError("fault: expected an object");
  reject_unknown(doc, {"id", "faulted_line", "horizon"}, "fault");
  FaultSpec f;
  if (!doc.contains("faulted_line") || !doc.at("faulted_line").is_string())
    throw RunnerError("fault: 'faulted_line' is required and must be a line id");
  f.faulted_line = doc.at("faulted_line").get<std::string>();
  f.id = f.faulted_line;
  if (doc.contains("id")) {
    const auto& id = doc.at("id");
    if (id.is_string())
      f.id = id.get<std::string>();
    else if (id.is_number_integer())
      f.id = std::to_string(id.get<long long>());
    else
      throw RunnerError("fault " + f.faulted_line + ": 'id' must be a string");
  }
  if (doc.contains("horizon")) {
    const auto& h = doc.at("horizon");
    if (!h.is_array() || h.size() != 2 || !h[0].is_number_integer() || !h[1].is_number_integer())
      throw RunnerError("fault " + f.id + ": 'horizon' must be [start_hour, end_hour]");
    f.horizon = {h[0].get<int>(), h[1].get<int>()};
    if (f.horizon.start_hour < 0 || f.horizon.end_hour > 23 || f.horizon.end_hour < f.horizon.start_hour)
      throw RunnerError("fault " + f.id + ": horizon must satisfy 0 <= start <= end <= 23");
  }
  return f;
}

FaultSpec load_fault_file(const std::string& path) { return parse_fault(read_json(path, "fault file")); }

std::vector<FaultSpec> parse_fault_list(const nlohmann::json& doc) {
  const auto& list = doc.is_object() && doc.contains("faults") ? doc.at("faults") : doc;
  if (!list.is_array()) throw RunnerError("fault list: expected an array of faults");
  std::vector<FaultSpec> out;
  for (const auto& f : list) out.push_back(parse_fault(f));
  return out;
}

std::vector<FaultSpec> load_fault_list(const std::string& path) {
  return parse_fault_list(read_json(path, "fault list"));
}

CaseRun run_case(std::shared_ptr<const Grid> grid, const FaultSpec& fault, const RunConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  CaseRun run{fault, isolate_fault(grid, fault.faulted_line, fault.horizon), {}, {}, {}, {}};
  run.built = assemble(run.rc, config.build);
  auto engine = make_default_engine(config.solver.ipm);
  run.solution = solve_lexicographic(run.built.program, config.solver, *engine, oltc_specs(run.built, *grid));
  if (run.solution.has_incumbent()) snap_indicators(run.built, run.solution.x);
  if (run.solution.has_incumbent())
    run.verification = verify_solution(run.rc, run.built, run.solution.x, config.cone_tol, config.ac_tol);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  run.report = make_report(fault.id, run.rc, run.built, run.solution, run.verification, seconds,
                           mode_name(config.solver.mode), config.build.priority_overrides);
  return run;
}

bool report_ok(const RestorationReport& r) { return r.status == "optimal" && r.verification.pass; }

RestorationReport run(const std::string& grid_path, const std::string& fault_path, const std::string& config_path) {
  const auto fault = load_fault_file(fault_path);
  const auto config = load_run_config(config_path);
  auto grid = std::make_shared<const Grid>(load_grid_file(grid_path));
  return run_case(std::move(grid), fault, config).report;
}

BatchResult run_batch(std::shared_ptr<const Grid> grid, const std::vector<FaultSpec>& faults,
                      const RunConfig& config) {
  if (faults.empty()) throw RunnerError("fault list is empty");
  BatchResult out;
  std::vector<FaultSpec> unique;
  std::set<std::string> seen;
  for (const auto& f : faults) {
    if (seen.insert(f.id).second)
      unique.push_back(f);
    else
      out.warnings.push_back("duplicate fault id '" + f.id + "' ignored");
  }

  const std::size_t workers = std::max<std::size_t>(
      1, std::min(unique.size(), config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency())));
  out.reports.resize(unique.size());
  std::vector<std::string> errors(unique.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k; (k = next++) < unique.size();) {
      try {
        out.reports[k] = run_case(grid, unique[k], config).report;
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    }
  };
  std::vector<std::future<void>> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.push_back(std::async(std::launch::async, work));
  for (auto& f : pool) f.get();
  for (std::size_t k = 0; k < unique.size(); ++k)
    if (!errors[k].empty()) {
      auto& r = out.reports[k];
      r.fault_id = unique[k].id;
      r.faulted_line = unique[k].faulted_line;
      r.mode = mode_name(config.solver.mode);
      r.status = "error";
      r.verification.failures.push_back(errors[k]);
    }
  out.summary = summary_csv(out.reports);
  return out;
}

BatchResult run_batch(const std::string& grid_path, const std::string& faults_path, const std::string& config_path) {
  const auto faults = load_fault_list(faults_path);
  const auto config = load_run_config(config_path);
  return run_batch(std::make_shared<const Grid>(load_grid_file(grid_path)), faults, config);
}

ModeComparison compare_modes(std::shared_ptr<const Grid> grid, const FaultSpec& fault, const RunConfig& config) {
  ModeComparison out;
  RunConfig lex = config, wsum = config;
  lex.solver.mode = StageMode::lexicographic;
  wsum.solver.mode = StageMode::weighted;
  const auto a = run_case(grid, fault, lex);
  const auto b = run_case(grid, fault, wsum);
  out.lexicographic = a.report;
  out.weighted = b.report;
  if (a.solution.has_incumbent()) out.lexicographic_plan = discrete_plan(a.built, oltc_specs(a.built, *grid), a.solution.x);
  if (b.solution.has_incumbent()) out.weighted_plan = discrete_plan(b.built, oltc_specs(b.built, *grid), b.solution.x);
  if (a.solution.has_incumbent() != b.solution.has_incumbent()) {
    out.difference = std::string("only the ") + (a.solution.has_incumbent() ? "lexicographic" : "weighted") +
                     " solve found a plan";
  } else {
    out.difference = out.lexicographic_plan.diff(out.weighted_plan);
  }
  out.identical = out.difference.empty();
  return out;
}

ModeComparison compare_modes(const std::string& grid_path, const std::string& fault_path,
                             const std::string& config_path) {
  const auto fault = load_fault_file(fault_path);
  const auto config = load_run_config(config_path);
  return compare_modes(std::make_shared<const Grid>(load_grid_file(grid_path)), fault, config);
}

void write_file_atomic(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  std::ostringstream suffix;
  suffix << ".tmp." << std::this_thread::get_id();
  const fs::path tmp = target.string() + suffix.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw RunnerError("cannot write '" + tmp.string() + "'");
    out << text;
    if (!out.flush()) throw RunnerError("cannot write '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

}  // namespace restore
