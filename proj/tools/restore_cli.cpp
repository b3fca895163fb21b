#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "restore/brute_force.hpp"
#include "restore/runner.hpp"

using namespace restore;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;  // infeasible, unverified, or oracle disagreement
constexpr int kError = 2;   // bad input

struct Options {
  std::string grid, fault, config, out, mode, solution;
  std::optional<std::uint64_t> seed;
};

struct Loaded {
  std::shared_ptr<const Grid> grid;
  FaultSpec fault;
  RunConfig config;
};

Loaded load(const Options& o) {
  Loaded l;
  l.config = load_run_config(o.config);
  if (!o.mode.empty()) l.config.solver.mode = parse_mode(o.mode);
  if (o.seed) {
    if (!o.grid.empty()) throw RunnerError("--seed and --grid are exclusive");
    const auto inst = random_instance(*o.seed);
    l.grid = inst.grid;
    l.fault.id = "seed" + std::to_string(*o.seed);
    l.fault.faulted_line = inst.faulted_line;
    l.fault.horizon = {8, 9};
    if (!o.fault.empty()) l.fault.horizon = load_fault_file(o.fault).horizon;
    return l;
  }
  if (o.grid.empty() || o.fault.empty()) throw RunnerError("--grid and --fault are required (or --seed)");
  l.fault = load_fault_file(o.fault);
  l.grid = std::make_shared<const Grid>(load_grid_file(o.grid));
  return l;
}

std::string out_path(const Options& o, const std::string& name) {
  return (std::filesystem::path(o.out) / name).string();
}

nlohmann::json solution_json(const CaseRun& run) {
  nlohmann::json vars = nlohmann::json::object();
  const auto& P = run.built.program;
  for (std::size_t i = 0; i < P.size(); ++i) vars[P.variables()[i].name] = run.solution.x[i];
  return {{"fault_id", run.fault.id}, {"faulted_line", run.fault.faulted_line}, {"variables", vars}};
}

void print_report(const RestorationReport& r) {
  std::cout << "fault " << r.fault_id << " on " << r.faulted_line << ": " << r.status << "\n";
  for (const auto& a : r.switching) std::cout << "  " << a.describe() << "\n";
  for (const auto& t : r.taps) std::cout << "  " << to_string(t.kind) << " " << t.id << " tap " << t.tap << "\n";
  if (!r.isolated_nodes.empty()) {
    std::cout << "  isolated:";
    for (const auto& n : r.isolated_nodes) std::cout << " " << n;
    std::cout << "\n";
  }
  std::cout << "  ENS " << r.ens << " p.u.h, current deviation " << r.current_deviation << " p.u., "
            << r.wall_time << " s\n";
  std::cout << "  verification " << (r.verification.pass ? "pass" : "fail");
  for (const auto& f : r.verification.failures) std::cout << "; " << f;
  std::cout << "\n";
}

int cmd_solve(const Options& o) {
  const auto l = load(o);
  const auto run = run_case(l.grid, l.fault, l.config);
  print_report(run.report);
  if (!o.out.empty()) {
    write_file_atomic(out_path(o, l.fault.id + ".report.json"), emit_report(run.report));
    if (run.solution.has_incumbent())
      write_file_atomic(out_path(o, l.fault.id + ".solution.json"), solution_json(run).dump(1) + "\n");
  }
  return report_ok(run.report) ? kOk : kFailed;
}

int cmd_verify(const Options& o) {
  if (o.solution.empty()) throw RunnerError("--solution is required");
  const auto l = load(o);
  const auto rc = isolate_fault(l.grid, l.fault.faulted_line, l.fault.horizon);
  const auto built = assemble(rc, l.config.build);
  std::ifstream in(o.solution);
  if (!in) throw RunnerError("cannot open solution '" + o.solution + "'");
  const auto doc = nlohmann::json::parse(in);
  const auto& vars = doc.at("variables");
  const auto& P = built.program;
  std::vector<double> x(P.size(), 0.0);
  for (std::size_t i = 0; i < P.size(); ++i) {
    const auto& name = P.variables()[i].name;
    if (!vars.contains(name)) throw RunnerError("solution lacks variable " + name);
    x[i] = vars.at(name).get<double>();
  }
  const auto rep = verify_solution(rc, built, x, l.config.cone_tol, l.config.ac_tol);
  std::cout << rep.summary() << "\n";
  return rep.pass() ? kOk : kFailed;
}

int cmd_bruteforce(const Options& o) {
  const auto l = load(o);
  const auto run = run_case(l.grid, l.fault, l.config);
  auto engine = make_default_engine(l.config.solver.ipm);
  const auto bf = brute_force(run.rc, run.built, {}, l.config.solver, *engine);
  std::cout << "enumerated " << bf.combos << " assignments, solved " << bf.solved << ", pruned " << bf.pruned << " in "
            << bf.seconds << " s\n";
  if (!bf.feasible) {
    std::cout << "oracle: " << bf.message << "\n";
    return run.solution.has_incumbent() ? kFailed : kOk;
  }
  if (!run.solution.has_incumbent()) {
    std::cout << "branch and bound found no plan, oracle did\n";
    return kFailed;
  }
  const auto plan = discrete_plan(run.built, oltc_specs(run.built, *l.grid), run.solution.x);
  for (std::size_t s = 1; s < bf.stage_optima.size(); ++s)
    std::cout << "stage " << s << ": branch and bound " << run.solution.stage_optima[s] << ", oracle "
              << bf.stage_optima[s] << "\n";
  if (plan == bf.plan) {
    std::cout << "plans identical: " << plan.describe() << "\n";
    return kOk;
  }
  std::cout << "plans differ: " << plan.diff(bf.plan) << "\n";
  return kFailed;
}

int cmd_batch(const Options& o) {
  if (o.grid.empty() || o.fault.empty()) throw RunnerError("--grid and --fault (a fault list) are required");
  auto config = load_run_config(o.config);
  if (!o.mode.empty()) config.solver.mode = parse_mode(o.mode);
  const auto faults = load_fault_list(o.fault);
  const auto res = run_batch(std::make_shared<const Grid>(load_grid_file(o.grid)), faults, config);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << res.summary;
  bool ok = true;
  for (const auto& r : res.reports) {
    ok = ok && report_ok(r);
    if (!o.out.empty()) write_file_atomic(out_path(o, r.fault_id + ".report.json"), emit_report(r));
  }
  if (!o.out.empty()) write_file_atomic(out_path(o, "summary.csv"), res.summary);
  return ok ? kOk : kFailed;
}

int cmd_compare(const Options& o) {
  const auto l = load(o);
  const auto cmp = compare_modes(l.grid, l.fault, l.config);
  std::cout << "lexicographic: " << cmp.lexicographic_plan.describe() << "\n";
  std::cout << "weighted:      " << cmp.weighted_plan.describe() << "\n";
  std::cout << (cmp.identical ? "plans identical" : "plans diverge: " + cmp.difference) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Service restoration planner for radial distribution networks"};
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed = 0;
  auto common = [&](CLI::App* sub, bool with_out) {
    sub->add_option("--grid", o.grid, "Network description (JSON)");
    sub->add_option("--fault", o.fault, "Fault specification (JSON)");
    sub->add_option("--config", o.config, "Run configuration (JSON)");
    sub->add_option("--mode", o.mode, "Objective handling")->check(CLI::IsMember({"lex", "weighted"}));
    if (with_out) sub->add_option("--out", o.out, "Output directory");
  };
  auto* solve = app.add_subcommand("solve", "Solve one fault and write its report");
  common(solve, true);
  solve->add_option("--seed", seed, "Solve a seeded random instance instead of --grid");
  auto* verify = app.add_subcommand("verify", "Check a saved solution");
  common(verify, false);
  verify->add_option("--solution", o.solution, "Solution file written by solve")->required();
  auto* brute = app.add_subcommand("bruteforce", "Compare branch and bound with full enumeration");
  common(brute, false);
  brute->add_option("--seed", seed, "Use a seeded random instance instead of --grid");
  auto* batch = app.add_subcommand("batch", "Solve every fault in a list");
  common(batch, true);
  auto* compare = app.add_subcommand("compare", "Compare lexicographic and weighted plans");
  common(compare, false);

  CLI11_PARSE(app, argc, argv);
  for (auto* sub : {solve, brute})
    if (sub->parsed() && sub->count("--seed")) o.seed = seed;

  try {
    if (solve->parsed()) return cmd_solve(o);
    if (verify->parsed()) return cmd_verify(o);
    if (brute->parsed()) return cmd_bruteforce(o);
    if (batch->parsed()) return cmd_batch(o);
    if (compare->parsed()) return cmd_compare(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}
