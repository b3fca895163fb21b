#include <benchmark/benchmark.h>

#include "restore/runner.hpp"

using namespace restore;

namespace {

std::shared_ptr<const Grid> d12() {
  static const auto grid = std::make_shared<const Grid>(load_grid_file(std::string(RESTORE_DATA_DIR) + "/d12.json"));
  return grid;
}

RunConfig quiet() {
  RunConfig cfg;
  cfg.solver.keep_log = false;
  return cfg;
}

// Root relaxation of the stage-1 problem on D12, one step per hour.
void BM_RootRelaxation(benchmark::State& state) {
  const auto rc = isolate_fault(d12(), "1-2", {8, 8 + static_cast<int>(state.range(0)) - 1});
  const auto built = assemble(rc, {});
  auto engine = make_default_engine();
  const RelaxationRequest req{&built.program, built.program.stage_objective(1), {}, {}, {}};
  for (auto _ : state) benchmark::DoNotOptimize(solve_relaxation(req, *engine));
  state.counters["variables"] = static_cast<double>(built.program.size());
}
BENCHMARK(BM_RootRelaxation)->Arg(1)->Arg(15)->Unit(benchmark::kMillisecond);

void BM_Assemble(benchmark::State& state) {
  const auto rc = isolate_fault(d12(), "1-2", {8, 22});
  for (auto _ : state) benchmark::DoNotOptimize(assemble(rc, {}));
}
BENCHMARK(BM_Assemble)->Unit(benchmark::kMillisecond);

// Full pipeline: isolation, assembly, staged solve, verification.
void BM_SolveD12(benchmark::State& state) {
  const FaultSpec fault{"F", "1-2", {8, 8 + static_cast<int>(state.range(0)) - 1}};
  for (auto _ : state) benchmark::DoNotOptimize(run_case(d12(), fault, quiet()));
}
BENCHMARK(BM_SolveD12)->Arg(2)->Arg(15)->Unit(benchmark::kMillisecond);

void BM_SolveRandom(benchmark::State& state) {
  RandomInstanceSpec spec;
  spec.min_nodes = spec.max_nodes = static_cast<std::size_t>(state.range(0));
  const auto inst = random_instance(42, spec);
  const FaultSpec fault{"F", inst.faulted_line, {12, 13}};
  for (auto _ : state) benchmark::DoNotOptimize(run_case(inst.grid, fault, quiet()));
}
BENCHMARK(BM_SolveRandom)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
