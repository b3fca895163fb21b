#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "restore/brute_force.hpp"
#include "restore/power_flow.hpp"

using namespace restore;

namespace {

std::size_t var_named(const BuiltProgram& b, const std::string& name) {
  const auto& vars = b.program.variables();
  for (std::size_t i = 0; i < vars.size(); ++i)
    if (vars[i].name == name) return i;
  throw std::out_of_range("no variable " + name);
}

const CaseRun& d12_run() {
  static const CaseRun run = run_case(fixtures::d12(), fixtures::fault("1-2"), RunConfig{});
  return run;
}

}  // namespace

TEST(Radiality, D12PlanPasses) {
  const auto& r = d12_run();
  ASSERT_TRUE(r.solution.has_incumbent());
  const auto rad = check_radiality(r.rc, r.built, r.solution.x);
  EXPECT_TRUE(rad.pass) << (rad.failures.empty() ? "" : rad.failures.front());
  EXPECT_EQ(rad.energized_lines, rad.energized_nodes - rad.energized_sources);
  EXPECT_TRUE(rad.isolated.empty());
}

TEST(Radiality, OpeningTheTieLeavesFlowOnADeadLine) {
  const auto& r = d12_run();
  auto x = r.solution.x;
  x[var_named(r.built, "Y[6-7]")] = 0.0;
  const auto rad = check_radiality(r.rc, r.built, x);
  EXPECT_FALSE(rad.pass);
  EXPECT_FALSE(rad.failures.empty());
}

TEST(Radiality, ClosingEverySectionalizerStillPassesWhenTheyWereClosed) {
  // Sectionalizers inside the restored area stay closed in the optimal plan.
  const auto& r = d12_run();
  for (auto l : r.rc.W_sec) EXPECT_GT(r.solution.x[r.built.index.Y[l]], 0.5) << r.rc.g().lines()[l].id;
}

TEST(Cone, OptimalPlanIsExact) {
  const auto& r = d12_run();
  const auto cone = check_cone_exactness(r.rc, r.built, r.solution.x);
  EXPECT_TRUE(cone.pass);
  EXPECT_LE(std::abs(cone.max_residual), 1e-5);
  EXPECT_TRUE(cone.flagged.empty());
}

TEST(Cone, InflatedCurrentIsFlagged) {
  const auto& r = d12_run();
  auto x = r.solution.x;
  const auto l = r.rc.g().line_index("6-7");
  x[r.built.index.F[0][l]] += 0.05;
  const auto cone = check_cone_exactness(r.rc, r.built, x);
  EXPECT_FALSE(cone.pass);
  ASSERT_FALSE(cone.flagged.empty());
  EXPECT_EQ(cone.flagged.front().line, "6-7");
  EXPECT_EQ(cone.flagged.front().step, 0u);
}

TEST(Cone, TwoNodeCaseIsTight) {
  auto doc = fixtures::two_feeders(1, 0.2);
  const auto run = run_case(fixtures::grid_of(doc), fixtures::fault("A-a1", 8, 8), RunConfig{});
  ASSERT_TRUE(run.solution.has_incumbent());
  const auto cone = check_cone_exactness(run.rc, run.built, run.solution.x, 1e-8);
  EXPECT_LE(std::abs(cone.max_residual), 1e-8);
  EXPECT_LE(std::abs(cone.min_residual), 1e-8);
}

TEST(AcCheck, NoLoadMeansFlatVoltage) {
  auto doc = fixtures::two_feeders(3, 0.0);
  const auto run = run_case(fixtures::grid_of(doc), fixtures::fault("A-a1", 8, 8), RunConfig{});
  ASSERT_TRUE(run.solution.has_incumbent());
  const auto sw = sweep_step(run.rc, run.built, run.solution.x, 0);
  ASSERT_TRUE(sw.converged) << sw.message;
  const auto& g = run.rc.g();
  const double vs = sw.v2[g.node_index("B")];
  EXPECT_GT(vs, 0.0);
  for (const char* id : {"b1", "b2", "b3", "a3", "a2", "a1"})
    EXPECT_NEAR(sw.v2[g.node_index(id)], vs, 1e-6) << id;
}

TEST(AcCheck, D12MatchesTheRelaxation) {
  const auto& r = d12_run();
  const auto ac = resimulate_ac(r.rc, r.built, r.solution.x);
  EXPECT_TRUE(ac.converged) << ac.message;
  EXPECT_LE(ac.voltage_mismatch, 5e-4);
  EXPECT_LE(ac.flow_mismatch, 5e-4);
}

TEST(AcCheck, HeavyLoadingStillConverges) {
  auto doc = fixtures::two_feeders(4, 0.15);
  const auto run = run_case(fixtures::grid_of(doc), fixtures::fault("A-a1", 8, 8), RunConfig{});
  ASSERT_TRUE(run.solution.has_incumbent());
  const auto ac = resimulate_ac(run.rc, run.built, run.solution.x);
  EXPECT_TRUE(ac.converged) << ac.message;
  EXPECT_LE(ac.voltage_mismatch, 5e-4);
}

TEST(Verify, ReportSummarizesEveryCheck) {
  const auto& r = d12_run();
  EXPECT_TRUE(r.verification.pass()) << r.verification.summary();
  EXPECT_FALSE(r.verification.summary().empty());
}

TEST(BruteForce, SmallGridAgreesWithBranchAndBound) {
  const auto run = run_case(fixtures::grid_of(fixtures::two_feeders(2)), fixtures::fault("A-a1", 8, 8), RunConfig{});
  ASSERT_TRUE(run.solution.has_incumbent());
  auto engine = make_default_engine();
  const auto bf = brute_force(run.rc, run.built, {}, SolverConfig{}, *engine);
  ASSERT_TRUE(bf.feasible) << bf.message;
  EXPECT_EQ(bf.plan, discrete_plan(run.built, oltc_specs(run.built, run.rc.g()), run.solution.x));
  for (std::size_t s = 1; s < bf.stage_optima.size(); ++s)
    EXPECT_NEAR(bf.stage_optima[s], run.solution.stage_optima[s], 1e-5 * std::max(1.0, std::abs(bf.stage_optima[s])))
        << "stage " << s;
}

TEST(BruteForce, D12AgreesWithBranchAndBound) {
  const auto run = run_case(fixtures::d12(), fixtures::fault("1-2", 8, 8), RunConfig{});
  ASSERT_TRUE(run.solution.has_incumbent());
  auto engine = make_default_engine();
  const auto bf = brute_force(run.rc, run.built, {}, SolverConfig{}, *engine);
  ASSERT_TRUE(bf.feasible) << bf.message;
  EXPECT_EQ(bf.plan, discrete_plan(run.built, oltc_specs(run.built, run.rc.g()), run.solution.x))
      << bf.plan.diff(discrete_plan(run.built, oltc_specs(run.built, run.rc.g()), run.solution.x));
}

TEST(BruteForce, CapIsEnforced) {
  const auto& r = d12_run();
  auto engine = make_default_engine();
  BruteForceCaps caps;
  caps.max_combos = 1;
  EXPECT_THROW(brute_force(r.rc, r.built, caps, SolverConfig{}, *engine), BruteForceError);
}

// Property over random instances: every verified plan is a spanning forest
// of the energized nodes with integral orientation indicators.
TEST(Verify, RandomPlansAreRadial) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto inst = random_instance(seed);
    const auto run = run_case(inst.grid, fixtures::fault(inst.faulted_line, 8, 8), RunConfig{});
    ASSERT_TRUE(run.solution.has_incumbent()) << "seed " << seed;
    const auto& rad = run.verification.radiality;
    EXPECT_TRUE(rad.pass) << "seed " << seed;
    EXPECT_EQ(rad.energized_lines, rad.energized_nodes - rad.energized_sources) << "seed " << seed;
    for (auto l : run.rc.W) {
      for (auto v : {run.built.index.Z_fwd[l], run.built.index.Z_bwd[l]}) {
        if (v == kNoVar) continue;
        const double z = run.solution.x[v];
        EXPECT_NEAR(z, std::round(z), 1e-6) << "seed " << seed;
      }
    }
  }
}
