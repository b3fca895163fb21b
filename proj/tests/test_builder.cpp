#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "fixtures.hpp"

using namespace restore;

namespace {

const LinearRow& row(const ConicProgram& P, const std::string& name) {
  for (const auto& r : P.rows())
    if (r.name == name) return r;
  throw std::out_of_range("no row " + name);
}

std::size_t var(const ConicProgram& P, const std::string& name) {
  for (std::size_t i = 0; i < P.size(); ++i)
    if (P.variables()[i].name == name) return i;
  throw std::out_of_range("no variable " + name);
}

const ObjectiveTerm& term(const ConicProgram& P, const std::string& name) {
  for (const auto& t : P.objective())
    if (t.name == name) return t;
  throw std::out_of_range("no objective term " + name);
}

struct Built {
  RestorationCase rc;
  BuiltProgram b;
};

Built build(std::shared_ptr<const Grid> g, const std::string& line, int steps = 2, BuildConfig cfg = {}) {
  auto rc = isolate_fault(std::move(g), line, {8, 8 + steps - 1});
  auto b = assemble(rc, cfg);
  return {std::move(rc), std::move(b)};
}

BuildConfig raw() {
  BuildConfig c;
  c.tighten_big_m = false;
  return c;
}

nlohmann::json svr_doc() {
  auto doc = fixtures::two_feeders(3);
  doc["regulators"] = {{{"id", "R"}, {"kind", "svr"}, {"location", "a1-a2"}, {"sigma", 0.00625}, {"n_steps", 4}}};
  return doc;
}

}  // namespace

TEST(Assemble, D12CountsForFirstLineFault) {
  const auto g = fixtures::d12();
  const auto [rc, b] = build(g, "1-2");
  const auto st = b.program.stats();
  // Y on the tie and the four internal sectionalizers, L on the five
  // off-outage nodes, and the capacitor tap as the only integer.
  const auto n_y = rc.W_ava.size() + rc.W_int.size() + rc.W_sec.size();
  EXPECT_EQ(n_y, 5u);
  EXPECT_EQ(st.binaries, n_y + rc.N_star.size());
  EXPECT_EQ(st.binaries, 10u);
  EXPECT_EQ(st.integers, 1u);
  EXPECT_EQ(st.sos1, 0u);
  std::size_t n_s = 0;
  for (auto s : b.index.S) n_s += s != kNoVar;
  EXPECT_EQ(n_s, 4u);
  for (const auto& v : b.program.variables())
    if (v.name.rfind("S[", 0) == 0 || v.name.rfind("B[", 0) == 0 || v.name.rfind("Z[", 0) == 0)
      EXPECT_EQ(v.kind, VarKind::continuous) << v.name;
}

TEST(Assemble, TimeInvariantDecisionsCarryNoStep) {
  const auto [rc, b] = build(fixtures::d12(), "1-2", 3);
  for (const auto& v : b.program.variables()) {
    const bool decision = v.is_discrete() || v.name.rfind("alpha[", 0) == 0 || v.name.rfind("S[", 0) == 0 ||
                          v.name.rfind("B[", 0) == 0 || v.name.rfind("T[", 0) == 0;
    if (decision) EXPECT_EQ(v.time, -1) << v.name;
  }
  EXPECT_EQ(b.index.V.size(), 3u);
  EXPECT_NE(b.index.V[2][rc.N_star[0]], kNoVar);
}

TEST(Assemble, IsDeterministic) {
  const auto g = fixtures::d12();
  std::ostringstream a, b;
  build(g, "3-4").b.program.dump(a);
  build(g, "3-4").b.program.dump(b);
  EXPECT_EQ(a.str(), b.str());
  std::istringstream in(a.str());
  std::ostringstream again;
  ConicProgram::parse_dump(in).dump(again);
  EXPECT_EQ(again.str(), a.str());
}

TEST(Assemble, EmptyHorizonIsAnError) {
  auto rc = isolate_fault(fixtures::d12(), "1-2", {9, 8});
  EXPECT_THROW(assemble(rc, {}), BuildError);
}

TEST(Assemble, PlainReconfigurationWithoutDevices) {
  const auto [rc, b] = build(fixtures::grid_of(fixtures::two_feeders(3)), "A-a1");
  for (const auto& v : b.program.variables()) {
    EXPECT_NE(v.kind, VarKind::integer) << v.name;
    if (v.kind == VarKind::binary) EXPECT_TRUE(v.name.rfind("Y[", 0) == 0 || v.name.rfind("L[", 0) == 0) << v.name;
  }
  EXPECT_TRUE(std::all_of(b.index.alpha.begin(), b.index.alpha.end(), [](auto v) { return v == kNoVar; }));
  EXPECT_EQ(b.program.stats().sos1, 0u);
}

TEST(LoadModel, RowsFollowTheLinearizedExponentialModel) {
  const auto g = fixtures::d12();
  const auto [rc, b] = build(g, "1-2", 2, raw());
  const auto& P = b.program;
  const auto& ix = b.index;
  const auto i = g->node_index("3");  // kp = 0.6, off-outage
  const double p0 = b.P0[0][i];
  std::vector<double> x(P.size(), 0.0);
  x[ix.X_node[i]] = 1.0;
  x[ix.V[0][i]] = 0.96;
  x[ix.PD[0][i]] = 0.988 * p0;
  EXPECT_NEAR(row(P, "load.active[3,0]").violation(x), 0.0, 1e-12);
  x[ix.PD[0][i]] = p0;
  EXPECT_GT(std::abs(row(P, "load.active[3,0]").violation(x)), 1e-4);
  x[ix.V[0][i]] = 1.0;
  EXPECT_NEAR(row(P, "load.active[3,0]").violation(x), 0.0, 1e-12);

  // Served side of the border: no X scaling.
  const auto j = g->node_index("8");
  x[ix.V[1][j]] = 1.0;
  x[ix.PD[1][j]] = b.P0[1][j];
  EXPECT_NEAR(row(P, "load.active[8,1]").violation(x), 0.0, 1e-12);
}

TEST(LoadModel, ZeroExponentIsConstantPower) {
  auto doc = fixtures::d12_doc();
  fixtures::node_of(doc, "3")["kp"] = 0.0;
  const auto [rc, b] = build(fixtures::grid_of(doc), "1-2", 1, raw());
  const auto& ix = b.index;
  const auto i = rc.g().node_index("3");
  std::vector<double> x(b.program.size(), 0.0);
  x[ix.X_node[i]] = 1.0;
  x[ix.PD[0][i]] = b.P0[0][i];
  for (double v : {0.85, 0.96, 1.1}) {
    x[ix.V[0][i]] = v;
    EXPECT_NEAR(row(b.program, "load.active[3,0]").violation(x), 0.0, 1e-12);
  }
}

TEST(Regulators, CapacitorInjection) {
  const auto [rc, b] = build(fixtures::d12(), "1-2", 1, raw());
  const auto& ix = b.index;
  const std::size_t r = 2;  // C9
  std::vector<double> x(b.program.size(), 0.0);
  x[ix.tap[r]] = 2;
  x[ix.Qcb[0][r]] = 0.6;
  EXPECT_NEAR(row(b.program, "reg.cb_injection[C9,0]").violation(x), 0.0, 1e-12);
  x[ix.T[r]] = 2;
  EXPECT_LE(row(b.program, "reg.cb_change_up[C9]").violation(x), 0.0);
  EXPECT_EQ(b.program.variables()[ix.tap[r]].ub, 4.0);
}

TEST(Regulators, OltcAtInitialRatioNeedsNoTapChange) {
  const auto [rc, b] = build(fixtures::d12(), "1-2", 1, raw());
  const auto& ix = b.index;
  const auto r = static_cast<std::size_t>(1);  // T12
  ASSERT_NE(ix.alpha[r], kNoVar);
  std::vector<double> x(b.program.size(), 0.0);
  x[ix.alpha[r]] = 0.0;
  x[ix.T[r]] = 0.0;
  x[ix.V[0][rc.g().node_index("12")]] = 1.0;
  EXPECT_LE(row(b.program, "reg.oltc_change_up[T12]").violation(x), 0.0);
  EXPECT_LE(row(b.program, "reg.oltc_change_down[T12]").violation(x), 0.0);
  EXPECT_NEAR(row(b.program, "reg.oltc_voltage[T12,0]").violation(x), 0.0, 1e-12);
  // One tap up costs nothing beyond the first step; two taps cost one.
  x[ix.alpha[r]] = 2 * 0.00625;
  x[ix.V[0][rc.g().node_index("12")]] = 1.0 + 4 * 0.00625;
  EXPECT_NEAR(row(b.program, "reg.oltc_voltage[T12,0]").violation(x), 0.0, 1e-12);
  EXPECT_GT(row(b.program, "reg.oltc_change_up[T12]").violation(x), 0.5);
  const double range = b.program.variables()[ix.alpha[r]].ub;
  EXPECT_DOUBLE_EQ(range, 4 * 0.00625);
}

TEST(Regulators, SvrProductLinearization) {
  const auto [rc, b] = build(fixtures::grid_of(svr_doc()), "a2-a3", 1, raw());
  const auto& ix = b.index;
  const auto& g = rc.g();
  const std::size_t r = 0;
  ASSERT_NE(ix.tap[r], kNoVar);
  const auto link = g.line_index(g.regulators()[r].link);
  const auto vi = g.line_from(link), vj = g.line_to(link);
  std::vector<double> x(b.program.size(), 0.0);
  x[ix.tap[r]] = 2;
  x[ix.delta[r][2 + 4]] = 1.0;
  x[ix.V[0][vi]] = 1.02;
  x[ix.b[0][r][2 + 4]] = 1.02;
  x[ix.beta[0][r]] = 2.04;
  x[ix.V[0][vj]] = 1.02 + 2 * 0.00625 * 2.04;
  for (const auto& rw : b.program.rows())
    if (rw.name.rfind("reg.svr", 0) == 0 && rw.name.find("change") == std::string::npos)
      EXPECT_LE(rw.violation(x), 1e-12) << rw.name;
  // Any other b_k away from zero breaks its "off" row.
  x[ix.b[0][r][1 + 4]] = 0.5;
  EXPECT_GT(row(b.program, "reg.svr_b_on[R,1,0]").violation(x), 0.0);
  ASSERT_EQ(b.program.sos1().size(), 1u);
  EXPECT_EQ(b.program.sos1()[0].vars.size(), 9u);
}

TEST(Switching, SubstitutedDisjunctions) {
  const auto [rc, b] = build(fixtures::d12(), "1-2", 1, raw());
  const auto& ix = b.index;
  const auto& g = rc.g();
  const auto l = g.line_index("3-4");
  const auto i = g.node_index("3");
  std::vector<double> x(b.program.size(), 0.0);
  x[ix.X_node[g.line_from(l)]] = 1.0;
  x[ix.X_node[g.line_to(l)]] = 1.0;
  // Closed: S may stay at zero.
  x[ix.Y[l]] = 1.0;
  EXPECT_LE(row(b.program, "switch.sec_from[3-4]").violation(x), 0.0);
  // Open between energized ends: S must be one.
  x[ix.Y[l]] = 0.0;
  EXPECT_GT(row(b.program, "switch.sec_from[3-4]").violation(x), 0.5);
  x[ix.S[l]] = 1.0;
  EXPECT_LE(row(b.program, "switch.sec_from[3-4]").violation(x), 0.0);
  // Energized but rejected: the breaker opens.
  x[ix.L[i]] = 0.0;
  EXPECT_GT(row(b.program, "switch.breaker[3]").violation(x), 0.5);
  x[ix.B[i]] = 1.0;
  EXPECT_LE(row(b.program, "switch.breaker[3]").violation(x), 0.0);
}

TEST(Reconfiguration, ClosingTheOnlyTieEnergizesTheZone) {
  const auto g = fixtures::d12();
  const auto [rc, b] = build(g, "5-6", 1);
  const auto& ix = b.index;
  auto engine = make_default_engine();
  std::vector<double> lb, ub;
  for (const auto& v : b.program.variables()) {
    lb.push_back(v.lb);
    ub.push_back(v.ub);
  }
  const auto tie = g->line_index("6-7");
  lb[ix.Y[tie]] = ub[ix.Y[tie]] = 1.0;
  const auto r = solve_relaxation({&b.program, AffineExpr{}, lb, ub, {}}, *engine);
  ASSERT_EQ(r.status, RelaxStatus::optimal) << r.detail;
  const auto six = g->node_index("6");
  EXPECT_NEAR(r.x[ix.E[rc.zones.node_zone[six]]], 1.0, 1e-7);
  EXPECT_NEAR(r.x[ix.X_node[six]], 1.0, 1e-7);
}

TEST(Reconfiguration, TwoTiesIntoOneZoneExcludeEachOther) {
  // Zone {a3} can be entered from a2 over the sectionalizer or from b3
  // over the tie; both orientations entering it cannot coexist.
  auto doc = fixtures::two_feeders(3);
  const auto [rc, b] = build(fixtures::grid_of(doc), "A-a1", 1);
  const auto& g = rc.g();
  const auto& ix = b.index;
  auto engine = make_default_engine();
  std::vector<double> lb, ub;
  for (const auto& v : b.program.variables()) {
    lb.push_back(v.lb);
    ub.push_back(v.ub);
  }
  const auto tie = g.line_index("tie");
  const auto sec = g.line_index("a2-a3");
  lb[ix.Z_bwd[tie]] = 1.0;  // b3 -> a3
  lb[ix.Z_fwd[sec]] = 1.0;  // a2 -> a3
  const auto r = solve_relaxation({&b.program, AffineExpr{}, lb, ub, {}}, *engine);
  EXPECT_EQ(r.status, RelaxStatus::infeasible);
}

TEST(Objective, SwitchingNumeratorCountsOperations) {
  auto doc = fixtures::d12_doc();
  for (auto& l : doc["lines"])
    if (l.contains("switch")) l["switch"] = {{"kind", l["switch"]["kind"]}, {"remote", true}, {"weight", 1.0}};
  for (auto& n : doc["nodes"]) n["breaker_weight"] = 1.0;
  const auto g = fixtures::grid_of(doc);
  const auto [rc, b] = build(g, "1-2", 1);
  const auto& ix = b.index;
  std::vector<double> x(b.program.size(), 0.0);
  x[ix.Y[g->line_index("6-7")]] = 1.0;
  x[ix.S[g->line_index("3-4")]] = 1.0;
  const auto& sw = term(b.program, "F_sw");
  EXPECT_DOUBLE_EQ(sw.expr.eval(x), 2.0);
  EXPECT_DOUBLE_EQ(sw.normalizer, 5.0 + 5.0);
}

TEST(Objective, FullRestorationAndLowCurrentCostNothing) {
  const auto [rc, b] = build(fixtures::d12(), "1-2", 2);
  const auto& ix = b.index;
  std::vector<double> x(b.program.size(), 0.0);
  for (auto i : rc.N_star) x[ix.L[i]] = 1.0;
  EXPECT_NEAR(term(b.program, "F_re").expr.eval(x), 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(term(b.program, "F_op_current").expr.eval(x), 0.0);
  // The epigraph row is slack when F is under its threshold.
  const auto l = rc.g().line_index("2-3");
  x[ix.F[0][l]] = 0.5;
  EXPECT_LE(row(b.program, "obj.deviation[2-3,0]").violation(x), 0.0);
  x[ix.F[0][l]] = 1.5;  // f_thr = 1
  EXPECT_NEAR(row(b.program, "obj.deviation[2-3,0]").violation(x), 0.5, 1e-12);
}

TEST(Objective, StagesAndNormalizers) {
  const auto [rc, b] = build(fixtures::d12(), "1-2", 2);
  const auto& P = b.program;
  EXPECT_EQ(term(P, "F_re").stage, 1);
  EXPECT_EQ(term(P, "F_sw").stage, 2);
  EXPECT_EQ(term(P, "F_op_current").stage, 3);
  EXPECT_EQ(term(P, "F_op_taps").stage, 3);
  EXPECT_DOUBLE_EQ(term(P, "F_op_current").weight, 0.5);
  for (const auto& t : P.objective()) EXPECT_GT(t.normalizer, 0.0) << t.name;
  // Rejecting everything costs exactly one normalized unit.
  std::vector<double> x(P.size(), 0.0);
  EXPECT_NEAR(P.stage_value(1, x), 1.0, 1e-12);
}

TEST(Objective, ZeroNormalizerFallsBackWithNote) {
  auto doc = fixtures::d12_doc();
  doc["regulators"] = nlohmann::json::array();
  const auto [rc, b] = build(fixtures::grid_of(doc), "1-2", 1);
  EXPECT_DOUBLE_EQ(term(b.program, "F_op_taps").normalizer, 1.0);
  EXPECT_TRUE(std::any_of(b.notes.begin(), b.notes.end(),
                          [](const std::string& n) { return n.find("normalizer") != std::string::npos; }));
}

TEST(Opf, DeEnergizedElementsCollapse) {
  const auto [rc, b] = build(fixtures::d12(), "1-2", 1);
  const auto& g = rc.g();
  const auto& ix = b.index;
  auto engine = make_default_engine();
  std::vector<double> lb, ub;
  for (const auto& v : b.program.variables()) {
    lb.push_back(v.lb);
    ub.push_back(v.ub);
  }
  const auto tie = g.line_index("6-7");
  lb[ix.Y[tie]] = ub[ix.Y[tie]] = 0.0;
  AffineExpr obj;  // push flows and voltages up where they could move
  for (auto l : rc.W_star) obj.add(ix.F[0][l], -1.0).add(ix.p[0][l], -1.0);
  for (auto i : rc.N_star) obj.add(ix.V[0][i], -1.0);
  // Integral plans only: a fractional relaxation can let parents point at
  // each other.
  SolverConfig cfg;
  const auto r = branch_and_bound({&b.program, obj, {}, lb, ub, std::nullopt}, cfg, *engine);
  ASSERT_EQ(r.status, SolveStatus::optimal);
  for (auto l : rc.W_star) {
    EXPECT_NEAR(r.x[ix.F[0][l]], 0.0, 1e-7) << g.lines()[l].id;
    EXPECT_NEAR(r.x[ix.p[0][l]], 0.0, 1e-7) << g.lines()[l].id;
  }
  for (auto i : rc.N_star) EXPECT_NEAR(r.x[ix.V[0][i]], 0.0, 1e-7) << g.nodes()[i].id;
}

TEST(Opf, LosslessStubIsTight) {
  nlohmann::json doc = {
      {"nodes", {{{"id", "S"}, {"kind", "substation"}}, {{"id", "L"}, {"kind", "load"}, {"base_load_p", 0.1}},
                 {{"id", "T"}, {"kind", "substation"}}, {{"id", "M"}, {"kind", "load"}, {"base_load_p", 0.1}}}},
      {"lines",
       {{{"id", "T-M"}, {"from", "T"}, {"to", "M"}, {"r", 0.0}, {"x", 0.0}, {"f_max", 1.0}, {"f_thr", 0.5},
         {"switch", {{"kind", "sectionalizing"}}}},
        {{"id", "M-L"}, {"from", "M"}, {"to", "L"}, {"r", 0.0}, {"x", 0.0}, {"f_max", 1.0}, {"f_thr", 0.5},
         {"switch", {{"kind", "tie"}, {"remote", true}}}},
        {{"id", "S-L"}, {"from", "S"}, {"to", "L"}, {"r", 0.0}, {"x", 0.0}, {"f_max", 1.0}, {"f_thr", 0.5},
         {"switch", {{"kind", "sectionalizing"}}}}}}};
  const auto g = fixtures::grid_of(doc);
  auto rc = isolate_fault(g, "S-L", {8, 8});
  const auto b = assemble(rc, {});
  auto engine = make_default_engine();
  const auto sol = solve_lexicographic(b.program, {}, *engine);
  ASSERT_EQ(sol.status, SolveStatus::optimal);
  const auto& ix = b.index;
  const auto l = g->line_index("M-L");
  const double p = sol.x[ix.p[0][l]], q = sol.x[ix.q[0][l]], F = sol.x[ix.F[0][l]];
  const double V = sol.x[ix.V[0][g->line_from(l)]];
  EXPECT_NEAR(std::abs(p), 0.1, 1e-7);
  EXPECT_NEAR(V, 1.0, 1e-7);
  EXPECT_NEAR(F * V, p * p + q * q, 1e-8);
}

TEST(BigM, TighteningKeepsFeasiblePointsFeasible) {
  const auto g = fixtures::d12();
  auto rc = isolate_fault(g, "1-2", {8, 9});
  const auto loose = assemble(rc, raw());
  const auto tight = assemble(rc, {});
  ASSERT_EQ(loose.program.size(), tight.program.size());
  auto engine = make_default_engine();
  const auto sol = solve_lexicographic(tight.program, {}, *engine, oltc_specs(tight, *g));
  ASSERT_EQ(sol.status, SolveStatus::optimal);
  EXPECT_LE(loose.program.max_row_violation(sol.x), 1e-7);
  EXPECT_LE(tight.program.max_row_violation(sol.x), 1e-7);
  auto again = tight.program;
  EXPECT_EQ(tighten_big_m(again), 0u);  // idempotent
}
