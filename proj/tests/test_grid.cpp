#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "fixtures.hpp"

using namespace restore;
using fixtures::d12_doc;
using fixtures::line_of;

namespace {

nlohmann::json minimal_doc() {
  return {{"nodes", {{{"id", "S"}, {"kind", "substation"}}, {{"id", "L"}, {"kind", "load"}, {"base_load_p", 0.1}}}},
          {"lines", {{{"id", "S-L"}, {"from", "S"}, {"to", "L"}, {"r", 0.01}, {"x", 0.01}, {"f_max", 1.0}, {"f_thr", 0.5}}}}};
}

std::string error_of(const nlohmann::json& doc) {
  try {
    parse_grid(doc);
  } catch (const GridError& e) {
    return e.what();
  }
  return {};
}

// Components of the normal configuration, counted with a plain DFS.
std::size_t count_components(const Grid& g, const std::vector<bool>& closed) {
  std::vector<std::vector<std::size_t>> adj(g.nodes().size());
  for (std::size_t l = 0; l < g.lines().size(); ++l)
    if (closed[l]) {
      adj[g.line_from(l)].push_back(g.line_to(l));
      adj[g.line_to(l)].push_back(g.line_from(l));
    }
  std::vector<bool> seen(g.nodes().size(), false);
  std::size_t count = 0;
  for (std::size_t s = 0; s < seen.size(); ++s) {
    if (seen[s]) continue;
    ++count;
    std::vector<std::size_t> stack{s};
    seen[s] = true;
    while (!stack.empty()) {
      auto u = stack.back();
      stack.pop_back();
      for (auto v : adj[u])
        if (!seen[v]) {
          seen[v] = true;
          stack.push_back(v);
        }
    }
  }
  return count;
}

}  // namespace

TEST(ParseGrid, MinimalTwoNodeDocument) {
  const auto g = parse_grid(minimal_doc());
  EXPECT_EQ(g.nodes().size(), 2u);
  EXPECT_EQ(g.lines().size(), 1u);
  EXPECT_EQ(g.node("L").kind, NodeKind::load);
  EXPECT_DOUBLE_EQ(g.limits().v_min, 0.917);
  EXPECT_DOUBLE_EQ(g.limits().v_max, 1.050);
}

TEST(ParseGrid, ThresholdAboveAmpacityNamesTheLine) {
  auto doc = minimal_doc();
  doc["lines"][0]["f_thr"] = 1.5;
  const auto msg = error_of(doc);
  EXPECT_NE(msg.find("S-L"), std::string::npos) << msg;
}

TEST(ParseGrid, RejectsSchemaAndInvariantViolations) {
  auto dup = minimal_doc();
  dup["nodes"][1]["id"] = "S";
  EXPECT_NE(error_of(dup).find("duplicate"), std::string::npos);

  auto missing = minimal_doc();
  missing["lines"][0].erase("r");
  EXPECT_NE(error_of(missing).find("'r'"), std::string::npos);

  auto typed = minimal_doc();
  typed["lines"][0]["x"] = "small";
  EXPECT_FALSE(error_of(typed).empty());

  auto negative = minimal_doc();
  negative["nodes"][1]["kp"] = -1.0;
  EXPECT_NE(error_of(negative).find("node L"), std::string::npos);

  auto priority = minimal_doc();
  priority["nodes"][1]["priority"] = 0.0;
  EXPECT_NE(error_of(priority).find("node L"), std::string::npos);

  auto sub_load = minimal_doc();
  sub_load["nodes"][0]["base_load_p"] = 0.2;
  EXPECT_NE(error_of(sub_load).find("node S"), std::string::npos);

  auto dangling = minimal_doc();
  dangling["lines"][0]["to"] = "Q";
  EXPECT_NE(error_of(dangling).find("S-L"), std::string::npos);

  auto limits = minimal_doc();
  limits["limits"] = {{"v_min", 1.1}, {"v_max", 1.2}};
  EXPECT_FALSE(error_of(limits).empty());
}

TEST(ParseGrid, RegulatorLocationsMustResolve) {
  auto doc = minimal_doc();
  doc["regulators"] = {{{"id", "C"}, {"kind", "cb"}, {"location", "nowhere"}, {"n_steps", 2}, {"dq_step", 0.1}}};
  EXPECT_NE(error_of(doc).find("regulator C"), std::string::npos);
  doc["regulators"][0]["location"] = "L";
  doc["regulators"][0]["dq_step"] = 0.0;
  EXPECT_NE(error_of(doc).find("regulator C"), std::string::npos);
  doc["regulators"][0]["dq_step"] = 0.1;
  EXPECT_NO_THROW(parse_grid(doc));
}

TEST(ParseGrid, DgInvariants) {
  auto doc = minimal_doc();
  doc["dgs"] = {{{"id", "G"}, {"node", "L"}, {"p_max", 2.8}, {"q_min", -1.0}, {"q_max", 1.0}, {"s_max", 3.0}}};
  EXPECT_NO_THROW(parse_grid(doc));
  doc["dgs"][0]["p_max"] = 3.5;
  EXPECT_NE(error_of(doc).find("dg G"), std::string::npos);
}

TEST(ParseGrid, RemoteSwitchesDefaultToLowerWeight) {
  const auto g = parse_grid(d12_doc());
  for (const auto& l : g.lines()) {
    if (!l.sw) continue;
    EXPECT_GT(l.sw->weight, 0.0);
    EXPECT_DOUBLE_EQ(l.sw->weight, l.sw->remote ? 1.0 : 2.0) << l.id;
    EXPECT_EQ(l.sw->normally_open, l.is_tie()) << l.id;
  }
}

TEST(ParseGrid, D12Counts) {
  const auto g = parse_grid(d12_doc());
  EXPECT_EQ(g.nodes().size(), 12u);
  EXPECT_EQ(g.lines().size(), 11u);
  EXPECT_EQ(std::count_if(g.lines().begin(), g.lines().end(), [](const Line& l) { return l.is_tie(); }), 1);
  EXPECT_EQ(std::count_if(g.lines().begin(), g.lines().end(), [](const Line& l) { return l.is_sectionalizer(); }), 10);
  auto kind_count = [&](RegulatorKind k) {
    return std::count_if(g.regulators().begin(), g.regulators().end(), [&](const Regulator& r) { return r.kind == k; });
  };
  EXPECT_EQ(kind_count(RegulatorKind::cb), 1);
  EXPECT_EQ(kind_count(RegulatorKind::oltc), 2);
  EXPECT_EQ(g.dgs().size(), 1u);
  EXPECT_EQ(g.substations().size(), 2u);
  const auto& cb = g.regulators()[2];
  EXPECT_NEAR(cb.dq_step * cb.n_steps, 1.2, 1e-12);
  for (const auto& r : g.regulators())
    if (r.kind == RegulatorKind::oltc) {
      EXPECT_DOUBLE_EQ(r.sigma, 0.00625);
      EXPECT_EQ(r.n_steps, 4);
    }
}

TEST(ParseGrid, SvrExpandsIntoRatioLinkAndImpedanceLine) {
  auto doc = minimal_doc();
  doc["regulators"] = {{{"id", "R"}, {"kind", "svr"}, {"location", "S-L"}, {"sigma", 0.00625}, {"n_steps", 4}}};
  const auto g = parse_grid(doc);
  ASSERT_EQ(g.lines().size(), 2u);
  const auto& reg = g.regulators()[0];
  const auto& link = g.line(reg.link);
  EXPECT_TRUE(link.is_virtual_regulator_link);
  EXPECT_EQ(link.r, 0.0);
  EXPECT_EQ(link.x, 0.0);
  EXPECT_EQ(link.from, "S");
  EXPECT_DOUBLE_EQ(g.line("S-L").r, 0.01);
  // Expansion is idempotent under serialization.
  EXPECT_EQ(parse_grid(to_json(g)), g);
}

TEST(ParseGrid, ProfilesScaleBaseLoad) {
  const auto g = parse_grid(d12_doc());
  const auto i = g.node_index("2");
  const auto& series = g.data().profiles.at("residential");
  for (int h : {0, 8, 18, 22}) EXPECT_DOUBLE_EQ(g.load_p(i, h), 0.2 * series[static_cast<std::size_t>(h)]);
  EXPECT_EQ(g.load_p(g.node_index("1"), 12), 0.0);
}

TEST(ParseGrid, BigMDefaults) {
  const auto g = parse_grid(d12_doc());
  double peak = 0.0;
  for (std::size_t i = 0; i < g.nodes().size(); ++i) {
    double best = 0.0;
    for (int h = 0; h < 24; ++h) best = std::max(best, g.load_p(i, h) + g.load_q(i, h));
    peak += best;
  }
  const auto m = resolve_big_m(g);
  EXPECT_DOUBLE_EQ(m.flow, 2.0 * peak);
  EXPECT_DOUBLE_EQ(m.volt, 1.05 * 1.05);
  EXPECT_DOUBLE_EQ(m.generic, 1e3);

  auto doc = d12_doc();
  doc["limits"]["big_m"] = {{"flow", 7.0}};
  EXPECT_DOUBLE_EQ(resolve_big_m(parse_grid(doc)).flow, 7.0);
}

TEST(GridRoundTrip, D12IsIdentity) {
  const auto g = parse_grid(d12_doc());
  const auto again = parse_grid(to_json(g));
  EXPECT_EQ(again, g);
  EXPECT_EQ(to_json(again), to_json(g));
}

TEST(GridRoundTrip, RandomInstancesAreIdentity) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto inst = random_instance(seed);
    EXPECT_EQ(parse_grid(to_json(*inst.grid)), *inst.grid) << "seed " << seed;
    EXPECT_EQ(parse_grid_text(to_json(*inst.grid).dump()), *inst.grid) << "seed " << seed;
  }
}

TEST(RadialBase, D12PreFaultPasses) {
  const auto rep = validate_radial_base(parse_grid(d12_doc()));
  EXPECT_TRUE(rep.ok) << rep.summary();
}

TEST(RadialBase, ClosedTieReportsLoop) {
  const auto g = parse_grid(d12_doc());
  const auto rep = validate_radial_base(g, {"6-7"});
  EXPECT_FALSE(rep.ok);
  const auto& loop = rep.loop_lines.empty() ? rep.multi_source_nodes : rep.loop_lines;
  EXPECT_FALSE(loop.empty()) << rep.summary();
}

TEST(RadialBase, LoopWithinOneFeederIsReported) {
  auto doc = fixtures::two_feeders(3);
  doc["lines"].push_back({{"id", "a1-a3"}, {"from", "a1"}, {"to", "a3"}, {"r", 0.01}, {"x", 0.01}, {"f_max", 1.0},
                          {"f_thr", 0.5}, {"switch", {{"kind", "tie"}}}});
  const auto g = parse_grid(doc);
  EXPECT_TRUE(validate_radial_base(g).ok);
  const auto rep = validate_radial_base(g, {"a1-a3"});
  ASSERT_FALSE(rep.ok);
  EXPECT_EQ(rep.loop_lines, std::vector<std::string>{"a1-a3"});
}

TEST(RadialBase, IsolatedJunctionIsUnreachable) {
  auto doc = minimal_doc();
  doc["nodes"].push_back({{"id", "J"}, {"kind", "junction"}});
  doc["nodes"].push_back({{"id", "K"}, {"kind", "junction"}});
  doc["lines"].push_back({{"id", "J-K"}, {"from", "J"}, {"to", "K"}, {"r", 0.01}, {"x", 0.01}, {"f_max", 1.0}, {"f_thr", 0.5}});
  doc["lines"].push_back({{"id", "L-J"}, {"from", "L"}, {"to", "J"}, {"r", 0.01}, {"x", 0.01}, {"f_max", 1.0},
                          {"f_thr", 0.5}, {"switch", {{"kind", "tie"}}}});
  const auto rep = validate_radial_base(parse_grid(doc));
  EXPECT_FALSE(rep.ok);
  EXPECT_EQ(rep.unreachable_nodes, (std::vector<std::string>{"J", "K"}));
}

// Property: a radial base closes exactly |nodes| - |substations| lines.
TEST(RadialBase, ClosedLineCountProperty) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto inst = random_instance(seed);
    const auto& g = *inst.grid;
    ASSERT_TRUE(validate_radial_base(g).ok) << "seed " << seed;
    std::vector<bool> closed(g.lines().size());
    std::size_t n_closed = 0;
    for (std::size_t l = 0; l < closed.size(); ++l) n_closed += closed[l] = !g.lines()[l].is_tie();
    EXPECT_EQ(n_closed, g.nodes().size() - g.substations().size()) << "seed " << seed;
    EXPECT_EQ(count_components(g, closed), g.substations().size()) << "seed " << seed;
    for (const auto& r : g.regulators()) {
      if (r.kind == RegulatorKind::svr)
        EXPECT_NO_THROW(g.line_index(r.location));
      else
        EXPECT_NO_THROW(g.node_index(r.location));
    }
  }
}
