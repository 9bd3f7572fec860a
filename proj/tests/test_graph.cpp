#include <gtest/gtest.h>

#include "chiralwp/scenario.hpp"

using namespace chiralwp;

namespace {

SpectralGraph toy(const std::vector<double>& energies, const std::vector<std::pair<int, int>>& pairs) {
  SpectralGraph g;
  g.nodes = static_cast<int>(energies.size());
  g.energies = Eigen::Map<const Eigen::VectorXd>(energies.data(), g.nodes);
  for (int i = 0; i < g.nodes; ++i) g.node_labels.push_back("n" + std::to_string(i));
  g.control_names = {"u"};
  for (auto [m, k] : pairs) g.edges.push_back({m, k, 0, std::abs(energies[k] - energies[m]), 0, cplx(1.0, 0.0)});
  return g;
}

ControllabilityCertificate decide_preset(const std::string& name, SpectralGraph* graph = nullptr) {
  const auto s = build_scenario(load_preset(name));
  const auto g = scenario_graph(s);
  const auto cert = decide_controllability(g);
  EXPECT_EQ(validate_certificate(g, cert), "") << name;
  if (graph) *graph = g;
  return cert;
}

}  // namespace

TEST(GraphicalCommutator, SharedNodeGivesTheThirdEdge) {
  EXPECT_EQ(graphical_commutator({0, 1}, {1, 2}), EdgeKey(0, 2));
  EXPECT_EQ(graphical_commutator({2, 5}, {0, 5}), EdgeKey(0, 2));
  EXPECT_FALSE(graphical_commutator({0, 1}, {2, 3}));
  EXPECT_FALSE(graphical_commutator({0, 1}, {0, 1}));
}

TEST(Controllability, ConnectedGraphWithDistinctGapsIsControllable) {
  const auto g = toy({0.0, 1.0, 2.7, 4.1}, {{0, 1}, {1, 2}, {2, 3}});
  const auto cert = decide_controllability(g);
  EXPECT_TRUE(cert.controllable) << cert.reason;
  EXPECT_EQ(cert.components, 1);
  EXPECT_EQ(validate_certificate(g, cert), "");
}

TEST(Controllability, DisconnectedGraphIsNotProven) {
  const auto g = toy({0.0, 1.0, 2.7, 4.1}, {{0, 1}, {2, 3}});
  const auto cert = decide_controllability(g);
  EXPECT_FALSE(cert.controllable);
  EXPECT_EQ(cert.components, 2);
  EXPECT_EQ(validate_certificate(g, cert), "");
}

TEST(Controllability, TamperedCertificateFailsReplay) {
  const auto g = toy({0.0, 1.0, 2.7, 4.1}, {{0, 1}, {1, 2}, {2, 3}});
  auto cert = decide_controllability(g);
  ASSERT_TRUE(cert.controllable);
  cert.spanning.push_back({0, 3});
  EXPECT_NE(validate_certificate(g, cert), "");
}

TEST(Controllability, PresetVerdicts) {
  SpectralGraph g;
  EXPECT_TRUE(decide_preset("fig2", &g).controllable);
  EXPECT_EQ(g.nodes, 20);
  EXPECT_FALSE(decide_preset("mw_only").controllable);
  EXPECT_FALSE(decide_preset("ir_only").controllable);
  EXPECT_TRUE(decide_preset("fig6").controllable);
}

TEST(Controllability, DeterministicReport) {
  const auto s = build_scenario(load_preset("fig2"));
  const auto g = scenario_graph(s);
  EXPECT_EQ(format_certificate(g, decide_controllability(g)), format_certificate(g, decide_controllability(g)));
}

TEST(Controllability, StaticFieldAddsOrderOneEdgesOnly) {
  SpectralGraph g;
  decide_preset("fig6", &g);
  int order1 = 0;
  for (const auto& e : g.edges) {
    EXPECT_TRUE(e.order == 0 || e.order == 1);
    if (e.order == 1) ++order1;
  }
  EXPECT_GT(order1, 0);
}
