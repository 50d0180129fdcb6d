#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "fingertrace/socialgraph.hpp"

namespace fingertrace {
namespace {

PairwiseMatrix both_ways(const std::string& a, const std::string& b, std::optional<double> ab,
                         std::optional<double> ba, Metric m = Metric::mi) {
  return {{a, b, m, ab}, {b, a, m, ba}};
}

TEST(BuildGraph, WeightIsMeanOfDirections) {
  auto g = build_graph(both_ways("i", "j", 0.3, 0.5));
  ASSERT_NE(g.edge("i", "j"), nullptr);
  EXPECT_EQ(g.edge("i", "j")->weight, (0.3 + 0.5) / 2.0);
  EXPECT_EQ(g.edge("j", "i"), g.edge("i", "j"));
  EXPECT_FALSE(g.edge("i", "j")->one_sided);
  EXPECT_EQ(g.metric, "mi");
}

TEST(BuildGraph, BelowThresholdIsOmitted) {
  auto g = build_graph(both_ways("i", "j", 0.05, 0.05));
  EXPECT_TRUE(g.edges.empty());
  EXPECT_EQ(g.nodes.size(), 2u);
}

TEST(BuildGraph, ThresholdIsInclusive) {
  EXPECT_NE(build_graph(both_ways("i", "j", 0.1, 0.1)).edge("i", "j"), nullptr);
  EXPECT_EQ(build_graph(both_ways("i", "j", 0.0999999, 0.1)).edge("i", "j"), nullptr);
}

TEST(BuildGraph, AllUndefinedLeavesIsolatedNodes) {
  PairwiseMatrix m = both_ways("a", "b", std::nullopt, std::nullopt);
  auto more = both_ways("a", "c", std::nullopt, std::nullopt);
  m.insert(m.end(), more.begin(), more.end());
  auto g = build_graph(m);
  EXPECT_EQ(g.nodes.size(), 3u);
  EXPECT_TRUE(g.edges.empty());
}

TEST(BuildGraph, OneSidedValueIsUsedAndFlagged) {
  auto g = build_graph(both_ways("i", "j", std::nullopt, 0.4));
  ASSERT_NE(g.edge("i", "j"), nullptr);
  EXPECT_EQ(g.edge("i", "j")->weight, 0.4);
  EXPECT_TRUE(g.edge("i", "j")->one_sided);
  EXPECT_NE(export_graph(g, GraphFormat::dot).find("style=dashed"), std::string::npos);
}

TEST(BuildGraph, ThresholdOutsideUnitIntervalIsConfigError) {
  EXPECT_THROW(build_graph({}, 1.1), ConfigError);
  EXPECT_THROW(build_graph({}, -0.1), ConfigError);
  EXPECT_NO_THROW(build_graph({}, 1.0));
}

TEST(BuildGraph, MixedMetricsAreRejected) {
  PairwiseMatrix m = {{"a", "b", Metric::mi, 0.5}, {"b", "a", Metric::tmi, 0.5}};
  EXPECT_THROW(build_graph(m), ArgumentError);
}

TEST(BuildGraph, SelfPairsAreIgnored) {
  auto g = build_graph({{"a", "a", Metric::mi, 1.0}, {"a", "b", Metric::mi, 0.5}});
  EXPECT_EQ(g.edges.size(), 1u);
}

PairwiseMatrix random_matrix(std::mt19937_64& rng, int people) {
  std::uniform_real_distribution<double> v(0, 1);
  PairwiseMatrix m;
  for (int a = 0; a < people; ++a)
    for (int b = 0; b < people; ++b) {
      if (a == b) continue;
      std::optional<double> x;
      if (v(rng) < 0.8) x = v(rng) * v(rng);
      m.push_back({"P" + std::to_string(a), "P" + std::to_string(b), Metric::tmi, x});
    }
  return m;
}

TEST(GraphProperties, MonotoneInThreshold) {
  std::mt19937_64 rng(51);
  auto m = random_matrix(rng, 10);
  for (double t1 = 0; t1 <= 1.0; t1 += 0.05) {
    auto low = build_graph(m, t1);
    auto high = build_graph(m, std::min(1.0, t1 + 0.07));
    for (const auto& [key, e] : high.edges) {
      EXPECT_TRUE(low.edges.count(key));
      EXPECT_GE(e.weight, high.threshold);
    }
  }
}

TEST(GraphProperties, JsonRoundTripIsExact) {
  std::mt19937_64 rng(52);
  RoomLabels rooms{{"P0", "A"}, {"P3", "B"}, {"P4", "A"}};
  auto g = build_graph(random_matrix(rng, 8), 0.1, rooms);
  auto text = export_graph(g, GraphFormat::json);
  auto back = graph_from_json(nlohmann::json::parse(text));
  EXPECT_EQ(back, g);
  EXPECT_EQ(export_graph(back, GraphFormat::json), text);
}

TEST(Export, DotForTwoNodesOneEdge) {
  auto g = build_graph(both_ways("a", "b", 0.5, 0.5));
  EXPECT_EQ(export_graph(g, GraphFormat::dot),
            "graph social {\n"
            "  graph [metric=\"mi\", threshold=0.1];\n"
            "  node [style=filled];\n"
            "  \"a\";\n"
            "  \"b\";\n"
            "  \"a\" -- \"b\" [weight=0.5, label=\"0.5\"];\n"
            "}\n");
}

TEST(Export, ByteIdenticalAcrossRunsAndInputOrder) {
  std::mt19937_64 rng(53);
  auto m = random_matrix(rng, 10);
  auto g1 = build_graph(m);
  std::shuffle(m.begin(), m.end(), rng);
  auto g2 = build_graph(m);
  for (auto f : {GraphFormat::dot, GraphFormat::graphml, GraphFormat::json}) {
    EXPECT_EQ(export_graph(g1, f), export_graph(g1, f));
    EXPECT_EQ(export_graph(g1, f), export_graph(g2, f));
  }
}

TEST(Export, GraphmlWithFiveRoomGroups) {
  // Four rooms and one external member.
  RoomLabels rooms;
  const char* room_of[] = {"R1", "R1", "R1", "R2", "R2", "R3", "R3", "R4", "R4", "external"};
  PairwiseMatrix m;
  for (int i = 0; i < 10; ++i) {
    std::string id = "P" + std::to_string(i);
    rooms[id] = room_of[i];
    if (i > 0) {
      auto e = both_ways("P" + std::to_string(i - 1), id, 0.4, 0.2);
      m.insert(m.end(), e.begin(), e.end());
    }
  }
  auto xml = export_graph(build_graph(m, 0.1, rooms), GraphFormat::graphml);
  std::set<std::string> room_values, colors;
  for (std::size_t p = 0; (p = xml.find("<data key=\"room\">", p)) != std::string::npos; ++p)
    room_values.insert(xml.substr(p + 17, xml.find('<', p + 17) - p - 17));
  for (std::size_t p = 0; (p = xml.find("<data key=\"color\">", p)) != std::string::npos; ++p)
    colors.insert(xml.substr(p + 18, 7));
  EXPECT_EQ(room_values.size(), 5u);
  EXPECT_EQ(colors.size(), 5u);
  EXPECT_NE(xml.find("edgedefault=\"undirected\""), std::string::npos);
  EXPECT_EQ(std::count(xml.begin(), xml.end(), '\n'), 7 + 10 * 4 + 9 * 4 + 2);
}

TEST(Export, EscapesIdentifiers) {
  auto g = build_graph(both_ways("a\"<&", "b", 0.5, 0.5));
  EXPECT_NE(export_graph(g, GraphFormat::dot).find("\"a\\\"<&\""), std::string::npos);
  EXPECT_NE(export_graph(g, GraphFormat::graphml).find("a&quot;&lt;&amp;"), std::string::npos);
}

TEST(Export, UnknownFormatIsArgumentError) { EXPECT_THROW(parse_graph_format("svg"), ArgumentError); }

TEST(RoomLabels, ParsedFromJsonObject) {
  std::istringstream in(R"({"P1": "A", "P2": "B"})");
  EXPECT_EQ(read_room_labels(in), (RoomLabels{{"P1", "A"}, {"P2", "B"}}));
  std::istringstream bad(R"({"P1": 3})");
  EXPECT_THROW(read_room_labels(bad), ArgumentError);
}

}  // namespace
}  // namespace fingertrace
