#pragma once

// Social networks from directional pairwise metrics: the two directions of a
// pair are averaged into one undirected edge, and weak edges are pruned.

#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fingertrace/detail/text.hpp"
#include "fingertrace/error.hpp"
#include "fingertrace/metrics.hpp"

namespace fingertrace {

struct SocialEdge {
  double weight = 0.0;
  bool one_sided = false;  // only one direction was defined

  friend bool operator==(const SocialEdge&, const SocialEdge&) = default;
};

struct SocialGraph {
  std::string metric;
  double threshold = 0.1;
  std::map<std::string, std::optional<std::string>> nodes;      // id -> room label
  std::map<std::pair<std::string, std::string>, SocialEdge> edges;  // key.first < key.second

  const SocialEdge* edge(const std::string& a, const std::string& b) const {
    auto it = edges.find(a < b ? std::pair{a, b} : std::pair{b, a});
    return it == edges.end() ? nullptr : &it->second;
  }

  friend bool operator==(const SocialGraph&, const SocialGraph&) = default;
};

using RoomLabels = std::map<std::string, std::string>;

inline SocialGraph build_graph(const PairwiseMatrix& matrix, double threshold = 0.1, const RoomLabels& rooms = {}) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ConfigError("graph threshold must lie in [0, 1]");
  }
  SocialGraph g;
  g.threshold = threshold;
  std::set<Metric> metrics;
  std::map<std::pair<std::string, std::string>, std::vector<double>> defined;
  for (const auto& pv : matrix) {
    if (pv.from == pv.to) continue;
    metrics.insert(pv.metric);
    g.nodes.try_emplace(pv.from);
    g.nodes.try_emplace(pv.to);
    auto key = pv.from < pv.to ? std::pair{pv.from, pv.to} : std::pair{pv.to, pv.from};
    auto& vals = defined[key];
    if (pv.value) vals.push_back(*pv.value);
  }
  if (metrics.size() > 1) throw ArgumentError("pairwise matrix mixes several metrics");
  g.metric = metrics.empty() ? "" : to_string(*metrics.begin());
  for (auto& [id, room] : g.nodes) {
    auto it = rooms.find(id);
    if (it != rooms.end()) room = it->second;
  }
  for (const auto& [key, vals] : defined) {
    if (vals.empty()) continue;
    double sum = 0;
    for (double v : vals) sum += v;
    double weight = sum / static_cast<double>(vals.size());
    if (weight >= threshold) g.edges.emplace(key, SocialEdge{weight, vals.size() == 1});
  }
  return g;
}

enum class GraphFormat { dot, graphml, json };

inline GraphFormat parse_graph_format(std::string_view name) {
  if (name == "dot") return GraphFormat::dot;
  if (name == "graphml") return GraphFormat::graphml;
  if (name == "json") return GraphFormat::json;
  throw ArgumentError("unknown graph format '" + std::string(name) + "' (expected dot, graphml or json)");
}

namespace detail {

inline constexpr const char* kRoomPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                               "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

inline std::map<std::string, std::string> room_colors(const SocialGraph& g) {
  std::set<std::string> rooms;
  for (const auto& [id, room] : g.nodes)
    if (room) rooms.insert(*room);
  std::map<std::string, std::string> colors;
  std::size_t i = 0;
  for (const auto& r : rooms) colors[r] = kRoomPalette[i++ % std::size(kRoomPalette)];
  return colors;
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

inline std::string write_dot(const SocialGraph& g) {
  auto colors = room_colors(g);
  std::string out = "graph social {\n";
  out += "  graph [metric=" + dot_quote(g.metric) + ", threshold=" + format_number(g.threshold) + "];\n";
  out += "  node [style=filled];\n";
  for (const auto& [id, room] : g.nodes) {
    out += "  " + dot_quote(id);
    if (room) out += " [group=" + dot_quote(*room) + ", fillcolor=" + dot_quote(colors.at(*room)) + "]";
    out += ";\n";
  }
  for (const auto& [key, e] : g.edges) {
    auto w = format_number(e.weight);
    out += "  " + dot_quote(key.first) + " -- " + dot_quote(key.second) + " [weight=" + w + ", label=" + dot_quote(w);
    if (e.one_sided) out += ", style=dashed";
    out += "];\n";
  }
  out += "}\n";
  return out;
}

inline std::string write_graphml(const SocialGraph& g) {
  auto colors = room_colors(g);
  std::string out =
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
      "  <key id=\"room\" for=\"node\" attr.name=\"room\" attr.type=\"string\"/>\n"
      "  <key id=\"color\" for=\"node\" attr.name=\"color\" attr.type=\"string\"/>\n"
      "  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n"
      "  <key id=\"one_sided\" for=\"edge\" attr.name=\"one_sided\" attr.type=\"boolean\"/>\n";
  out += "  <graph id=\"" + xml_escape(g.metric.empty() ? "social" : g.metric) + "\" edgedefault=\"undirected\">\n";
  for (const auto& [id, room] : g.nodes) {
    out += "    <node id=\"" + xml_escape(id) + "\"";
    if (!room) {
      out += "/>\n";
      continue;
    }
    out += ">\n      <data key=\"room\">" + xml_escape(*room) + "</data>\n";
    out += "      <data key=\"color\">" + colors.at(*room) + "</data>\n    </node>\n";
  }
  std::size_t n = 0;
  for (const auto& [key, e] : g.edges) {
    out += "    <edge id=\"e" + std::to_string(n++) + "\" source=\"" + xml_escape(key.first) + "\" target=\"" +
           xml_escape(key.second) + "\">\n";
    out += "      <data key=\"weight\">" + format_number(e.weight) + "</data>\n";
    out += std::string("      <data key=\"one_sided\">") + (e.one_sided ? "true" : "false") + "</data>\n";
    out += "    </edge>\n";
  }
  out += "  </graph>\n</graphml>\n";
  return out;
}

}  // namespace detail

inline nlohmann::ordered_json graph_to_json(const SocialGraph& g) {
  nlohmann::ordered_json j;
  j["metric"] = g.metric;
  j["threshold"] = g.threshold;
  j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& [id, room] : g.nodes) {
    nlohmann::ordered_json n;
    n["id"] = id;
    n["room"] = room ? nlohmann::ordered_json(*room) : nlohmann::ordered_json(nullptr);
    j["nodes"].push_back(std::move(n));
  }
  j["edges"] = nlohmann::ordered_json::array();
  for (const auto& [key, e] : g.edges) {
    nlohmann::ordered_json ej;
    ej["a"] = key.first;
    ej["b"] = key.second;
    ej["weight"] = e.weight;
    ej["metric"] = g.metric;
    ej["one_sided"] = e.one_sided;
    j["edges"].push_back(std::move(ej));
  }
  return j;
}

inline SocialGraph graph_from_json(const nlohmann::json& j) {
  SocialGraph g;
  try {
    g.metric = j.value("metric", std::string{});
    g.threshold = j.value("threshold", 0.1);
    for (const auto& n : j.at("nodes")) {
      std::optional<std::string> room;
      if (n.contains("room") && !n.at("room").is_null()) room = n.at("room").get<std::string>();
      g.nodes[n.at("id").get<std::string>()] = room;
    }
    for (const auto& e : j.at("edges")) {
      auto a = e.at("a").get<std::string>();
      auto b = e.at("b").get<std::string>();
      if (a == b) throw ArgumentError("graph json: self-loop on '" + a + "'");
      g.nodes.try_emplace(a);
      g.nodes.try_emplace(b);
      auto key = a < b ? std::pair{a, b} : std::pair{b, a};
      g.edges[key] = SocialEdge{e.at("weight").get<double>(), e.value("one_sided", false)};
    }
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("graph json: ") + e.what());
  }
  return g;
}

/// Renders the graph. Nodes and edges appear in sorted id order, so the
/// output is byte-identical for equal graphs.
inline std::string export_graph(const SocialGraph& g, GraphFormat format) {
  switch (format) {
    case GraphFormat::dot: return detail::write_dot(g);
    case GraphFormat::graphml: return detail::write_graphml(g);
    case GraphFormat::json: return graph_to_json(g).dump(2) + "\n";
  }
  throw ArgumentError("unknown graph format");
}

inline RoomLabels read_room_labels(std::istream& in) {
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ArgumentError("room labels must be a JSON object {device: room}");
  RoomLabels rooms;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_string()) throw ArgumentError("room label for '" + k + "' is not a string");
    rooms[k] = v.get<std::string>();
  }
  return rooms;
}

}  // namespace fingertrace
