#pragma once

// Scenario simulator: beacons follow scripted trajectories, advertise at a
// fixed interval, and every sniffer independently hears each advertisement
// with a distance-dependent probability. Received power follows a
// log-distance path-loss model with Gaussian shadowing.
//
// The scripts also carry group labels, from which a per-window ground truth
// (who is moving, and with whom) is derived for scoring the detector.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fingertrace/detail/text.hpp"
#include "fingertrace/error.hpp"
#include "fingertrace/ingest.hpp"
#include "fingertrace/movement.hpp"
#include "fingertrace/windowing.hpp"

namespace fingertrace::sim {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Waypoint {
  double time = 0.0;  // seconds from scenario start
  Point position;

  friend bool operator==(const Waypoint&, const Waypoint&) = default;
};

/// Group label active over [start, end).
struct GroupSegment {
  double start = 0.0;
  double end = 0.0;
  std::string label;

  friend bool operator==(const GroupSegment&, const GroupSegment&) = default;
};

struct DeviceScript {
  std::string id;
  std::vector<Waypoint> waypoints;  // strictly increasing times; position is held outside the range
  std::vector<GroupSegment> groups;
  std::optional<std::string> label;  // label outside any segment; defaults to id
  std::optional<std::string> room;

  Point position_at(double t) const {
    if (waypoints.empty()) return {};
    if (t <= waypoints.front().time) return waypoints.front().position;
    if (t >= waypoints.back().time) return waypoints.back().position;
    auto it = std::upper_bound(waypoints.begin(), waypoints.end(), t,
                               [](double x, const Waypoint& w) { return x < w.time; });
    const auto& b = *it;
    const auto& a = *(it - 1);
    double f = (t - a.time) / (b.time - a.time);
    return {a.position.x + f * (b.position.x - a.position.x), a.position.y + f * (b.position.y - a.position.y)};
  }

  /// Distance travelled along the script between times a <= b.
  double path_length(double a, double b) const {
    double len = 0;
    Point prev = position_at(a);
    for (const auto& w : waypoints) {
      if (w.time <= a) continue;
      if (w.time >= b) break;
      len += distance(prev, w.position);
      prev = w.position;
    }
    return len + distance(prev, position_at(b));
  }

  std::string label_at(double t) const {
    for (const auto& g : groups)
      if (t >= g.start && t < g.end) return g.label;
    return label.value_or(id);
  }

  friend bool operator==(const DeviceScript&, const DeviceScript&) = default;
};

struct Sniffer {
  std::string id;
  Point position;

  friend bool operator==(const Sniffer&, const Sniffer&) = default;
};

struct PathLoss {
  double pl0 = 40.0;      // dB lost at the reference distance
  double d0 = 1.0;        // reference distance, meters
  double exponent = 2.2;  // path-loss exponent
  double sigma = 4.0;     // shadowing standard deviation, dB

  friend bool operator==(const PathLoss&, const PathLoss&) = default;
};

/// Delivery probability for distances >= min_distance (up to the next band).
struct DeliveryBand {
  double min_distance = 0.0;
  double probability = 1.0;

  friend bool operator==(const DeliveryBand&, const DeliveryBand&) = default;
};

inline std::vector<DeliveryBand> default_delivery_bands() { return {{0.0, 0.95}, {5.0, 0.7}, {15.0, 0.3}}; }

struct ScenarioConfig {
  std::string name = "custom";
  std::vector<Sniffer> sniffers;
  std::vector<DeviceScript> devices;
  double advertising_interval = 0.1;  // seconds
  double tx_power_dbm = 4.0;
  PathLoss path_loss;
  std::vector<DeliveryBand> delivery = default_delivery_bands();
  double start_time = 0.0;  // timestamp of scenario second 0
  double duration = 150.0;  // seconds
  double window_len = 20.0;  // windows used for the ground truth
  double moving_threshold = 1.0;  // meters travelled within a window
  std::uint64_t seed = 1;

  void validate() const {
    if (sniffers.empty()) throw ConfigError("scenario needs at least one sniffer");
    if (devices.empty()) throw ConfigError("scenario needs at least one device");
    std::set<std::string> ids;
    for (const auto& s : sniffers) {
      if (s.id.empty() || !ids.insert(s.id).second) throw ConfigError("sniffer ids must be unique and non-empty");
    }
    ids.clear();
    for (const auto& d : devices) {
      if (d.id.empty() || !ids.insert(d.id).second) throw ConfigError("device ids must be unique and non-empty");
      if (d.waypoints.empty()) throw ConfigError("device '" + d.id + "' has no waypoints");
      for (std::size_t i = 1; i < d.waypoints.size(); ++i) {
        if (!(d.waypoints[i].time > d.waypoints[i - 1].time)) {
          throw ConfigError("device '" + d.id + "': waypoint times must strictly increase");
        }
      }
      for (const auto& g : d.groups) {
        if (!(g.end > g.start)) throw ConfigError("device '" + d.id + "': empty group segment");
      }
    }
    if (!(advertising_interval > 0)) throw ConfigError("advertising interval must be positive");
    if (!(path_loss.sigma >= 0)) throw ConfigError("shadowing sigma must be non-negative");
    if (!(path_loss.d0 > 0)) throw ConfigError("reference distance d0 must be positive");
    if (!std::isfinite(path_loss.pl0) || !std::isfinite(path_loss.exponent) || !std::isfinite(tx_power_dbm)) {
      throw ConfigError("path-loss parameters must be finite");
    }
    if (delivery.empty()) throw ConfigError("at least one delivery band is required");
    for (std::size_t i = 0; i < delivery.size(); ++i) {
      const auto& b = delivery[i];
      if (!(b.probability >= 0.0 && b.probability <= 1.0)) throw ConfigError("delivery probability outside [0,1]");
      if (i == 0 && b.min_distance != 0.0) throw ConfigError("first delivery band must start at 0 m");
      if (i > 0 && !(b.min_distance > delivery[i - 1].min_distance)) {
        throw ConfigError("delivery bands must have increasing distances");
      }
    }
    if (!(duration > 0)) throw ConfigError("duration must be positive");
    if (!(start_time >= 0)) throw ConfigError("start time must be non-negative");
    if (!(window_len > 0)) throw ConfigError("ground-truth window length must be positive");
    if (!(moving_threshold >= 0)) throw ConfigError("moving threshold must be non-negative");
  }

  WindowSpec window_spec() const { return {window_len, start_time}; }

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Noise-free received power at `distance` meters. A non-positive distance is
/// treated as d0.
inline double expected_rssi(double distance, double tx_power_dbm, const PathLoss& pl) {
  if (!(distance > 0)) distance = pl.d0;
  return tx_power_dbm - pl.pl0 - 10.0 * pl.exponent * std::log10(distance / pl.d0);
}

/// One received-power sample, rounded to integer dBm and clamped to [-100, -1].
template <class Rng>
int rssi_model(double distance, double tx_power_dbm, const PathLoss& pl, Rng& rng) {
  double v = expected_rssi(distance, tx_power_dbm, pl);
  if (pl.sigma > 0) v += std::normal_distribution<double>(0.0, pl.sigma)(rng);
  v = std::round(v);
  return static_cast<int>(std::clamp(v, -100.0, -1.0));
}

template <class Rng>
int rssi_model(double distance, const ScenarioConfig& cfg, Rng& rng) {
  return rssi_model(distance, cfg.tx_power_dbm, cfg.path_loss, rng);
}

inline double delivery_probability(double distance, const std::vector<DeliveryBand>& bands) {
  double p = bands.front().probability;
  for (const auto& b : bands) {
    if (distance >= b.min_distance) p = b.probability;
  }
  return p;
}

struct GenerationStats {
  std::size_t advertisements = 0;
  std::size_t packets = 0;
};

/// Streams every captured packet, in non-decreasing timestamp order, to `sink`.
/// Output depends only on the configuration (including its seed).
inline GenerationStats generate_packets(const ScenarioConfig& cfg,
                                        const std::function<void(const PacketRecord&)>& sink) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Beacons are not synchronised: each gets a phase within the first interval.
  struct Emitter {
    const DeviceScript* script;
    double phase;
    std::size_t cursor = 0;
  };
  std::vector<Emitter> emitters;
  for (const auto& d : cfg.devices) {
    double phase = std::round(unit(rng) * cfg.advertising_interval * 1e4) / 1e4;
    if (phase >= cfg.advertising_interval) phase = 0.0;
    emitters.push_back({&d, phase});
  }
  std::stable_sort(emitters.begin(), emitters.end(), [](const auto& a, const auto& b) { return a.phase < b.phase; });

  GenerationStats stats;
  PacketRecord rec;
  for (std::int64_t k = 0;; ++k) {
    double base = static_cast<double>(k) * cfg.advertising_interval;
    if (base >= cfg.duration) break;
    for (auto& e : emitters) {
      double local = base + e.phase;
      if (local >= cfg.duration) continue;
      ++stats.advertisements;
      const auto& wps = e.script->waypoints;
      while (e.cursor + 1 < wps.size() && wps[e.cursor + 1].time <= local) ++e.cursor;
      Point pos;
      if (local <= wps.front().time) {
        pos = wps.front().position;
      } else if (e.cursor + 1 >= wps.size()) {
        pos = wps.back().position;
      } else {
        const auto& a = wps[e.cursor];
        const auto& b = wps[e.cursor + 1];
        double f = (local - a.time) / (b.time - a.time);
        pos = {a.position.x + f * (b.position.x - a.position.x), a.position.y + f * (b.position.y - a.position.y)};
      }
      double ts = std::round((cfg.start_time + local) * 1e6) / 1e6;
      for (const auto& s : cfg.sniffers) {
        double d = distance(pos, s.position);
        if (unit(rng) >= delivery_probability(d, cfg.delivery)) continue;
        rec.timestamp = ts;
        rec.sniffer_id = s.id;
        rec.device_id = e.script->id;
        rec.rssi = rssi_model(d, cfg, rng);
        ++stats.packets;
        sink(rec);
      }
    }
  }
  return stats;
}

inline std::vector<PacketRecord> generate_packets(const ScenarioConfig& cfg) {
  std::vector<PacketRecord> out;
  generate_packets(cfg, [&](const PacketRecord& r) { out.push_back(r); });
  return out;
}

struct TruthEntry {
  bool moving = false;
  std::string label;

  friend bool operator==(const TruthEntry&, const TruthEntry&) = default;
};

struct TruthWindow {
  WindowIndex window = 0;
  std::map<std::string, TruthEntry> devices;
  std::vector<std::vector<std::string>> groups;  // moving devices, partitioned by label

  friend bool operator==(const TruthWindow&, const TruthWindow&) = default;
};

struct GroundTruth {
  WindowSpec spec;
  std::vector<TruthWindow> windows;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

/// Ground truth over `spec` windows. A device is moving in a window when the
/// distance it travels inside the window exceeds cfg.moving_threshold; its group
/// label is the one active at the window midpoint.
inline GroundTruth ground_truth(const ScenarioConfig& cfg, const WindowSpec& spec) {
  cfg.validate();
  spec.validate();
  GroundTruth gt{spec, {}};
  double t_begin = cfg.start_time;
  double t_end = cfg.start_time + cfg.duration;
  WindowIndex first = std::max<WindowIndex>(0, spec.index_of(t_begin));
  for (WindowIndex w = first; spec.start_of(w) < t_end; ++w) {
    double a = std::max(spec.start_of(w), t_begin) - cfg.start_time;
    double b = std::min(spec.start_of(w + 1), t_end) - cfg.start_time;
    TruthWindow tw{w, {}, {}};
    std::map<std::string, std::vector<std::string>> by_label;
    for (const auto& d : cfg.devices) {
      bool moving = d.path_length(a, b) > cfg.moving_threshold;
      auto label = d.label_at((a + b) / 2.0);
      if (moving) by_label[label].push_back(d.id);
      tw.devices.emplace(d.id, TruthEntry{moving, std::move(label)});
    }
    for (auto& [label, members] : by_label) {
      std::sort(members.begin(), members.end());
      tw.groups.push_back(std::move(members));
    }
    std::sort(tw.groups.begin(), tw.groups.end());
    gt.windows.push_back(std::move(tw));
  }
  return gt;
}

inline GroundTruth ground_truth(const ScenarioConfig& cfg) { return ground_truth(cfg, cfg.window_spec()); }

struct Scenario {
  std::vector<PacketRecord> packets;
  GroundTruth truth;
};

inline Scenario generate_scenario(const ScenarioConfig& cfg) { return {generate_packets(cfg), ground_truth(cfg)}; }

/// Detector scores against the ground truth. Each rate is nullopt when its
/// denominator is empty.
struct AccuracyReport {
  std::optional<double> detection_rate;     // truth-moving windows detected Dynamic
  std::optional<double> grouping_accuracy;  // detected-Dynamic windows whose group matches truth
  std::optional<double> pair_precision;
  std::optional<double> pair_recall;
  std::size_t truth_moving = 0;
  std::size_t detected_moving = 0;
  std::size_t detected_pairs = 0;
  std::size_t truth_pairs = 0;
};

inline AccuracyReport evaluate(const GroupDetection& detection, const GroundTruth& truth) {
  if (!(detection.spec == truth.spec)) {
    throw ArgumentError("detection and ground truth use different window specifications");
  }
  AccuracyReport rep;
  std::size_t hits = 0, correct_groups = 0, pair_hits = 0;
  auto ratio = [](std::size_t n, std::size_t d) -> std::optional<double> {
    if (d == 0) return std::nullopt;
    return static_cast<double>(n) / static_cast<double>(d);
  };
  for (const auto& tw : truth.windows) {
    const auto* ev = detection.event_at(tw.window);
    std::map<std::string, const std::vector<std::string>*> detected_group;
    if (ev != nullptr)
      for (const auto& g : ev->groups)
        for (const auto& m : g) detected_group[m] = &g;

    for (const auto& [dev, entry] : tw.devices) {
      if (!entry.moving) continue;
      ++rep.truth_moving;
      if (detected_group.contains(dev)) ++hits;
    }

    for (const auto& [dev, group] : detected_group) {
      auto self = tw.devices.find(dev);
      if (self == tw.devices.end()) continue;
      ++rep.detected_moving;
      std::vector<std::string> expected;
      for (const auto& [other, g] : detected_group) {
        auto it = tw.devices.find(other);
        if (it != tw.devices.end() && it->second.label == self->second.label) expected.push_back(other);
      }
      if (expected == *group) ++correct_groups;  // both sorted
    }

    std::set<std::pair<std::string, std::string>> detected_pairs, truth_pairs;
    if (ev != nullptr)
      for (const auto& g : ev->groups)
        for (std::size_t i = 0; i < g.size(); ++i)
          for (std::size_t j = i + 1; j < g.size(); ++j) detected_pairs.emplace(g[i], g[j]);
    for (const auto& g : tw.groups)
      for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = i + 1; j < g.size(); ++j) truth_pairs.emplace(g[i], g[j]);
    rep.detected_pairs += detected_pairs.size();
    rep.truth_pairs += truth_pairs.size();
    for (const auto& p : detected_pairs) pair_hits += truth_pairs.count(p);
  }
  rep.detection_rate = ratio(hits, rep.truth_moving);
  rep.grouping_accuracy = ratio(correct_groups, rep.detected_moving);
  rep.pair_precision = ratio(pair_hits, rep.detected_pairs);
  rep.pair_recall = ratio(pair_hits, rep.truth_pairs);
  return rep;
}

// ---------------------------------------------------------------------------
// JSON documents

inline nlohmann::ordered_json to_json(const ScenarioConfig& cfg) {
  using J = nlohmann::ordered_json;
  J j;
  j["name"] = cfg.name;
  j["seed"] = cfg.seed;
  j["start_time"] = cfg.start_time;
  j["duration"] = cfg.duration;
  j["window_len"] = cfg.window_len;
  j["moving_threshold"] = cfg.moving_threshold;
  j["advertising_interval"] = cfg.advertising_interval;
  j["tx_power_dbm"] = cfg.tx_power_dbm;
  j["path_loss"] = J{{"pl0", cfg.path_loss.pl0},
                     {"d0", cfg.path_loss.d0},
                     {"exponent", cfg.path_loss.exponent},
                     {"sigma", cfg.path_loss.sigma}};
  j["delivery"] = J::array();
  for (const auto& b : cfg.delivery) j["delivery"].push_back(J{{"min_distance", b.min_distance}, {"probability", b.probability}});
  j["sniffers"] = J::array();
  for (const auto& s : cfg.sniffers) j["sniffers"].push_back(J{{"id", s.id}, {"x", s.position.x}, {"y", s.position.y}});
  j["devices"] = J::array();
  for (const auto& d : cfg.devices) {
    J dj;
    dj["id"] = d.id;
    if (d.label) dj["label"] = *d.label;
    if (d.room) dj["room"] = *d.room;
    dj["waypoints"] = J::array();
    for (const auto& w : d.waypoints) dj["waypoints"].push_back(J::array({w.time, w.position.x, w.position.y}));
    dj["groups"] = J::array();
    for (const auto& g : d.groups) dj["groups"].push_back(J{{"start", g.start}, {"end", g.end}, {"label", g.label}});
    j["devices"].push_back(std::move(dj));
  }
  return j;
}

inline ScenarioConfig config_from_json(const nlohmann::json& j) {
  ScenarioConfig cfg;
  try {
    if (!j.is_object()) throw ConfigError("scenario config must be a JSON object");
    cfg.name = j.value("name", cfg.name);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.start_time = j.value("start_time", cfg.start_time);
    cfg.duration = j.value("duration", cfg.duration);
    cfg.window_len = j.value("window_len", cfg.window_len);
    cfg.moving_threshold = j.value("moving_threshold", cfg.moving_threshold);
    cfg.advertising_interval = j.value("advertising_interval", cfg.advertising_interval);
    cfg.tx_power_dbm = j.value("tx_power_dbm", cfg.tx_power_dbm);
    if (j.contains("path_loss")) {
      const auto& p = j.at("path_loss");
      cfg.path_loss.pl0 = p.value("pl0", cfg.path_loss.pl0);
      cfg.path_loss.d0 = p.value("d0", cfg.path_loss.d0);
      cfg.path_loss.exponent = p.value("exponent", cfg.path_loss.exponent);
      cfg.path_loss.sigma = p.value("sigma", cfg.path_loss.sigma);
    }
    if (j.contains("delivery")) {
      cfg.delivery.clear();
      for (const auto& b : j.at("delivery"))
        cfg.delivery.push_back({b.at("min_distance").get<double>(), b.at("probability").get<double>()});
    }
    std::size_t n = 0;
    for (const auto& s : j.at("sniffers")) {
      ++n;
      cfg.sniffers.push_back({s.value("id", "S" + std::to_string(n)), {s.at("x").get<double>(), s.at("y").get<double>()}});
    }
    for (const auto& dj : j.at("devices")) {
      DeviceScript d;
      d.id = dj.at("id").get<std::string>();
      if (dj.contains("label")) d.label = dj.at("label").get<std::string>();
      if (dj.contains("room")) d.room = dj.at("room").get<std::string>();
      for (const auto& w : dj.at("waypoints")) {
        if (!w.is_array() || w.size() != 3) throw ConfigError("device '" + d.id + "': waypoint must be [t, x, y]");
        d.waypoints.push_back({w[0].get<double>(), {w[1].get<double>(), w[2].get<double>()}});
      }
      if (dj.contains("groups"))
        for (const auto& g : dj.at("groups"))
          d.groups.push_back({g.at("start").get<double>(), g.at("end").get<double>(), g.at("label").get<std::string>()});
      cfg.devices.push_back(std::move(d));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

inline ScenarioConfig read_config(std::istream& in) {
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("scenario config is not valid JSON");
  return config_from_json(j);
}

/// First line: the window spec; then one line per window.
inline void write_ground_truth_jsonl(std::ostream& out, const GroundTruth& gt) {
  using J = nlohmann::ordered_json;
  out << J{{"window_len", gt.spec.window_len}, {"origin", gt.spec.origin}}.dump() << '\n';
  for (const auto& tw : gt.windows) {
    J j;
    j["window"] = tw.window;
    j["devices"] = J::object();
    for (const auto& [id, e] : tw.devices) j["devices"][id] = J{{"moving", e.moving}, {"label", e.label}};
    j["groups"] = tw.groups;
    out << j.dump() << '\n';
  }
}

inline GroundTruth read_ground_truth_jsonl(std::istream& in) {
  GroundTruth gt;
  std::string line;
  bool header = true;
  try {
    while (std::getline(in, line)) {
      if (detail::trim(line).empty()) continue;
      auto j = nlohmann::json::parse(line);
      if (header) {
        gt.spec = {j.at("window_len").get<double>(), j.at("origin").get<double>()};
        header = false;
        continue;
      }
      TruthWindow tw;
      tw.window = j.at("window").get<WindowIndex>();
      for (const auto& [id, e] : j.at("devices").items())
        tw.devices[id] = {e.at("moving").get<bool>(), e.at("label").get<std::string>()};
      tw.groups = j.at("groups").get<std::vector<std::vector<std::string>>>();
      gt.windows.push_back(std::move(tw));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("ground truth: ") + e.what());
  }
  if (header) throw ArgumentError("ground truth: empty document");
  return gt;
}

inline nlohmann::ordered_json to_json(const AccuracyReport& r) {
  using J = nlohmann::ordered_json;
  auto opt = [](const std::optional<double>& v) { return v ? J(*v) : J(nullptr); };
  return J{{"detection_rate", opt(r.detection_rate)},
           {"grouping_accuracy", opt(r.grouping_accuracy)},
           {"pair_precision", opt(r.pair_precision)},
           {"pair_recall", opt(r.pair_recall)},
           {"truth_moving", r.truth_moving},
           {"detected_moving", r.detected_moving},
           {"detected_pairs", r.detected_pairs},
           {"truth_pairs", r.truth_pairs}};
}

}  // namespace fingertrace::sim
