#pragma once

// Shipped scenarios.
//
//   controlled-10-beacons  ten beacons carried in one box, walking and running
//                          between two sniffers 10 m apart for 2.5 minutes
//   office-2-rooms         ten office workers in two rooms plus one external
//                          member, with alone and group trips along a corridor
//                          watched by three sniffers; P01 carries two beacons
//   two-groups-crossing    two groups of three walking in opposite directions
//                          past each other, plus two loners

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "fingertrace/error.hpp"
#include "fingertrace/sim.hpp"

namespace fingertrace::sim {

inline std::vector<std::string> preset_names() {
  return {"controlled-10-beacons", "office-2-rooms", "two-groups-crossing"};
}

/// Two sniffers 10 m apart; the walking line runs 6 m off the sniffer axis, so
/// the two dwell stations differ by only a few dB between sniffers. The box
/// visits the stations in the order A A B A B B A B over eight 20 s windows,
/// using 10 s and 20 s walks and two 5 s runs (one of them a there-and-back
/// inside a single window).
inline ScenarioConfig controlled_ten_beacons(std::uint64_t seed = 1) {
  ScenarioConfig cfg;
  cfg.name = "controlled-10-beacons";
  cfg.seed = seed;
  cfg.duration = 150.0;
  cfg.sniffers = {{"S1", {0.0, 0.0}}, {"S2", {10.0, 0.0}}};
  const Point a{3.0, 6.0};
  const Point b{7.0, 6.0};
  const std::vector<Waypoint> path = {
      {0.0, a},   {25.0, a},  {27.5, b},  {30.0, a},  {35.0, a},   {45.0, b},    {55.0, b},    {65.0, a},
      {75.0, a},  {85.0, b},  {110.0, b}, {130.0, a}, {137.5, a},  {142.5, b},   {150.0, b},
  };
  for (int i = 1; i <= 10; ++i) {
    DeviceScript d;
    d.id = (i < 10 ? "B0" : "B") + std::to_string(i);
    d.waypoints = path;
    d.label = "box";
    cfg.devices.push_back(std::move(d));
  }
  return cfg;
}

struct OfficeOptions {
  double duration = 3600.0;
  bool duplicate_beacon = true;  // P01 also carries "P01-b"
  std::uint64_t seed = 1;          // packet-level randomness
  std::uint64_t script_seed = 7;   // who walks where, and when
  double delivery = 0.7;           // flat per-packet delivery probability
};

namespace detail {

class OfficeScripter {
 public:
  struct Person {
    std::string id;
    std::string room;
    Point seat;
    Point door;
    std::vector<Waypoint> waypoints;
    std::vector<GroupSegment> groups;
    std::vector<std::pair<double, double>> busy;
  };

  static constexpr double kCorridorY = 1.5;
  static constexpr double kAloneSpeed = 1.2;
  static constexpr double kGroupSpeed = 1.0;
  static constexpr double kMargin = 30.0;

  explicit OfficeScripter(const OfficeOptions& opt) : opt_(opt), rng_(opt.script_seed) {
    for (int i = 0; i < 5; ++i) add_person("P0" + std::to_string(i + 1), "A", {-1.6 + 0.8 * i, 5.5}, {0.0, 3.5});
    for (int i = 0; i < 4; ++i) add_person("P0" + std::to_string(i + 6), "B", {18.8 + 0.8 * i, 5.5}, {20.0, 3.5});
    add_person("P10", "ext", {33.0, kCorridorY}, {33.0, kCorridorY});
  }

  ScenarioConfig build() {
    schedule_group_trips("A", true);
    schedule_group_trips("B", false);
    schedule_alone_trips();

    ScenarioConfig cfg;
    cfg.name = "office-2-rooms";
    cfg.seed = opt_.seed;
    cfg.duration = opt_.duration;
    cfg.sniffers = {{"S1", {0.0, 0.0}}, {"S2", {10.5, 0.0}}, {"S3", {20.0, 0.0}}};
    cfg.delivery = {{0.0, opt_.delivery}};
    for (auto& p : people_) {
      std::sort(p.waypoints.begin(), p.waypoints.end(), [](const auto& x, const auto& y) { return x.time < y.time; });
      DeviceScript d;
      d.id = p.id;
      d.room = p.room;
      d.waypoints.push_back({0.0, p.seat});
      for (const auto& w : p.waypoints)
        if (w.time > d.waypoints.back().time) d.waypoints.push_back(w);
      if (d.waypoints.back().time < opt_.duration) d.waypoints.push_back({opt_.duration, p.seat});
      d.groups = p.groups;
      cfg.devices.push_back(d);
      if (p.id == "P01" && opt_.duplicate_beacon) {
        d.id = "P01-b";
        d.label = "P01";
        cfg.devices.push_back(std::move(d));
      }
    }
    return cfg;
  }

 private:
  struct Destination {
    Point where;
    double corridor_x;
    double min_dwell;
    double max_dwell;
  };

  void add_person(std::string id, std::string room, Point seat, Point door) {
    people_.push_back({std::move(id), std::move(room), seat, door, {}, {}, {}});
  }

  Destination pick_destination(const Person& p, bool group) {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
    if (u < 0.45) return {{10.5, -3.0}, 10.5, 60.0, 300.0};  // kitchen
    if (u < 0.7) return {{10.5, 4.0}, 10.5, 300.0, 1200.0};  // meeting room
    if (u < 0.85 || group) return {{-9.0, kCorridorY}, -9.0, 600.0, 1800.0};  // building exit
    // the other room's doorway
    Point other = p.room == "B" ? Point{0.0, 4.5} : Point{20.0, 4.5};
    return {other, other.x, 60.0, 600.0};
  }

  static void append_walk(std::vector<Waypoint>& out, double& t, const std::vector<Point>& pts, double speed) {
    for (std::size_t i = 1; i < pts.size(); ++i) {
      double d = distance(pts[i - 1], pts[i]);
      if (d < 1e-9) continue;
      t += d / speed;
      out.push_back({t, pts[i]});
    }
  }

  static double walk_time(const std::vector<Point>& pts, double speed) {
    double t = 0;
    for (std::size_t i = 1; i < pts.size(); ++i) t += distance(pts[i - 1], pts[i]) / speed;
    return t;
  }

  static std::vector<Point> reversed(std::vector<Point> v) {
    std::reverse(v.begin(), v.end());
    return v;
  }

  std::vector<Point> door_to(const Point& door, const Destination& dst) const {
    return {door, {door.x, kCorridorY}, {dst.corridor_x, kCorridorY}, dst.where};
  }

  std::vector<Point> seat_to_door(const Person& p, const Point& door) const {
    if (p.door.x == door.x && p.door.y == door.y) return {p.seat, door};
    return {p.seat, p.door, {p.door.x, kCorridorY}, {door.x, kCorridorY}, door};
  }

  bool free(const Person& p, double a, double b) const {
    if (a < kMargin || b > opt_.duration - kMargin) return false;
    for (const auto& [x, y] : p.busy)
      if (a < y + kMargin && x < b + kMargin) return false;
    return true;
  }

  double exponential(double mean) { return std::exponential_distribution<double>(1.0 / mean)(rng_); }

  void schedule_group_trips(const std::string& room, bool external_may_join) {
    std::vector<Person*> members;
    Person* external = nullptr;
    for (auto& p : people_) {
      if (p.room == room) members.push_back(&p);
      if (p.room == "ext") external = &p;
    }
    if (members.size() < 2) return;
    const Point door = members.front()->door;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (double t0 = exponential(3000.0); t0 < opt_.duration; t0 += exponential(3000.0)) {
      std::vector<Person*> pool = members;
      std::shuffle(pool.begin(), pool.end(), rng_);
      auto size = std::uniform_int_distribution<std::size_t>(2, std::min<std::size_t>(4, pool.size()))(rng_);
      pool.resize(size);
      if (external_may_join && external != nullptr && unit(rng_) < 0.35) pool.push_back(external);

      auto dst = pick_destination(*members.front(), true);
      double dwell = std::uniform_real_distribution<double>(dst.min_dwell, dst.max_dwell)(rng_);
      auto out = door_to(door, dst);
      double t1 = t0 + 2.0 * walk_time(out, kGroupSpeed) + dwell;

      bool ok = true;
      for (auto* p : pool) {
        double approach = walk_time(seat_to_door(*p, door), kAloneSpeed);
        if (!free(*p, t0 - approach, t1 + approach)) ok = false;
      }
      if (!ok) continue;

      std::string label = "group-" + room + "-" + std::to_string(++group_counter_);
      for (auto* p : pool) {
        auto approach_path = seat_to_door(*p, door);
        double approach = walk_time(approach_path, kAloneSpeed);
        double t = t0 - approach;
        p->waypoints.push_back({t, p->seat});
        append_walk(p->waypoints, t, approach_path, kAloneSpeed);
        t = t0;
        append_walk(p->waypoints, t, out, kGroupSpeed);
        t += dwell;
        p->waypoints.push_back({t, dst.where});
        append_walk(p->waypoints, t, reversed(out), kGroupSpeed);
        p->groups.push_back({t0, t, label});
        append_walk(p->waypoints, t, reversed(approach_path), kAloneSpeed);
        p->busy.emplace_back(t0 - approach, t);
      }
    }
  }

  void schedule_alone_trips() {
    for (auto& p : people_) {
      for (double t0 = exponential(1800.0); t0 < opt_.duration; t0 += exponential(1800.0)) {
        auto dst = pick_destination(p, false);
        double dwell = std::uniform_real_distribution<double>(dst.min_dwell, dst.max_dwell)(rng_);
        auto path = seat_to_door(p, p.door);
        auto rest = door_to(p.door, dst);
        path.insert(path.end(), rest.begin() + 1, rest.end());
        double t1 = t0 + 2.0 * walk_time(path, kAloneSpeed) + dwell;
        if (!free(p, t0, t1)) continue;
        double t = t0;
        p.waypoints.push_back({t, p.seat});
        append_walk(p.waypoints, t, path, kAloneSpeed);
        t += dwell;
        p.waypoints.push_back({t, dst.where});
        append_walk(p.waypoints, t, reversed(path), kAloneSpeed);
        p.busy.emplace_back(t0, t);
      }
    }
  }

  OfficeOptions opt_;
  std::mt19937_64 rng_;
  std::vector<Person> people_;
  int group_counter_ = 0;
};

}  // namespace detail

inline ScenarioConfig office_two_rooms(const OfficeOptions& opt = {}) {
  if (!(opt.duration > 0)) throw ConfigError("office scenario duration must be positive");
  return detail::OfficeScripter(opt).build();
}

/// Three sniffers on a line. Group G1 walks from the S1 end to the S3 end while
/// G2 walks the opposite way, both passing S2 at the same time; later both
/// return. L1 sits at S2 the whole time and L2 makes one solo walk.
inline ScenarioConfig two_groups_crossing(std::uint64_t seed = 1) {
  ScenarioConfig cfg;
  cfg.name = "two-groups-crossing";
  cfg.seed = seed;
  cfg.duration = 400.0;
  cfg.sniffers = {{"S1", {0.0, 0.0}}, {"S2", {10.0, 0.0}}, {"S3", {20.0, 0.0}}};
  auto member = [](std::string id, std::string label, double x0, double x1, double dy) {
    DeviceScript d;
    d.id = std::move(id);
    d.label = std::move(label);
    double y = 2.0 + dy;
    d.waypoints = {{0.0, {x0, y}},   {60.0, {x0, y}},   {100.0, {x1, y}},
                   {220.0, {x1, y}}, {260.0, {x0, y}}, {400.0, {x0, y}}};
    return d;
  };
  for (int i = 0; i < 3; ++i) {
    cfg.devices.push_back(member("G1-" + std::to_string(i + 1), "G1", 1.0, 19.0, 0.3 * i));
    cfg.devices.push_back(member("G2-" + std::to_string(i + 1), "G2", 19.0, 1.0, 0.3 * i));
  }
  DeviceScript l1;
  l1.id = "L1";
  l1.waypoints = {{0.0, {10.0, 3.0}}, {400.0, {10.0, 3.0}}};
  cfg.devices.push_back(std::move(l1));
  DeviceScript l2;
  l2.id = "L2";
  l2.waypoints = {{0.0, {1.0, -2.0}}, {140.0, {1.0, -2.0}}, {160.0, {19.0, -2.0}}, {400.0, {19.0, -2.0}}};
  cfg.devices.push_back(std::move(l2));
  return cfg;
}

inline ScenarioConfig preset(std::string_view name, std::uint64_t seed = 1) {
  if (name == "controlled-10-beacons") return controlled_ten_beacons(seed);
  if (name == "office-2-rooms") {
    OfficeOptions opt;
    opt.seed = seed;
    return office_two_rooms(opt);
  }
  if (name == "two-groups-crossing") return two_groups_crossing(seed);
  throw NotFoundError("unknown scenario preset '" + std::string(name) + "'");
}

}  // namespace fingertrace::sim
