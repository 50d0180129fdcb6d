#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fingertrace/fingerprint.hpp"
#include "fingertrace/presets.hpp"
#include "fingertrace/sim.hpp"

namespace fingertrace::sim {
namespace {

ScenarioConfig single(double duration, double delivery, double sigma = 0.0) {
  ScenarioConfig cfg;
  cfg.sniffers = {{"S1", {0, 0}}};
  DeviceScript d;
  d.id = "B1";
  d.waypoints = {{0.0, {2, 0}}};
  cfg.devices = {d};
  cfg.duration = duration;
  cfg.delivery = {{0.0, delivery}};
  cfg.path_loss.sigma = sigma;
  return cfg;
}

TEST(RssiModel, NoiseFreeAtReferenceDistance) {
  PathLoss pl;
  pl.sigma = 0;
  std::mt19937_64 rng(1);
  EXPECT_EQ(expected_rssi(1.0, 4.0, pl), -36.0);
  EXPECT_EQ(rssi_model(1.0, 4.0, pl, rng), -36);
}

TEST(RssiModel, TenMetersWithExponentTwo) {
  PathLoss pl;
  pl.sigma = 0;
  pl.exponent = 2.0;
  std::mt19937_64 rng(1);
  EXPECT_EQ(rssi_model(10.0, 4.0, pl, rng), 4 - 40 - 20);
}

TEST(RssiModel, ZeroDistanceIsReferenceDistance) {
  PathLoss pl;
  EXPECT_EQ(expected_rssi(0.0, 4.0, pl), expected_rssi(pl.d0, 4.0, pl));
}

TEST(RssiModel, ClampedToValidRange) {
  PathLoss pl;
  pl.sigma = 0;
  std::mt19937_64 rng(1);
  EXPECT_EQ(rssi_model(1e9, 4.0, pl, rng), -100);
  EXPECT_EQ(rssi_model(1.0, 60.0, pl, rng), -1);
  pl.sigma = 30;
  for (int i = 0; i < 2000; ++i) {
    int v = rssi_model(5.0, 4.0, pl, rng);
    EXPECT_LE(v, -1);
    EXPECT_GE(v, -100);
  }
}

TEST(RssiModel, SeededDrawsRepeat) {
  PathLoss pl;
  std::mt19937_64 a(9), b(9);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(rssi_model(7.0, 4.0, pl, a), rssi_model(7.0, 4.0, pl, b));
}

TEST(Delivery, DefaultBands) {
  auto bands = default_delivery_bands();
  EXPECT_EQ(delivery_probability(0.0, bands), 0.95);
  EXPECT_EQ(delivery_probability(4.99, bands), 0.95);
  EXPECT_EQ(delivery_probability(5.0, bands), 0.7);
  EXPECT_EQ(delivery_probability(14.99, bands), 0.7);
  EXPECT_EQ(delivery_probability(15.0, bands), 0.3);
}

TEST(Generate, FullDeliveryHearsEveryAdvertisement) {
  auto cfg = single(10.0, 1.0);
  auto packets = generate_packets(cfg);
  EXPECT_EQ(packets.size(), 100u);
  for (std::size_t i = 1; i < packets.size(); ++i) EXPECT_LE(packets[i - 1].timestamp, packets[i].timestamp);
  for (const auto& p : packets) EXPECT_EQ(p.rssi, int(std::round(expected_rssi(2.0, 4.0, cfg.path_loss))));
}

TEST(Generate, DeliveryRateWithinBinomialBounds) {
  auto full = generate_packets(single(1000.0, 1.0)).size();
  auto partial = generate_packets(single(1000.0, 0.4)).size();
  double n = double(full), sd = std::sqrt(n * 0.4 * 0.6);
  EXPECT_NEAR(double(partial), 0.4 * n, 3 * sd);
}

TEST(Generate, SameSeedSameLog) {
  auto cfg = preset("two-groups-crossing", 5);
  EXPECT_EQ(generate_packets(cfg), generate_packets(cfg));
  auto other = cfg;
  other.seed = 6;
  EXPECT_NE(generate_packets(cfg), generate_packets(other));
}

TEST(Generate, NoiseFreeTopSnifferIsNearest) {
  auto cfg = preset("two-groups-crossing");
  cfg.path_loss.sigma = 0;
  auto packets = generate_packets(cfg);
  auto fps = build_fingerprints(aggregate(packets, WindowSpec{20, 0}));
  const auto& l1 = fps.at("L1");  // parked 3 m from S2
  ASSERT_FALSE(l1.entries.empty());
  for (const auto& [w, fp] : l1.entries) EXPECT_EQ(fp.sniffers.front(), "S2") << w;
}

TEST(Config, NonMonotoneWaypointsAreRejected) {
  auto cfg = single(10.0, 1.0);
  cfg.devices[0].waypoints = {{0, {0, 0}}, {5, {1, 0}}, {5, {2, 0}}};
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(generate_packets(cfg), ConfigError);
}

TEST(Config, InvalidFieldsAreRejected) {
  auto base = single(10.0, 1.0);
  auto c = base;
  c.sniffers.clear();
  EXPECT_THROW(c.validate(), ConfigError);
  c = base;
  c.path_loss.sigma = -1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = base;
  c.delivery = {{0.0, 1.5}};
  EXPECT_THROW(c.validate(), ConfigError);
  c = base;
  c.delivery = {{0.0, 0.9}, {5.0, 0.5}, {5.0, 0.1}};
  EXPECT_THROW(c.validate(), ConfigError);
  c = base;
  c.advertising_interval = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, JsonRoundTrip) {
  for (const auto& name : preset_names()) {
    auto cfg = preset(name, 3);
    auto back = config_from_json(nlohmann::json::parse(to_json(cfg).dump()));
    EXPECT_EQ(back, cfg) << name;
  }
}

TEST(Config, MalformedJsonIsConfigError) {
  std::istringstream bad("{not json");
  EXPECT_THROW(read_config(bad), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"sniffers": []})")), ConfigError);
}

TEST(Script, PathLengthFollowsWaypoints) {
  DeviceScript d;
  d.waypoints = {{0, {0, 0}}, {10, {10, 0}}, {20, {0, 0}}};
  EXPECT_DOUBLE_EQ(d.path_length(0, 20), 20.0);
  EXPECT_DOUBLE_EQ(d.path_length(5, 15), 10.0);
  EXPECT_DOUBLE_EQ(d.path_length(20, 30), 0.0);
  EXPECT_DOUBLE_EQ(distance(d.position_at(0), d.position_at(20)), 0.0);
  EXPECT_EQ(d.position_at(15), (Point{5, 0}));
}

TEST(Script, LabelDefaultsToId) {
  DeviceScript d;
  d.id = "X";
  d.groups = {{10, 20, "g"}};
  EXPECT_EQ(d.label_at(5), "X");
  EXPECT_EQ(d.label_at(10), "g");
  EXPECT_EQ(d.label_at(20), "X");
}

TEST(GroundTruth, ControlledBoxMovesAsOneGroup) {
  auto gt = ground_truth(controlled_ten_beacons());
  ASSERT_EQ(gt.windows.size(), 8u);
  std::size_t moving_windows = 0;
  for (const auto& tw : gt.windows) {
    ASSERT_EQ(tw.devices.size(), 10u);
    if (tw.groups.empty()) continue;
    ++moving_windows;
    ASSERT_EQ(tw.groups.size(), 1u);
    EXPECT_EQ(tw.groups[0].size(), 10u);
  }
  EXPECT_GE(moving_windows, 6u);
}

TEST(GroundTruth, JsonlRoundTrip) {
  auto gt = ground_truth(two_groups_crossing());
  std::ostringstream out;
  write_ground_truth_jsonl(out, gt);
  std::istringstream in(out.str());
  EXPECT_EQ(read_ground_truth_jsonl(in), gt);
  std::istringstream empty("");
  EXPECT_THROW(read_ground_truth_jsonl(empty), ArgumentError);
}

GroupDetection detection_from_truth(const GroundTruth& gt) {
  GroupDetection det;
  det.spec = gt.spec;
  for (const auto& tw : gt.windows)
    if (!tw.groups.empty()) det.events.push_back({tw.window, tw.groups});
  return det;
}

TEST(Evaluate, PerfectDetectionScoresOne) {
  auto gt = ground_truth(two_groups_crossing());
  auto rep = evaluate(detection_from_truth(gt), gt);
  EXPECT_EQ(rep.detection_rate, 1.0);
  EXPECT_EQ(rep.grouping_accuracy, 1.0);
  EXPECT_EQ(rep.pair_precision, 1.0);
  EXPECT_EQ(rep.pair_recall, 1.0);
}

TEST(Evaluate, NothingDetected) {
  auto gt = ground_truth(two_groups_crossing());
  GroupDetection det;
  det.spec = gt.spec;
  auto rep = evaluate(det, gt);
  EXPECT_EQ(rep.detection_rate, 0.0);
  EXPECT_FALSE(rep.grouping_accuracy.has_value());
  EXPECT_FALSE(rep.pair_precision.has_value());
}

TEST(Evaluate, MismatchedSpecIsArgumentError) {
  auto gt = ground_truth(two_groups_crossing());
  GroupDetection det;
  det.spec = {10.0, 0.0};
  EXPECT_THROW(evaluate(det, gt), ArgumentError);
}

TEST(Presets, NamesResolve) {
  for (const auto& name : preset_names()) EXPECT_EQ(preset(name).name, name);
  EXPECT_THROW(preset("nope"), NotFoundError);
}

TEST(Presets, OfficeCarriesDuplicateBeacon) {
  auto cfg = office_two_rooms();
  auto has = [&](const std::string& id) {
    return std::any_of(cfg.devices.begin(), cfg.devices.end(), [&](const auto& d) { return d.id == id; });
  };
  EXPECT_TRUE(has("P01"));
  EXPECT_TRUE(has("P01-b"));
  OfficeOptions opt;
  opt.duplicate_beacon = false;
  cfg = office_two_rooms(opt);
  EXPECT_FALSE(has("P01-b"));
  EXPECT_EQ(cfg.sniffers.size(), 3u);
}

}  // namespace
}  // namespace fingertrace::sim
