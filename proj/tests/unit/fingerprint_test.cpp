#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "fingertrace/fingerprint.hpp"

namespace fingertrace {
namespace {

SnifferCells cells(std::initializer_list<std::pair<const char*, double>> v) {
  SnifferCells c;
  for (const auto& [id, rssi] : v) c.emplace(id, SnifferCell{rssi, 1});
  return c;
}

std::vector<std::string> ids(std::span<const std::string> s) { return {s.begin(), s.end()}; }

TEST(Fingerprint, SortsByDescendingRssi) {
  EXPECT_EQ(make_fingerprint(0, cells({{"S1", -50}, {"S2", -70}})).sniffers, (std::vector<std::string>{"S1", "S2"}));
  EXPECT_EQ(make_fingerprint(0, cells({{"S1", -80}, {"S2", -70}, {"S3", -75}})).sniffers,
            (std::vector<std::string>{"S2", "S3", "S1"}));
}

TEST(Fingerprint, TiesBrokenByAscendingId) {
  EXPECT_EQ(make_fingerprint(0, cells({{"S2", -60}, {"S1", -60}})).sniffers, (std::vector<std::string>{"S1", "S2"}));
}

TEST(Fingerprint, OneEntryPerNonEmptyCell) {
  WindowedRssi w;
  w.cells["B1"][0] = cells({{"S1", -50}});
  w.cells["B1"][4] = cells({{"S2", -50}, {"S1", -51}});
  w.cells["B2"][1] = cells({{"S3", -40}});
  auto t = build_fingerprints(w);
  ASSERT_EQ(t.series.size(), 2u);
  EXPECT_EQ(t.at("B1").entries.size(), 2u);
  EXPECT_EQ(t.at("B1").at(4)->sniffers, (std::vector<std::string>{"S2", "S1"}));
  EXPECT_EQ(t.at("B1").at(2), nullptr);
  EXPECT_THROW(t.at("B9"), NotFoundError);
}

TEST(Prefix, TakesFirstK) {
  Fingerprint fp{0, {"S2", "S1", "S3"}};
  EXPECT_EQ(ids(prefix(fp, 1)), (std::vector<std::string>{"S2"}));
  EXPECT_EQ(ids(prefix(fp, 3)), (std::vector<std::string>{"S2", "S1", "S3"}));
}

TEST(Prefix, KBeyondLengthReturnsWholeList) {
  EXPECT_EQ(ids(prefix(Fingerprint{0, {"S2"}}, 2)), (std::vector<std::string>{"S2"}));
}

TEST(Prefix, ZeroIsArgumentError) { EXPECT_THROW(prefix(Fingerprint{0, {"S1"}}, 0), ArgumentError); }

TEST(Prefix, SamePrefixComparesElementwise) {
  Fingerprint a{0, {"S1", "S2"}}, b{1, {"S1", "S3"}}, c{2, {"S1"}};
  EXPECT_TRUE(same_prefix(a, b, 1));
  EXPECT_FALSE(same_prefix(a, b, 2));
  EXPECT_FALSE(same_prefix(a, c, 2));
  EXPECT_TRUE(same_prefix(a, c, 1));
}

TEST(FingerprintProperties, InvariantUnderPositiveAffineRescaling) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> rssi(-100, -1), scale(0.1, 10), shift(-50, 50);
  std::uniform_int_distribution<int> count(1, 6), level(-5, 0);
  for (int trial = 0; trial < 200; ++trial) {
    SnifferCells c, d;
    double a = scale(rng), b = shift(rng);
    int n = count(rng);
    for (int i = 0; i < n; ++i) {
      double v = trial % 2 ? rssi(rng) : -60.0 + level(rng);  // odd trials: distinct; even: many ties
      std::string id = "S" + std::to_string(i);
      c.emplace(id, SnifferCell{v, 1});
      d.emplace(id, SnifferCell{a * v + b, 1});
    }
    EXPECT_EQ(make_fingerprint(0, c), make_fingerprint(0, d));
  }
}

TEST(FingerprintProperties, PrefixIsNested) {
  Fingerprint fp{0, {"S4", "S1", "S3", "S2"}};
  for (std::size_t k = 1; k < 6; ++k) {
    auto shorter = prefix(fp, k);
    auto longer = prefix(fp, k + 1);
    ASSERT_LE(shorter.size(), longer.size());
    EXPECT_TRUE(std::equal(shorter.begin(), shorter.end(), longer.begin()));
  }
}

TEST(FingerprintProperties, OrderingAndUniqueness) {
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<int> rssi(-70, -60), count(1, 5);
  for (int trial = 0; trial < 200; ++trial) {
    SnifferCells c;
    for (int i = count(rng); i > 0; --i) c.emplace("S" + std::to_string(i), SnifferCell{double(rssi(rng)), 1});
    auto fp = make_fingerprint(0, c);
    ASSERT_EQ(fp.sniffers.size(), c.size());
    for (std::size_t i = 0; i + 1 < fp.sniffers.size(); ++i) {
      double x = c.at(fp.sniffers[i]).mean_rssi, y = c.at(fp.sniffers[i + 1]).mean_rssi;
      EXPECT_TRUE(x > y || (x == y && fp.sniffers[i] < fp.sniffers[i + 1]));
    }
  }
}

TEST(FingerprintJsonl, ExportFormatAndRoundTrip) {
  WindowedRssi w;
  w.spec = {20, 0};
  w.cells["B1"][0] = cells({{"S1", -50}, {"S2", -60}});
  w.cells["B1"][1] = cells({{"S2", -50}, {"S1", -60}});
  auto t = build_fingerprints(w);
  std::ostringstream out;
  write_fingerprints_jsonl(out, t);
  EXPECT_EQ(out.str(),
            "{\"device\":\"B1\",\"window\":0,\"sniffers\":[\"S1\",\"S2\"]}\n"
            "{\"device\":\"B1\",\"window\":1,\"sniffers\":[\"S2\",\"S1\"]}\n");
  std::istringstream in(out.str());
  EXPECT_EQ(read_fingerprints_jsonl(in, t.spec), t);
}

TEST(FingerprintJsonl, RejectsEmptySnifferList) {
  std::istringstream in("{\"device\":\"B1\",\"window\":0,\"sniffers\":[]}\n");
  EXPECT_THROW(read_fingerprints_jsonl(in, {}), ArgumentError);
}

}  // namespace
}  // namespace fingertrace
