#pragma once

// Wireless fingerprints: for each (device, window) cell, the sniffers that heard
// the device sorted by descending aggregated RSSI.

#include <algorithm>
#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fingertrace/detail/text.hpp"
#include "fingertrace/error.hpp"
#include "fingertrace/windowing.hpp"

namespace fingertrace {

struct Fingerprint {
  WindowIndex window = 0;
  std::vector<std::string> sniffers;  // strongest first; ties by ascending id

  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

/// Sparse per-device fingerprint time series.
struct FingerprintSeries {
  std::string device;
  std::map<WindowIndex, Fingerprint> entries;

  const Fingerprint* at(WindowIndex w) const {
    auto it = entries.find(w);
    return it == entries.end() ? nullptr : &it->second;
  }

  friend bool operator==(const FingerprintSeries&, const FingerprintSeries&) = default;
};

/// Fingerprint series of every observed device, plus the windowing they share.
struct FingerprintTable {
  WindowSpec spec;
  std::map<std::string, FingerprintSeries> series;

  const FingerprintSeries& at(const std::string& device) const {
    auto it = series.find(device);
    if (it == series.end()) throw NotFoundError("no fingerprints for device '" + device + "'");
    return it->second;
  }

  friend bool operator==(const FingerprintTable&, const FingerprintTable&) = default;
};

inline Fingerprint make_fingerprint(WindowIndex window, const SnifferCells& cells) {
  std::vector<std::pair<double, const std::string*>> ranked;
  ranked.reserve(cells.size());
  for (const auto& [id, cell] : cells) ranked.emplace_back(cell.mean_rssi, &id);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return *a.second < *b.second;
  });
  Fingerprint fp{window, {}};
  fp.sniffers.reserve(ranked.size());
  for (const auto& [rssi, id] : ranked) fp.sniffers.push_back(*id);
  return fp;
}

inline FingerprintTable build_fingerprints(const WindowedRssi& windowed) {
  FingerprintTable table{windowed.spec, {}};
  for (const auto& [device, windows] : windowed.cells) {
    auto& series = table.series[device];
    series.device = device;
    for (const auto& [w, cells] : windows) {
      if (!cells.empty()) series.entries.emplace(w, make_fingerprint(w, cells));
    }
  }
  return table;
}

/// The first k sniffers of a fingerprint (the whole list if it is shorter).
inline std::span<const std::string> prefix(const Fingerprint& fp, std::size_t k) {
  if (k == 0) throw ArgumentError("fingerprint prefix length must be at least 1");
  return std::span<const std::string>(fp.sniffers).first(std::min(k, fp.sniffers.size()));
}

inline bool same_prefix(const Fingerprint& a, const Fingerprint& b, std::size_t k) {
  auto pa = prefix(a, k);
  auto pb = prefix(b, k);
  return std::equal(pa.begin(), pa.end(), pb.begin(), pb.end());
}

inline void write_fingerprints_jsonl(std::ostream& out, const FingerprintTable& table) {
  std::string buf;
  for (const auto& [device, series] : table.series)
    for (const auto& [w, fp] : series.entries) {
      buf += "{\"device\":";
      detail::append_json_string(buf, device);
      buf += ",\"window\":";
      detail::append_number(buf, static_cast<long long>(w));
      buf += ",\"sniffers\":[";
      for (std::size_t i = 0; i < fp.sniffers.size(); ++i) {
        if (i) buf += ',';
        detail::append_json_string(buf, fp.sniffers[i]);
      }
      buf += "]}\n";
    }
  out << buf;
}

inline FingerprintTable read_fingerprints_jsonl(std::istream& in, const WindowSpec& spec) {
  FingerprintTable table{spec, {}};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw ArgumentError("fingerprints: malformed line " + std::to_string(lineno));
    }
    try {
      auto device = j.at("device").get<std::string>();
      Fingerprint fp{j.at("window").get<WindowIndex>(), j.at("sniffers").get<std::vector<std::string>>()};
      if (fp.sniffers.empty()) throw ArgumentError("fingerprints: empty sniffer list on line " + std::to_string(lineno));
      auto& series = table.series[device];
      series.device = device;
      series.entries.insert_or_assign(fp.window, std::move(fp));
    } catch (const nlohmann::json::exception& e) {
      throw ArgumentError("fingerprints: line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return table;
}

}  // namespace fingertrace
