#pragma once

// Sampling and aggregation: packets are bucketed into fixed windows and the
// RSSIs of every (device, sniffer, window) triple are reduced to one value.
// A window in which a device was not heard by a sniffer simply has no cell.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fingertrace/detail/text.hpp"
#include "fingertrace/error.hpp"
#include "fingertrace/ingest.hpp"

namespace fingertrace {

using WindowIndex = std::int64_t;

/// Fixed-length windows; window 0 starts at `origin`.
struct WindowSpec {
  double window_len = 20.0;  // seconds
  double origin = 0.0;       // seconds since epoch

  void validate() const {
    if (!(window_len > 0) || !std::isfinite(window_len)) {
      throw ConfigError("window length must be a positive number of seconds");
    }
    if (!std::isfinite(origin)) throw ConfigError("window origin must be finite");
  }

  /// Window containing `t`; negative for t < origin (out of range).
  WindowIndex index_of(double t) const { return static_cast<WindowIndex>(std::floor((t - origin) / window_len)); }
  double start_of(WindowIndex w) const { return origin + static_cast<double>(w) * window_len; }

  friend bool operator==(const WindowSpec&, const WindowSpec&) = default;
};

enum class Statistic { mean, median };

inline Statistic parse_statistic(std::string_view name) {
  if (name == "mean") return Statistic::mean;
  if (name == "median") return Statistic::median;
  throw ArgumentError("unknown aggregation statistic '" + std::string(name) + "'");
}

struct SnifferCell {
  double mean_rssi = 0.0;  // the aggregated value (mean, or median when requested)
  std::size_t packet_count = 0;

  friend bool operator==(const SnifferCell&, const SnifferCell&) = default;
};

using SnifferCells = std::map<std::string, SnifferCell>;  // sniffer -> cell, never empty

/// Aggregated signal per (device, window).
struct WindowedRssi {
  WindowSpec spec;
  std::map<std::string, std::map<WindowIndex, SnifferCells>> cells;  // device -> window -> sniffers
  std::size_t dropped_before_origin = 0;

  const SnifferCells* find(const std::string& device, WindowIndex w) const {
    auto d = cells.find(device);
    if (d == cells.end()) return nullptr;
    auto c = d->second.find(w);
    return c == d->second.end() ? nullptr : &c->second;
  }

  std::size_t total_packets() const {
    std::size_t n = 0;
    for (const auto& [dev, windows] : cells)
      for (const auto& [w, sniffers] : windows)
        for (const auto& [s, cell] : sniffers) n += cell.packet_count;
    return n;
  }

  std::set<std::string> sniffers() const {
    std::set<std::string> out;
    for (const auto& [dev, windows] : cells)
      for (const auto& [w, sniffers] : windows)
        for (const auto& [s, cell] : sniffers) out.insert(s);
    return out;
  }

  friend bool operator==(const WindowedRssi&, const WindowedRssi&) = default;
};

/// Incremental aggregator. Feed records in any order, then call finish().
///
/// Without an explicit origin the origin becomes the earliest accepted
/// timestamp floored to a multiple of the window length. Partial aggregators
/// with the same configuration can be merged, in any order.
class Aggregator {
 public:
  explicit Aggregator(double window_len, std::optional<double> origin = std::nullopt,
                      Statistic stat = Statistic::mean)
      : window_len_(window_len), origin_(origin), stat_(stat) {
    WindowSpec{window_len, origin.value_or(0.0)}.validate();
  }

  void add(const PacketRecord& r) { add(r.timestamp, r.sniffer_id, r.device_id, r.rssi); }

  void add(double timestamp, const std::string& sniffer, const std::string& device, int rssi) {
    WindowIndex w = 0;
    if (origin_) {
      if (timestamp < *origin_) {
        ++dropped_;
        return;
      }
      w = WindowSpec{window_len_, *origin_}.index_of(timestamp);
    } else {
      w = static_cast<WindowIndex>(std::floor(timestamp / window_len_));
    }
    auto& acc = acc_[device][w][sniffer];
    acc.sum += rssi;
    ++acc.count;
    if (stat_ == Statistic::median) acc.values.push_back(rssi);
  }

  void merge(const Aggregator& other) {
    if (other.window_len_ != window_len_ || other.origin_ != origin_ || other.stat_ != stat_) {
      throw ArgumentError("cannot merge aggregators with different window configurations");
    }
    dropped_ += other.dropped_;
    for (const auto& [dev, windows] : other.acc_)
      for (const auto& [w, sniffers] : windows)
        for (const auto& [s, a] : sniffers) {
          auto& mine = acc_[dev][w][s];
          mine.sum += a.sum;
          mine.count += a.count;
          mine.values.insert(mine.values.end(), a.values.begin(), a.values.end());
        }
  }

  WindowedRssi finish() const {
    WindowedRssi out;
    WindowIndex shift = 0;
    if (origin_) {
      out.spec = WindowSpec{window_len_, *origin_};
    } else {
      WindowIndex first = std::numeric_limits<WindowIndex>::max();
      for (const auto& [dev, windows] : acc_) {
        if (!windows.empty()) first = std::min(first, windows.begin()->first);
      }
      if (acc_.empty()) first = 0;
      shift = first;
      out.spec = WindowSpec{window_len_, static_cast<double>(first) * window_len_};
    }
    out.dropped_before_origin = dropped_;
    for (const auto& [dev, windows] : acc_) {
      auto& dst = out.cells[dev];
      for (const auto& [w, sniffers] : windows) {
        auto& cell = dst[w - shift];
        for (const auto& [s, a] : sniffers) cell.emplace(s, SnifferCell{reduce(a), a.count});
      }
    }
    return out;
  }

 private:
  struct Acc {
    long long sum = 0;
    std::size_t count = 0;
    std::vector<int> values;
  };

  double reduce(const Acc& a) const {
    if (stat_ == Statistic::mean) return static_cast<double>(a.sum) / static_cast<double>(a.count);
    auto v = a.values;
    std::sort(v.begin(), v.end());
    auto n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return (static_cast<double>(v[n / 2 - 1]) + static_cast<double>(v[n / 2])) / 2.0;
  }

  double window_len_;
  std::optional<double> origin_;
  Statistic stat_;
  std::size_t dropped_ = 0;
  std::map<std::string, std::map<WindowIndex, std::map<std::string, Acc>>> acc_;
};

inline WindowedRssi aggregate(const std::vector<PacketRecord>& records, double window_len,
                              std::optional<double> origin = std::nullopt, Statistic stat = Statistic::mean) {
  Aggregator agg(window_len, origin, stat);
  for (const auto& r : records) agg.add(r);
  return agg.finish();
}

inline WindowedRssi aggregate(const std::vector<PacketRecord>& records, const WindowSpec& spec,
                              Statistic stat = Statistic::mean) {
  return aggregate(records, spec.window_len, spec.origin, stat);
}

/// Dense per-window table of one device's aggregated RSSI, for plotting.
struct SignalTable {
  std::string device;
  std::vector<std::string> sniffers;
  struct Row {
    WindowIndex window = 0;
    double window_start = 0.0;
    std::vector<std::optional<double>> rssi;  // parallel to `sniffers`
    std::optional<double> diff;               // sniffers[0] - sniffers[1]; two-sniffer tables only
  };
  std::vector<Row> rows;

  bool has_diff() const { return sniffers.size() == 2; }
};

/// Builds the signal table for `device` covering every window from its first to
/// its last observation. Columns default to every sniffer seen in `windowed`.
inline SignalTable signal_matrix(const WindowedRssi& windowed, const std::string& device,
                                 std::optional<std::vector<std::string>> sniffers = std::nullopt) {
  auto it = windowed.cells.find(device);
  if (it == windowed.cells.end() || it->second.empty()) {
    throw NotFoundError("device '" + device + "' has no aggregated measurements");
  }
  SignalTable table;
  table.device = device;
  if (sniffers) {
    table.sniffers = std::move(*sniffers);
  } else {
    auto all = windowed.sniffers();
    table.sniffers.assign(all.begin(), all.end());
  }
  const auto& windows = it->second;
  for (WindowIndex w = windows.begin()->first; w <= windows.rbegin()->first; ++w) {
    SignalTable::Row row;
    row.window = w;
    row.window_start = windowed.spec.start_of(w);
    auto cell = windows.find(w);
    for (const auto& s : table.sniffers) {
      std::optional<double> v;
      if (cell != windows.end()) {
        auto c = cell->second.find(s);
        if (c != cell->second.end()) v = c->second.mean_rssi;
      }
      row.rssi.push_back(v);
    }
    if (table.has_diff() && row.rssi[0] && row.rssi[1]) row.diff = *row.rssi[0] - *row.rssi[1];
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline void write_signal_csv(std::ostream& out, const SignalTable& table) {
  std::string buf = "window_start_s";
  for (const auto& s : table.sniffers) {
    buf += ',';
    detail::append_csv_field(buf, s);
  }
  if (table.has_diff()) {
    buf += ',';
    detail::append_csv_field(buf, "diff_" + table.sniffers[0] + "_minus_" + table.sniffers[1]);
  }
  buf += '\n';
  for (const auto& row : table.rows) {
    detail::append_number(buf, row.window_start);
    for (const auto& v : row.rssi) {
      buf += ',';
      if (v) detail::append_number(buf, *v);
    }
    if (table.has_diff()) {
      buf += ',';
      if (row.diff) detail::append_number(buf, *row.diff);
    }
    buf += '\n';
  }
  out << buf;
}

/// One JSON object per (device, window, sniffer) cell.
inline void write_windowed_jsonl(std::ostream& out, const WindowedRssi& windowed) {
  std::string buf;
  for (const auto& [dev, windows] : windowed.cells)
    for (const auto& [w, sniffers] : windows)
      for (const auto& [s, cell] : sniffers) {
        buf += "{\"device\":";
        detail::append_json_string(buf, dev);
        buf += ",\"window\":";
        detail::append_number(buf, static_cast<long long>(w));
        buf += ",\"sniffer\":";
        detail::append_json_string(buf, s);
        buf += ",\"mean_rssi\":";
        detail::append_number(buf, cell.mean_rssi);
        buf += ",\"count\":";
        detail::append_number(buf, static_cast<long long>(cell.packet_count));
        buf += "}\n";
      }
  out << buf;
}

inline WindowedRssi read_windowed_jsonl(std::istream& in, const WindowSpec& spec) {
  WindowedRssi out;
  out.spec = spec;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw ArgumentError("windowed cells: malformed line " + std::to_string(lineno));
    }
    try {
      out.cells[j.at("device").get<std::string>()][j.at("window").get<WindowIndex>()].emplace(
          j.at("sniffer").get<std::string>(),
          SnifferCell{j.at("mean_rssi").get<double>(), j.at("count").get<std::size_t>()});
    } catch (const nlohmann::json::exception& e) {
      throw ArgumentError("windowed cells: line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace fingertrace
