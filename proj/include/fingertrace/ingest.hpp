#pragma once

// Packet log ingestion: parsing sniffer reports into PacketRecords, and
// restricting them to a known deployment.
//
// Canonical on-disk format is JSON lines:
//   {"ts": 12.4, "sniffer": "S1", "device": "B1", "rssi": -67}
// CSV with a `ts,sniffer,device,rssi` header row is also accepted.

#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fingertrace/detail/text.hpp"
#include "fingertrace/error.hpp"

namespace fingertrace {

/// One captured advertising packet.
struct PacketRecord {
  double timestamp = 0.0;  // seconds since epoch
  std::string sniffer_id;
  std::string device_id;
  int rssi = 0;  // dBm, always <= 0

  friend bool operator==(const PacketRecord&, const PacketRecord&) = default;
};

enum class LogFormat { jsonl, csv };

inline LogFormat parse_log_format(std::string_view name) {
  if (name == "jsonl" || name == "json") return LogFormat::jsonl;
  if (name == "csv") return LogFormat::csv;
  throw ArgumentError("unknown log format '" + std::string(name) + "' (expected jsonl or csv)");
}

/// A line that could not be turned into a PacketRecord.
struct Reject {
  std::size_t line = 0;  // 1-based
  std::string reason;

  friend bool operator==(const Reject&, const Reject&) = default;
};

struct ParseStats {
  std::size_t lines = 0;  // data lines seen (the CSV header is not counted)
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

struct ParseResult {
  std::vector<PacketRecord> records;
  std::vector<Reject> rejects;
  ParseStats stats;
};

namespace detail {

// Shared validation once the four raw fields are extracted.
inline std::optional<PacketRecord> make_record(double ts, std::string sniffer, std::string device, double rssi,
                                               std::string& reason) {
  if (!std::isfinite(ts)) {
    reason = "non-finite timestamp";
    return std::nullopt;
  }
  if (ts < 0) {
    reason = "negative timestamp";
    return std::nullopt;
  }
  if (sniffer.empty()) {
    reason = "empty sniffer id";
    return std::nullopt;
  }
  if (device.empty()) {
    reason = "empty device id";
    return std::nullopt;
  }
  if (!std::isfinite(rssi)) {
    reason = "non-finite rssi";
    return std::nullopt;
  }
  if (rssi > 0) {
    reason = "positive rssi";
    return std::nullopt;
  }
  double rounded = std::round(rssi);  // half away from zero
  if (rounded < -1000) {
    reason = "rssi out of range";
    return std::nullopt;
  }
  return PacketRecord{ts, std::move(sniffer), std::move(device), static_cast<int>(rounded)};
}

}  // namespace detail

/// Parses a single JSONL packet line. On failure returns nullopt and sets `reason`.
inline std::optional<PacketRecord> parse_jsonl_line(std::string_view line, std::string& reason) {
  auto doc = nlohmann::json::parse(line.begin(), line.end(), nullptr, false);
  if (doc.is_discarded()) {
    reason = "invalid json";
    return std::nullopt;
  }
  if (!doc.is_object()) {
    reason = "not a json object";
    return std::nullopt;
  }
  auto field = [&](const char* key) -> const nlohmann::json* {
    auto it = doc.find(key);
    return it == doc.end() ? nullptr : &*it;
  };
  const auto* ts = field("ts");
  const auto* sniffer = field("sniffer");
  const auto* device = field("device");
  const auto* rssi = field("rssi");
  if (ts == nullptr || sniffer == nullptr || device == nullptr || rssi == nullptr) {
    reason = std::string("missing field '") +
             (ts == nullptr ? "ts" : sniffer == nullptr ? "sniffer" : device == nullptr ? "device" : "rssi") + "'";
    return std::nullopt;
  }
  if (!ts->is_number()) {
    reason = "ts is not a number";
    return std::nullopt;
  }
  if (!sniffer->is_string() || !device->is_string()) {
    reason = "sniffer/device must be strings";
    return std::nullopt;
  }
  if (!rssi->is_number()) {
    reason = "rssi is not a number";
    return std::nullopt;
  }
  return detail::make_record(ts->get<double>(), sniffer->get<std::string>(), device->get<std::string>(),
                             rssi->get<double>(), reason);
}

/// Parses a single CSV data row (`ts,sniffer,device,rssi`).
inline std::optional<PacketRecord> parse_csv_line(std::string_view line, std::string& reason) {
  auto fields = detail::split_csv(line);
  if (!fields) {
    reason = "unterminated quote";
    return std::nullopt;
  }
  if (fields->size() != 4) {
    reason = "expected 4 columns, got " + std::to_string(fields->size());
    return std::nullopt;
  }
  auto ts = detail::parse_double((*fields)[0]);
  if (!ts) {
    reason = "ts is not a number";
    return std::nullopt;
  }
  auto rssi = detail::parse_double((*fields)[3]);
  if (!rssi) {
    reason = "rssi is not a number";
    return std::nullopt;
  }
  return detail::make_record(*ts, std::string(detail::trim((*fields)[1])), std::string(detail::trim((*fields)[2])),
                             *rssi, reason);
}

/// Streams a packet log, calling `on_record(PacketRecord&&)` for every accepted
/// line and `on_reject(Reject&&)` for every malformed one. Parsing never stops
/// on a bad line. An empty stream yields no callbacks.
template <class OnRecord, class OnReject>
ParseStats read_packet_log(std::istream& in, LogFormat format, OnRecord&& on_record, OnReject&& on_reject) {
  ParseStats stats;
  std::string line;
  std::string reason;
  std::size_t lineno = 0;
  bool header_pending = format == LogFormat::csv;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (header_pending) {
      header_pending = false;
      auto cols = detail::split_csv(line);
      if (cols && cols->size() == 4 && detail::trim((*cols)[0]) == "ts" && detail::trim((*cols)[1]) == "sniffer" &&
          detail::trim((*cols)[2]) == "device" && detail::trim((*cols)[3]) == "rssi") {
        continue;
      }
      ++stats.lines;
      ++stats.rejected;
      on_reject(Reject{lineno, "missing or malformed csv header"});
      continue;
    }
    ++stats.lines;
    if (detail::trim(line).empty()) {
      ++stats.rejected;
      on_reject(Reject{lineno, "empty line"});
      continue;
    }
    auto rec = format == LogFormat::jsonl ? parse_jsonl_line(line, reason) : parse_csv_line(line, reason);
    if (rec) {
      ++stats.accepted;
      on_record(std::move(*rec));
    } else {
      ++stats.rejected;
      on_reject(Reject{lineno, reason});
    }
  }
  return stats;
}

/// Reads a whole packet log into memory. Line order is preserved.
inline ParseResult parse_packet_log(std::istream& in, LogFormat format) {
  ParseResult result;
  result.stats = read_packet_log(
      in, format, [&](PacketRecord&& r) { result.records.push_back(std::move(r)); },
      [&](Reject&& r) { result.rejects.push_back(std::move(r)); });
  return result;
}

inline void append_jsonl(std::string& out, const PacketRecord& r) {
  out += "{\"ts\":";
  detail::append_number(out, r.timestamp);
  out += ",\"sniffer\":";
  detail::append_json_string(out, r.sniffer_id);
  out += ",\"device\":";
  detail::append_json_string(out, r.device_id);
  out += ",\"rssi\":";
  detail::append_number(out, r.rssi);
  out += "}\n";
}

inline void append_csv(std::string& out, const PacketRecord& r) {
  detail::append_number(out, r.timestamp);
  out += ',';
  detail::append_csv_field(out, r.sniffer_id);
  out += ',';
  detail::append_csv_field(out, r.device_id);
  out += ',';
  detail::append_number(out, r.rssi);
  out += '\n';
}

inline constexpr std::string_view kCsvHeader = "ts,sniffer,device,rssi\n";

inline void write_packet_log(std::ostream& out, const std::vector<PacketRecord>& records, LogFormat format) {
  std::string buf;
  if (format == LogFormat::csv) buf += kCsvHeader;
  for (const auto& r : records) {
    if (format == LogFormat::jsonl) {
      append_jsonl(buf, r);
    } else {
      append_csv(buf, r);
    }
    if (buf.size() > (1u << 20)) {
      out << buf;
      buf.clear();
    }
  }
  out << buf;
}

inline void write_rejects(std::ostream& out, const std::vector<Reject>& rejects) {
  for (const auto& r : rejects) {
    out << nlohmann::json{{"line", r.line}, {"reason", r.reason}}.dump() << '\n';
  }
}

/// The set of sniffers in a deployment and, optionally, the beacons of interest.
class Deployment {
 public:
  explicit Deployment(std::vector<std::string> sniffer_ids,
                      std::optional<std::set<std::string>> device_allowlist = std::nullopt)
      : sniffer_ids_(std::move(sniffer_ids)), device_allowlist_(std::move(device_allowlist)) {
    if (sniffer_ids_.empty()) throw ConfigError("deployment needs at least one sniffer");
    for (const auto& id : sniffer_ids_) {
      if (id.empty()) throw ConfigError("empty sniffer id in deployment");
      if (!sniffer_lookup_.insert(id).second) throw ConfigError("duplicate sniffer id '" + id + "' in deployment");
    }
  }

  const std::vector<std::string>& sniffer_ids() const { return sniffer_ids_; }
  std::size_t sniffer_count() const { return sniffer_ids_.size(); }
  const std::optional<std::set<std::string>>& device_allowlist() const { return device_allowlist_; }

  bool knows_sniffer(std::string_view id) const { return sniffer_lookup_.contains(std::string(id)); }
  bool allows_device(std::string_view id) const {
    return !device_allowlist_ || device_allowlist_->contains(std::string(id));
  }

 private:
  std::vector<std::string> sniffer_ids_;
  std::unordered_set<std::string> sniffer_lookup_;
  std::optional<std::set<std::string>> device_allowlist_;
};

/// Infers a deployment from the sniffers that appear in `records` (sorted by id).
inline Deployment infer_deployment(const std::vector<PacketRecord>& records) {
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(r.sniffer_id);
  if (ids.empty()) throw ConfigError("cannot infer a deployment from an empty record set");
  return Deployment({ids.begin(), ids.end()});
}

struct FilterStats {
  std::size_t kept = 0;
  std::size_t dropped_device = 0;
  std::size_t dropped_unknown_sniffer = 0;
};

struct FilterResult {
  std::vector<PacketRecord> records;
  FilterStats stats;
};

/// Streaming form of filter_devices; returns whether the record survives and
/// updates the counters.
inline bool admit(const Deployment& deployment, const PacketRecord& r, FilterStats& stats) {
  if (!deployment.knows_sniffer(r.sniffer_id)) {
    ++stats.dropped_unknown_sniffer;
    return false;
  }
  if (!deployment.allows_device(r.device_id)) {
    ++stats.dropped_device;
    return false;
  }
  ++stats.kept;
  return true;
}

/// Keeps records from allowlisted devices heard by deployed sniffers. Without an
/// allowlist only the sniffer check applies.
inline FilterResult filter_devices(const std::vector<PacketRecord>& records, const Deployment& deployment) {
  FilterResult out;
  for (const auto& r : records) {
    if (admit(deployment, r, out.stats)) out.records.push_back(r);
  }
  return out;
}

}  // namespace fingertrace
