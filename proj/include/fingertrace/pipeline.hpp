#pragma once

// End-to-end analysis: packets -> windows -> fingerprints -> group events.

#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "fingertrace/fingerprint.hpp"
#include "fingertrace/ingest.hpp"
#include "fingertrace/movement.hpp"
#include "fingertrace/windowing.hpp"

namespace fingertrace {

struct AnalysisOptions {
  double window_len = 20.0;
  std::optional<double> origin;  // default: earliest packet, floored to the window grid
  Statistic statistic = Statistic::mean;
  MovementParams movement;
  std::optional<Deployment> deployment;  // default: every sniffer present in the log
};

struct Analysis {
  std::vector<std::string> sniffers;  // deployment, in declaration order
  WindowedRssi windowed;
  FingerprintTable fingerprints;
  GroupDetection detection;
  ParseStats parse;
  FilterStats filter;
  std::vector<Reject> rejects;
};

namespace detail {

inline void finish_analysis(Analysis& a, const Aggregator& agg, const AnalysisOptions& opt) {
  a.windowed = agg.finish();
  if (opt.deployment) {
    a.sniffers = opt.deployment->sniffer_ids();
  } else {
    auto seen = a.windowed.sniffers();
    a.sniffers.assign(seen.begin(), seen.end());
  }
  a.fingerprints = build_fingerprints(a.windowed);
  a.detection = detect_groups(a.fingerprints, opt.movement);
}

}  // namespace detail

inline Analysis analyze(const std::vector<PacketRecord>& records, const AnalysisOptions& opt = {}) {
  opt.movement.validate();
  Analysis a;
  Aggregator agg(opt.window_len, opt.origin, opt.statistic);
  for (const auto& r : records) {
    if (opt.deployment && !admit(*opt.deployment, r, a.filter)) continue;
    if (!opt.deployment) ++a.filter.kept;
    agg.add(r);
  }
  a.parse.lines = a.parse.accepted = records.size();
  detail::finish_analysis(a, agg, opt);
  return a;
}

/// Streaming variant: the log is never held in memory.
inline Analysis analyze_stream(std::istream& in, LogFormat format, const AnalysisOptions& opt = {}) {
  opt.movement.validate();
  Analysis a;
  Aggregator agg(opt.window_len, opt.origin, opt.statistic);
  a.parse = read_packet_log(
      in, format,
      [&](PacketRecord&& r) {
        if (opt.deployment && !admit(*opt.deployment, r, a.filter)) return;
        if (!opt.deployment) ++a.filter.kept;
        agg.add(r);
      },
      [&](Reject&& r) { a.rejects.push_back(std::move(r)); });
  detail::finish_analysis(a, agg, opt);
  return a;
}

}  // namespace fingertrace
