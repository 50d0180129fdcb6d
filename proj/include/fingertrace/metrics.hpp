#pragma once

// Pairwise measures: prefix-weighted fingerprint similarity, movement
// intersection (MI) and together movement intersection (TMI).
//
// Undefined values (empty denominators) are std::nullopt, never 0.

#include <algorithm>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fingertrace/detail/text.hpp"
#include "fingertrace/error.hpp"
#include "fingertrace/fingerprint.hpp"
#include "fingertrace/movement.hpp"

namespace fingertrace {

struct SimilarityWeights {
  std::vector<double> position_weights{7.0, 2.0, 1.0};

  void validate() const {
    if (position_weights.empty()) throw ConfigError("similarity weights must not be empty");
    for (double w : position_weights) {
      if (!(w > 0)) throw ConfigError("similarity weights must be strictly positive");
    }
  }

  /// Positions that can score in a deployment of `n_sniffers`.
  std::size_t positions(std::size_t n_sniffers) const { return std::min(position_weights.size(), n_sniffers); }

  double max_points(std::size_t n_sniffers) const {
    double sum = 0;
    for (std::size_t i = 0; i < positions(n_sniffers); ++i) sum += position_weights[i];
    return sum;
  }
};

/// Ordered set of windows a similarity score is taken over.
class EvaluationSpan {
 public:
  explicit EvaluationSpan(std::vector<WindowIndex> windows) : windows_(std::move(windows)) {
    std::sort(windows_.begin(), windows_.end());
    windows_.erase(std::unique(windows_.begin(), windows_.end()), windows_.end());
    if (windows_.empty()) throw ArgumentError("evaluation span must not be empty");
  }

  static EvaluationSpan range(WindowIndex first, WindowIndex last) {
    if (last < first) throw ArgumentError("evaluation span: last window precedes first");
    std::vector<WindowIndex> w;
    for (WindowIndex i = first; i <= last; ++i) w.push_back(i);
    return EvaluationSpan(std::move(w));
  }

  /// Every window from the first to the last fingerprint of any series in `table`.
  static EvaluationSpan covering(const FingerprintTable& table) {
    bool any = false;
    WindowIndex lo = 0, hi = 0;
    for (const auto& [d, s] : table.series) {
      if (s.entries.empty()) continue;
      WindowIndex a = s.entries.begin()->first, b = s.entries.rbegin()->first;
      lo = any ? std::min(lo, a) : a;
      hi = any ? std::max(hi, b) : b;
      any = true;
    }
    if (!any) throw ArgumentError("evaluation span: no fingerprints");
    return range(lo, hi);
  }

  const std::vector<WindowIndex>& windows() const { return windows_; }

 private:
  std::vector<WindowIndex> windows_;
};

/// Points earned in one window. A missing fingerprint on either side earns 0;
/// otherwise positions score while they match and stop at the first mismatch.
/// A position present in only one list is a mismatch; identical lists earn the
/// full maximum even when shorter than the deployment.
inline double window_points(const Fingerprint* a, const Fingerprint* b, std::size_t n_sniffers,
                            const SimilarityWeights& weights) {
  if (a == nullptr || b == nullptr) return 0.0;
  double earned = 0;
  auto positions = weights.positions(n_sniffers);
  const auto& x = a->sniffers;
  const auto& y = b->sniffers;
  for (std::size_t p = 0; p < positions; ++p) {
    bool past_x = p >= x.size(), past_y = p >= y.size();
    if (past_x != past_y || (!past_x && x[p] != y[p])) break;
    earned += weights.position_weights[p];
  }
  return earned;
}

/// Similarity in [0,1]; nullopt when neither series has a fingerprint anywhere in the span.
inline std::optional<double> similarity_score(const FingerprintSeries& a, const FingerprintSeries& b,
                                              const EvaluationSpan& span, std::size_t n_sniffers,
                                              const SimilarityWeights& weights = {}) {
  weights.validate();
  if (n_sniffers == 0) throw ArgumentError("similarity needs at least one deployed sniffer");
  double earned = 0;
  std::size_t counted = 0;
  for (WindowIndex w : span.windows()) {
    const auto* fa = a.at(w);
    const auto* fb = b.at(w);
    if (fa == nullptr && fb == nullptr) continue;
    ++counted;
    earned += window_points(fa, fb, n_sniffers, weights);
  }
  if (counted == 0) return std::nullopt;
  return earned / (static_cast<double>(counted) * weights.max_points(n_sniffers));
}

enum class EventCounting { per_window, merged_runs };

namespace detail {

struct IntersectionCounts {
  std::size_t all = 0;       // |M(P_i)|
  std::size_t together = 0;  // |TM(P_i)|
  std::size_t shared = 0;    // |M(P_i) ∩ M(P_j)|, same group
};

inline IntersectionCounts count_intersections(const MovementLedger& ledger, const std::string& pi,
                                              const std::string& pj, EventCounting counting) {
  IntersectionCounts c;
  const auto& mi = ledger.of(pi);
  if (counting == EventCounting::per_window) {
    for (const auto& [w, e] : mi) {
      ++c.all;
      if (e.group_size >= 2) ++c.together;
      if (pi != pj && ledger.shared(pi, pj, w)) ++c.shared;
    }
    return c;
  }
  bool open = false;
  WindowIndex last = 0;
  bool run_together = false, run_shared = false;
  auto close = [&] {
    if (!open) return;
    ++c.all;
    if (run_together) ++c.together;
    if (run_shared) ++c.shared;
  };
  for (const auto& [w, e] : mi) {
    if (!open || w != last + 1) {
      close();
      open = true;
      run_together = run_shared = false;
    }
    last = w;
    run_together = run_together || e.group_size >= 2;
    run_shared = run_shared || (pi != pj && ledger.shared(pi, pj, w));
  }
  close();
  return c;
}

}  // namespace detail

/// MI(P_i, P_j): share of P_i's movements made in the same group as P_j.
inline std::optional<double> movement_intersection(const MovementLedger& ledger, const std::string& pi,
                                                   const std::string& pj,
                                                   EventCounting counting = EventCounting::per_window) {
  auto c = detail::count_intersections(ledger, pi, pj, counting);
  if (c.all == 0) return std::nullopt;
  return static_cast<double>(c.shared) / static_cast<double>(c.all);
}

/// TMI(P_i, P_j): like MI but only P_i's group movements (size >= 2) are counted.
inline std::optional<double> together_movement_intersection(const MovementLedger& ledger, const std::string& pi,
                                                            const std::string& pj,
                                                            EventCounting counting = EventCounting::per_window) {
  auto c = detail::count_intersections(ledger, pi, pj, counting);
  if (c.together == 0) return std::nullopt;
  return static_cast<double>(c.shared) / static_cast<double>(c.together);
}

enum class Metric { similarity, mi, tmi };

inline const char* to_string(Metric m) {
  switch (m) {
    case Metric::similarity: return "similarity";
    case Metric::mi: return "mi";
    case Metric::tmi: return "tmi";
  }
  return "mi";
}

inline Metric parse_metric(std::string_view name) {
  if (name == "similarity") return Metric::similarity;
  if (name == "mi") return Metric::mi;
  if (name == "tmi") return Metric::tmi;
  throw ArgumentError("unknown metric '" + std::string(name) + "' (expected mi, tmi or similarity)");
}

/// One directional entry of a pairwise matrix.
struct PairValue {
  std::string from;
  std::string to;
  Metric metric = Metric::mi;
  std::optional<double> value;

  friend bool operator==(const PairValue&, const PairValue&) = default;
};

using PairwiseMatrix = std::vector<PairValue>;

/// All ordered pairs (i != j) of `devices`, sorted by (from, to).
inline PairwiseMatrix intersection_matrix(const MovementLedger& ledger, Metric metric,
                                          EventCounting counting = EventCounting::per_window) {
  if (metric == Metric::similarity) throw ArgumentError("intersection_matrix computes mi or tmi only");
  PairwiseMatrix out;
  auto devices = ledger.devices();
  for (const auto& a : devices)
    for (const auto& b : devices) {
      if (a == b) continue;
      out.push_back({a, b, metric,
                     metric == Metric::mi ? movement_intersection(ledger, a, b, counting)
                                          : together_movement_intersection(ledger, a, b, counting)});
    }
  return out;
}

inline PairwiseMatrix similarity_matrix(const FingerprintTable& table, const EvaluationSpan& span,
                                        std::size_t n_sniffers, const SimilarityWeights& weights = {}) {
  PairwiseMatrix out;
  for (const auto& [a, sa] : table.series)
    for (const auto& [b, sb] : table.series) {
      if (a == b) continue;
      out.push_back({a, b, Metric::similarity, similarity_score(sa, sb, span, n_sniffers, weights)});
    }
  return out;
}

inline void write_matrix_csv(std::ostream& out, const PairwiseMatrix& matrix) {
  std::string buf = "p_from,p_to,metric,value,defined\n";
  for (const auto& pv : matrix) {
    detail::append_csv_field(buf, pv.from);
    buf += ',';
    detail::append_csv_field(buf, pv.to);
    buf += ',';
    buf += to_string(pv.metric);
    buf += ',';
    if (pv.value) detail::append_number(buf, *pv.value);
    buf += pv.value ? ",true\n" : ",false\n";
  }
  out << buf;
}

inline PairwiseMatrix read_matrix_csv(std::istream& in) {
  PairwiseMatrix out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      if (detail::trim(line) != "p_from,p_to,metric,value,defined") {
        throw ArgumentError("pairwise matrix: unexpected header '" + line + "'");
      }
      continue;
    }
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_csv(line);
    if (!fields || fields->size() != 5) {
      throw ArgumentError("pairwise matrix: malformed row " + std::to_string(lineno));
    }
    PairValue pv{(*fields)[0], (*fields)[1], parse_metric(detail::trim((*fields)[2])), std::nullopt};
    auto defined = detail::trim((*fields)[4]);
    if (defined == "true") {
      pv.value = detail::parse_double((*fields)[3]);
      if (!pv.value) throw ArgumentError("pairwise matrix: bad value on row " + std::to_string(lineno));
    } else if (defined != "false") {
      throw ArgumentError("pairwise matrix: bad 'defined' flag on row " + std::to_string(lineno));
    }
    out.push_back(std::move(pv));
  }
  return out;
}

}  // namespace fingertrace
