#pragma once

// Movement detection and group assembly.
//
// A person is Dynamic in window T when the top-k prefix of their fingerprint
// differs from the one at their reference window T_prev (the most recent earlier
// window with a fingerprint, at most gap_max windows back). Two Dynamic people
// are together when their prefixes agree both at T and at their own T_prev.
// Groups are the connected components of that relation.

#include <algorithm>
#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fingertrace/detail/text.hpp"
#include "fingertrace/error.hpp"
#include "fingertrace/fingerprint.hpp"
#include "fingertrace/union_find.hpp"

namespace fingertrace {

enum class Status { Static, Dynamic, Unknown };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Static: return "static";
    case Status::Dynamic: return "dynamic";
    case Status::Unknown: return "unknown";
  }
  return "unknown";
}

struct MovementParams {
  std::size_t k = 1;
  WindowIndex gap_max = 3;  // windows

  void validate() const {
    if (k < 1) throw ConfigError("k must be at least 1");
    if (gap_max < 1) throw ConfigError("gap_max must be at least 1 window");
  }
};

/// Reference fingerprint for window T, or nullptr when there is none within gap_max.
inline const Fingerprint* reference_fingerprint(const FingerprintSeries& series, WindowIndex t, WindowIndex gap_max) {
  auto it = series.entries.lower_bound(t);
  if (it == series.entries.begin()) return nullptr;
  --it;
  return t - it->first <= gap_max ? &it->second : nullptr;
}

inline Status status(const FingerprintSeries& series, WindowIndex t, const MovementParams& params = {}) {
  params.validate();
  const auto* now = series.at(t);
  if (now == nullptr) return Status::Unknown;
  const auto* prev = reference_fingerprint(series, t, params.gap_max);
  if (prev == nullptr) return Status::Unknown;
  return same_prefix(*now, *prev, params.k) ? Status::Static : Status::Dynamic;
}

/// Space correlation of two people at window T. False whenever either lacks a
/// fingerprint at T or at its reference window.
inline bool correlated(const FingerprintSeries& a, const FingerprintSeries& b, WindowIndex t,
                       const MovementParams& params = {}) {
  params.validate();
  const auto* a_now = a.at(t);
  const auto* b_now = b.at(t);
  if (a_now == nullptr || b_now == nullptr) return false;
  const auto* a_prev = reference_fingerprint(a, t, params.gap_max);
  const auto* b_prev = reference_fingerprint(b, t, params.gap_max);
  if (a_prev == nullptr || b_prev == nullptr) return false;
  return same_prefix(*a_now, *b_now, params.k) && same_prefix(*a_prev, *b_prev, params.k);
}

/// Partition of one window's Dynamic people. Members and groups are sorted.
struct GroupEvent {
  WindowIndex window = 0;
  std::vector<std::vector<std::string>> groups;

  friend bool operator==(const GroupEvent&, const GroupEvent&) = default;
};

/// Who moved when, and with how many others.
class MovementLedger {
 public:
  struct Entry {
    std::size_t group = 0;       // index into the window's GroupEvent::groups
    std::size_t group_size = 1;  // 1 = alone walk

    friend bool operator==(const Entry&, const Entry&) = default;
  };

  void add_device(const std::string& device) { moves_.try_emplace(device); }
  void record(const std::string& device, WindowIndex w, Entry e) { moves_[device].insert_or_assign(w, e); }

  const std::map<std::string, std::map<WindowIndex, Entry>>& entries() const { return moves_; }

  std::vector<std::string> devices() const {
    std::vector<std::string> out;
    for (const auto& [d, m] : moves_) out.push_back(d);
    return out;
  }

  const std::map<WindowIndex, Entry>& of(const std::string& device) const {
    static const std::map<WindowIndex, Entry> kEmpty;
    auto it = moves_.find(device);
    return it == moves_.end() ? kEmpty : it->second;
  }

  /// M(P): windows in which P is Dynamic.
  std::set<WindowIndex> movements(const std::string& device) const {
    std::set<WindowIndex> out;
    for (const auto& [w, e] : of(device)) out.insert(w);
    return out;
  }

  /// TM(P): windows in which P moves in a group of at least two.
  std::set<WindowIndex> together_movements(const std::string& device) const {
    std::set<WindowIndex> out;
    for (const auto& [w, e] : of(device))
      if (e.group_size >= 2) out.insert(w);
    return out;
  }

  /// Whether a and b are in the same movement group at window w.
  bool shared(const std::string& a, const std::string& b, WindowIndex w) const {
    const auto& ma = of(a);
    const auto& mb = of(b);
    auto ia = ma.find(w);
    auto ib = mb.find(w);
    return ia != ma.end() && ib != mb.end() && ia->second.group == ib->second.group;
  }

  friend bool operator==(const MovementLedger&, const MovementLedger&) = default;

 private:
  std::map<std::string, std::map<WindowIndex, Entry>> moves_;
};

struct GroupDetection {
  WindowSpec spec;
  std::vector<GroupEvent> events;  // ascending window; only windows with at least one Dynamic person
  MovementLedger ledger;

  const GroupEvent* event_at(WindowIndex w) const {
    auto it = std::lower_bound(events.begin(), events.end(), w,
                               [](const GroupEvent& e, WindowIndex x) { return e.window < x; });
    return it != events.end() && it->window == w ? &*it : nullptr;
  }
};

/// Rebuilds the ledger from group events. `devices` adds people who never moved.
inline MovementLedger ledger_from_events(const std::vector<GroupEvent>& events,
                                         const std::vector<std::string>& devices = {}) {
  MovementLedger ledger;
  for (const auto& d : devices) ledger.add_device(d);
  for (const auto& ev : events)
    for (std::size_t g = 0; g < ev.groups.size(); ++g)
      for (const auto& member : ev.groups[g]) ledger.record(member, ev.window, {g, ev.groups[g].size()});
  return ledger;
}

/// Connected components of an undirected relation over 0..n-1, each sorted,
/// ordered by smallest member. Unrelated elements form singletons.
inline std::vector<std::vector<std::size_t>> connected_components(
    std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  DisjointSets sets(n);
  for (const auto& [a, b] : pairs) {
    if (a >= n || b >= n) throw ArgumentError("relation refers to an element outside 0..n-1");
    sets.unite(a, b);
  }
  std::map<std::size_t, std::vector<std::size_t>> by_root;
  for (std::size_t i = 0; i < n; ++i) by_root[sets.find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [root, members] : by_root) out.push_back(std::move(members));
  std::sort(out.begin(), out.end());
  return out;
}

namespace detail {

inline void normalize_groups(std::vector<std::vector<std::string>>& groups) {
  for (auto& g : groups) std::sort(g.begin(), g.end());
  std::sort(groups.begin(), groups.end());
}

}  // namespace detail

inline GroupDetection detect_groups(const FingerprintTable& table, const MovementParams& params = {}) {
  params.validate();
  GroupDetection out;
  out.spec = table.spec;

  // Per window: the Dynamic people with their current and reference fingerprints.
  struct Mover {
    const std::string* device;
    const Fingerprint* now;
    const Fingerprint* prev;
  };
  std::map<WindowIndex, std::vector<Mover>> movers;
  std::vector<std::string> devices;
  for (const auto& [device, series] : table.series) {
    devices.push_back(device);
    const Fingerprint* prev_fp = nullptr;
    for (const auto& [w, fp] : series.entries) {
      if (prev_fp != nullptr && w - prev_fp->window <= params.gap_max && !same_prefix(fp, *prev_fp, params.k)) {
        movers[w].push_back({&device, &fp, prev_fp});
      }
      prev_fp = &fp;
    }
  }

  for (const auto& [w, ms] : movers) {
    std::vector<std::pair<std::size_t, std::size_t>> together;
    for (std::size_t i = 0; i < ms.size(); ++i)
      for (std::size_t j = i + 1; j < ms.size(); ++j) {
        if (same_prefix(*ms[i].now, *ms[j].now, params.k) && same_prefix(*ms[i].prev, *ms[j].prev, params.k)) {
          together.emplace_back(i, j);
        }
      }
    GroupEvent ev{w, {}};
    for (const auto& component : connected_components(ms.size(), together)) {
      auto& group = ev.groups.emplace_back();
      for (auto i : component) group.push_back(*ms[i].device);
    }
    detail::normalize_groups(ev.groups);
    out.events.push_back(std::move(ev));
  }
  out.ledger = ledger_from_events(out.events, devices);
  return out;
}

/// A maximal stretch of windows counted as one movement event.
struct MovementRun {
  WindowIndex first = 0;
  WindowIndex last = 0;

  friend bool operator==(const MovementRun&, const MovementRun&) = default;
};

/// Movement events per person: one per Dynamic window, or one per run of
/// consecutive Dynamic windows when `merge` is set.
inline std::map<std::string, std::vector<MovementRun>> movement_runs(const MovementLedger& ledger, bool merge) {
  std::map<std::string, std::vector<MovementRun>> out;
  for (const auto& [device, moves] : ledger.entries()) {
    auto& runs = out[device];
    for (const auto& [w, e] : moves) {
      if (merge && !runs.empty() && runs.back().last + 1 == w) {
        runs.back().last = w;
      } else {
        runs.push_back({w, w});
      }
    }
  }
  return out;
}

inline void write_group_events_jsonl(std::ostream& out, const std::vector<GroupEvent>& events) {
  std::string buf;
  for (const auto& ev : events) {
    buf += "{\"window\":";
    detail::append_number(buf, static_cast<long long>(ev.window));
    buf += ",\"groups\":[";
    for (std::size_t g = 0; g < ev.groups.size(); ++g) {
      if (g) buf += ',';
      buf += '[';
      for (std::size_t i = 0; i < ev.groups[g].size(); ++i) {
        if (i) buf += ',';
        detail::append_json_string(buf, ev.groups[g][i]);
      }
      buf += ']';
    }
    buf += "]}\n";
  }
  out << buf;
}

inline std::vector<GroupEvent> read_group_events_jsonl(std::istream& in) {
  std::vector<GroupEvent> events;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw ArgumentError("group events: malformed line " + std::to_string(lineno));
    }
    try {
      GroupEvent ev{j.at("window").get<WindowIndex>(), j.at("groups").get<std::vector<std::vector<std::string>>>()};
      detail::normalize_groups(ev.groups);
      events.push_back(std::move(ev));
    } catch (const nlohmann::json::exception& e) {
      throw ArgumentError("group events: line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  std::sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.window < b.window; });
  return events;
}

inline void write_ledger_csv(std::ostream& out, const MovementLedger& ledger) {
  std::string buf = "device,window,in_group_size\n";
  for (const auto& [device, moves] : ledger.entries())
    for (const auto& [w, e] : moves) {
      detail::append_csv_field(buf, device);
      buf += ',';
      detail::append_number(buf, static_cast<long long>(w));
      buf += ',';
      detail::append_number(buf, static_cast<long long>(e.group_size));
      buf += '\n';
    }
  out << buf;
}

}  // namespace fingertrace
