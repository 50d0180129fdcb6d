#include "commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fingertrace/fingertrace.hpp"

namespace fs = std::filesystem;

namespace fingertrace::cli {
namespace {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

Level log_level() {
  const char* env = std::getenv("FINGERTRACE_LOG");
  if (env == nullptr) return Level::warn;
  std::string v = env;
  if (v == "error") return Level::error;
  if (v == "info") return Level::info;
  if (v == "debug") return Level::debug;
  return Level::warn;
}

class Log {
 public:
  explicit Log(std::ostream& err) : err_(err), level_(log_level()) {}
  void warn(const std::string& m) const { emit(Level::warn, "warn", m); }
  void info(const std::string& m) const { emit(Level::info, "info", m); }
  void debug(const std::string& m) const { emit(Level::debug, "debug", m); }

 private:
  void emit(Level l, const char* tag, const std::string& m) const {
    if (static_cast<int>(l) <= static_cast<int>(level_)) err_ << "fingertrace: " << tag << ": " << m << '\n';
  }
  std::ostream& err_;
  Level level_;
};

// Missing or unreadable input: mapped to kUsageError.
class InputError : public Error {
 public:
  using Error::Error;
};

std::ifstream open_input(const fs::path& p) {
  if (!fs::exists(p)) throw InputError("no such file: " + p.string());
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError("cannot open " + p.string());
  return in;
}

void write_file(const fs::path& p, const std::string& content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
  out.close();
  if (!out) throw Error("failed writing " + p.string());
}

template <class Writer>
void write_with(const fs::path& p, Writer&& w) {
  std::ostringstream buf;
  w(buf);
  write_file(p, buf.str());
}

std::vector<double> parse_weights(const std::string& s) {
  std::vector<double> out;
  for (const auto& tok : detail::split(s, ',')) {
    auto v = detail::parse_double(tok);
    if (!v) throw ConfigError("bad weight '" + tok + "' in --weights");
    out.push_back(*v);
  }
  return out;
}

std::optional<EvaluationSpan> parse_span(const std::string& s) {
  if (s.empty()) return std::nullopt;
  auto parts = detail::split(s, ':');
  if (parts.size() != 2) throw ConfigError("--span expects FIRST:LAST window indices");
  auto a = detail::parse_double(parts[0]);
  auto b = detail::parse_double(parts[1]);
  if (!a || !b) throw ConfigError("--span expects FIRST:LAST window indices");
  try {
    return EvaluationSpan::range(static_cast<WindowIndex>(*a), static_cast<WindowIndex>(*b));
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
}

std::string safe_filename(const std::string& id) {
  std::string out;
  for (char c : id) {
    bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '_' ||
              c == '.';
    out += ok ? c : '_';
  }
  return out.empty() ? "_" : out;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  std::string out = ".";
  std::string format = "jsonl";
  bool save_config = false;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, const Log& log) {
  if (a.config.empty() == a.preset.empty()) throw ConfigError("simulate needs exactly one of CONFIG or --preset");
  sim::ScenarioConfig cfg;
  if (!a.preset.empty()) {
    if (a.preset == "office-2-rooms" && a.duration) {
      sim::OfficeOptions opt;
      opt.duration = *a.duration;
      cfg = sim::office_two_rooms(opt);
    } else {
      try {
        cfg = sim::preset(a.preset);
      } catch (const NotFoundError& e) {
        throw ConfigError(e.what());
      }
      if (a.duration) cfg.duration = *a.duration;
    }
  } else {
    auto in = open_input(a.config);
    cfg = sim::read_config(in);
    if (a.duration) cfg.duration = *a.duration;
  }
  if (a.seed) cfg.seed = *a.seed;
  cfg.validate();
  auto format = parse_log_format(a.format);

  fs::path dir(a.out);
  fs::create_directories(dir);
  auto log_path = dir / (format == LogFormat::jsonl ? "packets.jsonl" : "packets.csv");
  std::ofstream log_out(log_path, std::ios::binary | std::ios::trunc);
  std::string buf;
  if (format == LogFormat::csv) buf += kCsvHeader;
  auto stats = sim::generate_packets(cfg, [&](const PacketRecord& r) {
    if (format == LogFormat::jsonl) {
      append_jsonl(buf, r);
    } else {
      append_csv(buf, r);
    }
    if (buf.size() > (1u << 22)) {
      log_out << buf;
      buf.clear();
    }
  });
  log_out << buf;
  log_out.close();
  if (!log_out) throw Error("failed writing " + log_path.string());

  write_with(dir / "ground_truth.jsonl", [&](std::ostream& o) { sim::write_ground_truth_jsonl(o, sim::ground_truth(cfg)); });
  RoomLabels rooms;
  for (const auto& d : cfg.devices)
    if (d.room) rooms[d.id] = *d.room;
  if (!rooms.empty()) write_file(dir / "rooms.json", nlohmann::ordered_json(rooms).dump(2) + "\n");
  if (a.save_config) write_file(dir / "scenario.json", sim::to_json(cfg).dump(2) + "\n");

  log.info("scenario '" + cfg.name + "' seed " + std::to_string(cfg.seed) + " written to " + dir.string());
  out << "devices=" << cfg.devices.size() << " packets=" << stats.packets << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  std::string log;
  std::string out = "analysis";
  std::string format = "jsonl";
  double window_len = 20.0;
  std::optional<double> origin;
  std::size_t k = 1;
  long long gap_max = 3;
  std::string statistic = "mean";
  std::string sniffers;
  std::string devices;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out, const Log& log) {
  AnalysisOptions opt;
  opt.window_len = a.window_len;
  opt.origin = a.origin;
  opt.statistic = parse_statistic(a.statistic);
  opt.movement = {a.k, a.gap_max};
  opt.movement.validate();
  WindowSpec{opt.window_len, opt.origin.value_or(0.0)}.validate();
  if (!a.sniffers.empty()) {
    std::optional<std::set<std::string>> allow;
    if (!a.devices.empty()) {
      auto d = detail::split(a.devices, ',');
      allow = std::set<std::string>(d.begin(), d.end());
    }
    opt.deployment.emplace(detail::split(a.sniffers, ','), allow);
  } else if (!a.devices.empty()) {
    throw ConfigError("--devices requires --sniffers");
  }
  auto format = parse_log_format(a.format);
  auto in = open_input(a.log);

  auto result = analyze_stream(in, format, opt);
  log.info("parsed " + std::to_string(result.parse.lines) + " lines, " + std::to_string(result.parse.rejected) +
           " rejected");
  if (result.filter.kept == 0) {
    throw Error("no usable packet records in " + a.log);
  }

  fs::path dir(a.out);
  fs::create_directories(dir);
  nlohmann::ordered_json run;
  run["input"] = fs::path(a.log).filename().string();
  run["format"] = a.format;
  run["window_len"] = result.windowed.spec.window_len;
  run["origin"] = result.windowed.spec.origin;
  run["statistic"] = a.statistic;
  run["k"] = a.k;
  run["gap_max"] = a.gap_max;
  run["sniffers"] = result.sniffers;
  run["devices"] = result.fingerprints.series.size();
  run["lines"] = result.parse.lines;
  run["accepted"] = result.parse.accepted;
  run["rejected"] = result.parse.rejected;
  run["kept"] = result.filter.kept;
  run["dropped_unknown_sniffer"] = result.filter.dropped_unknown_sniffer;
  run["dropped_device"] = result.filter.dropped_device;
  run["dropped_before_origin"] = result.windowed.dropped_before_origin;
  run["movement_windows"] = result.detection.events.size();

  write_file(dir / "run.json", run.dump(2) + "\n");
  write_with(dir / "windowed.jsonl", [&](std::ostream& o) { write_windowed_jsonl(o, result.windowed); });
  write_with(dir / "fingerprints.jsonl", [&](std::ostream& o) { write_fingerprints_jsonl(o, result.fingerprints); });
  write_with(dir / "groups.jsonl", [&](std::ostream& o) { write_group_events_jsonl(o, result.detection.events); });
  write_with(dir / "ledger.csv", [&](std::ostream& o) { write_ledger_csv(o, result.detection.ledger); });
  write_with(dir / "rejects.jsonl", [&](std::ostream& o) { write_rejects(o, result.rejects); });

  out << "devices=" << result.fingerprints.series.size() << " records=" << result.filter.kept
      << " rejected=" << result.parse.rejected << " movement_windows=" << result.detection.events.size() << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

struct AnalysisDir {
  WindowSpec spec;
  std::vector<std::string> sniffers;
  fs::path dir;
};

AnalysisDir load_analysis_dir(const fs::path& dir) {
  auto run_path = dir / "run.json";
  if (!fs::exists(run_path)) throw InputError("not an analysis directory (missing run.json): " + dir.string());
  auto in = open_input(run_path);
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw InputError("corrupt run.json in " + dir.string());
  try {
    return {{j.at("window_len").get<double>(), j.at("origin").get<double>()},
            j.at("sniffers").get<std::vector<std::string>>(),
            dir};
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("corrupt run.json: ") + e.what());
  }
}

FingerprintTable load_fingerprints(const AnalysisDir& a) {
  auto in = open_input(a.dir / "fingerprints.jsonl");
  return read_fingerprints_jsonl(in, a.spec);
}

GroupDetection load_detection(const AnalysisDir& a) {
  auto fps = load_fingerprints(a);
  std::vector<std::string> devices;
  for (const auto& [d, s] : fps.series) devices.push_back(d);
  auto in = open_input(a.dir / "groups.jsonl");
  GroupDetection det;
  det.spec = a.spec;
  det.events = read_group_events_jsonl(in);
  det.ledger = ledger_from_events(det.events, devices);
  return det;
}

struct MetricsArgs {
  std::string dir;
  std::string metric = "mi";
  std::string span;
  std::string weights = "7,2,1";
  bool merge_runs = false;
  std::string out;
};

int cmd_metrics(const MetricsArgs& a, std::ostream& out, const Log& log) {
  auto metric = parse_metric(a.metric);
  SimilarityWeights weights{parse_weights(a.weights)};
  weights.validate();
  auto span = parse_span(a.span);
  auto run = load_analysis_dir(a.dir);

  PairwiseMatrix matrix;
  if (metric == Metric::similarity) {
    auto fps = load_fingerprints(run);
    if (fps.series.empty()) throw Error("no fingerprints in " + a.dir);
    auto s = span ? *span : EvaluationSpan::covering(fps);
    matrix = similarity_matrix(fps, s, run.sniffers.size(), weights);
  } else {
    auto det = load_detection(run);
    matrix = intersection_matrix(det.ledger, metric,
                                 a.merge_runs ? EventCounting::merged_runs : EventCounting::per_window);
  }
  fs::path target = a.out.empty() ? fs::path(a.dir) / ("matrix_" + a.metric + ".csv") : fs::path(a.out);
  write_with(target, [&](std::ostream& o) { write_matrix_csv(o, matrix); });
  std::size_t defined = 0;
  for (const auto& pv : matrix) defined += pv.value.has_value();
  log.info("wrote " + target.string());
  out << "pairs=" << matrix.size() << " defined=" << defined << " out=" << target.string() << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

struct GraphArgs {
  std::string matrix;
  double threshold = 0.1;
  std::string format = "dot";
  std::string rooms;
  std::string out;
};

int cmd_graph(const GraphArgs& a, std::ostream& out, const Log& log) {
  auto format = parse_graph_format(a.format);
  if (!(a.threshold >= 0.0 && a.threshold <= 1.0)) throw ConfigError("graph threshold must lie in [0, 1]");
  auto in = open_input(a.matrix);
  auto matrix = read_matrix_csv(in);
  RoomLabels rooms;
  if (!a.rooms.empty()) {
    auto rin = open_input(a.rooms);
    rooms = read_room_labels(rin);
  }
  auto graph = build_graph(matrix, a.threshold, rooms);
  auto text = export_graph(graph, format);
  if (a.out.empty() || a.out == "-") {
    out << text;
  } else {
    write_file(a.out, text);
    log.info("wrote " + a.out + " (" + std::to_string(graph.nodes.size()) + " nodes, " +
             std::to_string(graph.edges.size()) + " edges)");
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::string dir;
  std::string out;
  std::string truth;
};

int cmd_report(const ReportArgs& a, std::ostream& out, const Log& log) {
  auto run = load_analysis_dir(a.dir);
  fs::path target = a.out.empty() ? fs::path(a.dir) / "report" : fs::path(a.out);
  auto det = load_detection(run);

  std::map<std::size_t, std::size_t> histogram;
  for (const auto& ev : det.events)
    for (const auto& g : ev.groups) ++histogram[g.size()];
  write_with(target / "histogram.csv", [&](std::ostream& o) {
    o << "group_size,count\n";
    for (const auto& [size, count] : histogram) o << size << ',' << count << '\n';
  });

  auto win_in = open_input(run.dir / "windowed.jsonl");
  auto windowed = read_windowed_jsonl(win_in, run.spec);
  for (const auto& [device, cells] : windowed.cells) {
    auto table = signal_matrix(windowed, device, run.sniffers);
    write_with(target / "signals" / (safe_filename(device) + ".csv"), [&](std::ostream& o) { write_signal_csv(o, table); });
  }

  if (!a.truth.empty()) {
    auto tin = open_input(a.truth);
    auto gt = sim::read_ground_truth_jsonl(tin);
    auto report = sim::evaluate(det, gt);
    write_file(target / "accuracy.json", sim::to_json(report).dump(2) + "\n");
  }
  log.info("report written to " + target.string());
  std::size_t groups = 0;
  for (const auto& [size, count] : histogram) groups += count;
  out << "groups=" << groups << " devices=" << windowed.cells.size() << " out=" << target.string() << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Group mobility detection from wireless sniffer logs", "fingertrace"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic packet log and its ground truth");
  simulate->add_option("config", sim_args.config, "Scenario config (JSON)");
  simulate->add_option("--preset", sim_args.preset, "Shipped scenario")
      ->check(CLI::IsMember(sim::preset_names()));
  simulate->add_option("--seed", sim_args.seed, "Override the scenario seed");
  simulate->add_option("--duration", sim_args.duration, "Override the scenario duration (s)");
  simulate->add_option("--out", sim_args.out, "Output directory");
  simulate->add_option("--format", sim_args.format, "Packet log format (jsonl|csv)");
  simulate->add_flag("--save-config", sim_args.save_config, "Also write the resolved scenario.json");

  AnalyzeArgs an_args;
  auto* analyze_cmd = app.add_subcommand("analyze", "Detect movements and groups in a packet log");
  analyze_cmd->add_option("log", an_args.log, "Packet log")->required();
  analyze_cmd->add_option("--out", an_args.out, "Output directory");
  analyze_cmd->add_option("--format", an_args.format, "Log format (jsonl|csv)");
  analyze_cmd->add_option("--window-len", an_args.window_len, "Window length in seconds");
  analyze_cmd->add_option("--origin", an_args.origin, "Start of window 0 (default: earliest packet)");
  analyze_cmd->add_option("--k", an_args.k, "Fingerprint prefix length");
  analyze_cmd->add_option("--gap-max", an_args.gap_max, "Maximum lookback for the reference window");
  analyze_cmd->add_option("--statistic", an_args.statistic, "Aggregation statistic (mean|median)");
  analyze_cmd->add_option("--sniffers", an_args.sniffers, "Comma-separated deployed sniffer ids");
  analyze_cmd->add_option("--devices", an_args.devices, "Comma-separated device allowlist");

  MetricsArgs m_args;
  auto* metrics = app.add_subcommand("metrics", "Pairwise similarity / MI / TMI matrix");
  metrics->add_option("dir", m_args.dir, "Analysis directory")->required();
  metrics->add_option("--metric", m_args.metric, "mi|tmi|similarity");
  metrics->add_option("--span", m_args.span, "Window range FIRST:LAST for similarity");
  metrics->add_option("--weights", m_args.weights, "Similarity position weights");
  metrics->add_flag("--merge-runs", m_args.merge_runs, "Count runs of consecutive movement windows as one event");
  metrics->add_option("--out", m_args.out, "Output CSV (default DIR/matrix_<metric>.csv)");

  GraphArgs g_args;
  auto* graph = app.add_subcommand("graph", "Build a social network from a pairwise matrix");
  graph->add_option("matrix", g_args.matrix, "Pairwise matrix CSV")->required();
  graph->add_option("--threshold", g_args.threshold, "Minimum edge weight");
  graph->add_option("--format", g_args.format, "dot|graphml|json");
  graph->add_option("--rooms", g_args.rooms, "JSON object mapping device to room label");
  graph->add_option("--out", g_args.out, "Output file (default stdout)");

  ReportArgs r_args;
  auto* report = app.add_subcommand("report", "Movement histogram and per-device signal tables");
  report->add_option("dir", r_args.dir, "Analysis directory")->required();
  report->add_option("--out", r_args.out, "Output directory (default DIR/report)");
  report->add_option("--truth", r_args.truth, "Ground truth JSONL to score against");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // program name
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  Log log(err);
  try {
    if (*simulate) return cmd_simulate(sim_args, out, log);
    if (*analyze_cmd) return cmd_analyze(an_args, out, log);
    if (*metrics) return cmd_metrics(m_args, out, log);
    if (*graph) return cmd_graph(g_args, out, log);
    if (*report) return cmd_report(r_args, out, log);
  } catch (const InputError& e) {
    err << "fingertrace: error: " << e.what() << '\n';
    return kUsageError;
  } catch (const ConfigError& e) {
    err << "fingertrace: configuration error: " << e.what() << '\n';
    return kUsageError;
  } catch (const ArgumentError& e) {
    err << "fingertrace: error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "fingertrace: error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsageError;
}

}  // namespace fingertrace::cli
