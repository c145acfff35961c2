#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bam/conformance.hpp"
#include "bam/event_log.hpp"
#include "bam/metrics.hpp"

namespace bam {

// All exporters are byte-stable for fixed inputs: fields are emitted in a
// fixed order and floating values with a fixed precision of two decimals.

namespace detail {

inline std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string fixed2_or_na(const std::optional<double>& v) {
  return v ? fixed2(*v) : "n.a.";
}

inline std::string join_links(const std::vector<LinkId>& links) {
  std::string s;
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (i) s += "|";
    s += to_string(links[i]);
  }
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Events file, one record per line. Schema v1:
//   time_ms,kind,request,class,bw_kbps,links,phase
// `links` is the pipe-joined path (a single link for devolution records);
// `bw_kbps` is the LSP demand, or the moved slice for devolutions.

inline constexpr const char* kEventsSchemaVersion = "bambroker-events v1";

inline void write_events(std::ostream& os, const EventLog& log) {
  os << "# " << kEventsSchemaVersion << "\n";
  os << "# scenario=" << log.info.scenario << " model=" << log.info.model
     << " seed=" << log.info.seed << " rng=" << log.info.rng
     << " duration_ms=" << log.info.duration << "\n";
  os << "# phase_ends_ms=";
  for (std::size_t i = 0; i < log.info.phase_ends.size(); ++i)
    os << (i ? "|" : "") << log.info.phase_ends[i];
  os << "\n";
  os << "time_ms,kind,request,class,bw_kbps,links,phase\n";
  for (const EventRecord& r : log.records) {
    os << r.time << ',' << to_string(r.kind) << ',' << r.request << ',' << r.cls << ','
       << r.bw << ',' << detail::join_links(r.links) << ',' << r.phase << "\n";
  }
}

inline EventLog read_events(std::istream& is, const std::string& where = "events") {
  EventLog log;
  std::string line;
  std::size_t lineno = 0;
  bool saw_header = false;
  auto fail = [&](const std::string& msg) {
    throw ParseError(where + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string token;
      while (hs >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = token.substr(0, eq), value = token.substr(eq + 1);
        if (key == "scenario") log.info.scenario = value;
        else if (key == "model") log.info.model = value;
        else if (key == "seed") log.info.seed = std::stoull(value);
        else if (key == "rng") log.info.rng = value;
        else if (key == "duration_ms") log.info.duration = std::stoll(value);
        else if (key == "phase_ends_ms") {
          std::istringstream ps(value);
          std::string part;
          while (std::getline(ps, part, '|'))
            if (!part.empty()) log.info.phase_ends.push_back(std::stoll(part));
        }
      }
      continue;
    }
    if (!saw_header && line.rfind("time_ms,", 0) == 0) {
      saw_header = true;
      continue;
    }
    std::vector<std::string> cols;
    std::istringstream ls(line);
    std::string col;
    while (std::getline(ls, col, ',')) cols.push_back(col);
    if (cols.size() != 7) fail("expected 7 columns, got " + std::to_string(cols.size()));
    EventRecord rec;
    try {
      rec.time = std::stoll(cols[0]);
      if (!event_kind_from_string(cols[1], rec.kind)) fail("unknown kind '" + cols[1] + "'");
      rec.request = std::stoull(cols[2]);
      rec.cls = std::stoi(cols[3]);
      rec.bw = std::stoll(cols[4]);
      std::istringstream links(cols[5]);
      std::string part;
      while (std::getline(links, part, '|')) {
        const auto dash = part.find('-');
        if (dash == std::string::npos) fail("bad link '" + part + "'");
        rec.links.push_back({std::stoi(part.substr(0, dash)), std::stoi(part.substr(dash + 1))});
      }
      rec.phase = std::stoi(cols[6]);
    } catch (const std::exception& e) {
      fail(e.what());
    }
    log.records.push_back(std::move(rec));
  }
  return log;
}

// ---------------------------------------------------------------------------
// Metrics exporters: delimited table and structured record.

inline void write_metrics_csv(std::ostream& os, const MetricsSummary& m) {
  os << "link,phase,class,arrivals,accepted,blocked,preempted,devolution_events,"
        "devolved_lsps,utilization_pct,block_rate_pct,preempted_pct,devolved_pct,"
        "preemptions_per_hour,devolutions_per_hour\n";
  auto row = [&](const std::string& link, const std::string& phase, const std::string& cls,
                 const ClassStats& s) {
    os << link << ',' << phase << ',' << cls << ',' << s.counts.arrivals << ','
       << s.counts.accepted << ',' << s.counts.blocked << ',' << s.counts.preempted << ','
       << s.counts.devolution_events << ',' << s.counts.devolved_lsps << ','
       << detail::fixed2(s.utilization_pct) << ',' << detail::fixed2_or_na(s.block_rate_pct)
       << ',' << detail::fixed2_or_na(s.preempted_pct) << ','
       << detail::fixed2_or_na(s.devolved_pct) << ',' << detail::fixed2(s.preemptions_per_hour)
       << ',' << detail::fixed2(s.devolutions_per_hour) << "\n";
  };
  for (const auto& [link, ls] : m.links) {
    const std::string lk = to_string(link);
    for (const auto& [cls, s] : ls.per_class) row(lk, "all", std::to_string(cls), s);
    row(lk, "all", "aggregate", ls.aggregate);
    for (std::size_t p = 0; p < ls.phases.size(); ++p) {
      for (const auto& [cls, s] : ls.phases[p].per_class)
        row(lk, std::to_string(p + 1), std::to_string(cls), s);
      row(lk, std::to_string(p + 1), "aggregate", ls.phases[p].aggregate);
    }
  }
}

inline nlohmann::json stats_json(const ClassStats& s) {
  using nlohmann::json;
  json j;
  j["arrivals"] = s.counts.arrivals;
  j["accepted"] = s.counts.accepted;
  j["blocked"] = s.counts.blocked;
  j["preempted"] = s.counts.preempted;
  j["devolution_events"] = s.counts.devolution_events;
  j["devolved_lsps"] = s.counts.devolved_lsps;
  j["utilization_pct"] = detail::fixed2(s.utilization_pct);
  j["block_rate_pct"] = detail::fixed2_or_na(s.block_rate_pct);
  j["preempted_pct"] = detail::fixed2_or_na(s.preempted_pct);
  j["devolved_pct"] = detail::fixed2_or_na(s.devolved_pct);
  j["preemptions_per_hour"] = detail::fixed2(s.preemptions_per_hour);
  j["devolutions_per_hour"] = detail::fixed2(s.devolutions_per_hour);
  return j;
}

inline nlohmann::json metrics_json(const MetricsSummary& m) {
  using nlohmann::json;
  json doc;
  doc["scenario"] = m.info.scenario;
  doc["model"] = m.info.model;
  doc["seed"] = m.info.seed;
  doc["rng"] = m.info.rng;
  doc["duration_ms"] = m.info.duration;
  json links = json::object();
  for (const auto& [link, ls] : m.links) {
    json l;
    json classes = json::object();
    for (const auto& [cls, s] : ls.per_class) classes[std::to_string(cls)] = stats_json(s);
    l["classes"] = std::move(classes);
    l["aggregate"] = stats_json(ls.aggregate);
    l["mean_utilization_pct"] = detail::fixed2(ls.mean_utilization_pct);
    l["mean_block_rate_pct"] = detail::fixed2_or_na(ls.mean_block_rate_pct);
    json phases = json::array();
    for (const auto& ph : ls.phases) {
      json p;
      json pc = json::object();
      for (const auto& [cls, s] : ph.per_class) pc[std::to_string(cls)] = stats_json(s);
      p["classes"] = std::move(pc);
      p["aggregate"] = stats_json(ph.aggregate);
      phases.push_back(std::move(p));
    }
    l["phases"] = std::move(phases);
    links[to_string(link)] = std::move(l);
  }
  doc["links"] = std::move(links);
  return doc;
}

// Comparison table across models on the report link, one column per run:
// utilization per class, mean, block rate per class, mean.
inline void write_summary_table(std::ostream& os,
                                const std::vector<std::pair<std::string, LinkSummary>>& columns) {
  os << "parameter";
  for (const auto& [label, ls] : columns) {
    (void)ls;
    os << ',' << label;
  }
  os << "\n";
  if (columns.empty()) return;
  std::vector<ClassId> classes;
  for (const auto& [cls, s] : columns.front().second.per_class) {
    (void)s;
    classes.push_back(cls);
  }
  for (ClassId cls : classes) {
    os << "utilization_tc" << cls << "_pct";
    for (const auto& [label, ls] : columns)
      os << ',' << detail::fixed2(ls.per_class.at(cls).utilization_pct);
    os << "\n";
  }
  os << "mean_utilization_pct";
  for (const auto& [label, ls] : columns) os << ',' << detail::fixed2(ls.mean_utilization_pct);
  os << "\n";
  for (ClassId cls : classes) {
    os << "block_rate_tc" << cls << "_pct";
    for (const auto& [label, ls] : columns)
      os << ',' << detail::fixed2_or_na(ls.per_class.at(cls).block_rate_pct);
    os << "\n";
  }
  os << "mean_block_rate_pct";
  for (const auto& [label, ls] : columns) os << ',' << detail::fixed2_or_na(ls.mean_block_rate_pct);
  os << "\n";
}

inline void write_series_csv(std::ostream& os, const std::vector<BucketRow>& rows) {
  os << "bucket_start_s,bucket_end_s,class,utilization_pct,arrivals,accepted,blocked,"
        "preempted,devolution_events\n";
  for (const auto& r : rows) {
    for (const auto& [cls, util] : r.utilization_pct) {
      Counts c;
      auto it = r.counts.find(cls);
      if (it != r.counts.end()) c = it->second;
      os << detail::fixed2(seconds_from_ticks(r.start)) << ','
         << detail::fixed2(seconds_from_ticks(r.end)) << ',' << cls << ','
         << detail::fixed2(util) << ',' << c.arrivals << ',' << c.accepted << ',' << c.blocked
         << ',' << c.preempted << ',' << c.devolution_events << "\n";
    }
    os << detail::fixed2(seconds_from_ticks(r.start)) << ','
       << detail::fixed2(seconds_from_ticks(r.end)) << ",aggregate,"
       << detail::fixed2(r.aggregate_utilization_pct) << ",,,,,\n";
  }
}

// ---------------------------------------------------------------------------
// Conformance report.

inline nlohmann::json fragment_json(const ReportFragment& f) {
  using nlohmann::json;
  json j;
  j["requirement"] = f.requirement;
  j["verdict"] = to_string(f.verdict);
  json stats = json::object();
  for (const auto& [k, v] : f.stats) stats[k] = detail::fixed2(v);
  j["stats"] = std::move(stats);
  j["counterexamples"] = f.counterexamples;
  if (!f.note.empty()) j["note"] = f.note;
  return j;
}

inline nlohmann::json conformance_json(const ConformanceReport& r) {
  using nlohmann::json;
  json doc;
  doc["requirement_1_legitimate_purpose"] =
      "structural: class constraints maintain and protect per-class bandwidth; "
      "no runtime checker";
  doc["requirement_2_transparency"] =
      "structural: satisfied by the transparency export of the configuration; "
      "no runtime checker";
  doc["requirement_3_non_discrimination"] = fragment_json(r.non_discrimination);
  doc["requirement_4_proportionality"] = fragment_json(r.proportionality);
  doc["requirement_5_exceptionality"] = fragment_json(r.exceptionality);
  return doc;
}

inline std::string conformance_text(const ConformanceReport& r) {
  std::ostringstream os;
  auto line = [&](const ReportFragment& f) {
    os << "  [" << to_string(f.verdict) << "] " << f.requirement;
    for (const auto& [k, v] : f.stats) os << ' ' << k << '=' << detail::fixed2(v);
    os << "\n";
    for (const auto& c : f.counterexamples) os << "      counterexample: " << c << "\n";
    if (!f.note.empty()) os << "      note: " << f.note << "\n";
  };
  os << "ITM conformance report\n";
  os << "  [structural] legitimate management purpose: class constraints maintain and\n"
        "      protect per-class bandwidth; documented, not computed\n";
  os << "  [structural] transparency: satisfied by the transparency export\n";
  line(r.non_discrimination);
  line(r.proportionality);
  line(r.exceptionality);
  return os.str();
}

// ---------------------------------------------------------------------------
// Small file helpers.

inline void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << contents;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace bam
