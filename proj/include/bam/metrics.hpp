#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bam/event_log.hpp"
#include "bam/sim.hpp"

namespace bam {

struct Counts {
  std::int64_t arrivals = 0;
  std::int64_t accepted = 0;
  std::int64_t blocked = 0;
  std::int64_t preempted = 0;          // LSPs of this class torn down
  std::int64_t devolution_events = 0;  // slice moves suffered by this class
  std::int64_t devolved_lsps = 0;      // distinct LSPs devolved at least once
};

struct ClassStats {
  Counts counts;
  double utilization_pct = 0.0;  // own + borrowed over the class constraint;
                                 // may exceed 100 under sharing
  std::optional<double> block_rate_pct;          // absent when no arrivals
  std::optional<double> preempted_pct;           // of accepted LSPs
  std::optional<double> devolved_pct;            // of accepted LSPs
  double preemptions_per_hour = 0.0;
  double devolutions_per_hour = 0.0;
};

struct PhaseStats {
  std::map<ClassId, ClassStats> per_class;
  ClassStats aggregate;
};

struct LinkSummary {
  std::map<ClassId, ClassStats> per_class;
  ClassStats aggregate;                       // against the link bandwidth
  double mean_utilization_pct = 0.0;          // unweighted mean over classes
  std::optional<double> mean_block_rate_pct;  // unweighted mean over classes
  std::vector<PhaseStats> phases;
};

struct MetricsSummary {
  RunInfo info;
  std::map<LinkId, LinkSummary> links;
};

namespace detail {

// Walks the records that touch one link, maintaining per-class held
// bandwidth, and hands out (interval, held) integration steps plus the
// record itself. Devolutions re-attribute donors only, so held bandwidth
// per class is unaffected by them.
template <typename IntegrateFn, typename RecordFn>
void walk_link(const EventLog& log, LinkId link, IntegrateFn&& integrate, RecordFn&& on_record) {
  std::map<ClassId, Kbps> held;
  Tick prev = 0;
  for (const EventRecord& rec : log.records) {
    const bool touches = std::find(rec.links.begin(), rec.links.end(), link) != rec.links.end();
    if (rec.time > prev) {
      integrate(prev, rec.time, held);
      prev = rec.time;
    }
    if (!touches) continue;
    on_record(rec, held);
    switch (rec.kind) {
      case EventKind::Accept: held[rec.cls] += rec.bw; break;
      case EventKind::Release:
      case EventKind::Preemption: held[rec.cls] -= rec.bw; break;
      default: break;
    }
  }
  if (log.info.duration > prev) integrate(prev, log.info.duration, held);
}

inline double pct(double num, double den) { return den <= 0.0 ? 0.0 : 100.0 * num / den; }

}  // namespace detail

/// Time-weighted utilization over [from, to) as a percentage of the class
/// constraint, or of the link bandwidth when no class is given. Borrowed
/// bandwidth counts against the borrower's constraint, so values above 100
/// are possible (and reported as-is) under sharing.
inline double utilization(const EventLog& log, const Scenario& scenario, LinkId link,
                          std::optional<ClassId> cls, Tick from, Tick to) {
  const auto cfg_it = scenario.link_configs.find(link);
  if (cfg_it == scenario.link_configs.end()) throw ConfigError("unknown link " + to_string(link));
  Kbps denom_bw = 0;
  if (cls) {
    const auto& classes = cfg_it->second.classes;
    auto it = std::find_if(classes.begin(), classes.end(),
                           [&](const auto& c) { return c.id == *cls; });
    if (it == classes.end()) throw UnknownClass("class " + std::to_string(*cls));
    denom_bw = it->bc;
  } else {
    denom_bw = scenario.graph.bandwidth(link);
  }
  if (to <= from) return 0.0;

  long double integral = 0.0;  // kbps * ms
  detail::walk_link(
      log, link,
      [&](Tick a, Tick b, const std::map<ClassId, Kbps>& held) {
        const Tick lo = std::max(a, from), hi = std::min(b, to);
        if (hi <= lo) return;
        Kbps h = 0;
        if (cls) {
          auto it = held.find(*cls);
          h = it == held.end() ? 0 : it->second;
        } else {
          for (const auto& [c, v] : held) h += v;
        }
        integral += static_cast<long double>(h) * static_cast<long double>(hi - lo);
      },
      [](const EventRecord&, const std::map<ClassId, Kbps>&) {});

  const long double denom =
      static_cast<long double>(denom_bw) * static_cast<long double>(to - from);
  return denom <= 0 ? 0.0 : static_cast<double>(100.0L * integral / denom);
}

/// Blocked arrivals over total arrivals, in percent; empty when there were
/// no arrivals (never reported as 0/0).
inline std::optional<double> block_rate(const EventLog& log, LinkId link,
                                        std::optional<ClassId> cls) {
  std::int64_t arrivals = 0, blocked = 0;
  for (const EventRecord& rec : log.records) {
    if (std::find(rec.links.begin(), rec.links.end(), link) == rec.links.end()) continue;
    if (cls && rec.cls != *cls) continue;
    if (rec.kind == EventKind::Arrival) ++arrivals;
    if (rec.kind == EventKind::Block) ++blocked;
  }
  if (arrivals == 0) return std::nullopt;
  return 100.0 * static_cast<double>(blocked) / static_cast<double>(arrivals);
}

// Full summary for every configured link: whole-run and per-phase stats.
inline MetricsSummary build_metrics(const EventLog& log, const Scenario& scenario) {
  MetricsSummary summary;
  summary.info = log.info;

  const std::vector<Tick> ends = log.info.phase_ends;
  const std::size_t n_phases = std::max<std::size_t>(1, ends.size());
  auto phase_bounds = [&](std::size_t p) -> std::pair<Tick, Tick> {
    const Tick lo = p == 0 ? 0 : ends[p - 1];
    const Tick hi = ends.empty() ? log.info.duration : ends[p];
    return {lo, hi};
  };

  for (const auto& [link, cfg] : scenario.link_configs) {
    LinkSummary ls;
    ls.phases.resize(n_phases);

    const Kbps lb = scenario.graph.bandwidth(link);
    std::map<ClassId, Kbps> bc;
    for (const auto& c : cfg.classes) bc[c.id] = c.bc;

    // kbps * ms integrals, whole run and per phase
    std::map<ClassId, long double> integral;
    std::vector<std::map<ClassId, long double>> phase_integral(n_phases);
    std::map<ClassId, Counts> counts;
    std::vector<std::map<ClassId, Counts>> phase_counts(n_phases);
    std::map<ClassId, std::set<RequestId>> devolved_ids;
    std::vector<std::map<ClassId, std::set<RequestId>>> phase_devolved(n_phases);
    for (const auto& c : cfg.classes) {
      integral[c.id] = 0;
      counts[c.id] = {};
    }

    detail::walk_link(
        log, link,
        [&](Tick a, Tick b, const std::map<ClassId, Kbps>& held) {
          for (const auto& [c, h] : held) {
            if (h == 0) continue;
            integral[c] += static_cast<long double>(h) * static_cast<long double>(b - a);
            for (std::size_t p = 0; p < n_phases; ++p) {
              const auto [lo, hi] = phase_bounds(p);
              const Tick x = std::max(a, lo), y = std::min(b, hi);
              if (y > x)
                phase_integral[p][c] += static_cast<long double>(h) * static_cast<long double>(y - x);
            }
          }
        },
        [&](const EventRecord& rec, const std::map<ClassId, Kbps>&) {
          const auto p = static_cast<std::size_t>(rec.phase);
          Counts& total = counts[rec.cls];
          Counts& in_phase = phase_counts[p][rec.cls];
          switch (rec.kind) {
            case EventKind::Arrival: ++total.arrivals; ++in_phase.arrivals; break;
            case EventKind::Accept: ++total.accepted; ++in_phase.accepted; break;
            case EventKind::Block: ++total.blocked; ++in_phase.blocked; break;
            case EventKind::Preemption: ++total.preempted; ++in_phase.preempted; break;
            case EventKind::Devolution:
              ++total.devolution_events;
              ++in_phase.devolution_events;
              devolved_ids[rec.cls].insert(rec.request);
              phase_devolved[p][rec.cls].insert(rec.request);
              break;
            case EventKind::Release: break;
          }
        });

    const double run_hours = seconds_from_ticks(log.info.duration) / 3600.0;
    auto finalize = [&](const Counts& c, long double integ, Kbps denom_bw, Tick window,
                        std::int64_t n_devolved) {
      ClassStats s;
      s.counts = c;
      s.counts.devolved_lsps = n_devolved;
      const long double denom =
          static_cast<long double>(denom_bw) * static_cast<long double>(window);
      s.utilization_pct = denom <= 0 ? 0.0 : static_cast<double>(100.0L * integ / denom);
      if (c.arrivals > 0)
        s.block_rate_pct = detail::pct(static_cast<double>(c.blocked),
                                       static_cast<double>(c.arrivals));
      if (c.accepted > 0) {
        s.preempted_pct = detail::pct(static_cast<double>(c.preempted),
                                      static_cast<double>(c.accepted));
        s.devolved_pct = detail::pct(static_cast<double>(n_devolved),
                                     static_cast<double>(c.accepted));
      }
      if (run_hours > 0) {
        s.preemptions_per_hour = static_cast<double>(c.preempted) / run_hours;
        s.devolutions_per_hour = static_cast<double>(c.devolution_events) / run_hours;
      }
      return s;
    };

    Counts agg{};
    long double agg_integral = 0;
    double util_sum = 0, block_sum = 0;
    std::int64_t block_classes = 0, agg_devolved = 0;
    for (const auto& c : cfg.classes) {
      const Counts& cc = counts[c.id];
      const auto n_dev = static_cast<std::int64_t>(devolved_ids[c.id].size());
      ClassStats s = finalize(cc, integral[c.id], bc[c.id], log.info.duration, n_dev);
      util_sum += s.utilization_pct;
      if (s.block_rate_pct) {
        block_sum += *s.block_rate_pct;
        ++block_classes;
      }
      agg.arrivals += cc.arrivals;
      agg.accepted += cc.accepted;
      agg.blocked += cc.blocked;
      agg.preempted += cc.preempted;
      agg.devolution_events += cc.devolution_events;
      agg_devolved += n_dev;
      agg_integral += integral[c.id];
      ls.per_class[c.id] = std::move(s);
    }
    ls.aggregate = finalize(agg, agg_integral, lb, log.info.duration, agg_devolved);
    ls.mean_utilization_pct = cfg.classes.empty() ? 0.0 : util_sum / static_cast<double>(cfg.classes.size());
    if (block_classes == static_cast<std::int64_t>(cfg.classes.size()) && block_classes > 0)
      ls.mean_block_rate_pct = block_sum / static_cast<double>(block_classes);

    for (std::size_t p = 0; p < n_phases; ++p) {
      const auto [lo, hi] = phase_bounds(p);
      Counts pagg{};
      long double pagg_integral = 0;
      std::int64_t pagg_devolved = 0;
      for (const auto& c : cfg.classes) {
        const Counts& cc = phase_counts[p][c.id];
        const auto n_dev = static_cast<std::int64_t>(phase_devolved[p][c.id].size());
        ls.phases[p].per_class[c.id] =
            finalize(cc, phase_integral[p][c.id], bc[c.id], hi - lo, n_dev);
        pagg.arrivals += cc.arrivals;
        pagg.accepted += cc.accepted;
        pagg.blocked += cc.blocked;
        pagg.preempted += cc.preempted;
        pagg.devolution_events += cc.devolution_events;
        pagg_devolved += n_dev;
        pagg_integral += phase_integral[p][c.id];
      }
      ls.phases[p].aggregate = finalize(pagg, pagg_integral, lb, hi - lo, pagg_devolved);
    }

    summary.links[link] = std::move(ls);
  }
  return summary;
}

/// One plot-ready series row: a time bucket on one link.
struct BucketRow {
  Tick start = 0;
  Tick end = 0;
  std::map<ClassId, double> utilization_pct;
  double aggregate_utilization_pct = 0.0;
  std::map<ClassId, Counts> counts;
};

inline std::vector<BucketRow> bucket_series(const EventLog& log, const Scenario& scenario,
                                            LinkId link, Tick bucket) {
  if (bucket <= 0) throw InvalidScenario("bucket must be positive");
  const auto cfg_it = scenario.link_configs.find(link);
  if (cfg_it == scenario.link_configs.end()) throw ConfigError("unknown link " + to_string(link));
  const Kbps lb = scenario.graph.bandwidth(link);
  std::map<ClassId, Kbps> bc;
  for (const auto& c : cfg_it->second.classes) bc[c.id] = c.bc;

  const auto n = static_cast<std::size_t>((log.info.duration + bucket - 1) / bucket);
  std::vector<BucketRow> rows(n);
  std::vector<std::map<ClassId, long double>> integ(n);
  for (std::size_t i = 0; i < n; ++i) {
    rows[i].start = static_cast<Tick>(i) * bucket;
    rows[i].end = std::min(log.info.duration, rows[i].start + bucket);
  }

  detail::walk_link(
      log, link,
      [&](Tick a, Tick b, const std::map<ClassId, Kbps>& held) {
        for (std::size_t i = static_cast<std::size_t>(a / bucket); i < n; ++i) {
          const Tick lo = std::max(a, rows[i].start), hi = std::min(b, rows[i].end);
          if (hi <= lo) break;
          for (const auto& [c, h] : held)
            if (h != 0)
              integ[i][c] += static_cast<long double>(h) * static_cast<long double>(hi - lo);
        }
      },
      [&](const EventRecord& rec, const std::map<ClassId, Kbps>&) {
        const auto i = static_cast<std::size_t>(std::min<Tick>(rec.time / bucket,
                                                               static_cast<Tick>(n) - 1));
        Counts& c = rows[i].counts[rec.cls];
        switch (rec.kind) {
          case EventKind::Arrival: ++c.arrivals; break;
          case EventKind::Accept: ++c.accepted; break;
          case EventKind::Block: ++c.blocked; break;
          case EventKind::Preemption: ++c.preempted; break;
          case EventKind::Devolution: ++c.devolution_events; break;
          case EventKind::Release: break;
        }
      });

  for (std::size_t i = 0; i < n; ++i) {
    const Tick width = rows[i].end - rows[i].start;
    long double total = 0;
    for (const auto& [c, v] : integ[i]) {
      total += v;
      const auto it = bc.find(c);
      const long double denom = it == bc.end()
                                    ? 0
                                    : static_cast<long double>(it->second) *
                                          static_cast<long double>(width);
      rows[i].utilization_pct[c] = denom <= 0 ? 0.0 : static_cast<double>(100.0L * v / denom);
    }
    const long double denom =
        static_cast<long double>(lb) * static_cast<long double>(width);
    rows[i].aggregate_utilization_pct =
        denom <= 0 ? 0.0 : static_cast<double>(100.0L * total / denom);
  }
  return rows;
}

}  // namespace bam
