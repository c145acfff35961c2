#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bam/engine.hpp"
#include "bam/event_log.hpp"
#include "bam/metrics.hpp"
#include "bam/sim.hpp"

namespace bam {

enum class Verdict { Pass, Fail, NotEvaluated };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::NotEvaluated: return "not-evaluated";
  }
  return "?";
}

/// One requirement's checker output. A fail always carries at least one
/// counterexample.
struct ReportFragment {
  std::string requirement;
  Verdict verdict = Verdict::NotEvaluated;
  std::vector<std::pair<std::string, double>> stats;
  std::vector<std::string> counterexamples;
  std::string note;
};

struct ConformanceReport {
  ReportFragment non_discrimination;  // requirement 3
  ReportFragment proportionality;     // requirement 4
  ReportFragment exceptionality;      // requirement 5
};

// ---------------------------------------------------------------------------
// Requirement 5 - exceptionality. Replays an event log against independent
// flat-scan bookkeeping (no shared state with LinkEngine) and asserts that
// every block / devolution / preemption happened only when the triggering
// class's reachable free bandwidth fell short of its demand.

class LogReplayer {
 public:
  explicit LogReplayer(const Scenario& scenario) {
    for (const auto& [id, cfg] : scenario.link_configs)
      links_.emplace(id, LinkState{validate_link_config(cfg, scenario.graph.bandwidth(id)), {}});
  }

  /// Free bandwidth the class can legally reach on the link right now.
  Kbps available(LinkId link, ClassId cls) const {
    const LinkState& st = state(link);
    if (st.cfg.model() == Model::Frfs) return st.cfg.link_bandwidth() - used_total(st);
    Kbps avail = region_free(st, cls);
    for (const auto& donor : st.cfg.classes_by_priority()) {
      if (donor.id == cls) continue;
      if (st.cfg.model() == Model::Mam) continue;
      if (st.cfg.model() == Model::Rdm &&
          donor.priority <= st.cfg.klass(cls).priority)
        continue;
      avail += public_headroom(st, donor.id);
    }
    return avail;
  }

  ClassUsage usage(LinkId link, ClassId cls) const {
    const LinkState& st = state(link);
    ClassUsage u;
    for (const auto& a : st.allocs) {
      for (const auto& d : a.draws) {
        if (a.cls == cls && d.donor == cls) u.own_use += d.amount;
        else if (a.cls != cls && d.donor == cls) u.lent += d.amount;
        else if (a.cls == cls && d.donor != cls) u.borrowed += d.amount;
      }
    }
    return u;
  }

  // Replays the whole log; violations are collected, structural
  // impossibilities throw CorruptLog.
  void replay(const EventLog& log) {
    std::size_t i = 0;
    while (i < log.records.size()) {
      std::size_t j = i;
      while (j < log.records.size() && log.records[j].time == log.records[i].time) ++j;
      replay_cluster(log.records, i, j);
      i = j;
    }
  }

  const std::vector<std::string>& violations() const { return violations_; }
  std::size_t reclaim_events_checked() const { return reclaim_events_; }
  std::size_t blocks_checked() const { return blocks_; }

 private:
  struct Alloc {
    RequestId id;
    ClassId cls;
    std::vector<Draw> draws;
  };
  struct LinkState {
    ValidatedLinkConfig cfg;
    std::vector<Alloc> allocs;
  };

  const LinkState& state(LinkId link) const {
    auto it = links_.find(link);
    if (it == links_.end()) throw CorruptLog("record references unknown link " + to_string(link));
    return it->second;
  }
  LinkState& state(LinkId link) { return const_cast<LinkState&>(std::as_const(*this).state(link)); }

  static Kbps used_total(const LinkState& st) {
    Kbps t = 0;
    for (const auto& a : st.allocs)
      for (const auto& d : a.draws) t += d.amount;
    return t;
  }

  static Kbps region_used(const LinkState& st, ClassId region) {
    Kbps t = 0;
    for (const auto& a : st.allocs)
      for (const auto& d : a.draws)
        if (d.donor == region) t += d.amount;
    return t;
  }

  static Kbps region_free(const LinkState& st, ClassId region) {
    return st.cfg.klass(region).bc - region_used(st, region);
  }

  static Kbps lent_of(const LinkState& st, ClassId region) {
    Kbps t = 0;
    for (const auto& a : st.allocs)
      if (a.cls != region)
        for (const auto& d : a.draws)
          if (d.donor == region) t += d.amount;
    return t;
  }

  static Kbps public_headroom(const LinkState& st, ClassId donor) {
    const Kbps pub = st.cfg.public_part(donor);
    return std::min(pub - lent_of(st, donor), region_free(st, donor));
  }

  // Literal restatement of the donor rules: own region first, then legal
  // donors from the lowest priority upward.
  std::optional<std::vector<Draw>> plan(const LinkState& st, ClassId cls, Kbps demand,
                                        std::optional<ClassId> exclude) const {
    if (st.cfg.model() == Model::Frfs) {
      if (st.cfg.link_bandwidth() - used_total(st) < demand) return std::nullopt;
      return std::vector<Draw>{{cls, demand}};
    }
    std::vector<Draw> out;
    Kbps rem = demand;
    const Kbps own = std::min(rem, region_free(st, cls));
    if (own > 0) {
      out.push_back({cls, own});
      rem -= own;
    }
    for (const auto& donor : st.cfg.classes_by_priority()) {
      if (rem == 0) break;
      if (donor.id == cls) continue;
      if (exclude && donor.id == *exclude) continue;
      if (st.cfg.model() == Model::Mam) continue;
      if (st.cfg.model() == Model::Rdm &&
          donor.priority <= st.cfg.klass(cls).priority)
        continue;
      const Kbps take = std::min(rem, public_headroom(st, donor.id));
      if (take > 0) {
        out.push_back({donor.id, take});
        rem -= take;
      }
    }
    if (rem > 0) return std::nullopt;
    return out;
  }

  void apply_accept(const EventRecord& rec) {
    for (const LinkId& l : rec.links) {
      LinkState& st = state(l);
      auto p = plan(st, rec.cls, rec.bw, std::nullopt);
      if (!p)
        throw CorruptLog("accept of request " + std::to_string(rec.request) +
                         " does not fit on link " + to_string(l));
      st.allocs.push_back({rec.request, rec.cls, std::move(*p)});
    }
  }

  void apply_remove(const EventRecord& rec) {
    for (const LinkId& l : rec.links) {
      LinkState& st = state(l);
      auto it = std::find_if(st.allocs.begin(), st.allocs.end(),
                             [&](const Alloc& a) { return a.id == rec.request; });
      if (it == st.allocs.end())
        throw CorruptLog("record removes request " + std::to_string(rec.request) +
                         " not active on link " + to_string(l));
      st.allocs.erase(it);
    }
  }

  void apply_devolution(const EventRecord& rec, ClassId contested) {
    if (rec.links.size() != 1) throw CorruptLog("devolution record must name one link");
    LinkState& st = state(rec.links.front());
    auto it = std::find_if(st.allocs.begin(), st.allocs.end(),
                           [&](const Alloc& a) { return a.id == rec.request; });
    if (it == st.allocs.end()) throw CorruptLog("devolution of unknown request");
    auto draw = std::find_if(it->draws.begin(), it->draws.end(),
                             [&](const Draw& d) { return d.donor == contested; });
    if (draw == it->draws.end() || draw->amount < rec.bw)
      throw CorruptLog("devolution moves more than the victim borrowed");
    draw->amount -= rec.bw;
    if (draw->amount == 0) it->draws.erase(draw);
    auto rehomed = plan(st, it->cls, rec.bw, contested);
    if (!rehomed) throw CorruptLog("devolved slice has nowhere to go");
    for (const Draw& d : *rehomed) {
      auto existing = std::find_if(it->draws.begin(), it->draws.end(),
                                   [&](const Draw& e) { return e.donor == d.donor; });
      if (existing == it->draws.end()) it->draws.push_back(d);
      else existing->amount += d.amount;
    }
  }

  void note_violation(const EventRecord& rec, Kbps avail, Kbps demand) {
    std::ostringstream os;
    os << to_string(rec.kind) << " of request " << rec.request << " at t=" << rec.time
       << "ms: triggering class had " << avail << " kbps reachable for a demand of "
       << demand << " kbps";
    violations_.push_back(os.str());
  }

  void replay_cluster(const std::vector<EventRecord>& records, std::size_t begin,
                      std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const EventRecord& rec = records[i];
      switch (rec.kind) {
        case EventKind::Arrival:
          break;
        case EventKind::Accept:
          apply_accept(rec);
          break;
        case EventKind::Release:
          apply_remove(rec);
          break;
        case EventKind::Block: {
          ++blocks_;
          // Justified iff some link on the path could not serve the class.
          bool short_somewhere = false;
          Kbps best = 0;
          for (const LinkId& l : rec.links) {
            const Kbps avail = available(l, rec.cls);
            best = std::max(best, avail);
            if (avail < rec.bw) short_somewhere = true;
          }
          if (!short_somewhere) note_violation(rec, best, rec.bw);
          break;
        }
        case EventKind::Devolution:
        case EventKind::Preemption: {
          ++reclaim_events_;
          // The triggering demand is the accept that follows in the same
          // instant on an overlapping link; a block qualifies too, when a
          // later link of the path refused a request that reclaimed here.
          const EventRecord* trigger = nullptr;
          for (std::size_t j = i + 1; j < end && !trigger; ++j) {
            if (records[j].kind != EventKind::Accept && records[j].kind != EventKind::Block)
              continue;
            for (const LinkId& l : records[j].links)
              if (std::find(rec.links.begin(), rec.links.end(), l) != rec.links.end()) {
                trigger = &records[j];
                break;
              }
          }
          if (!trigger) {
            violations_.push_back(to_string(rec.kind) + " of request " +
                                  std::to_string(rec.request) + " at t=" +
                                  std::to_string(rec.time) + "ms has no triggering demand");
            if (rec.kind == EventKind::Preemption) apply_remove(rec);
            break;
          }
          // Before this reclaim the trigger must still have been short.
          Kbps worst = 0;
          bool justified = false;
          for (const LinkId& l : trigger->links) {
            if (std::find(rec.links.begin(), rec.links.end(), l) == rec.links.end()) continue;
            const Kbps avail = available(l, trigger->cls);
            worst = std::max(worst, avail);
            if (avail < trigger->bw) justified = true;
          }
          if (!justified) note_violation(rec, worst, trigger->bw);
          if (rec.kind == EventKind::Preemption) {
            apply_remove(rec);
          } else {
            apply_devolution(rec, trigger->cls);
          }
          break;
        }
      }
    }
  }

  std::map<LinkId, LinkState> links_;
  std::vector<std::string> violations_;
  std::size_t reclaim_events_ = 0;
  std::size_t blocks_ = 0;
};

inline ReportFragment check_exceptionality(const EventLog& log, const Scenario& scenario) {
  ReportFragment frag;
  frag.requirement = "exceptionality";
  LogReplayer replayer(scenario);
  replayer.replay(log);
  frag.stats.emplace_back("blocks_checked", static_cast<double>(replayer.blocks_checked()));
  frag.stats.emplace_back("reclaim_events_checked",
                          static_cast<double>(replayer.reclaim_events_checked()));
  frag.stats.emplace_back("violations", static_cast<double>(replayer.violations().size()));
  frag.counterexamples = replayer.violations();
  frag.verdict = replayer.violations().empty() ? Verdict::Pass : Verdict::Fail;
  return frag;
}

// ---------------------------------------------------------------------------
// Requirement 3 - non-discrimination. Metamorphic replay: at sampled
// decision points the same (class, demand) is re-issued under a fresh
// request/user identity and must receive the byte-identical decision.

struct TraceOp {
  bool is_admit = true;
  LspRequest req;        // admits
  RequestId release_of = 0;  // releases
};

/// Derives the single-link op sequence a log implies for `link`.
inline std::vector<TraceOp> link_trace(const EventLog& log, LinkId link) {
  std::vector<TraceOp> ops;
  for (const EventRecord& rec : log.records) {
    if (std::find(rec.links.begin(), rec.links.end(), link) == rec.links.end()) continue;
    switch (rec.kind) {
      case EventKind::Accept:
      case EventKind::Block: {
        LspRequest req;
        req.id = rec.request;
        req.user = "replayed-" + std::to_string(rec.request);
        req.cls = rec.cls;
        req.demand = rec.bw;
        req.arrival = rec.time;
        req.holding = 1;
        ops.push_back({true, std::move(req), 0});
        break;
      }
      case EventKind::Release:
        ops.push_back({false, {}, rec.request});
        break;
      default:
        break;  // arrivals are implicit; reclaims reproduce themselves
    }
  }
  return ops;
}

template <typename Engine>
inline ReportFragment check_non_discrimination(Engine engine, const std::vector<TraceOp>& trace,
                                               std::size_t probe_budget) {
  ReportFragment frag;
  frag.requirement = "non-discrimination";

  std::size_t admits = 0;
  for (const auto& op : trace)
    if (op.is_admit) ++admits;
  const std::size_t stride =
      probe_budget == 0 ? 0 : std::max<std::size_t>(1, admits / std::max<std::size_t>(1, probe_budget));

  std::size_t probes = 0, mismatches = 0, admit_index = 0;
  for (const auto& op : trace) {
    if (!op.is_admit) {
      engine.release(op.release_of);
      continue;
    }
    if (stride > 0 && admit_index % stride == 0 && probes < probe_budget) {
      Engine original = engine;
      Engine relabeled = engine;
      LspRequest twin = op.req;
      twin.id = op.req.id + 0x80000000ULL;
      twin.user = "someone-else-" + std::to_string(op.req.id);
      const AdmitDecision a = original.admit(op.req);
      const AdmitDecision b = relabeled.admit(twin);
      ++probes;
      if (to_string(a) != to_string(b)) {
        ++mismatches;
        if (frag.counterexamples.size() < 8)
          frag.counterexamples.push_back(
              "request " + std::to_string(op.req.id) + ": " + to_string(a) +
              " vs relabeled twin: " + to_string(b));
      }
    }
    ++admit_index;
    engine.admit(op.req);
  }

  frag.stats.emplace_back("probes", static_cast<double>(probes));
  frag.stats.emplace_back("mismatches", static_cast<double>(mismatches));
  frag.verdict = mismatches == 0 ? Verdict::Pass : Verdict::Fail;
  return frag;
}

// ---------------------------------------------------------------------------
// Requirement 4 - proportionality. Compares a class-aware run against the
// FRFS baseline produced from the same workload trace: equivalent mean
// utilization (within a band) and no more blocking.

inline constexpr double kDefaultUtilizationBandPp = 3.0;

inline ReportFragment compare_proportionality(const EventLog& log_bam, const EventLog& log_frfs,
                                              const Scenario& scenario,
                                              double utilization_band_pp = kDefaultUtilizationBandPp) {
  ReportFragment frag;
  frag.requirement = "proportionality";

  auto arrivals = [](const EventLog& log) {
    std::vector<std::tuple<Tick, RequestId, ClassId, Kbps>> a;
    for (const auto& rec : log.records)
      if (rec.kind == EventKind::Arrival) a.emplace_back(rec.time, rec.request, rec.cls, rec.bw);
    return a;
  };
  if (arrivals(log_bam) != arrivals(log_frfs))
    throw TraceMismatch("the two logs were not produced from the same workload trace");

  MetricsSummary a = build_metrics(log_bam, scenario);
  MetricsSummary b = build_metrics(log_frfs, scenario);
  const LinkSummary& la = a.links.at(scenario.report_link);
  const LinkSummary& lb = b.links.at(scenario.report_link);

  const double util_a = la.mean_utilization_pct;
  const double util_b = lb.mean_utilization_pct;
  const double block_a = la.mean_block_rate_pct.value_or(0.0);
  const double block_b = lb.mean_block_rate_pct.value_or(0.0);

  const bool util_ok = std::abs(util_a - util_b) <= utilization_band_pp;
  const bool block_ok = block_a <= block_b;

  frag.stats.emplace_back("mean_utilization_pct", util_a);
  frag.stats.emplace_back("baseline_mean_utilization_pct", util_b);
  frag.stats.emplace_back("mean_block_rate_pct", block_a);
  frag.stats.emplace_back("baseline_mean_block_rate_pct", block_b);
  frag.stats.emplace_back("utilization_band_pp", utilization_band_pp);
  frag.stats.emplace_back("utilization_within_band", util_ok ? 1.0 : 0.0);
  frag.stats.emplace_back("blocking_no_worse", block_ok ? 1.0 : 0.0);

  if (util_ok && block_ok) {
    frag.verdict = Verdict::Pass;
  } else {
    frag.verdict = Verdict::Fail;
    std::ostringstream os;
    os << "mean utilization " << util_a << "% vs baseline " << util_b << "%, mean block rate "
       << block_a << "% vs baseline " << block_b << "%";
    frag.counterexamples.push_back(os.str());
  }
  return frag;
}

}  // namespace bam
