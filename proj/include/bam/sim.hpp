#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "bam/broker.hpp"
#include "bam/core.hpp"
#include "bam/event_log.hpp"
#include "bam/rng.hpp"

namespace bam {

/// Per-class mean arrival rates (requests/s) for one phase.
struct PhaseProfile {
  Tick duration = 0;
  std::map<ClassId, double> arrival_rate;  // lambda_k, requests per second
};

/// Workload shape: where LSPs go, how big they are, how long they live.
struct Workload {
  SwitchId source = 0;
  SwitchId destination = 0;
  Kbps demand_low = 0;
  Kbps demand_high = 0;
  double mean_holding_s = 0.0;
  std::vector<PhaseProfile> phases;
  std::map<ClassId, std::vector<std::string>> users;  // user labels per class
};

/// Everything one run needs: topology, per-link configs, paths, workload.
struct Scenario {
  std::string name;
  std::string description;
  NetworkGraph graph;
  PathTable paths;
  std::map<LinkId, LinkBamConfig> link_configs;
  Workload workload;
  Tick duration = 0;
  std::uint64_t seed = 0;
  LinkId report_link;  // the link summary tables focus on

  std::vector<Tick> phase_ends() const {
    std::vector<Tick> ends;
    Tick acc = 0;
    for (const auto& p : workload.phases) {
      acc += p.duration;
      ends.push_back(acc);
    }
    return ends;
  }

  void validate() const {
    if (duration <= 0) throw InvalidScenario("duration must be positive");
    if (workload.phases.empty()) throw InvalidScenario("no workload phases");
    Tick total = 0;
    for (const auto& p : workload.phases) {
      if (p.duration <= 0) throw InvalidScenario("phase duration must be positive");
      for (const auto& [cls, rate] : p.arrival_rate)
        if (rate < 0) throw InvalidScenario("negative arrival rate for class " + std::to_string(cls));
      total += p.duration;
    }
    if (total != duration)
      throw InvalidScenario("phase durations sum to " + std::to_string(total) +
                            " ms, expected " + std::to_string(duration));
    if (workload.demand_low <= 0 || workload.demand_low > workload.demand_high)
      throw InvalidScenario("demand distribution bounds must satisfy 0 < low <= high");
    if (workload.mean_holding_s <= 0) throw InvalidScenario("mean holding time must be positive");
    if (!paths.find(workload.source, workload.destination))
      throw NoPath("workload source/destination pair has no path");
    for (const auto& [id, cfg] : link_configs)
      validate_link_config(cfg, graph.bandwidth(id));
  }

  Scenario with_model(Model m) const {
    Scenario s = *this;
    for (auto& [id, cfg] : s.link_configs) {
      (void)id;
      cfg.model = m;
    }
    return s;
  }
};

// Workload generation. Each class draws from its own seed-derived stream,
// so adding a class leaves other classes' request sequences untouched.
// Arrivals follow a piecewise-homogeneous Poisson process: inter-arrival
// draws use the current phase's rate and restart at phase boundaries
// (memorylessness makes the restart exact).
inline std::vector<LspRequest> generate_workload(const Scenario& scenario) {
  const Workload& w = scenario.workload;
  std::vector<Tick> ends = scenario.phase_ends();

  struct Pending {
    double time_s;
    ClassId cls;
    Kbps demand;
    Tick holding;
    std::size_t class_index;  // per-class arrival counter, for user labels
  };
  std::vector<Pending> all;

  std::vector<ClassId> class_ids;
  for (const auto& p : w.phases)
    for (const auto& [cls, rate] : p.arrival_rate) {
      (void)rate;
      if (std::find(class_ids.begin(), class_ids.end(), cls) == class_ids.end())
        class_ids.push_back(cls);
    }
  std::sort(class_ids.begin(), class_ids.end());

  for (ClassId cls : class_ids) {
    RngStream stream(scenario.seed, static_cast<std::uint64_t>(cls));
    double t = 0.0;
    std::size_t phase = 0;
    std::size_t count = 0;
    while (phase < w.phases.size()) {
      const double phase_end = seconds_from_ticks(ends[phase]);
      auto it = w.phases[phase].arrival_rate.find(cls);
      const double rate = it == w.phases[phase].arrival_rate.end() ? 0.0 : it->second;
      if (rate <= 0.0) {
        t = phase_end;
        ++phase;
        continue;
      }
      const double next = t + stream.exponential(1.0 / rate);
      if (next >= phase_end) {
        t = phase_end;
        ++phase;
        continue;
      }
      t = next;
      const Kbps demand = stream.uniform_int(w.demand_low, w.demand_high);
      const Tick holding =
          std::max<Tick>(1, ticks_from_seconds(stream.exponential(w.mean_holding_s)));
      all.push_back({t, cls, demand, holding, count++});
    }
  }

  // Merge the class streams into one arrival order; ids follow that order.
  std::stable_sort(all.begin(), all.end(), [](const Pending& a, const Pending& b) {
    if (a.time_s != b.time_s) return a.time_s < b.time_s;
    return a.cls < b.cls;
  });

  std::vector<LspRequest> out;
  out.reserve(all.size());
  RequestId next_id = 1;
  for (const auto& p : all) {
    const Tick at = ticks_from_seconds(p.time_s);
    if (at >= scenario.duration) continue;
    LspRequest req;
    req.id = next_id++;
    req.cls = p.cls;
    req.demand = p.demand;
    req.source = w.source;
    req.destination = w.destination;
    req.arrival = at;
    req.holding = p.holding;
    auto it = w.users.find(p.cls);
    if (it != w.users.end() && !it->second.empty())
      req.user = it->second[p.class_index % it->second.size()];
    else
      req.user = "user-tc" + std::to_string(p.cls) + "-" + std::to_string(p.class_index);
    out.push_back(std::move(req));
  }
  return out;
}

struct SimResult {
  EventLog log;
  Broker broker;  // final state, still inspectable
};

// Serialized event loop over one scenario: feeds generated arrivals through
// the broker, expires LSPs, and logs everything. Identical (scenario, seed)
// pairs produce identical logs.
class Simulator {
 public:
  explicit Simulator(bool validate_each_event = false)
      : validate_each_event_(validate_each_event) {}

  SimResult run(const Scenario& scenario) const {
    scenario.validate();

    std::map<LinkId, ValidatedLinkConfig> validated;
    for (const auto& [id, cfg] : scenario.link_configs)
      validated.emplace(id, validate_link_config(cfg, scenario.graph.bandwidth(id)));
    Broker broker(scenario.graph, scenario.paths, std::move(validated));

    EventLog log;
    log.info.scenario = scenario.name;
    log.info.model = model_label(scenario);
    log.info.seed = scenario.seed;
    log.info.rng = RngStream::name();
    log.info.duration = scenario.duration;
    log.info.phase_ends = scenario.phase_ends();

    const std::vector<LspRequest> arrivals = generate_workload(scenario);

    // Event queue keyed by (time, sequence); arrivals are seeded first, so
    // a release scheduled later never jumps ahead of a same-tick arrival.
    struct QueuedEvent {
      Tick time;
      std::uint64_t seq;
      bool is_release;
      std::size_t arrival_index;  // into `arrivals` for arrivals
      RequestId release_of;
      bool operator>(const QueuedEvent& o) const {
        if (time != o.time) return time > o.time;
        return seq > o.seq;
      }
    };
    std::priority_queue<QueuedEvent, std::vector<QueuedEvent>, std::greater<>> queue;
    std::uint64_t seq = 0;
    for (std::size_t i = 0; i < arrivals.size(); ++i)
      queue.push({arrivals[i].arrival, seq++, false, i, 0});

    std::map<RequestId, std::pair<ClassId, Kbps>> live;  // for release records

    while (!queue.empty()) {
      const QueuedEvent ev = queue.top();
      queue.pop();
      if (ev.time >= scenario.duration) break;
      const int phase = phase_at(log.info.phase_ends, ev.time);

      if (ev.is_release) {
        if (!broker.active(ev.release_of)) continue;  // preempted earlier
        const auto [cls, demand] = live[ev.release_of];
        const auto* links = broker.path_of(ev.release_of);
        log.records.push_back(
            {ev.time, EventKind::Release, ev.release_of, cls, demand, *links, phase});
        broker.teardown_path(ev.release_of);
        live.erase(ev.release_of);
      } else {
        const LspRequest& req = arrivals[ev.arrival_index];
        const auto* path = broker.paths().find(req.source, req.destination);
        log.records.push_back(
            {ev.time, EventKind::Arrival, req.id, req.cls, req.demand, *path, phase});
        PathDecision d = broker.admit_path(req);
        for (const PathReclaim& r : d.reclaims) {
          if (r.event.kind == ReclaimEvent::Kind::Preemption) {
            const auto [vcls, vdemand] = live[r.event.victim];
            log.records.push_back({ev.time, EventKind::Preemption, r.event.victim, vcls,
                                   vdemand, r.victim_links, phase});
            live.erase(r.event.victim);
          } else {
            log.records.push_back({ev.time, EventKind::Devolution, r.event.victim,
                                   r.event.victim_class, r.event.freed,
                                   {r.link}, phase});
          }
        }
        if (d.accepted) {
          log.records.push_back(
              {ev.time, EventKind::Accept, req.id, req.cls, req.demand, *path, phase});
          live[req.id] = {req.cls, req.demand};
          queue.push({ev.time + req.holding, seq++, true, 0, req.id});
        } else {
          log.records.push_back(
              {ev.time, EventKind::Block, req.id, req.cls, req.demand, *path, phase});
        }
      }
      if (validate_each_event_) broker.validate();
    }

    // Flush LSPs still active at the halting time so every accept has a
    // matching terminator record.
    const int last_phase = phase_at(log.info.phase_ends, scenario.duration - 1);
    for (RequestId id : broker.active_requests()) {
      const auto [cls, demand] = live[id];
      log.records.push_back({scenario.duration, EventKind::Release, id, cls, demand,
                             *broker.path_of(id), last_phase});
      broker.teardown_path(id);
    }

    return {std::move(log), std::move(broker)};
  }

 private:
  static std::string model_label(const Scenario& scenario) {
    std::optional<Model> single;
    for (const auto& [id, cfg] : scenario.link_configs) {
      (void)id;
      if (single && *single != cfg.model) return "mixed";
      single = cfg.model;
    }
    return single ? to_string(*single) : "none";
  }

  bool validate_each_event_;
};

}  // namespace bam
