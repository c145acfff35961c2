#pragma once

// Shared scenario/config builders for the test suites. Bandwidth figures are
// in Mbps at this level, mirroring how configs are written.

#include <map>
#include <string>
#include <vector>

#include "bam/core.hpp"
#include "bam/sim.hpp"

namespace testbed {

using namespace bam;

inline TrafficClassConfig tc(ClassId id, int priority, double bc_mbps, double sharing = 1.0) {
  return {id, priority, kbps_from_mbps(bc_mbps), sharing};
}

// The single-link reference configuration: 1000 Mbps, three classes with
// constraints 25/35/40% and TC2 > TC1 > TC0 priorities.
inline LinkBamConfig reference_link(Model model, double sharing = 1.0) {
  LinkBamConfig cfg;
  cfg.link = {0, 1};
  cfg.model = model;
  cfg.classes = {tc(0, 0, 250, sharing), tc(1, 1, 350, sharing), tc(2, 2, 400, sharing)};
  return cfg;
}

inline ValidatedLinkConfig validated_reference(Model model, double sharing = 1.0) {
  return validate_link_config(reference_link(model, sharing), kbps_from_mbps(1000));
}

inline LspRequest request(RequestId id, ClassId cls, double demand_mbps,
                          const std::string& user = "") {
  LspRequest r;
  r.id = id;
  r.user = user.empty() ? "user-" + std::to_string(id) : user;
  r.cls = cls;
  r.demand = kbps_from_mbps(demand_mbps);
  r.source = 0;
  r.destination = 1;
  r.holding = 1000;
  return r;
}

// Two switches, one directed link 0->1 carrying the reference class table.
inline Scenario single_link_scenario(Model model,
                                     const std::vector<std::map<ClassId, double>>& phase_rates,
                                     Tick phase_duration, std::uint64_t seed,
                                     double sharing = 1.0) {
  Scenario s;
  s.name = "test";
  s.graph.add_switch("sw0");
  s.graph.add_switch("sw1");
  s.graph.add_link({0, 1}, kbps_from_mbps(1000));
  s.paths = PathTable::shortest_hop(s.graph);
  s.link_configs[{0, 1}] = reference_link(model, sharing);
  s.workload.source = 0;
  s.workload.destination = 1;
  s.workload.demand_low = kbps_from_mbps(5);
  s.workload.demand_high = kbps_from_mbps(15);
  s.workload.mean_holding_s = 300;
  for (const auto& rates : phase_rates) {
    PhaseProfile p;
    p.duration = phase_duration;
    p.arrival_rate = rates;
    s.workload.phases.push_back(p);
  }
  s.duration = static_cast<Tick>(phase_rates.size()) * phase_duration;
  s.seed = seed;
  s.report_link = {0, 1};
  return s;
}

// Arrival rates hitting an offered load of `multiplier` x BC per class for
// the reference constraints (mean demand 10 Mbps, mean holding 300 s).
inline std::map<ClassId, double> reference_rates(double multiplier) {
  return {{0, multiplier * 250.0 / 3000.0},
          {1, multiplier * 350.0 / 3000.0},
          {2, multiplier * 400.0 / 3000.0}};
}

}  // namespace testbed
