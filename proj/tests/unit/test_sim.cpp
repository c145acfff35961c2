#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>

#include "bam/sim.hpp"
#include "support/builders.hpp"

using namespace bam;

namespace {

void check_log_invariants(const EventLog& log) {
  Tick prev = 0;
  std::set<RequestId> arrived;
  std::map<RequestId, int> open;  // accepted, waiting for release/preemption
  for (const auto& rec : log.records) {
    REQUIRE(rec.time >= prev);
    prev = rec.time;
    REQUIRE(rec.time <= log.info.duration);
    switch (rec.kind) {
      case EventKind::Arrival:
        REQUIRE(arrived.insert(rec.request).second);  // exactly one arrival
        break;
      case EventKind::Accept:
        REQUIRE(++open[rec.request] == 1);
        break;
      case EventKind::Release:
      case EventKind::Preemption:
        REQUIRE(--open[rec.request] == 0);
        break;
      default:
        break;
    }
  }
  for (const auto& [id, n] : open) {
    (void)id;
    REQUIRE(n == 0);  // every accept has a matching terminator
  }
}

}  // namespace

TEST_CASE("zero arrival rates produce an empty log") {
  auto s = testbed::single_link_scenario(Model::Atcs, {{{0, 0.0}, {1, 0.0}, {2, 0.0}}},
                                         3'600'000, 1);
  auto result = Simulator().run(s);
  CHECK(result.log.records.empty());
}

TEST_CASE("an uncontended run never blocks") {
  // offered load 0.1 x constraint per class
  auto s = testbed::single_link_scenario(Model::Atcs, {testbed::reference_rates(0.1)},
                                         3'600'000, 3);
  auto result = Simulator(true).run(s);
  std::size_t arrivals = 0;
  for (const auto& rec : result.log.records) {
    REQUIRE(rec.kind != EventKind::Block);
    REQUIRE(rec.kind != EventKind::Preemption);
    REQUIRE(rec.kind != EventKind::Devolution);
    if (rec.kind == EventKind::Arrival) ++arrivals;
  }
  CHECK(arrivals > 100);
  check_log_invariants(result.log);
}

TEST_CASE("identical scenario and seed reproduce the log bit for bit") {
  auto s = testbed::single_link_scenario(Model::Atcs,
                                         std::vector<std::map<ClassId, double>>(
                                             3, testbed::reference_rates(1.1)),
                                         600'000, 42);
  auto a = Simulator().run(s);
  auto b = Simulator().run(s);
  REQUIRE(a.log.records.size() == b.log.records.size());
  CHECK(a.log.records == b.log.records);

  s.seed = 43;
  auto c = Simulator().run(s);
  CHECK(a.log.records != c.log.records);
  check_log_invariants(a.log);
}

TEST_CASE("contended runs satisfy the event-log invariants") {
  auto s = testbed::single_link_scenario(Model::Atcs, {testbed::reference_rates(1.4)},
                                         3'600'000, 11);
  auto result = Simulator(true).run(s);  // engine invariants after every event
  check_log_invariants(result.log);
  std::size_t blocks = 0;
  for (const auto& rec : result.log.records)
    if (rec.kind == EventKind::Block) ++blocks;
  CHECK(blocks > 0);
}

TEST_CASE("generated workload matches its distributions") {
  auto s = testbed::single_link_scenario(Model::Atcs, {{{2, 10.0}}}, 3'600'000, 5);
  s.workload.mean_holding_s = 300;
  auto requests = generate_workload(s);
  REQUIRE(requests.size() > 10'000);

  double sum_gap = 0;
  long double sum_hold = 0;
  Tick prev = 0;
  for (const auto& r : requests) {
    CHECK(r.demand >= kbps_from_mbps(5));
    CHECK(r.demand <= kbps_from_mbps(15));
    sum_gap += seconds_from_ticks(r.arrival - prev);
    prev = r.arrival;
    sum_hold += seconds_from_ticks(r.holding);
  }
  const double mean_gap = sum_gap / static_cast<double>(requests.size());
  const double mean_hold = static_cast<double>(sum_hold) / static_cast<double>(requests.size());
  CHECK(mean_gap == Catch::Approx(0.1).margin(0.005));   // 1/lambda within 5%
  CHECK(mean_hold == Catch::Approx(300.0).epsilon(0.05));
}

TEST_CASE("workload streams are independent per class") {
  auto two = testbed::single_link_scenario(Model::Atcs, {{{0, 0.05}, {1, 0.07}}},
                                           3'600'000, 9);
  auto three = testbed::single_link_scenario(
      Model::Atcs, {{{0, 0.05}, {1, 0.07}, {2, 0.11}}}, 3'600'000, 9);

  auto pick = [](const std::vector<LspRequest>& reqs, ClassId cls) {
    std::vector<std::tuple<Tick, Kbps, Tick>> out;
    for (const auto& r : reqs)
      if (r.cls == cls) out.emplace_back(r.arrival, r.demand, r.holding);
    return out;
  };
  auto a = generate_workload(two);
  auto b = generate_workload(three);
  // adding TC2 does not perturb TC0's or TC1's draws
  CHECK(pick(a, 0) == pick(b, 0));
  CHECK(pick(a, 1) == pick(b, 1));
}

TEST_CASE("phase rates switch at phase boundaries") {
  auto s = testbed::single_link_scenario(Model::Atcs,
                                         {{{2, 2.0}}, {{2, 0.0}}, {{2, 2.0}}},
                                         600'000, 21);
  auto requests = generate_workload(s);
  REQUIRE(!requests.empty());
  for (const auto& r : requests) {
    const bool in_silent_phase = r.arrival >= 600'000 && r.arrival < 1'200'000;
    CHECK_FALSE(in_silent_phase);
  }
}

TEST_CASE("scenario validation rejects inconsistent definitions") {
  auto s = testbed::single_link_scenario(Model::Atcs, {testbed::reference_rates(1.0)},
                                         3'600'000, 1);
  SECTION("phase durations must sum to the duration") {
    s.duration += 5;
    CHECK_THROWS_AS(Simulator().run(s), InvalidScenario);
  }
  SECTION("demand bounds must be ordered") {
    s.workload.demand_low = s.workload.demand_high + 1;
    CHECK_THROWS_AS(Simulator().run(s), InvalidScenario);
  }
  SECTION("no phases at all") {
    s.workload.phases.clear();
    CHECK_THROWS_AS(Simulator().run(s), InvalidScenario);
  }
}

TEST_CASE("the model override changes engines but not the workload") {
  auto s = testbed::single_link_scenario(Model::Atcs, {testbed::reference_rates(1.2)},
                                         1'800'000, 17);
  auto atcs = Simulator().run(s);
  auto frfs = Simulator().run(s.with_model(Model::Frfs));

  auto arrivals = [](const EventLog& log) {
    std::vector<std::tuple<Tick, RequestId, ClassId, Kbps>> out;
    for (const auto& rec : log.records)
      if (rec.kind == EventKind::Arrival)
        out.emplace_back(rec.time, rec.request, rec.cls, rec.bw);
    return out;
  };
  CHECK(arrivals(atcs.log) == arrivals(frfs.log));
  CHECK(atcs.log.info.model == "atcs");
  CHECK(frfs.log.info.model == "frfs");
}
