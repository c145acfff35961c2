#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>

#include "bam/broker.hpp"
#include "support/builders.hpp"

using namespace bam;
using testbed::request;
using testbed::tc;

namespace {

// Chain topology sw0 - sw1 - ... with the reference class table per link.
Broker chain_broker(std::size_t links, Model model, double link_mbps = 1000) {
  NetworkGraph g;
  for (std::size_t i = 0; i <= links; ++i) g.add_switch("sw" + std::to_string(i));
  std::map<LinkId, ValidatedLinkConfig> cfgs;
  for (std::size_t i = 0; i < links; ++i) {
    const LinkId id{static_cast<SwitchId>(i), static_cast<SwitchId>(i + 1)};
    g.add_link(id, kbps_from_mbps(link_mbps));
    LinkBamConfig cfg = testbed::reference_link(model);
    cfg.link = id;
    cfg.classes = {tc(0, 0, link_mbps * 0.25), tc(1, 1, link_mbps * 0.35),
                   tc(2, 2, link_mbps * 0.40)};
    cfgs.emplace(id, validate_link_config(cfg, kbps_from_mbps(link_mbps)));
  }
  return Broker(g, PathTable::shortest_hop(g), std::move(cfgs));
}

LspRequest path_request(RequestId id, ClassId cls, double demand_mbps, SwitchId src,
                        SwitchId dst) {
  LspRequest r = request(id, cls, demand_mbps);
  r.source = src;
  r.destination = dst;
  return r;
}

}  // namespace

TEST_CASE("single-segment path behaves like a bare admit") {
  Broker broker = chain_broker(1, Model::Atcs);
  LinkEngine bare(testbed::validated_reference(Model::Atcs));
  for (RequestId id = 1; id <= 60; ++id) {
    auto req = path_request(id, static_cast<ClassId>(id % 3), 12, 0, 1);
    auto via_path = broker.admit_path(req);
    auto direct = bare.admit(req);
    REQUIRE(via_path.accepted == direct.accepted);
    if (direct.accepted)
      CHECK(via_path.allocation.segments.front().draws == direct.breakdown);
  }
}

TEST_CASE("a block on a later segment rolls back earlier grants") {
  Broker broker = chain_broker(3, Model::Mam);
  // Fill TC0 on the last link only.
  for (RequestId id = 1000; id < 1025; ++id)
    REQUIRE(broker.admit_path(path_request(id, 0, 10, 2, 3)).accepted);

  auto snapshot = [&](LinkId l) {
    return std::tuple{broker.engine(l).used_bandwidth(0), broker.engine(l).active_count()};
  };
  const auto link01 = snapshot({0, 1});
  const auto link12 = snapshot({1, 2});

  auto d = broker.admit_path(path_request(1, 0, 10, 0, 3));
  REQUIRE_FALSE(d.accepted);
  REQUIRE(d.blocked_at == LinkId{2, 3});
  CHECK(snapshot({0, 1}) == link01);
  CHECK(snapshot({1, 2}) == link12);
  CHECK_FALSE(broker.active(1));
}

TEST_CASE("segments may carry different donor breakdowns") {
  Broker broker = chain_broker(2, Model::Atcs);
  // Different residual states: TC2's constraint is full on link 0-1 only.
  for (RequestId id = 1000; id < 1040; ++id)
    REQUIRE(broker.admit_path(path_request(id, 2, 10, 0, 1)).accepted);

  auto d = broker.admit_path(path_request(1, 2, 10, 0, 2));
  REQUIRE(d.accepted);
  REQUIRE(d.allocation.segments.size() == 2);
  // borrowed from the lowest-priority donor on the first hop, own room on
  // the second
  CHECK(d.allocation.segments[0].draws == std::vector<Draw>{{0, kbps_from_mbps(10)}});
  CHECK(d.allocation.segments[1].draws == std::vector<Draw>{{2, kbps_from_mbps(10)}});
  broker.validate();
}

TEST_CASE("teardown releases every segment and is not repeatable") {
  Broker broker = chain_broker(2, Model::Atcs);
  REQUIRE(broker.admit_path(path_request(1, 1, 10, 0, 2)).accepted);
  CHECK(broker.engine({0, 1}).holds(1));
  CHECK(broker.engine({1, 2}).holds(1));
  broker.teardown_path(1);
  CHECK_FALSE(broker.engine({0, 1}).holds(1));
  CHECK_FALSE(broker.engine({1, 2}).holds(1));
  CHECK_THROWS_AS(broker.teardown_path(1), UnknownRequest);
}

TEST_CASE("a preemption on one segment tears the victim down everywhere") {
  // Two-class setup on a 2-link chain, narrow enough to force preemption.
  NetworkGraph g;
  for (int i = 0; i <= 2; ++i) g.add_switch("sw" + std::to_string(i));
  std::map<LinkId, ValidatedLinkConfig> cfgs;
  for (int i = 0; i < 2; ++i) {
    const LinkId id{i, i + 1};
    g.add_link(id, kbps_from_mbps(30));
    LinkBamConfig cfg;
    cfg.link = id;
    cfg.model = Model::Rdm;
    cfg.classes = {tc(0, 2, 10), tc(2, 0, 20)};
    cfgs.emplace(id, validate_link_config(cfg, kbps_from_mbps(30)));
  }
  Broker broker(g, PathTable::shortest_hop(g), std::move(cfgs));

  // The victim spans both links and borrows TC0's constraint on both.
  REQUIRE(broker.admit_path(path_request(1, 2, 10, 0, 2)).accepted);
  REQUIRE(broker.admit_path(path_request(2, 2, 10, 0, 2)).accepted);
  auto victim = broker.admit_path(path_request(3, 2, 10, 0, 2));
  REQUIRE(victim.accepted);

  // TC0 claims its bandwidth on the first link only.
  auto d = broker.admit_path(path_request(4, 0, 10, 0, 1));
  REQUIRE(d.accepted);
  REQUIRE(d.reclaims.size() == 1);
  CHECK(d.reclaims[0].event.kind == ReclaimEvent::Kind::Preemption);
  CHECK(d.reclaims[0].event.victim == 3);
  CHECK(d.reclaims[0].victim_links == std::vector<LinkId>{{0, 1}, {1, 2}});
  CHECK_FALSE(broker.engine({0, 1}).holds(3));
  CHECK_FALSE(broker.engine({1, 2}).holds(3));  // end-to-end teardown
  CHECK_FALSE(broker.active(3));
  broker.validate();
}

TEST_CASE("unknown source/destination pairs raise NoPath") {
  Broker broker = chain_broker(1, Model::Atcs);
  auto req = path_request(1, 0, 10, 0, 1);
  req.source = 5;
  req.destination = 6;
  CHECK_THROWS_AS(broker.admit_path(req), NoPath);
}

TEST_CASE("per-link decisions match isolated single-link replays") {
  // Rebuild each link's op subsequence from the broker decisions and replay
  // it on isolated engines; states must coincide after every step.
  Broker broker = chain_broker(2, Model::Atcs, 100);
  LinkEngine iso01(broker.engine({0, 1}));
  LinkEngine iso12(broker.engine({1, 2}));

  std::mt19937_64 rng(99);
  std::vector<LspRequest> active;
  auto drop_active = [&](RequestId victim) {
    active.erase(std::remove_if(active.begin(), active.end(),
                                [&](const auto& r) { return r.id == victim; }),
                 active.end());
  };
  RequestId id = 1;
  for (int step = 0; step < 2500; ++step) {
    if (!active.empty() && rng() % 3 == 0) {
      const std::size_t pick = rng() % active.size();
      const LspRequest victim = active[pick];
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(pick));
      broker.teardown_path(victim.id);
      if (victim.source == 0) iso01.release(victim.id);
      iso12.release(victim.id);
      continue;
    }
    const SwitchId src = rng() % 2 == 0 ? 0 : 1;  // paths 0->2 and 1->2
    auto req = path_request(id++, static_cast<ClassId>(rng() % 3),
                            static_cast<double>(1 + rng() % 15), src, 2);
    auto d = broker.admit_path(req);

    // mirror onto the isolated engines in the broker's operation order
    bool accepted_first = true;
    if (src == 0) {
      auto a = iso01.admit(req);
      accepted_first = a.accepted;
      for (const auto& e : a.side_effects)
        if (e.kind == ReclaimEvent::Kind::Preemption) {
          iso12.release(e.victim);
          drop_active(e.victim);
        }
    }
    if (accepted_first) {
      auto b = iso12.admit(req);
      for (const auto& e : b.side_effects)
        if (e.kind == ReclaimEvent::Kind::Preemption) {
          if (iso01.holds(e.victim)) iso01.release(e.victim);
          drop_active(e.victim);
        }
      if (!b.accepted && src == 0) iso01.release(req.id);
      REQUIRE(b.accepted == d.accepted);
    } else {
      REQUIRE_FALSE(d.accepted);
    }

    if (d.accepted) active.push_back(req);
    for (const auto& pr : d.reclaims)
      if (pr.event.kind == ReclaimEvent::Kind::Preemption) drop_active(pr.event.victim);

    for (ClassId c : {0, 1, 2}) {
      REQUIRE(broker.engine({0, 1}).used_bandwidth(c) == iso01.used_bandwidth(c));
      REQUIRE(broker.engine({1, 2}).used_bandwidth(c) == iso12.used_bandwidth(c));
    }
  }
  broker.validate();
}
