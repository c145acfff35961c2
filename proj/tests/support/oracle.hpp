#pragma once

// Brute-force reference engine for equivalence testing. It applies the donor
// and victim rules literally over a flat allocation list and recomputes every
// pool by full scans; no incremental bookkeeping is shared with LinkEngine.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "bam/core.hpp"
#include "bam/engine.hpp"

namespace oracle {

using bam::AdmitDecision;
using bam::ClassId;
using bam::ClassUsage;
using bam::Draw;
using bam::Kbps;
using bam::LspRequest;
using bam::Model;
using bam::ReclaimEvent;
using bam::RequestId;

struct Alloc {
  RequestId id = 0;
  ClassId cls = 0;
  Kbps demand = 0;
  std::uint64_t seq = 0;
  std::map<ClassId, Kbps> taken;  // donor -> amount
};

class ReferenceEngine {
 public:
  explicit ReferenceEngine(bam::ValidatedLinkConfig cfg) : cfg_(std::move(cfg)) {}

  AdmitDecision admit(const LspRequest& req) {
    cfg_.klass(req.cls);
    if (req.demand <= 0) throw bam::InvalidDemand("demand must be positive");

    if (auto taken = try_plan(allocs_, req.cls, req.demand, std::nullopt)) {
      commit(allocs_, req, *taken);
      return {true, "", to_breakdown(req.cls, *taken), {}};
    }

    if (lent_into(allocs_, req.cls) > 0) {
      std::vector<Alloc> scratch = allocs_;
      std::vector<ReclaimEvent> events;
      while (!try_plan(scratch, req.cls, req.demand, std::nullopt)) {
        int victim = pick_victim(scratch, req.cls);
        if (victim < 0) break;
        events.push_back(evict(scratch, static_cast<std::size_t>(victim), req.cls));
      }
      if (auto taken = try_plan(scratch, req.cls, req.demand, std::nullopt)) {
        commit(scratch, req, *taken);
        allocs_ = std::move(scratch);
        return {true, "", to_breakdown(req.cls, *taken), std::move(events)};
      }
    }
    return {false, "insufficient bandwidth", {}, {}};
  }

  std::vector<Draw> release(RequestId id) {
    for (std::size_t i = 0; i < allocs_.size(); ++i) {
      if (allocs_[i].id == id) {
        std::vector<Draw> freed = to_breakdown(allocs_[i].cls, allocs_[i].taken);
        allocs_.erase(allocs_.begin() + static_cast<std::ptrdiff_t>(i));
        return freed;
      }
    }
    throw bam::UnknownRequest("not active");
  }

  ClassUsage used_bandwidth(ClassId cls) const {
    cfg_.klass(cls);
    ClassUsage u;
    for (const Alloc& a : allocs_) {
      for (const auto& [donor, amount] : a.taken) {
        if (a.cls == cls && donor == cls) u.own_use += amount;
        if (a.cls != cls && donor == cls) u.lent += amount;
        if (a.cls == cls && donor != cls) u.borrowed += amount;
      }
    }
    return u;
  }

  bool holds(RequestId id) const {
    for (const Alloc& a : allocs_)
      if (a.id == id) return true;
    return false;
  }

 private:
  // ---- pool arithmetic, all by full scans ----

  static Kbps sum_all(const std::vector<Alloc>& allocs) {
    Kbps t = 0;
    for (const Alloc& a : allocs)
      for (const auto& [donor, amount] : a.taken) {
        (void)donor;
        t += amount;
      }
    return t;
  }

  static Kbps in_region(const std::vector<Alloc>& allocs, ClassId region) {
    Kbps t = 0;
    for (const Alloc& a : allocs)
      for (const auto& [donor, amount] : a.taken)
        if (donor == region) t += amount;
    return t;
  }

  static Kbps lent_into(const std::vector<Alloc>& allocs, ClassId region) {
    Kbps t = 0;
    for (const Alloc& a : allocs)
      if (a.cls != region)
        for (const auto& [donor, amount] : a.taken)
          if (donor == region) t += amount;
    return t;
  }

  // Donors a class may draw from, lowest priority first.
  std::vector<ClassId> donors_for(ClassId cls, std::optional<ClassId> excluded) const {
    std::vector<bam::TrafficClassConfig> order = cfg_.classes_by_priority();
    std::sort(order.begin(), order.end(),
              [](const auto& a, const auto& b) { return a.priority < b.priority; });
    std::vector<ClassId> donors;
    for (const auto& c : order) {
      if (c.id == cls) continue;
      if (excluded && c.id == *excluded) continue;
      if (cfg_.model() == Model::Mam || cfg_.model() == Model::Frfs) continue;
      if (cfg_.model() == Model::Rdm && c.priority <= cfg_.klass(cls).priority) continue;
      donors.push_back(c.id);
    }
    return donors;
  }

  std::optional<std::map<ClassId, Kbps>> try_plan(const std::vector<Alloc>& allocs, ClassId cls,
                                                  Kbps demand,
                                                  std::optional<ClassId> excluded) const {
    std::map<ClassId, Kbps> taken;
    Kbps rem = demand;
    if (cfg_.model() == Model::Frfs) {
      if (cfg_.link_bandwidth() - sum_all(allocs) < demand) return std::nullopt;
      taken[cls] = demand;
      return taken;
    }
    const Kbps own_room = cfg_.klass(cls).bc - in_region(allocs, cls);
    const Kbps own = std::min(rem, own_room);
    if (own > 0) {
      taken[cls] = own;
      rem -= own;
    }
    for (ClassId donor : donors_for(cls, excluded)) {
      if (rem == 0) break;
      const Kbps pub = bam::partition(cfg_.klass(donor)).second;
      const Kbps headroom = std::min(pub - lent_into(allocs, donor),
                                     cfg_.klass(donor).bc - in_region(allocs, donor));
      const Kbps take = std::min(rem, headroom);
      if (take > 0) {
        taken[donor] += take;
        rem -= take;
      }
    }
    if (rem > 0) return std::nullopt;
    return taken;
  }

  void commit(std::vector<Alloc>& allocs, const LspRequest& req,
              const std::map<ClassId, Kbps>& taken) {
    allocs.push_back({req.id, req.cls, req.demand, next_seq_++, taken});
  }

  // Breakdown with the own-class slice first, then donors by scan order, to
  // match the engine's reported ordering.
  std::vector<Draw> to_breakdown(ClassId cls, const std::map<ClassId, Kbps>& taken) const {
    std::vector<Draw> out;
    auto own = taken.find(cls);
    if (own != taken.end() && own->second > 0) out.push_back({cls, own->second});
    for (ClassId donor : donors_for(cls, std::nullopt)) {
      auto it = taken.find(donor);
      if (it != taken.end() && it->second > 0) out.push_back({donor, it->second});
    }
    return out;
  }

  // Lowest-priority borrower class first, then the most recently admitted.
  int pick_victim(const std::vector<Alloc>& allocs, ClassId owner) const {
    int best = -1;
    for (std::size_t i = 0; i < allocs.size(); ++i) {
      const Alloc& a = allocs[i];
      if (a.cls == owner) continue;
      auto it = a.taken.find(owner);
      if (it == a.taken.end() || it->second <= 0) continue;
      if (best < 0) {
        best = static_cast<int>(i);
        continue;
      }
      const Alloc& b = allocs[static_cast<std::size_t>(best)];
      const int pa = cfg_.klass(a.cls).priority, pb = cfg_.klass(b.cls).priority;
      if (pa < pb || (pa == pb && a.seq > b.seq)) best = static_cast<int>(i);
    }
    return best;
  }

  ReclaimEvent evict(std::vector<Alloc>& allocs, std::size_t index, ClassId owner) const {
    Alloc& v = allocs[index];
    const Kbps slice = v.taken.at(owner);
    ReclaimEvent ev{ReclaimEvent::Kind::Devolution, v.id, v.cls, slice, owner};

    // Vacate the contested slice, then look for a new home under the
    // victim's own rules with the contested region off the table.
    v.taken.erase(owner);
    if (auto rehoused = try_plan(allocs, v.cls, slice, owner)) {
      for (const auto& [donor, amount] : *rehoused) v.taken[donor] += amount;
      return ev;
    }
    ev.kind = ReclaimEvent::Kind::Preemption;
    allocs.erase(allocs.begin() + static_cast<std::ptrdiff_t>(index));
    return ev;
  }

  bam::ValidatedLinkConfig cfg_;
  std::vector<Alloc> allocs_;
  std::uint64_t next_seq_ = 0;
};

}  // namespace oracle
