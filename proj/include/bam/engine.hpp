#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "bam/core.hpp"

namespace bam {

/// What a reclamation did to one borrower LSP on one link.
struct ReclaimEvent {
  enum class Kind { Devolution, Preemption };

  Kind kind = Kind::Devolution;
  RequestId victim = 0;
  ClassId victim_class = 0;
  Kbps freed = 0;        // the victim's borrowed amount in the owner's region
  ClassId owner = 0;     // class whose constraint was reclaimed

  friend bool operator==(const ReclaimEvent&, const ReclaimEvent&) = default;
};

inline std::string to_string(ReclaimEvent::Kind k) {
  return k == ReclaimEvent::Kind::Devolution ? "devolution" : "preemption";
}

/// Outcome of one admission attempt on one link.
struct AdmitDecision {
  bool accepted = false;
  std::string block_reason;          // set iff blocked
  std::vector<Draw> breakdown;       // sums to the demand iff accepted
  std::vector<ReclaimEvent> side_effects;

  friend bool operator==(const AdmitDecision&, const AdmitDecision&) = default;
};

inline std::string to_string(const AdmitDecision& d) {
  std::string s = d.accepted ? "accept[" : "block(" + d.block_reason + ")[";
  for (const auto& dr : d.breakdown)
    s += std::to_string(dr.donor) + ":" + std::to_string(dr.amount) + ",";
  s += "]{";
  for (const auto& e : d.side_effects)
    s += to_string(e.kind) + ":" + std::to_string(e.victim) + ":" + std::to_string(e.freed) + ",";
  return s + "}";
}

// Admission, release and reclamation state machine for one link. All four
// models run behind the same donor-tagged accounting; they differ only in
// which donors a requester may draw from:
//
//   MAM  - own constraint only, no sharing.
//   RDM  - own constraint, then unused public bandwidth of strictly
//          higher-priority classes.
//   ATCS - own constraint, then unused public bandwidth of any class,
//          scanning donors from the lowest priority upward.
//   FRFS - one implicit class covering the whole link; classless pool.
//
// Single-writer per link; copyable so callers can probe hypothetical states.
class LinkEngine {
 public:
  explicit LinkEngine(ValidatedLinkConfig cfg) : cfg_(std::move(cfg)) {
    usage_.resize(cfg_.classes_by_priority().size());
  }

  const ValidatedLinkConfig& config() const { return cfg_; }
  LinkId link() const { return cfg_.link(); }
  Kbps link_bandwidth() const { return cfg_.link_bandwidth(); }

  /// Bandwidth this class could be granted right now (no reclaim).
  Kbps available_to(ClassId cls) const {
    require_class(cls);
    if (cfg_.model() == Model::Frfs) return cfg_.link_bandwidth() - total_used();
    Kbps avail = own_free(rank_of(cls));
    for (std::size_t z : donor_ranks(cls)) avail += public_headroom(z);
    return avail;
  }

  AdmitDecision admit(const LspRequest& req) {
    require_class(req.cls);
    if (req.demand <= 0)
      throw InvalidDemand("demand must be positive, got " + std::to_string(req.demand));

    if (auto plan = plan_draw(req.cls, req.demand)) {
      apply(req, *plan);
      return {true, "", std::move(*plan), {}};
    }

    // Try to reclaim the requester's own region from borrowers, but commit
    // only if that actually lets the request in: a blocked decision must
    // leave the link untouched.
    if (lent_of(req.cls) > 0) {
      LinkEngine scratch = *this;
      std::vector<ReclaimEvent> events;
      for (;;) {
        auto victim = scratch.next_victim(req.cls);
        if (!victim) break;
        events.push_back(scratch.evict(*victim, req.cls));
        if (scratch.plan_draw(req.cls, req.demand)) break;
      }
      if (auto plan = scratch.plan_draw(req.cls, req.demand)) {
        scratch.apply(req, *plan);
        *this = std::move(scratch);
        return {true, "", std::move(*plan), std::move(events)};
      }
    }
    return {false, "insufficient bandwidth", {}, {}};
  }

  /// Returns all donor-tagged amounts to their donors. The freed breakdown
  /// is reported back so callers can audit the bookkeeping inverse.
  std::vector<Draw> release(RequestId id) {
    auto it = std::find_if(active_.begin(), active_.end(),
                           [id](const auto& a) { return a.id == id; });
    if (it == active_.end())
      throw UnknownRequest("request " + std::to_string(id) + " not active on link " +
                           to_string(cfg_.link()));
    std::vector<Draw> freed = it->draws;
    subtract_usage(*it);
    active_.erase(it);
    return freed;
  }

  // Frees the owner's region from borrowers until at least `needed` is back
  // (or borrowers run out). Victims: the lowest-priority borrower class
  // first, most recently admitted first within a class; no more victims are
  // taken once the goal is met.
  std::vector<ReclaimEvent> reclaim(ClassId owner, Kbps needed) {
    require_class(owner);
    if (needed <= 0) throw InvalidDemand("reclaim needs a positive amount");
    if (lent_of(owner) == 0)
      throw NothingToReclaim("no borrowers in class " + std::to_string(owner) +
                             " region on link " + to_string(cfg_.link()));
    std::vector<ReclaimEvent> events;
    Kbps freed = 0;
    while (freed < needed) {
      auto victim = next_victim(owner);
      if (!victim) break;
      events.push_back(evict(*victim, owner));
      freed += events.back().freed;
    }
    return events;
  }

  ClassUsage used_bandwidth(ClassId cls) const {
    require_class(cls);
    return usage_[rank_of(cls)];
  }

  bool holds(RequestId id) const {
    return std::any_of(active_.begin(), active_.end(),
                       [id](const auto& a) { return a.id == id; });
  }

  std::size_t active_count() const { return active_.size(); }

  Kbps total_used() const {
    Kbps t = 0;
    for (const auto& u : usage_) t += u.own_use + u.lent;
    return t;
  }

  const std::vector<Draw>* draws_of(RequestId id) const {
    auto it = std::find_if(active_.begin(), active_.end(),
                           [id](const auto& a) { return a.id == id; });
    return it == active_.end() ? nullptr : &it->draws;
  }

  // Checks every state invariant; throws on the first violation. The usage
  // counters are also rebuilt from the active-allocation set and compared,
  // so incremental drift cannot hide.
  void validate() const {
    const auto& classes = cfg_.classes_by_priority();
    std::vector<ClassUsage> rebuilt(classes.size());
    for (const auto& a : active_) {
      const std::size_t owner = rank_of(a.cls);
      Kbps sum = 0;
      for (const auto& d : a.draws) {
        if (d.amount <= 0) throw Error("non-positive draw amount");
        sum += d.amount;
        const std::size_t donor = rank_of(d.donor);
        if (donor == owner) {
          rebuilt[owner].own_use += d.amount;
        } else {
          rebuilt[donor].lent += d.amount;
          rebuilt[owner].borrowed += d.amount;
        }
      }
      if (sum != a.demand) throw Error("draws do not sum to demand");
    }
    Kbps total = 0;
    for (std::size_t i = 0; i < classes.size(); ++i) {
      if (!(rebuilt[i] == usage_[i]))
        throw Error("usage counters drifted from allocation set");
      total += usage_[i].own_use + usage_[i].lent;
      if (cfg_.model() != Model::Frfs) {
        if (usage_[i].own_use + usage_[i].lent > classes[i].bc)
          throw Error("per-donor bound violated for class " + std::to_string(classes[i].id));
        if (usage_[i].lent > partition(classes[i]).second)
          throw Error("sharing-limit bound violated for class " + std::to_string(classes[i].id));
      }
      if (cfg_.model() == Model::Mam || cfg_.model() == Model::Frfs) {
        if (usage_[i].lent != 0 || usage_[i].borrowed != 0)
          throw Error("sharing under a non-sharing model");
      }
    }
    if (total > cfg_.link_bandwidth()) throw Error("conservation violated");
    if (cfg_.model() == Model::Rdm) {
      for (const auto& a : active_) {
        const int own_prio = cfg_.klass(a.cls).priority;
        for (const auto& d : a.draws)
          if (d.donor != a.cls && cfg_.klass(d.donor).priority <= own_prio)
            throw Error("RDM borrowed against the priority direction");
      }
    }
  }

 private:
  struct Allocation {
    RequestId id = 0;
    ClassId cls = 0;
    Kbps demand = 0;
    std::uint64_t seq = 0;  // admission order on this link
    std::vector<Draw> draws;
  };

  void require_class(ClassId cls) const { cfg_.klass(cls); }

  std::size_t rank_of(ClassId cls) const {
    const auto& by_prio = cfg_.classes_by_priority();
    for (std::size_t i = 0; i < by_prio.size(); ++i)
      if (by_prio[i].id == cls) return i;
    throw UnknownClass("class " + std::to_string(cls));
  }

  Kbps own_free(std::size_t rank) const {
    const auto& c = cfg_.classes_by_priority()[rank];
    return c.bc - usage_[rank].own_use - usage_[rank].lent;
  }

  // Additional bandwidth class `rank` can lend right now: bounded by the
  // unused public partition and by whatever is free in the region at all.
  Kbps public_headroom(std::size_t rank) const {
    const auto& c = cfg_.classes_by_priority()[rank];
    return std::min(partition(c).second - usage_[rank].lent, own_free(rank));
  }

  Kbps lent_of(ClassId cls) const { return usage_[rank_of(cls)].lent; }

  // Donor scan order for a requester: ascending priority, self excluded,
  // restricted to higher-priority classes under RDM. `exclude` additionally
  // drops the contested region when re-housing a devolved slice.
  std::vector<std::size_t> donor_ranks(ClassId cls, std::optional<ClassId> exclude = {}) const {
    std::vector<std::size_t> out;
    if (cfg_.model() == Model::Mam || cfg_.model() == Model::Frfs) return out;
    const auto& by_prio = cfg_.classes_by_priority();
    const int prio = cfg_.klass(cls).priority;
    for (std::size_t i = 0; i < by_prio.size(); ++i) {
      if (by_prio[i].id == cls) continue;
      if (exclude && by_prio[i].id == *exclude) continue;
      if (cfg_.model() == Model::Rdm && by_prio[i].priority <= prio) continue;
      out.push_back(i);
    }
    return out;
  }

  // Draw plan for (class, demand): own constraint first, then the legal
  // donors in scan order. Empty optional when the demand cannot be covered.
  std::optional<std::vector<Draw>> plan_draw(ClassId cls, Kbps demand,
                                             std::optional<ClassId> exclude = {}) const {
    std::vector<Draw> plan;
    Kbps remaining = demand;
    if (cfg_.model() == Model::Frfs) {
      if (cfg_.link_bandwidth() - total_used() < demand) return std::nullopt;
      plan.push_back({cls, demand});
      return plan;
    }
    const Kbps own = std::min(remaining, own_free(rank_of(cls)));
    if (own > 0) {
      plan.push_back({cls, own});
      remaining -= own;
    }
    for (std::size_t z : donor_ranks(cls, exclude)) {
      if (remaining == 0) break;
      const Kbps take = std::min(remaining, public_headroom(z));
      if (take > 0) {
        plan.push_back({cfg_.classes_by_priority()[z].id, take});
        remaining -= take;
      }
    }
    if (remaining > 0) return std::nullopt;
    return plan;
  }

  void apply(const LspRequest& req, const std::vector<Draw>& plan) {
    Allocation a{req.id, req.cls, req.demand, next_seq_++, plan};
    add_usage(a);
    active_.push_back(std::move(a));
  }

  void add_usage(const Allocation& a) {
    const std::size_t owner = rank_of(a.cls);
    for (const auto& d : a.draws) {
      const std::size_t donor = rank_of(d.donor);
      if (donor == owner) {
        usage_[owner].own_use += d.amount;
      } else {
        usage_[donor].lent += d.amount;
        usage_[owner].borrowed += d.amount;
      }
    }
  }

  void subtract_usage(const Allocation& a) {
    const std::size_t owner = rank_of(a.cls);
    for (const auto& d : a.draws) {
      const std::size_t donor = rank_of(d.donor);
      if (donor == owner) {
        usage_[owner].own_use -= d.amount;
      } else {
        usage_[donor].lent -= d.amount;
        usage_[owner].borrowed -= d.amount;
      }
    }
  }

  Kbps borrowed_from(const Allocation& a, ClassId owner) const {
    Kbps x = 0;
    for (const auto& d : a.draws)
      if (d.donor == owner && a.cls != owner) x += d.amount;
    return x;
  }

  // Next borrower to move out of the owner's region, or nullopt if none:
  // lowest-priority class first, then most recently admitted.
  std::optional<std::size_t> next_victim(ClassId owner) const {
    std::optional<std::size_t> best;
    int best_prio = 0;
    std::uint64_t best_seq = 0;
    for (std::size_t i = 0; i < active_.size(); ++i) {
      if (borrowed_from(active_[i], owner) <= 0) continue;
      const int prio = cfg_.klass(active_[i].cls).priority;
      const std::uint64_t seq = active_[i].seq;
      if (!best || prio < best_prio || (prio == best_prio && seq > best_seq)) {
        best = i;
        best_prio = prio;
        best_seq = seq;
      }
    }
    return best;
  }

  // Devolve the victim's contested slice into bandwidth it can legally reach
  // elsewhere; preempt (drop from this link) when no re-housing exists. The
  // caller propagates preemptions to the victim's other links.
  ReclaimEvent evict(std::size_t index, ClassId owner) {
    Allocation& v = active_[index];
    const Kbps slice = borrowed_from(v, owner);
    ReclaimEvent ev{ReclaimEvent::Kind::Devolution, v.id, v.cls, slice, owner};

    // Temporarily vacate the slice so the re-housing plan sees it as free
    // neither in the contested region (excluded) nor double-counted.
    subtract_usage(v);
    std::vector<Draw> rest;
    for (const auto& d : v.draws)
      if (d.donor != owner) rest.push_back(d);
    std::vector<Draw> original = std::exchange(v.draws, std::move(rest));
    add_usage(v);

    if (auto rehoused = plan_draw(v.cls, slice, owner)) {
      subtract_usage(v);
      for (const auto& d : *rehoused) merge_draw(v.draws, d);
      add_usage(v);
      return ev;
    }

    // No room anywhere: tear the whole LSP down on this link.
    subtract_usage(v);
    v.draws = std::move(original);
    ev.kind = ReclaimEvent::Kind::Preemption;
    active_.erase(active_.begin() + static_cast<std::ptrdiff_t>(index));
    return ev;
  }

  static void merge_draw(std::vector<Draw>& draws, const Draw& d) {
    for (auto& existing : draws) {
      if (existing.donor == d.donor) {
        existing.amount += d.amount;
        return;
      }
    }
    draws.push_back(d);
  }

  ValidatedLinkConfig cfg_;
  std::vector<Allocation> active_;
  std::vector<ClassUsage> usage_;  // indexed by priority rank
  std::uint64_t next_seq_ = 0;
};

}  // namespace bam
