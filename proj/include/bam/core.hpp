#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bam/units.hpp"

namespace bam {

/// Per-link policy defining how traffic classes share capacity.
enum class Model { Mam, Rdm, Atcs, Frfs };

inline std::string to_string(Model m) {
  switch (m) {
    case Model::Mam: return "mam";
    case Model::Rdm: return "rdm";
    case Model::Atcs: return "atcs";
    case Model::Frfs: return "frfs";
  }
  return "?";
}

inline std::optional<Model> model_from_string(const std::string& s) {
  if (s == "mam") return Model::Mam;
  if (s == "rdm") return Model::Rdm;
  if (s == "atcs") return Model::Atcs;
  if (s == "frfs") return Model::Frfs;
  return std::nullopt;
}

// Bidirectional physical graph: switches plus directed links with capacity.
class NetworkGraph {
 public:
  void add_switch(const std::string& name) { switches_.push_back(name); }

  void add_link(LinkId id, Kbps bandwidth) {
    if (id.from == id.to)
      throw ConfigError("self-link " + to_string(id) + " not allowed");
    if (bandwidth <= 0)
      throw ConfigError("link " + to_string(id) + " must have positive bandwidth");
    if (id.from < 0 || id.to < 0 ||
        id.from >= static_cast<SwitchId>(switches_.size()) ||
        id.to >= static_cast<SwitchId>(switches_.size()))
      throw ConfigError("link " + to_string(id) + " references unknown switch");
    links_[id] = bandwidth;
  }

  bool connected(SwitchId i, SwitchId j) const { return links_.count({i, j}) > 0; }
  bool has_link(LinkId id) const { return links_.count(id) > 0; }

  Kbps bandwidth(LinkId id) const {
    auto it = links_.find(id);
    if (it == links_.end()) throw ConfigError("unknown link " + to_string(id));
    return it->second;
  }

  std::size_t switch_count() const { return switches_.size(); }
  const std::vector<std::string>& switches() const { return switches_; }
  const std::map<LinkId, Kbps>& links() const { return links_; }

 private:
  std::vector<std::string> switches_;
  std::map<LinkId, Kbps> links_;
};

/// One traffic class on a link: priority rank, bandwidth constraint, and the
/// fraction of the constraint designated public (lendable to other classes).
struct TrafficClassConfig {
  ClassId id = 0;
  int priority = 0;      // greater value = higher priority
  Kbps bc = 0;           // bandwidth constraint
  double sharing = 0.0;  // in [0,1]; public share of bc

  friend bool operator==(const TrafficClassConfig&, const TrafficClassConfig&) = default;
};

// Splits a class's constraint into (private, public). The two parts always
// sum to bc exactly: public is rounded, private absorbs the remainder.
inline std::pair<Kbps, Kbps> partition(const TrafficClassConfig& c) {
  const Kbps pub = static_cast<Kbps>(static_cast<double>(c.bc) * c.sharing + 0.5);
  return {c.bc - pub, pub};
}

/// Per-link model choice and class table.
struct LinkBamConfig {
  LinkId link;
  Model model = Model::Atcs;
  std::vector<TrafficClassConfig> classes;
};

// A link config that passed validate_link_config. Classes are kept sorted by
// ascending priority, which is also the donor scan order.
class ValidatedLinkConfig {
 public:
  const LinkBamConfig& raw() const { return cfg_; }
  LinkId link() const { return cfg_.link; }
  Model model() const { return cfg_.model; }
  Kbps link_bandwidth() const { return lb_; }

  const std::vector<TrafficClassConfig>& classes_by_priority() const { return by_priority_; }

  bool has_class(ClassId id) const { return index_.count(id) > 0; }

  const TrafficClassConfig& klass(ClassId id) const {
    auto it = index_.find(id);
    if (it == index_.end())
      throw UnknownClass("class " + std::to_string(id) + " not configured on link " +
                         to_string(cfg_.link));
    return by_priority_[it->second];
  }

  Kbps public_part(ClassId id) const { return partition(klass(id)).second; }

  // Capacity bound the engine enforces for a class. Under FRFS every class
  // maps onto the single implicit class whose constraint is the whole link.
  Kbps capacity_of(ClassId id) const {
    if (cfg_.model == Model::Frfs) return lb_;
    return klass(id).bc;
  }

  friend ValidatedLinkConfig validate_link_config(LinkBamConfig cfg, Kbps lb);

 private:
  LinkBamConfig cfg_;
  Kbps lb_ = 0;
  std::vector<TrafficClassConfig> by_priority_;
  std::map<ClassId, std::size_t> index_;
};

// Validation: sum of constraints fits the link, priorities are a strict
// order, sharing limits are fractions. Order-insensitive in the class list.
inline ValidatedLinkConfig validate_link_config(LinkBamConfig cfg, Kbps lb) {
  if (lb <= 0) throw ConfigError("link bandwidth must be positive");
  if (cfg.classes.empty())
    throw ConfigError("link " + to_string(cfg.link) + " has no traffic classes");

  Kbps total = 0;
  std::set<int> priorities;
  std::set<ClassId> ids;
  for (const auto& c : cfg.classes) {
    if (c.bc <= 0)
      throw ConfigError("class " + std::to_string(c.id) + " has non-positive constraint");
    if (c.sharing < 0.0 || c.sharing > 1.0)
      throw BadSharingLimit("class " + std::to_string(c.id) + " sharing limit " +
                            std::to_string(c.sharing) + " outside [0,1]");
    if (!priorities.insert(c.priority).second)
      throw DuplicatePriority("duplicate priority " + std::to_string(c.priority) +
                              " on link " + to_string(cfg.link));
    if (!ids.insert(c.id).second)
      throw ConfigError("duplicate class id " + std::to_string(c.id));
    total += c.bc;
  }
  if (total > lb)
    throw OverCommitted("sum of constraints " + std::to_string(total) + " kbps exceeds link " +
                        to_string(cfg.link) + " bandwidth " + std::to_string(lb) + " kbps");

  ValidatedLinkConfig v;
  v.cfg_ = std::move(cfg);
  v.lb_ = lb;
  v.by_priority_ = v.cfg_.classes;
  std::sort(v.by_priority_.begin(), v.by_priority_.end(),
            [](const auto& a, const auto& b) { return a.priority < b.priority; });
  for (std::size_t i = 0; i < v.by_priority_.size(); ++i)
    v.index_[v.by_priority_[i].id] = i;
  return v;
}

/// A demand: who wants how much bandwidth, where, and for how long.
struct LspRequest {
  RequestId id = 0;
  std::string user;
  ClassId cls = 0;
  Kbps demand = 0;
  SwitchId source = 0;
  SwitchId destination = 0;
  Tick arrival = 0;
  Tick holding = 0;
};

/// One slice of an allocation: which class's constraint it was drawn from.
struct Draw {
  ClassId donor = 0;
  Kbps amount = 0;

  friend bool operator==(const Draw&, const Draw&) = default;
};

struct SegmentGrant {
  LinkId link;
  std::vector<Draw> draws;  // amounts sum to the request's demand

  friend bool operator==(const SegmentGrant&, const SegmentGrant&) = default;
};

/// Realized end-to-end allocation: per-segment donor breakdowns.
struct LspAllocation {
  RequestId id = 0;
  ClassId cls = 0;
  Kbps demand = 0;
  std::vector<SegmentGrant> segments;
};

/// Usage of one class on one link, decomposed by where bandwidth came from.
struct ClassUsage {
  Kbps own_use = 0;   // class-k traffic drawn from BC^k
  Kbps lent = 0;      // other classes' traffic drawn from BC^k
  Kbps borrowed = 0;  // class-k traffic drawn from other constraints

  friend bool operator==(const ClassUsage&, const ClassUsage&) = default;
};

}  // namespace bam
