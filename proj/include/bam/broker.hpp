#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bam/core.hpp"
#include "bam/engine.hpp"

namespace bam {

// Static (source, destination) -> ordered segment list lookup. Path
// computation is outside this library; tables are loaded or precomputed
// once and never change during a run.
class PathTable {
 public:
  void add(SwitchId src, SwitchId dst, std::vector<LinkId> segments, const NetworkGraph& g) {
    if (segments.empty()) throw ConfigError("empty path");
    if (segments.front().from != src || segments.back().to != dst)
      throw ConfigError("path endpoints do not match key");
    for (std::size_t i = 0; i < segments.size(); ++i) {
      if (!g.has_link(segments[i]))
        throw ConfigError("path references unknown link " + to_string(segments[i]));
      if (i > 0 && segments[i - 1].to != segments[i].from)
        throw ConfigError("path segments do not concatenate");
    }
    table_[{src, dst}] = std::move(segments);
  }

  const std::vector<LinkId>* find(SwitchId src, SwitchId dst) const {
    auto it = table_.find({src, dst});
    return it == table_.end() ? nullptr : &it->second;
  }

  const std::map<std::pair<SwitchId, SwitchId>, std::vector<LinkId>>& entries() const {
    return table_;
  }

  // Deterministic shortest-hop paths by breadth-first search; neighbor ties
  // resolve by switch index.
  static PathTable shortest_hop(const NetworkGraph& g) {
    PathTable t;
    const auto n = static_cast<SwitchId>(g.switch_count());
    for (SwitchId src = 0; src < n; ++src) {
      std::vector<SwitchId> parent(static_cast<std::size_t>(n), -1);
      std::vector<bool> seen(static_cast<std::size_t>(n), false);
      std::vector<SwitchId> queue{src};
      seen[static_cast<std::size_t>(src)] = true;
      for (std::size_t head = 0; head < queue.size(); ++head) {
        const SwitchId u = queue[head];
        for (SwitchId v = 0; v < n; ++v) {
          if (!seen[static_cast<std::size_t>(v)] && g.connected(u, v)) {
            seen[static_cast<std::size_t>(v)] = true;
            parent[static_cast<std::size_t>(v)] = u;
            queue.push_back(v);
          }
        }
      }
      for (SwitchId dst = 0; dst < n; ++dst) {
        if (dst == src || !seen[static_cast<std::size_t>(dst)]) continue;
        std::vector<LinkId> segs;
        for (SwitchId v = dst; v != src; v = parent[static_cast<std::size_t>(v)])
          segs.push_back({parent[static_cast<std::size_t>(v)], v});
        std::reverse(segs.begin(), segs.end());
        t.add(src, dst, std::move(segs), g);
      }
    }
    return t;
  }

 private:
  std::map<std::pair<SwitchId, SwitchId>, std::vector<LinkId>> table_;
};

/// A reclaim that happened on a specific link during path setup.
struct PathReclaim {
  LinkId link;
  ReclaimEvent event;
  std::vector<LinkId> victim_links;  // full path of the victim (preemptions)
};

/// End-to-end admission outcome.
struct PathDecision {
  bool accepted = false;
  std::string block_reason;
  std::optional<LinkId> blocked_at;
  LspAllocation allocation;             // populated iff accepted
  std::vector<PathReclaim> reclaims;    // committed even when a later link blocks
};

// Coordinates independent per-link engines into end-to-end LSP setup with
// all-or-nothing semantics. Admissions are serialized; each link decides
// from its own state only.
class Broker {
 public:
  Broker(NetworkGraph graph, PathTable paths, std::map<LinkId, ValidatedLinkConfig> configs)
      : graph_(std::move(graph)), paths_(std::move(paths)) {
    for (auto& [id, cfg] : configs) {
      if (!graph_.has_link(id)) throw ConfigError("config for unknown link " + to_string(id));
      engines_.emplace(id, LinkEngine(std::move(cfg)));
    }
    for (const auto& [id, lb] : graph_.links()) {
      (void)lb;
      if (!engines_.count(id)) throw ConfigError("link " + to_string(id) + " has no BAM config");
    }
  }

  const NetworkGraph& graph() const { return graph_; }
  const PathTable& paths() const { return paths_; }

  LinkEngine& engine(LinkId id) {
    auto it = engines_.find(id);
    if (it == engines_.end()) throw ConfigError("unknown link " + to_string(id));
    return it->second;
  }
  const LinkEngine& engine(LinkId id) const {
    return const_cast<Broker*>(this)->engine(id);
  }

  const std::vector<LinkId>* path_of(RequestId id) const {
    auto it = registry_.find(id);
    return it == registry_.end() ? nullptr : &it->second.links;
  }

  PathDecision admit_path(const LspRequest& req) {
    const auto* segments = paths_.find(req.source, req.destination);
    if (!segments)
      throw NoPath("no path from " + std::to_string(req.source) + " to " +
                   std::to_string(req.destination));

    PathDecision decision;
    std::vector<LinkId> granted;
    for (const LinkId& seg : *segments) {
      AdmitDecision d = engine(seg).admit(req);
      for (ReclaimEvent& ev : d.side_effects)
        handle_reclaim(seg, std::move(ev), decision.reclaims);
      if (!d.accepted) {
        // Roll back in reverse grant order. Reclaims already performed on
        // earlier links stand: a teardown cannot be undone.
        for (auto it = granted.rbegin(); it != granted.rend(); ++it)
          engine(*it).release(req.id);
        decision.accepted = false;
        decision.block_reason = d.block_reason;
        decision.blocked_at = seg;
        return decision;
      }
      granted.push_back(seg);
      decision.allocation.segments.push_back({seg, std::move(d.breakdown)});
    }

    decision.accepted = true;
    decision.allocation.id = req.id;
    decision.allocation.cls = req.cls;
    decision.allocation.demand = req.demand;
    registry_[req.id] = {*segments, req.cls, req.demand};
    return decision;
  }

  /// Releases the LSP on every segment of its path.
  void teardown_path(RequestId id) {
    auto it = registry_.find(id);
    if (it == registry_.end())
      throw UnknownRequest("request " + std::to_string(id) + " has no active path");
    for (const LinkId& seg : it->second.links) engine(seg).release(id);
    registry_.erase(it);
  }

  bool active(RequestId id) const { return registry_.count(id) > 0; }
  std::size_t active_count() const { return registry_.size(); }

  std::vector<RequestId> active_requests() const {
    std::vector<RequestId> ids;
    ids.reserve(registry_.size());
    for (const auto& [id, rec] : registry_) ids.push_back(id);
    return ids;
  }

  void validate() const {
    for (const auto& [id, eng] : engines_) {
      (void)id;
      eng.validate();
    }
  }

 private:
  struct PathRecord {
    std::vector<LinkId> links;
    ClassId cls = 0;
    Kbps demand = 0;
  };

  // An LSP is end-to-end: a preemption on one link tears it down everywhere.
  void handle_reclaim(LinkId where, ReclaimEvent ev, std::vector<PathReclaim>& out) {
    PathReclaim pr{where, ev, {}};
    if (ev.kind == ReclaimEvent::Kind::Preemption) {
      auto it = registry_.find(ev.victim);
      if (it != registry_.end()) {
        pr.victim_links = it->second.links;
        for (const LinkId& seg : it->second.links)
          if (!(seg == where)) engine(seg).release(ev.victim);
        registry_.erase(it);
      } else {
        pr.victim_links = {where};
      }
    } else {
      pr.victim_links = {where};
    }
    out.push_back(std::move(pr));
  }

  NetworkGraph graph_;
  PathTable paths_;
  std::map<LinkId, LinkEngine> engines_;
  std::map<RequestId, PathRecord> registry_;
};

}  // namespace bam
