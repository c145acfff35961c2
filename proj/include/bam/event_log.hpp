#pragma once

#include <string>
#include <vector>

#include "bam/units.hpp"

namespace bam {

enum class EventKind { Arrival, Accept, Block, Devolution, Preemption, Release };

inline std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::Arrival: return "arrival";
    case EventKind::Accept: return "accept";
    case EventKind::Block: return "block";
    case EventKind::Devolution: return "devolution";
    case EventKind::Preemption: return "preemption";
    case EventKind::Release: return "release";
  }
  return "?";
}

inline bool event_kind_from_string(const std::string& s, EventKind& out) {
  if (s == "arrival") out = EventKind::Arrival;
  else if (s == "accept") out = EventKind::Accept;
  else if (s == "block") out = EventKind::Block;
  else if (s == "devolution") out = EventKind::Devolution;
  else if (s == "preemption") out = EventKind::Preemption;
  else if (s == "release") out = EventKind::Release;
  else return false;
  return true;
}

// One log record. `bw` is the LSP demand, except for devolution records
// where it is the re-housed slice. `links` is the LSP's path, except for
// devolution records where it is the single link the slice moved on.
struct EventRecord {
  Tick time = 0;
  EventKind kind = EventKind::Arrival;
  RequestId request = 0;
  ClassId cls = 0;
  Kbps bw = 0;
  std::vector<LinkId> links;
  int phase = 0;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct RunInfo {
  std::string scenario;
  std::string model;
  std::uint64_t seed = 0;
  std::string rng;
  Tick duration = 0;
  std::vector<Tick> phase_ends;  // cumulative phase boundaries
};

/// Timestamped admission/block/preemption/devolution/release history of one
/// run; the substrate for all metrics and conformance checks.
struct EventLog {
  RunInfo info;
  std::vector<EventRecord> records;
};

inline int phase_at(const std::vector<Tick>& phase_ends, Tick t) {
  for (std::size_t i = 0; i < phase_ends.size(); ++i)
    if (t < phase_ends[i]) return static_cast<int>(i);
  return phase_ends.empty() ? 0 : static_cast<int>(phase_ends.size()) - 1;
}

}  // namespace bam
