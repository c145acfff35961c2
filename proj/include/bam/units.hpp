#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bam {

// Bandwidth is kept in integral kilobits per second so partition sums and
// conservation checks are exact. Configs given in Mbps convert on ingest.
using Kbps = std::int64_t;

// Simulated clock in integer milliseconds; event ordering is total.
using Tick = std::int64_t;

using ClassId   = int;
using SwitchId  = int;
using RequestId = std::uint64_t;

constexpr Kbps kbps_from_mbps(double mbps) {
  return static_cast<Kbps>(mbps * 1000.0 + (mbps >= 0 ? 0.5 : -0.5));
}

constexpr double mbps_from_kbps(Kbps kbps) { return static_cast<double>(kbps) / 1000.0; }

constexpr Tick ticks_from_seconds(double s) {
  return static_cast<Tick>(s * 1000.0 + 0.5);
}

constexpr double seconds_from_ticks(Tick t) { return static_cast<double>(t) / 1000.0; }

/// A directed link sw_i -> sw_j.
struct LinkId {
  SwitchId from = 0;
  SwitchId to = 0;

  friend auto operator<=>(const LinkId&, const LinkId&) = default;
};

inline std::string to_string(const LinkId& l) {
  return std::to_string(l.from) + "-" + std::to_string(l.to);
}

// Error hierarchy. Each class of failure maps to a distinct CLI exit code.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error { using Error::Error; };      // validation failures
struct OverCommitted : ConfigError { using ConfigError::ConfigError; };
struct DuplicatePriority : ConfigError { using ConfigError::ConfigError; };
struct BadSharingLimit : ConfigError { using ConfigError::ConfigError; };

struct EngineError : Error { using Error::Error; };      // misuse of an engine
struct UnknownClass : EngineError { using EngineError::EngineError; };
struct InvalidDemand : EngineError { using EngineError::EngineError; };
struct UnknownRequest : EngineError { using EngineError::EngineError; };
struct NothingToReclaim : EngineError { using EngineError::EngineError; };

struct NoPath : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct InvalidScenario : Error { using Error::Error; };
struct TraceMismatch : Error { using Error::Error; };
struct CorruptLog : Error { using Error::Error; };

}  // namespace bam
