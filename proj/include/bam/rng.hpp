#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "bam/units.hpp"

namespace bam {

// splitmix64; used only to derive independent stream seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t x = master ^ ((stream + 1) * 0x9e3779b97f4a7c15ULL);
  splitmix64(x);
  return splitmix64(x);
}

// One independent random stream. The generator is mt19937_64 (fully specified
// by the standard, so sequences are identical across platforms); all variate
// transforms are done here rather than with std:: distributions, whose output
// is implementation-defined.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
      : engine_(derive_stream_seed(master_seed, stream_index)) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Exponential with the given mean; inverse CDF of a uniform01 draw.
  double exponential(double mean) {
    return -mean * std::log1p(-uniform01());
  }

  // Uniform integer in [lo, hi], both inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    const auto v = static_cast<std::int64_t>(engine_() % span);
    return lo + v;
  }

  static std::string name() { return "mt19937_64+splitmix64-streams"; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bam
