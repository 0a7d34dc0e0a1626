#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace brwlab {

using Engine = std::mt19937_64;

// Output number index+1 of the SplitMix64 sequence started at `master`.
// Stateless, so any replica's seed is computable without the others.
std::uint64_t split_seed(std::uint64_t master, std::uint64_t index);

// Seed for replica `index` of the named stream; distinct tags give
// unrelated families of replica seeds under one master seed.
std::uint64_t stream_seed(std::uint64_t master, std::string_view tag, std::uint64_t index);

inline Engine make_engine(std::uint64_t master, std::string_view tag, std::uint64_t index) {
  return Engine(stream_seed(master, tag, index));
}

inline double uniform01(Engine& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// Uniform on the open interval (0, 1).
inline double uniform_open(Engine& rng) {
  double u;
  do {
    u = uniform01(rng);
  } while (u <= 0.0);
  return u;
}

}  // namespace brwlab
