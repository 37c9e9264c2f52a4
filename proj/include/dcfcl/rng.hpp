#pragma once

#include <cstdint>
#include <initializer_list>

namespace dcfcl {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream tags for seed fan-out. Every random draw in a run is seeded with
/// derive_seed(run_seed, {tag, index...}).
enum class SeedStream : std::uint64_t {
  kClassPool = 1,
  kTaskDraw = 2,
  kClientData = 3,
  kClientShift = 4,
  kGroupDomain = 5,
  kLocalTrain = 6,
};

constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(base);
  for (std::uint64_t p : path) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

constexpr std::uint64_t derive_seed(std::uint64_t base, SeedStream stream,
                                    std::uint64_t a = 0, std::uint64_t b = 0) {
  return derive_seed(base, {static_cast<std::uint64_t>(stream), a, b});
}

}  // namespace dcfcl
