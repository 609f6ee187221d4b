#pragma once

#include <cstdint>
#include <random>

namespace picmot {

/// Deterministic sampling stream. Every operation that samples takes one of
/// these explicitly, so results are reproducible from the seed alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::int64_t uniform(std::int64_t lo, std::int64_t hi) {  // inclusive
    std::uniform_int_distribution<std::int64_t> d(lo, hi);
    return d(eng_);
  }

  bool coin() { return uniform(0, 1) == 1; }

  std::uint64_t raw() { return eng_(); }

  Rng fork() { return Rng(eng_()); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace picmot
