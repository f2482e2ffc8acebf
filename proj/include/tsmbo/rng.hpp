#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tsmbo {

// Deterministic uniform draws on top of mt19937_64. The standard library
// distributions are implementation-defined, so byte-reproducible runs need
// fixed mappings from raw engine output to values.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform index in [0, n); n must be positive.
  std::size_t uniform_index(std::size_t n) { return engine_() % n; }

  // Uniform integer in [lo, hi], both inclusive.
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(uniform_index(static_cast<std::size_t>(hi - lo) + 1));
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller (one value per call, second discarded).
  double normal();

 private:
  std::mt19937_64 engine_;
};

// FNV-1a over (master, tags...). Per-run seeds derive from this so adding
// strategies or problems never perturbs the streams of existing runs.
std::uint64_t derive_seed(std::uint64_t master, std::string_view problem,
                          std::string_view strategy, std::uint64_t repetition);

}  // namespace tsmbo
