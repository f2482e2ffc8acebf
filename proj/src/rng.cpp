#include "tsmbo/rng.hpp"

#include <cmath>

namespace tsmbo {

double Rng::normal() {
  // Box-Muller; u1 nudged away from 0 to keep the log finite.
  double u1 = uniform();
  double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

void fnv_string(std::uint64_t& h, std::string_view s) {
  fnv_bytes(h, s.data(), s.size());
  const unsigned char sep = 0xff;  // keeps ("ab","c") distinct from ("a","bc")
  fnv_bytes(h, &sep, 1);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view problem,
                          std::string_view strategy, std::uint64_t repetition) {
  std::uint64_t h = kFnvOffset;
  fnv_bytes(h, &master, sizeof(master));
  fnv_string(h, problem);
  fnv_string(h, strategy);
  fnv_bytes(h, &repetition, sizeof(repetition));
  // Avoid the all-zero state family of mt19937_64 seeds looking alike.
  return h ^ (h >> 32);
}

}  // namespace tsmbo
