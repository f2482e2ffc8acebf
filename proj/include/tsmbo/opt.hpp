#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace tsmbo {

struct BoxBounds {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dim() const { return lower.size(); }
  bool contains(std::span<const double> x) const;
};

struct OptResult {
  std::vector<double> best_point;
  double best_value = 0.0;
  std::size_t evaluations = 0;
};

using Objective = std::function<double(std::span<const double>)>;

// Locally biased DIRECT (DIRECT-L): one size measure per rectangle (longest
// side), at most one rectangle per size group is selected, and splits happen
// along a single longest side. Deterministic; consumes exactly max_evals
// objective evaluations and returns the best center seen. Non-finite
// objective values are treated as a huge ordinary value.
OptResult direct_minimize(const Objective& f, const BoxBounds& bounds,
                          std::size_t max_evals);

// Standard Nelder-Mead simplex (reflection 1, expansion 2, contraction 0.5,
// shrink 0.5). The initial simplex is x0 plus per-coordinate steps of 5% of
// the box width (flipped when the step would leave the box); trial points are
// clamped to the box. Stops at max_evals or when the simplex diameter drops
// below 1e-10. Returns the best point actually evaluated.
OptResult nelder_mead(const Objective& f, std::span<const double> x0,
                      const BoxBounds& bounds, std::size_t max_evals);

}  // namespace tsmbo
