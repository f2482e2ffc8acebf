#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace tsmbo {

double mean(std::span<const double> xs);

// Sample variance with the n-1 convention; 0 for fewer than two values.
double sample_variance(std::span<const double> xs);

// Pearson correlation coefficient; nullopt when either side has zero variance.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

// Lower empirical quantile (inverse CDF convention): always returns an
// element of xs, so text round-trips of summaries stay exact. p in (0, 1].
double quantile(std::vector<double> xs, double p);

// Mid-ranks (ties averaged), 1-based.
std::vector<double> mid_ranks(std::span<const double> xs);

// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);

// Chi-square survival function P(X > x) with k degrees of freedom.
double chi_square_sf(double x, int dof);

struct KruskalWallisResult {
  double h = 0.0;
  double p_value = 1.0;
  int dof = 0;
};

// Kruskal-Wallis rank sum test with mid-rank ties and the standard tie
// correction. All values identical across groups gives H = 0, p = 1.
// Requires at least two groups, each nonempty.
KruskalWallisResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

}  // namespace tsmbo
