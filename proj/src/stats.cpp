#include "tsmbo/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tsmbo {

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  if (x.size() < 2) return std::nullopt;
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

double quantile(std::vector<double> xs, double p) {
  if (xs.empty()) throw std::invalid_argument("quantile of empty sample");
  if (p <= 0.0 || p > 1.0) throw std::invalid_argument("quantile level outside (0,1]");
  std::sort(xs.begin(), xs.end());
  const auto n = static_cast<double>(xs.size());
  auto k = static_cast<std::size_t>(std::ceil(n * p));
  if (k < 1) k = 1;
  return xs[k - 1];
}

std::vector<double> mid_ranks(std::span<const double> xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

namespace {

// Lanczos-free ln Gamma via the Stirling series with argument shift; accurate
// to well below 1e-12 for a > 0.
double ln_gamma(double a) {
  static const double coeffs[6] = {76.18009172947146,  -86.50532032941677,
                                   24.01409824083091,  -1.231739572450155,
                                   0.1208650973866179e-2, -0.5395239384953e-5};
  double x = a;
  double y = a;
  double tmp = x + 5.5;
  tmp -= (x + 0.5) * std::log(tmp);
  double ser = 1.000000000190015;
  for (double c : coeffs) ser += c / ++y;
  return -tmp + std::log(2.5066282746310005 * ser / x);
}

// Series expansion of P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 1000; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - ln_gamma(a));
}

// Continued fraction for Q(a, x), valid for x >= a + 1.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 1000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - ln_gamma(a)) * h;
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (a <= 0.0) throw std::invalid_argument("gamma_p: a must be positive");
  if (x < 0.0) throw std::invalid_argument("gamma_p: x must be non-negative");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double chi_square_sf(double x, int dof) {
  if (dof < 1) throw std::invalid_argument("chi_square_sf: dof must be >= 1");
  if (x <= 0.0) return 1.0;
  const double a = static_cast<double>(dof) / 2.0;
  if (x / 2.0 < a + 1.0) return 1.0 - gamma_p_series(a, x / 2.0);
  return gamma_q_cf(a, x / 2.0);
}

KruskalWallisResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw std::invalid_argument("kruskal_wallis: need >= 2 groups");
  std::size_t total = 0;
  for (const auto& g : groups) {
    if (g.empty()) throw std::invalid_argument("kruskal_wallis: empty group");
    total += g.size();
  }

  std::vector<double> pooled;
  pooled.reserve(total);
  for (const auto& g : groups) pooled.insert(pooled.end(), g.begin(), g.end());
  const std::vector<double> ranks = mid_ranks(pooled);

  const double n = static_cast<double>(total);
  double h = 0.0;
  std::size_t offset = 0;
  for (const auto& g : groups) {
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) rank_sum += ranks[offset + i];
    h += rank_sum * rank_sum / static_cast<double>(g.size());
    offset += g.size();
  }
  h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);

  // Tie correction: 1 - sum(t^3 - t) / (N^3 - N).
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_sum = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    tie_sum += t * t * t - t;
    i = j + 1;
  }
  const double correction = 1.0 - tie_sum / (n * n * n - n);

  KruskalWallisResult out;
  out.dof = static_cast<int>(groups.size()) - 1;
  if (correction <= 0.0) {
    // Every pooled value identical.
    out.h = 0.0;
    out.p_value = 1.0;
    return out;
  }
  out.h = h / correction;
  if (out.h <= 0.0) {
    out.h = std::max(out.h, 0.0);
    out.p_value = 1.0;
    return out;
  }
  out.p_value = chi_square_sf(out.h, out.dof);
  return out;
}

}  // namespace tsmbo
