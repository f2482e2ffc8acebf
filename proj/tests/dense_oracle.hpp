#pragma once

// Test-only dense linear algebra: Gauss-Jordan inverse and Gaussian
// elimination determinant, used as an independent route to the Kriging
// likelihood and predictor (the implementation goes through a Cholesky
// factorization instead).

#include <cmath>
#include <stdexcept>
#include <vector>

namespace test_util {

struct Dense {
  std::size_t n = 0;
  std::vector<double> a;  // row-major

  explicit Dense(std::size_t n_) : n(n_), a(n_ * n_, 0.0) {}
  double& at(std::size_t i, std::size_t j) { return a[i * n + j]; }
  double at(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

inline Dense gauss_jordan_inverse(Dense m) {
  const std::size_t n = m.n;
  Dense inv(n);
  for (std::size_t i = 0; i < n; ++i) inv.at(i, i) = 1.0;

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(m.at(r, col)) > std::abs(m.at(pivot, col))) pivot = r;
    }
    if (m.at(pivot, col) == 0.0) throw std::runtime_error("singular matrix");
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) {
        std::swap(m.at(pivot, c), m.at(col, c));
        std::swap(inv.at(pivot, c), inv.at(col, c));
      }
    }
    const double d = m.at(col, col);
    for (std::size_t c = 0; c < n; ++c) {
      m.at(col, c) /= d;
      inv.at(col, c) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double factor = m.at(r, col);
      if (factor == 0.0) continue;
      for (std::size_t c = 0; c < n; ++c) {
        m.at(r, c) -= factor * m.at(col, c);
        inv.at(r, c) -= factor * inv.at(col, c);
      }
    }
  }
  return inv;
}

inline double log_determinant(Dense m) {
  const std::size_t n = m.n;
  double log_det = 0.0;
  double sign = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(m.at(r, col)) > std::abs(m.at(pivot, col))) pivot = r;
    }
    if (m.at(pivot, col) == 0.0) throw std::runtime_error("singular matrix");
    if (pivot != col) {
      sign = -sign;
      for (std::size_t c = col; c < n; ++c) std::swap(m.at(pivot, c), m.at(col, c));
    }
    const double d = m.at(col, col);
    log_det += std::log(std::abs(d));
    if (d < 0.0) sign = -sign;
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = m.at(r, col) / d;
      if (factor == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) m.at(r, c) -= factor * m.at(col, c);
    }
  }
  if (sign < 0.0) throw std::runtime_error("negative determinant for a kernel matrix");
  return log_det;
}

inline std::vector<double> mat_vec(const Dense& m, const std::vector<double>& v) {
  std::vector<double> out(m.n, 0.0);
  for (std::size_t i = 0; i < m.n; ++i) {
    for (std::size_t j = 0; j < m.n; ++j) out[i] += m.at(i, j) * v[j];
  }
  return out;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct KrigingOracle {
  double mu = 0.0;
  double sigma2 = 0.0;
  double nll = 0.0;
  Dense kinv{1};
  std::vector<double> y;

  // K includes the nugget on its diagonal.
  KrigingOracle(const Dense& K, std::vector<double> y_in) : kinv(K.n), y(std::move(y_in)) {
    const std::size_t n = K.n;
    kinv = gauss_jordan_inverse(K);
    const std::vector<double> ones(n, 1.0);
    const std::vector<double> kinv_y = mat_vec(kinv, y);
    const std::vector<double> kinv_ones = mat_vec(kinv, ones);
    mu = dot(ones, kinv_y) / dot(ones, kinv_ones);
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = y[i] - mu;
    sigma2 = dot(r, mat_vec(kinv, r)) / static_cast<double>(n);
    nll = 0.5 * static_cast<double>(n) * std::log(sigma2) + 0.5 * log_determinant(K);
  }

  // Prediction from a kernel vector k to the training points.
  std::pair<double, double> predict(const std::vector<double>& k, double nugget) const {
    const std::size_t n = kinv.n;
    const std::vector<double> ones(n, 1.0);
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = y[i] - mu;
    const double mean = mu + dot(k, mat_vec(kinv, r));
    const std::vector<double> kinv_k = mat_vec(kinv, k);
    const double reversion = 1.0 - dot(ones, kinv_k);
    const double one_kinv_one = dot(ones, mat_vec(kinv, ones));
    double s2 = sigma2 * (1.0 + nugget - dot(k, kinv_k) + reversion * reversion / one_kinv_one);
    return {mean, std::sqrt(std::max(s2, 0.0))};
  }
};

}  // namespace test_util
