#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsmbo/distance.hpp"

namespace tsmbo {

struct KernelWeights {
  double beta_shd2 = 1.0;
  double beta_phd = 1.0;
  double beta_ted = 1.0;
  double nugget = 1e-6;
};

// Which distances participate in the combined kernel; a disabled distance has
// its weight frozen at 0 (the single-distance ablations).
struct KernelConfig {
  bool use_shd2 = true;
  bool use_phd = true;
  bool use_ted = true;

  int active_count() const { return int(use_shd2) + int(use_phd) + int(use_ted); }
};

// exp(-beta1 d_shd2 - beta2 d_phd - beta3 d_ted); 1 iff all distances are 0.
double kernel_value(const DistanceTriple& d, const KernelWeights& w);

struct Prediction {
  double mean = 0.0;
  double sd = 0.0;
};

// Expected improvement under the minimization convention; 0 when sd is 0.
double expected_improvement(const Prediction& p, double y_min);

double normal_cdf(double x);
double normal_pdf(double x);

struct ModelFitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FitOptions {
  KernelConfig kernel;
  std::size_t likelihood_budget = 1000;
  double log10_beta_lo = -4.0;
  double log10_beta_hi = 2.0;
  double log10_nugget_lo = -8.0;
  double log10_nugget_hi = -2.0;
};

// Concentrated negative log-likelihood of ordinary Kriging with the combined
// kernel: K_ij = k(d_ij) + nugget on the diagonal, mu and sigma^2 profiled
// out. A failed Cholesky retries with the nugget escalated by 10x up to 1.0,
// then throws ModelFitError.
double neg_concentrated_log_likelihood(const KernelWeights& w, const DistanceMatrix& shd2,
                                       const DistanceMatrix& phd, const DistanceMatrix& ted,
                                       std::span<const double> y);

struct NormalizedWeights {
  double shd2 = 0.0;
  double phd = 0.0;
  double ted = 0.0;
};

// Ordinary Kriging over trees through the three-distance kernel.
class KrigingModel {
 public:
  // MLE fit: DIRECT over (log10 beta..., log10 nugget) within the FitOptions
  // box, likelihood_budget objective evaluations. Requires >= 2 training
  // trees. A constant y vector yields a degenerate model whose predictions
  // are (mean(y), 0).
  static KrigingModel fit(std::vector<TreeId> train_ids, std::vector<double> y,
                          DistanceContext& ctx, const FitOptions& options = {});

  // Builds the model at fixed kernel weights (no MLE).
  static KrigingModel build(std::vector<TreeId> train_ids, std::vector<double> y,
                            DistanceContext& ctx, const KernelWeights& w);

  Prediction predict(const DistanceContext::Candidate& candidate,
                     const DistanceContext& ctx) const;
  Prediction predict(const ExprTree& tree, DistanceContext& ctx) const;

  const KernelWeights& weights() const { return weights_; }
  NormalizedWeights normalized_weights() const;

  bool degenerate() const { return degenerate_; }
  std::size_t training_size() const { return train_ids_.size(); }
  const std::vector<TreeId>& training_ids() const { return train_ids_; }
  double process_mean() const { return mu_; }
  double process_variance() const { return sigma2_; }
  double neg_log_likelihood() const { return nll_; }

  // JSON summary: beta, nugget, mu, sigma2, log-likelihood, training size.
  std::string summary_json() const;

 private:
  KrigingModel() = default;

  std::vector<TreeId> train_ids_;
  std::vector<double> y_;
  KernelWeights weights_;
  bool degenerate_ = false;
  double degenerate_mean_ = 0.0;

  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;      // K^-1 (y - mu 1)
  Eigen::VectorXd kinv_ones_;  // K^-1 1
  double one_kinv_one_ = 0.0;
  double mu_ = 0.0;
  double sigma2_ = 0.0;
  double nll_ = 0.0;
};

}  // namespace tsmbo
