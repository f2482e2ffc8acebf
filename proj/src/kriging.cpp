#include "tsmbo/kriging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tsmbo/opt.hpp"

namespace tsmbo {

double kernel_value(const DistanceTriple& d, const KernelWeights& w) {
  return std::exp(-w.beta_shd2 * d.shd2 - w.beta_phd * d.phd - w.beta_ted * d.ted);
}

double normal_pdf(double x) {
  return 0.3989422804014327 * std::exp(-0.5 * x * x);
}

double normal_cdf(double x) {
  return 0.5 * std::erfc(-x * 0.7071067811865476);
}

double expected_improvement(const Prediction& p, double y_min) {
  if (p.sd <= 0.0) return 0.0;
  const double u = (y_min - p.mean) / p.sd;
  const double ei = (y_min - p.mean) * normal_cdf(u) + p.sd * normal_pdf(u);
  return std::max(ei, 0.0);
}

namespace {

constexpr double kNuggetCap = 1.0;
constexpr double kMinProcessVariance = 1e-300;

Eigen::MatrixXd combined_kernel_matrix(const KernelWeights& w, const DistanceMatrix& shd2,
                                       const DistanceMatrix& phd, const DistanceMatrix& ted) {
  const auto n = static_cast<Eigen::Index>(shd2.n);
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto ii = static_cast<std::size_t>(i);
      const auto jj = static_cast<std::size_t>(j);
      const double v = kernel_value({shd2(ii, jj), phd(ii, jj), ted(ii, jj)}, w);
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

struct LikelihoodCore {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double mu = 0.0;
  double sigma2 = 0.0;
  double nll = 0.0;
  double effective_nugget = 0.0;
};

// Cholesky of K0 + nugget*I with x10 escalation up to the cap; throws
// ModelFitError when even the cap fails.
LikelihoodCore likelihood_core(const Eigen::MatrixXd& K0, const Eigen::VectorXd& y,
                               double nugget) {
  const Eigen::Index n = K0.rows();
  double eta = nugget;
  while (true) {
    Eigen::MatrixXd K = K0;
    K.diagonal().array() += eta;
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() == Eigen::Success) {
      LikelihoodCore core;
      core.effective_nugget = eta;
      const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
      const Eigen::VectorXd kinv_y = llt.solve(y);
      const Eigen::VectorXd kinv_ones = llt.solve(ones);
      const double denom = ones.dot(kinv_ones);
      core.mu = ones.dot(kinv_y) / denom;
      const Eigen::VectorXd r = y - core.mu * ones;
      core.sigma2 = r.dot(llt.solve(r)) / static_cast<double>(n);
      double log_det = 0.0;
      const auto& L = llt.matrixLLT();
      for (Eigen::Index i = 0; i < n; ++i) log_det += 2.0 * std::log(L(i, i));
      core.nll = 0.5 * static_cast<double>(n) *
                     std::log(std::max(core.sigma2, kMinProcessVariance)) +
                 0.5 * log_det;
      core.llt = std::move(llt);
      return core;
    }
    if (eta >= kNuggetCap) {
      throw ModelFitError("kernel matrix is not positive definite even at nugget cap");
    }
    eta = std::min(eta * 10.0, kNuggetCap);
  }
}

}  // namespace

double neg_concentrated_log_likelihood(const KernelWeights& w, const DistanceMatrix& shd2,
                                       const DistanceMatrix& phd, const DistanceMatrix& ted,
                                       std::span<const double> y) {
  if (shd2.n != phd.n || shd2.n != ted.n || y.size() != shd2.n) {
    throw std::invalid_argument("kernel matrices and y are inconsistent");
  }
  if (y.size() < 2) throw std::invalid_argument("need at least 2 training points");
  const Eigen::MatrixXd K0 = combined_kernel_matrix(w, shd2, phd, ted);
  Eigen::VectorXd yv(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) yv(static_cast<Eigen::Index>(i)) = y[i];
  return likelihood_core(K0, yv, w.nugget).nll;
}

KrigingModel KrigingModel::build(std::vector<TreeId> train_ids, std::vector<double> y,
                                 DistanceContext& ctx, const KernelWeights& w) {
  if (train_ids.size() != y.size()) throw std::invalid_argument("trees/y size mismatch");
  if (train_ids.size() < 2) throw std::invalid_argument("need at least 2 training points");

  KrigingModel m;
  m.train_ids_ = std::move(train_ids);
  m.y_ = std::move(y);
  m.weights_ = w;

  const auto [lo, hi] = std::minmax_element(m.y_.begin(), m.y_.end());
  if (*lo == *hi) {
    m.degenerate_ = true;
    m.degenerate_mean_ = *lo;
    m.mu_ = *lo;
    return m;
  }

  const std::size_t n = m.train_ids_.size();
  Eigen::MatrixXd K0(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    K0(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = kernel_value(ctx.triple(m.train_ids_[i], m.train_ids_[j]), w);
      K0(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      K0(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  Eigen::VectorXd yv(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) yv(static_cast<Eigen::Index>(i)) = m.y_[i];

  LikelihoodCore core = likelihood_core(K0, yv, w.nugget);
  m.weights_.nugget = core.effective_nugget;
  m.mu_ = core.mu;
  m.sigma2_ = core.sigma2;
  m.nll_ = core.nll;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  m.alpha_ = core.llt.solve(yv - core.mu * ones);
  m.kinv_ones_ = core.llt.solve(ones);
  m.one_kinv_one_ = ones.dot(m.kinv_ones_);
  m.llt_ = std::move(core.llt);
  return m;
}

KrigingModel KrigingModel::fit(std::vector<TreeId> train_ids, std::vector<double> y,
                               DistanceContext& ctx, const FitOptions& options) {
  if (train_ids.size() != y.size()) throw std::invalid_argument("trees/y size mismatch");
  if (train_ids.size() < 2) throw std::invalid_argument("need at least 2 training points");
  if (options.kernel.active_count() == 0) {
    throw std::invalid_argument("at least one distance must be active");
  }

  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  if (*lo == *hi) {
    // Degenerate regardless of kernel parameters; skip the MLE.
    return build(std::move(train_ids), std::move(y), ctx, KernelWeights{0, 0, 0, 1e-6});
  }

  const std::size_t n = train_ids.size();
  DistanceMatrix shd2_m(DistanceMeasure::Shd2, n);
  DistanceMatrix phd_m(DistanceMeasure::Phd, n);
  DistanceMatrix ted_m(DistanceMeasure::Ted, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const DistanceTriple t = ctx.triple(train_ids[i], train_ids[j]);
      shd2_m(i, j) = shd2_m(j, i) = t.shd2;
      phd_m(i, j) = phd_m(j, i) = t.phd;
      ted_m(i, j) = ted_m(j, i) = t.ted;
    }
  }

  // MLE in log10 space over the active weights plus the nugget.
  const int active = options.kernel.active_count();
  BoxBounds box;
  box.lower.assign(static_cast<std::size_t>(active) + 1, options.log10_beta_lo);
  box.upper.assign(static_cast<std::size_t>(active) + 1, options.log10_beta_hi);
  box.lower.back() = options.log10_nugget_lo;
  box.upper.back() = options.log10_nugget_hi;

  auto unpack = [&](std::span<const double> params) {
    KernelWeights w{0.0, 0.0, 0.0, 0.0};
    std::size_t k = 0;
    if (options.kernel.use_shd2) w.beta_shd2 = std::pow(10.0, params[k++]);
    if (options.kernel.use_phd) w.beta_phd = std::pow(10.0, params[k++]);
    if (options.kernel.use_ted) w.beta_ted = std::pow(10.0, params[k++]);
    w.nugget = std::pow(10.0, params[k]);
    return w;
  };

  const auto objective = [&](std::span<const double> params) -> double {
    try {
      return neg_concentrated_log_likelihood(unpack(params), shd2_m, phd_m, ted_m, y);
    } catch (const ModelFitError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  const OptResult r = direct_minimize(objective, box, options.likelihood_budget);
  return build(std::move(train_ids), std::move(y), ctx, unpack(r.best_point));
}

Prediction KrigingModel::predict(const DistanceContext::Candidate& candidate,
                                 const DistanceContext& ctx) const {
  if (degenerate_) return {degenerate_mean_, 0.0};

  const auto n = static_cast<Eigen::Index>(train_ids_.size());
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i) = kernel_value(ctx.triple(candidate, train_ids_[static_cast<std::size_t>(i)]),
                        weights_);
  }

  Prediction p;
  p.mean = mu_ + k.dot(alpha_);
  const Eigen::VectorXd kinv_k = llt_.solve(k);
  const double reversion = 1.0 - kinv_ones_.dot(k);
  double s2 = sigma2_ * (1.0 + weights_.nugget - k.dot(kinv_k) +
                         reversion * reversion / one_kinv_one_);
  p.sd = std::sqrt(std::max(s2, 0.0));
  return p;
}

Prediction KrigingModel::predict(const ExprTree& tree, DistanceContext& ctx) const {
  return predict(ctx.make_candidate(tree), ctx);
}

NormalizedWeights KrigingModel::normalized_weights() const {
  const double sum = weights_.beta_shd2 + weights_.beta_phd + weights_.beta_ted;
  if (sum <= 0.0) {
    // Degenerate fit (constant y): report an even split over the distances.
    return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  }
  return {weights_.beta_shd2 / sum, weights_.beta_phd / sum, weights_.beta_ted / sum};
}

std::string KrigingModel::summary_json() const {
  std::ostringstream out;
  out.precision(17);
  out << "{\"beta_shd2\":" << weights_.beta_shd2 << ",\"beta_phd\":" << weights_.beta_phd
      << ",\"beta_ted\":" << weights_.beta_ted << ",\"nugget\":" << weights_.nugget
      << ",\"mu\":" << mu_ << ",\"sigma2\":" << sigma2_
      << ",\"neg_log_likelihood\":" << nll_ << ",\"training_size\":" << train_ids_.size()
      << ",\"degenerate\":" << (degenerate_ ? "true" : "false") << "}";
  return out.str();
}

}  // namespace tsmbo
