#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsmbo/expr_ops.hpp"
#include "tsmbo/kriging.hpp"
#include "tsmbo/problems.hpp"
#include "tsmbo/rng.hpp"

namespace tsmbo {

// Bundles one benchmark instance with its dataset and counts upper-level
// evaluations (the budgets of Sec. 5 are counts of these).
class UpperProblem {
 public:
  explicit UpperProblem(ProblemSpec spec);

  const ProblemSpec& spec() const { return spec_; }
  const Dataset& data() const { return data_; }
  const OperatorSet& ops() const { return ops_; }

  UpperEvaluation evaluate(const ExprTree& tree);
  std::size_t upper_evaluations() const { return upper_evaluations_; }

 private:
  ProblemSpec spec_;
  Dataset data_;
  OperatorSet ops_;
  std::size_t upper_evaluations_ = 0;
};

struct SearchBudget {
  std::size_t total = 100;           // upper-level evaluations
  std::size_t initial_design = 20;   // random trees before the first model
  std::size_t ei_evaluations = 10000;  // surrogate-search budget per iteration
};

struct EAParams {
  std::size_t mu = 15;
  std::size_t lambda = 1;
  GeneratorParams generator;
  MutationParams mutation;
};

struct EvalLogEntry {
  std::size_t index = 0;  // 1-based evaluation index
  std::string sexpr;
  double fitness = 1.0;
  double best_so_far = 1.0;
};

struct WeightLogEntry {
  std::size_t iteration = 0;  // 1-based model iteration
  double w_phd = 0.0;
  double w_ted = 0.0;
  double w_shd2 = 0.0;
};

struct RunRecord {
  std::string strategy;
  std::vector<EvalLogEntry> evaluations;
  std::vector<WeightLogEntry> weights;  // SMBO only
  std::string best_sexpr;
  double best_fitness = 1.0;
  std::vector<std::string> notes;  // fallback events etc.

  double best_after(std::size_t evaluations_used) const;
};

RunRecord random_search(UpperProblem& problem, std::size_t budget, Rng& rng,
                        const GeneratorParams& generator = {});

// Called after each truncation step with the survivors' fitness values.
using GenerationObserver = std::function<void(std::span<const double>)>;

// (mu+lambda) EA with truncation survival and uniform parent selection; the
// initial population counts against the budget.
RunRecord ea_optimize(UpperProblem& problem, const EAParams& params,
                      std::size_t budget, Rng& rng,
                      const GenerationObserver& observer = {});

struct SmboConfig {
  SearchBudget budget;
  KernelConfig kernel;
  std::size_t inner_mu = 200;
  std::size_t inner_lambda = 10;
  FitOptions fit;  // fit.kernel is overwritten by `kernel`
  GeneratorParams generator;
  MutationParams mutation;
  std::size_t dedupe_retries = 100;
};

// EGO-style loop: random initial design, then per iteration fit the Kriging
// model on the whole archive, search EI with an inner EA (never touching the
// upper-level objective), dedupe the proposal against the archive, evaluate
// it, and log the normalized kernel weights.
RunRecord smbo(UpperProblem& problem, const SmboConfig& config, Rng& rng,
               const std::string& label = "smbo");

// SMBO with the other two kernel weights frozen at 0.
RunRecord single_distance_smbo(UpperProblem& problem, DistanceMeasure which,
                               const SmboConfig& config, Rng& rng);

// CSV contracts: eval rows `eval_idx,strategy,tree_sexpr,F,best_so_far`;
// weight rows `iter_idx,w_phd,w_ted,w_shd2`.
std::string run_record_csv(const RunRecord& record);
std::string weight_log_csv(const RunRecord& record);

}  // namespace tsmbo
