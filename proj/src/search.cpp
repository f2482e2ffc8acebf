#include "tsmbo/search.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "tsmbo/io.hpp"

namespace tsmbo {

UpperProblem::UpperProblem(ProblemSpec spec)
    : spec_(std::move(spec)), data_(make_dataset(spec_)), ops_(spec_.operator_set()) {}

UpperEvaluation UpperProblem::evaluate(const ExprTree& tree) {
  ++upper_evaluations_;
  return evaluate_upper(tree, data_, spec_.constant_bounds);
}

double RunRecord::best_after(std::size_t evaluations_used) const {
  double best = 1.0;
  for (const auto& e : evaluations) {
    if (e.index > evaluations_used) break;
    best = e.best_so_far;
  }
  return best;
}

namespace {

void log_evaluation(RunRecord& record, const std::string& sexpr, double fitness) {
  EvalLogEntry entry;
  entry.index = record.evaluations.size() + 1;
  entry.sexpr = sexpr;
  entry.fitness = fitness;
  if (record.evaluations.empty() || fitness < record.best_fitness) {
    record.best_fitness = fitness;
    record.best_sexpr = sexpr;
  }
  entry.best_so_far = record.best_fitness;
  record.evaluations.push_back(std::move(entry));
}

struct Individual {
  ExprTree tree;
  double fitness = 1.0;
};

}  // namespace

RunRecord random_search(UpperProblem& problem, std::size_t budget, Rng& rng,
                        const GeneratorParams& generator) {
  RunRecord record;
  record.strategy = "rs";
  for (std::size_t i = 0; i < budget; ++i) {
    const ExprTree tree = ramped_half_and_half(problem.ops(), generator, rng);
    const UpperEvaluation e = problem.evaluate(tree);
    log_evaluation(record, format_sexpr(tree), e.fitness);
  }
  return record;
}

RunRecord ea_optimize(UpperProblem& problem, const EAParams& params, std::size_t budget,
                      Rng& rng, const GenerationObserver& observer) {
  if (params.mu < 1 || params.lambda < 1) {
    throw std::invalid_argument("mu and lambda must be >= 1");
  }
  RunRecord record;
  record.strategy =
      "ea_mu" + std::to_string(params.mu) + "_lambda" + std::to_string(params.lambda);

  std::vector<Individual> population;
  population.reserve(params.mu);
  std::size_t used = 0;

  for (std::size_t i = 0; i < params.mu && used < budget; ++i) {
    Individual ind;
    ind.tree = ramped_half_and_half(problem.ops(), params.generator, rng);
    ind.fitness = problem.evaluate(ind.tree).fitness;
    ++used;
    log_evaluation(record, format_sexpr(ind.tree), ind.fitness);
    population.push_back(std::move(ind));
  }

  while (used < budget) {
    const std::size_t children = std::min(params.lambda, budget - used);
    for (std::size_t i = 0; i < children; ++i) {
      const Individual& pa = population[rng.uniform_index(population.size())];
      const Individual& pb = population[rng.uniform_index(population.size())];
      ExprTree child = crossover_subtree(pa.tree, pb.tree, rng).first;
      child = mutate_subtree(child, problem.ops(), params.mutation, rng);
      Individual ind;
      ind.fitness = problem.evaluate(child).fitness;
      ind.tree = std::move(child);
      ++used;
      log_evaluation(record, format_sexpr(ind.tree), ind.fitness);
      population.push_back(std::move(ind));
    }
    // Truncation survival: keep the mu best of parents plus children.
    std::stable_sort(population.begin(), population.end(),
                     [](const Individual& a, const Individual& b) {
                       return a.fitness < b.fitness;
                     });
    if (population.size() > params.mu) population.resize(params.mu);
    if (observer) {
      std::vector<double> fitness;
      fitness.reserve(population.size());
      for (const auto& ind : population) fitness.push_back(ind.fitness);
      observer(fitness);
    }
  }
  return record;
}

namespace {

struct InnerIndividual {
  ExprTree tree;
  std::string sexpr;
  double ei = 0.0;
};

// Maximizes EI over trees with a (mu+lambda) EA; counts every objective call
// against the EI budget and returns all distinct candidates it has seen.
class InnerSearch {
 public:
  InnerSearch(const KrigingModel& model, const DistanceContext& ctx, double y_min,
              const SmboConfig& config, const OperatorSet& ops, Rng& rng)
      : model_(model), ctx_(ctx), y_min_(y_min), config_(config), ops_(ops), rng_(rng) {}

  // Distinct evaluated candidates, best EI first (stable).
  std::vector<InnerIndividual> run() {
    const std::size_t budget = config_.budget.ei_evaluations;
    std::vector<InnerIndividual> population;
    population.reserve(config_.inner_mu);

    while (used_ < budget && population.size() < config_.inner_mu) {
      population.push_back(make_individual(
          ramped_half_and_half(ops_, config_.generator, rng_)));
    }
    while (used_ < budget) {
      const std::size_t children = std::min(config_.inner_lambda, budget - used_);
      for (std::size_t i = 0; i < children; ++i) {
        const InnerIndividual& pa = population[rng_.uniform_index(population.size())];
        const InnerIndividual& pb = population[rng_.uniform_index(population.size())];
        ExprTree child = crossover_subtree(pa.tree, pb.tree, rng_).first;
        child = mutate_subtree(child, ops_, config_.mutation, rng_);
        population.push_back(make_individual(std::move(child)));
      }
      std::stable_sort(population.begin(), population.end(),
                       [](const InnerIndividual& a, const InnerIndividual& b) {
                         return a.ei > b.ei;
                       });
      if (population.size() > config_.inner_mu) population.resize(config_.inner_mu);
    }

    std::stable_sort(archive_.begin(), archive_.end(),
                     [](const InnerIndividual& a, const InnerIndividual& b) {
                       return a.ei > b.ei;
                     });
    return std::move(archive_);
  }

 private:
  InnerIndividual make_individual(ExprTree tree) {
    InnerIndividual ind;
    ind.sexpr = format_sexpr(tree);
    ++used_;
    if (auto it = ei_memo_.find(ind.sexpr); it != ei_memo_.end()) {
      ind.ei = it->second;
      ind.tree = std::move(tree);
      return ind;
    }
    DistanceContext::Candidate cand = ctx_.make_candidate(std::move(tree));
    ind.ei = expected_improvement(model_.predict(cand, ctx_), y_min_);
    ind.tree = std::move(cand.tree);
    ei_memo_.emplace(ind.sexpr, ind.ei);
    archive_.push_back(ind);
    return ind;
  }

  const KrigingModel& model_;
  const DistanceContext& ctx_;
  double y_min_;
  const SmboConfig& config_;
  const OperatorSet& ops_;
  Rng& rng_;
  std::size_t used_ = 0;
  std::unordered_map<std::string, double> ei_memo_;
  std::vector<InnerIndividual> archive_;
};

}  // namespace

RunRecord smbo(UpperProblem& problem, const SmboConfig& config, Rng& rng,
               const std::string& label) {
  if (config.budget.initial_design >= config.budget.total) {
    throw std::invalid_argument("initial design must be smaller than the total budget");
  }
  if (config.kernel.active_count() == 0) {
    throw std::invalid_argument("at least one distance must be active");
  }

  RunRecord record;
  record.strategy = label;

  DistanceContext ctx(problem.data().X);
  std::vector<TreeId> archive_ids;
  std::vector<double> archive_y;
  std::unordered_set<std::string> archive_sexprs;

  const auto evaluate_and_log = [&](const ExprTree& tree) {
    const std::string sexpr = format_sexpr(tree);
    const UpperEvaluation e = problem.evaluate(tree);
    archive_ids.push_back(ctx.intern(tree));
    archive_y.push_back(e.fitness);
    archive_sexprs.insert(sexpr);
    log_evaluation(record, sexpr, e.fitness);
  };

  // Fresh random tree not structurally equal to anything archived (within the
  // retry cap; collisions past the cap are accepted and noted).
  const auto fresh_random_tree = [&]() {
    for (std::size_t attempt = 0; attempt < config.dedupe_retries; ++attempt) {
      ExprTree t = ramped_half_and_half(problem.ops(), config.generator, rng);
      if (!archive_sexprs.contains(format_sexpr(t))) return t;
    }
    record.notes.push_back("dedupe retry cap reached; accepting a duplicate tree");
    return ramped_half_and_half(problem.ops(), config.generator, rng);
  };

  const std::size_t init = std::min(config.budget.initial_design, config.budget.total);
  for (std::size_t i = 0; i < init; ++i) evaluate_and_log(fresh_random_tree());

  FitOptions fit_options = config.fit;
  fit_options.kernel = config.kernel;

  std::size_t iteration = 0;
  while (problem.upper_evaluations() < config.budget.total) {
    ++iteration;

    std::optional<KrigingModel> model;
    if (archive_ids.size() < 2) {
      record.notes.push_back("iteration " + std::to_string(iteration) +
                             ": archive too small for a model; random proposal");
    } else {
      try {
        model = KrigingModel::fit(archive_ids, archive_y, ctx, fit_options);
      } catch (const ModelFitError& err) {
        record.notes.push_back("iteration " + std::to_string(iteration) +
                               ": model fit failed (" + err.what() + "); random proposal");
      }
    }

    WeightLogEntry w;
    w.iteration = iteration;
    if (model) {
      const NormalizedWeights nw = model->normalized_weights();
      w.w_phd = nw.phd;
      w.w_ted = nw.ted;
      w.w_shd2 = nw.shd2;
    } else {
      const double share = 1.0 / config.kernel.active_count();
      w.w_shd2 = config.kernel.use_shd2 ? share : 0.0;
      w.w_phd = config.kernel.use_phd ? share : 0.0;
      w.w_ted = config.kernel.use_ted ? share : 0.0;
    }
    record.weights.push_back(w);

    ExprTree proposal;
    bool have_proposal = false;
    if (model) {
      InnerSearch inner(*model, ctx, record.best_fitness, config, problem.ops(), rng);
      const std::vector<InnerIndividual> candidates = inner.run();
      for (const auto& cand : candidates) {
        if (!archive_sexprs.contains(cand.sexpr)) {
          proposal = cand.tree;
          have_proposal = true;
          break;
        }
      }
      if (!have_proposal) {
        record.notes.push_back("iteration " + std::to_string(iteration) +
                               ": inner search produced only duplicates; random proposal");
      }
    }
    if (!have_proposal) proposal = fresh_random_tree();

    evaluate_and_log(proposal);
  }
  return record;
}

RunRecord single_distance_smbo(UpperProblem& problem, DistanceMeasure which,
                               const SmboConfig& config, Rng& rng) {
  SmboConfig single = config;
  single.kernel = KernelConfig{false, false, false};
  std::string label = "smbo_";
  switch (which) {
    case DistanceMeasure::Shd2:
      single.kernel.use_shd2 = true;
      label += "shd2";
      break;
    case DistanceMeasure::Phd:
      single.kernel.use_phd = true;
      label += "phd";
      break;
    case DistanceMeasure::Ted:
      single.kernel.use_ted = true;
      label += "ted";
      break;
    case DistanceMeasure::Shd1:
      throw std::invalid_argument("single-distance SMBO supports SHD2, PhD and TED");
  }
  return smbo(problem, single, rng, label);
}

std::string run_record_csv(const RunRecord& record) {
  std::string out = "eval_idx,strategy,tree_sexpr,F,best_so_far\n";
  for (const auto& e : record.evaluations) {
    out += std::to_string(e.index);
    out += ',';
    out += record.strategy;
    out += ',';
    out += e.sexpr;
    out += ',';
    out += fmt_full(e.fitness);
    out += ',';
    out += fmt_full(e.best_so_far);
    out += '\n';
  }
  return out;
}

std::string weight_log_csv(const RunRecord& record) {
  std::string out = "iter_idx,w_phd,w_ted,w_shd2\n";
  for (const auto& w : record.weights) {
    out += std::to_string(w.iteration);
    out += ',';
    out += fmt_full(w.w_phd);
    out += ',';
    out += fmt_full(w.w_ted);
    out += ',';
    out += fmt_full(w.w_shd2);
    out += '\n';
  }
  return out;
}

}  // namespace tsmbo
