#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tsmbo/distance.hpp"
#include "tsmbo/search.hpp"
#include "tsmbo/stats.hpp"

namespace tsmbo {

struct StrategySpec {
  enum class Kind { RandomSearch, Ea, Smbo };

  Kind kind = Kind::RandomSearch;
  EAParams ea;
  KernelConfig kernel;        // Smbo only; subsets give the ablation runs
  std::size_t inner_mu = 200;
  std::size_t inner_lambda = 10;
  std::string label;          // canonical, derived when empty

  static StrategySpec random_search();
  static StrategySpec ea_strategy(std::size_t mu, std::size_t lambda);
  static StrategySpec smbo_strategy(KernelConfig kernel = {});

  std::string canonical_label() const;
};

struct ExperimentConfig {
  std::vector<ProblemSpec> problems;
  std::vector<StrategySpec> strategies;
  std::size_t repetitions = 20;
  std::uint64_t master_seed = 1;
  SearchBudget budget;
  GeneratorParams generator;
  MutationParams mutation;
  std::string out_dir = "study_out";
  std::size_t workers = 0;  // 0 = hardware concurrency

  std::string to_json() const;
  static ExperimentConfig from_json(const std::string& text);
};

struct RunResult {
  std::string problem;
  std::string strategy;
  std::size_t repetition = 0;
  RunRecord record;
  bool failed = false;
  std::string error;
};

struct SummaryRow {
  std::string problem;
  std::string strategy;
  std::size_t checkpoint = 0;
  std::size_t runs = 0;
  double median = 1.0;
  double q1 = 1.0;
  double q3 = 1.0;
};

struct TrajectoryRow {
  std::string problem;
  std::string strategy;
  std::size_t iteration = 0;
  double mean_w_phd = 0.0;
  double mean_w_ted = 0.0;
  double mean_w_shd2 = 0.0;
};

struct StudyResult {
  std::vector<RunResult> runs;
  std::vector<std::size_t> checkpoints;
  std::vector<SummaryRow> summary;
  std::vector<TrajectoryRow> trajectory;
};

// Executes repetitions x strategies x problems runs on a bounded worker pool
// with per-run derived seeds, writes all CSVs under config.out_dir, and
// returns the summary. Individual run failures are recorded, not fatal.
StudyResult run_experiment(const ExperimentConfig& config);

// Rebuilds a StudyResult from the per-run CSVs in a study directory.
StudyResult load_study(const std::string& dir);

// Derived from the stored records; shared by run_experiment and load_study.
std::vector<std::size_t> summary_checkpoints(std::size_t budget);
std::vector<SummaryRow> summarize(const std::vector<RunResult>& runs,
                                  const std::vector<std::size_t>& checkpoints);
std::vector<TrajectoryRow> weight_trajectories(const std::vector<RunResult>& runs);

std::string summary_csv(const std::vector<SummaryRow>& rows);
std::string boxplot_csv(const std::vector<RunResult>& runs,
                        const std::vector<std::size_t>& checkpoints);
std::string trajectory_csv(const std::vector<TrajectoryRow>& rows);

// Writes boxplot.csv, weight_trajectory.csv and simple static SVG charts.
void emit_plots(const StudyResult& study, const std::string& dir);

struct DistanceStudyResult {
  std::vector<ExprTree> trees;  // complexity-sorted (depth, then node count)
  std::vector<DistanceMatrix> matrices;  // PhD, TED, SHD1, SHD2
  struct Correlation {
    DistanceMeasure a;
    DistanceMeasure b;
    double r = 0.0;
  };
  std::vector<Correlation> correlations;  // all six pairs

  std::optional<double> correlation(DistanceMeasure a, DistanceMeasure b) const;
};

// The Sec. 4.4 study: n random trees, four distance matrices, pairwise
// Pearson correlations of the lower-triangle entries.
DistanceStudyResult distance_study(std::size_t n_trees, const GeneratorParams& generator,
                                   const ProblemSpec& problem, std::uint64_t seed);

void write_distance_study(const DistanceStudyResult& study, const std::string& dir);

struct TuningCell {
  std::size_t mu = 0;
  std::size_t lambda = 0;
  std::vector<double> mean_best;  // per problem
  std::vector<double> rank;       // per problem, mid-ranked
  double mean_rank = 0.0;
};

struct TuningResult {
  std::vector<std::string> problems;
  std::vector<TuningCell> cells;  // grid order: mu-major, lambda-minor
  std::size_t best_cell = 0;
};

// Full-factorial EA tuning grid; cells ranked per problem by mean final best
// value, then averaged across problems.
TuningResult tuning_grid(const std::vector<ProblemSpec>& problems,
                         const std::vector<std::size_t>& mu_values,
                         const std::vector<std::size_t>& lambda_values,
                         std::size_t repetitions, std::size_t budget,
                         std::uint64_t master_seed, std::size_t workers = 0);

std::string tuning_csv(const TuningResult& result);

// Kruskal-Wallis over a long-format CSV: one test per (problem, checkpoint),
// groups given by `group_column`. Returns a report CSV.
std::string kruskal_wallis_report(const std::string& boxplot_csv_text,
                                  const std::string& group_column = "strategy");

}  // namespace tsmbo
