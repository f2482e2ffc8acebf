#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tsmbo/harness.hpp"
#include "tsmbo/io.hpp"

namespace {

using namespace tsmbo;

std::vector<ProblemSpec> resolve_problems(const std::vector<std::string>& names) {
  std::vector<ProblemSpec> out;
  for (const auto& name : names) out.push_back(ProblemSpec::builtin(name));
  return out;
}

int cmd_run(const std::string& config_path, std::uint64_t seed, bool seed_set,
            const std::string& out_dir, std::size_t workers) {
  ExperimentConfig config = ExperimentConfig::from_json(read_file(config_path));
  if (seed_set) config.master_seed = seed;
  if (!out_dir.empty()) config.out_dir = out_dir;
  if (workers != 0) config.workers = workers;

  const StudyResult study = run_experiment(config);
  std::size_t failed = 0;
  for (const auto& r : study.runs) failed += r.failed ? 1 : 0;
  std::cout << "runs: " << study.runs.size() << " (failed: " << failed << ")\n";
  std::cout << "outputs written to " << config.out_dir << "\n\n";
  std::cout << summary_csv(study.summary);
  return failed == 0 ? 0 : 1;
}

int cmd_distances(std::size_t n, const std::string& problem_name, std::uint64_t seed,
                  const std::string& out_dir, int max_depth, double constant_probability) {
  GeneratorParams generator;
  generator.max_depth = max_depth;
  generator.constant_probability = constant_probability;
  const ProblemSpec problem = ProblemSpec::builtin(problem_name);
  const DistanceStudyResult study = distance_study(n, generator, problem, seed);
  write_distance_study(study, out_dir);
  std::cout << "measure_a,measure_b,pearson\n";
  for (const auto& c : study.correlations) {
    std::cout << measure_name(c.a) << ',' << measure_name(c.b) << ',' << fmt_sig9(c.r)
              << '\n';
  }
  std::cout << "matrices written to " << out_dir << "\n";
  return 0;
}

int cmd_tune(const std::vector<std::string>& problem_names, std::size_t reps,
             std::size_t budget, std::uint64_t seed, const std::string& out_file,
             std::size_t workers) {
  const std::vector<std::size_t> mu_grid = {5, 10, 15, 20};
  const std::vector<std::size_t> lambda_grid = {1, 2, 3, 4, 5};
  const TuningResult result = tuning_grid(resolve_problems(problem_names), mu_grid,
                                          lambda_grid, reps, budget, seed, workers);
  const std::string csv = tuning_csv(result);
  if (!out_file.empty()) write_file(out_file, csv);
  std::cout << csv;
  const TuningCell& best = result.cells[result.best_cell];
  std::cout << "best cell: mu=" << best.mu << " lambda=" << best.lambda
            << " mean_rank=" << fmt_sig9(best.mean_rank) << "\n";
  return 0;
}

int cmd_stats(const std::string& input, const std::string& groupby) {
  std::cout << kruskal_wallis_report(read_file(input), groupby);
  return 0;
}

int cmd_plots(const std::string& input_dir) {
  const StudyResult study = load_study(input_dir);
  emit_plots(study, input_dir);
  std::cout << "plot data regenerated under " << input_dir << "\n";
  return 0;
}

int cmd_eval(const std::string& problem_name, const std::string& expression) {
  UpperProblem problem(ProblemSpec::builtin(problem_name));
  const ExprTree tree = parse_sexpr(expression, problem.ops());
  const UpperEvaluation e = problem.evaluate(tree);
  std::cout << "tree: " << format_sexpr(tree) << '\n';
  std::cout << "d_c: " << count_constants(tree) << '\n';
  std::cout << "F: " << fmt_sig9(e.fitness) << '\n';
  if (!e.constants.empty()) {
    std::cout << "constants:";
    for (double c : e.constants) std::cout << ' ' << fmt_sig9(c);
    std::cout << '\n';
  }
  std::cout << "lower_evaluations: " << e.lower_evaluations << '\n';
  std::cout << "feasible: " << (e.feasible ? "true" : "false") << '\n';
  return 0;
}

int cmd_problem(const std::string& name, const std::string& spec_out,
                const std::string& dataset_out) {
  const ProblemSpec spec = ProblemSpec::builtin(name);
  if (!spec_out.empty()) write_file(spec_out, spec.to_json() + "\n");
  if (!dataset_out.empty()) write_file(dataset_out, dataset_csv(make_dataset(spec)));
  std::cout << spec.to_json() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surrogate model-based optimization for symbolic-regression trees"};
  app.require_subcommand(1);

  // run
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::size_t workers = 0;
  auto* run = app.add_subcommand("run", "Run a batch experiment from a JSON config");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Override the master seed");
  run->add_option("--out", out_dir, "Override the output directory");
  run->add_option("--workers", workers, "Worker threads (0 = hardware)");

  // distances
  std::size_t n_trees = 100;
  std::string problem_name = "newton";
  std::uint64_t dist_seed = 1;
  std::string dist_out = "distance_study";
  int max_depth = 4;
  double constant_probability = 0.2;
  auto* distances =
      app.add_subcommand("distances", "Distance matrices and correlations for random trees");
  distances->add_option("--n", n_trees, "Number of random trees");
  distances->add_option("--problem", problem_name, "Problem supplying data for PhD");
  distances->add_option("--seed", dist_seed, "Tree generation seed");
  distances->add_option("--out", dist_out, "Output directory");
  distances->add_option("--depth", max_depth, "Generator max depth");
  distances->add_option("--const-prob", constant_probability, "Constant probability");

  // tune
  std::vector<std::string> tune_problems = {"sqr", "sine-cosine"};
  std::size_t tune_reps = 20;
  std::size_t tune_budget = 100;
  std::uint64_t tune_seed = 1;
  std::string tune_out;
  std::size_t tune_workers = 0;
  auto* tune = app.add_subcommand("tune", "EA mu/lambda tuning grid");
  tune->add_option("--problems", tune_problems, "Problem names")->delimiter(',');
  tune->add_option("--reps", tune_reps, "Repetitions per cell");
  tune->add_option("--budget", tune_budget, "Upper-level evaluations per run");
  tune->add_option("--seed", tune_seed, "Master seed");
  tune->add_option("--out", tune_out, "Write the rank table CSV here");
  tune->add_option("--workers", tune_workers, "Worker threads (0 = hardware)");

  // stats
  std::string stats_input;
  std::string groupby = "strategy";
  auto* stats = app.add_subcommand("stats", "Kruskal-Wallis test over a long-format CSV");
  stats->add_option("--input", stats_input, "boxplot.csv from a study")->required();
  stats->add_option("--groupby", groupby, "Grouping column");

  // plots
  std::string plots_input;
  auto* plots = app.add_subcommand("plots", "Regenerate plot data from raw run CSVs");
  plots->add_option("--input", plots_input, "Study directory")->required();

  // eval
  std::string eval_problem = "sqr";
  std::string eval_expr;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate one s-expression on a problem");
  eval_cmd->add_option("--problem", eval_problem, "Problem name");
  eval_cmd->add_option("--expr", eval_expr, "S-expression, e.g. \"(* z1 z1)\"")->required();

  // problem
  std::string problem_cmd_name = "sqr";
  std::string spec_out;
  std::string dataset_out;
  auto* problem_cmd = app.add_subcommand("problem", "Show or export a problem spec/dataset");
  problem_cmd->add_option("--name", problem_cmd_name, "Problem name");
  problem_cmd->add_option("--emit-spec", spec_out, "Write the spec JSON here");
  problem_cmd->add_option("--emit-dataset", dataset_out, "Write the dataset CSV here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(config_path, seed, seed_opt->count() > 0, out_dir, workers);
    }
    if (distances->parsed()) {
      return cmd_distances(n_trees, problem_name, dist_seed, dist_out, max_depth,
                           constant_probability);
    }
    if (tune->parsed()) {
      return cmd_tune(tune_problems, tune_reps, tune_budget, tune_seed, tune_out,
                      tune_workers);
    }
    if (stats->parsed()) return cmd_stats(stats_input, groupby);
    if (plots->parsed()) return cmd_plots(plots_input);
    if (eval_cmd->parsed()) return cmd_eval(eval_problem, eval_expr);
    if (problem_cmd->parsed()) return cmd_problem(problem_cmd_name, spec_out, dataset_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
