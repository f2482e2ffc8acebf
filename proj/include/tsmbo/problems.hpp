#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tsmbo/expr.hpp"

namespace tsmbo {

// One symbolic-regression benchmark: the closed-form target is selected by
// name from the built-in registry; everything else is plain data and may be
// overridden in configuration files.
struct ProblemSpec {
  std::string name;
  std::string target;  // registry key
  int variable_count = 1;
  std::vector<std::pair<double, double>> variable_bounds;
  std::size_t dataset_size = 100;
  std::vector<std::string> operators;
  bool constants_allowed = true;
  std::uint64_t dataset_seed = 1;
  std::pair<double, double> constant_bounds = {-10.0, 10.0};

  OperatorSet operator_set() const;

  static ProblemSpec builtin(const std::string& name);
  static const std::vector<std::string>& builtin_names();

  std::string to_json() const;
  static ProblemSpec from_json(const std::string& text);
};

// Closed-form target evaluation at one input row; used by make_dataset and by
// tests that pin dataset values.
double target_value(const std::string& target, std::span<const double> x);

struct Dataset {
  DataMatrix X;
  std::vector<double> y;
};

// Seeded uniform sampling of X within the variable bounds; rows where the
// target is non-finite are resampled.
Dataset make_dataset(const ProblemSpec& spec);

// CSV export with columns z1..zv, y.
std::string dataset_csv(const Dataset& data);

// 1 - |cor(yhat, y)|; infeasible or zero-variance output gives the penalty 1.
double lower_fitness(const ExprTree& tree, std::span<const double> constants,
                     const Dataset& data);

struct UpperEvaluation {
  double fitness = 1.0;               // F in [0, 1]
  std::vector<double> constants;      // argmin c, length d_c
  std::size_t lower_evaluations = 0;  // exactly 2000 * d_c when d_c > 0
  bool feasible = false;              // some tried c evaluated feasibly
};

// Bi-level fitness: trees without constants are scored directly; otherwise
// DIRECT gets 1000*d_c lower-level evaluations and Nelder-Mead (restarted
// from the incumbent when it converges early) exactly another 1000*d_c.
UpperEvaluation evaluate_upper(const ExprTree& tree, const Dataset& data,
                               std::pair<double, double> constant_bounds);

}  // namespace tsmbo
