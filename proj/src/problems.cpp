#include "tsmbo/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "tsmbo/opt.hpp"
#include "tsmbo/rng.hpp"
#include "tsmbo/stats.hpp"

namespace tsmbo {

namespace {

using nlohmann::json;

double target_eval(const std::string& key, std::span<const double> x) {
  if (key == "sqr") return x[0] * x[0];
  if (key == "sqr-log") return x[0] * x[0] + std::log(x[0]);
  if (key == "sine-cosine") return 6.0 * std::sin(x[0]) * std::cos(x[0]);
  if (key == "salustowicz1d") {
    const double s = std::sin(x[0]);
    const double c = std::cos(x[0]);
    return x[0] * x[0] * x[0] * std::exp(-x[0]) * c * s * (s * s * c - 1.0);
  }
  if (key == "kotanchek2d") {
    const double a = x[0] - 1.0;
    const double b = x[1] - 2.5;
    return std::exp(-a * a) / (1.2 + b * b);
  }
  if (key == "newton") return x[0] * x[1] / (x[2] * x[2]);
  throw std::invalid_argument("unknown target: " + key);
}

ProblemSpec make_builtin(const std::string& name) {
  ProblemSpec p;
  p.name = name;
  p.target = name;
  p.dataset_seed = derive_seed(0, name, "dataset", 0);
  if (name == "sqr") {
    p.variable_count = 1;
    p.variable_bounds = {{-1.0, 1.0}};
    p.dataset_size = 20;
    p.operators = {"+", "-", "*", "/", "log"};
  } else if (name == "sqr-log") {
    p.variable_count = 1;
    p.variable_bounds = {{0.1, 2.0}};
    p.dataset_size = 20;
    p.operators = {"+", "-", "*", "/", "log"};
  } else if (name == "sine-cosine") {
    p.variable_count = 1;
    p.variable_bounds = {{-3.141592653589793, 3.141592653589793}};
    p.dataset_size = 100;
    p.operators = {"+", "-", "*", "/", "sin", "cos"};
  } else if (name == "salustowicz1d") {
    p.variable_count = 1;
    p.variable_bounds = {{0.0, 10.0}};
    p.dataset_size = 100;
    p.operators = {"+", "-", "*", "/", "sin", "cos"};
  } else if (name == "kotanchek2d") {
    p.variable_count = 2;
    p.variable_bounds = {{0.3, 4.0}, {0.3, 4.0}};
    p.dataset_size = 100;
    p.operators = {"+", "-", "*", "/", "sqrt"};
  } else if (name == "newton") {
    p.variable_count = 3;
    p.variable_bounds = {{1.0, 10.0}, {1.0, 10.0}, {0.5, 2.0}};
    p.dataset_size = 100;
    p.operators = {"+", "-", "*", "/", "sqrt"};
  } else {
    throw std::invalid_argument("unknown problem: " + name);
  }
  return p;
}

}  // namespace

double target_value(const std::string& target, std::span<const double> x) {
  return target_eval(target, x);
}

OperatorSet ProblemSpec::operator_set() const {
  return OperatorSet(operators, variable_count, constants_allowed);
}

const std::vector<std::string>& ProblemSpec::builtin_names() {
  static const std::vector<std::string> names = {
      "newton", "sine-cosine", "kotanchek2d", "salustowicz1d", "sqr", "sqr-log"};
  return names;
}

ProblemSpec ProblemSpec::builtin(const std::string& name) {
  // "sqr+log" is accepted as an alias; files use the dash form.
  if (name == "sqr+log") return make_builtin("sqr-log");
  return make_builtin(name);
}

std::string ProblemSpec::to_json() const {
  json j;
  j["name"] = name;
  j["target"] = target;
  j["variable_count"] = variable_count;
  json bounds = json::array();
  for (const auto& [lo, hi] : variable_bounds) bounds.push_back(json::array({lo, hi}));
  j["variable_bounds"] = bounds;
  j["dataset_size"] = dataset_size;
  j["operators"] = operators;
  j["constants_allowed"] = constants_allowed;
  j["dataset_seed"] = dataset_seed;
  j["constant_bounds"] = json::array({constant_bounds.first, constant_bounds.second});
  return j.dump(2);
}

ProblemSpec ProblemSpec::from_json(const std::string& text) {
  const json j = json::parse(text);
  ProblemSpec base;
  if (j.contains("name") && !j.contains("target")) {
    // Shorthand: a builtin name plus optional overrides.
    base = builtin(j.at("name").get<std::string>());
  }
  ProblemSpec p = base;
  if (j.contains("name")) p.name = j.at("name").get<std::string>();
  if (j.contains("target")) p.target = j.at("target").get<std::string>();
  if (j.contains("variable_count")) p.variable_count = j.at("variable_count").get<int>();
  if (j.contains("variable_bounds")) {
    p.variable_bounds.clear();
    for (const auto& b : j.at("variable_bounds")) {
      p.variable_bounds.emplace_back(b.at(0).get<double>(), b.at(1).get<double>());
    }
  }
  if (j.contains("dataset_size")) p.dataset_size = j.at("dataset_size").get<std::size_t>();
  if (j.contains("operators")) {
    p.operators = j.at("operators").get<std::vector<std::string>>();
  }
  if (j.contains("constants_allowed")) {
    p.constants_allowed = j.at("constants_allowed").get<bool>();
  }
  if (j.contains("dataset_seed")) p.dataset_seed = j.at("dataset_seed").get<std::uint64_t>();
  if (j.contains("constant_bounds")) {
    p.constant_bounds = {j.at("constant_bounds").at(0).get<double>(),
                         j.at("constant_bounds").at(1).get<double>()};
  }
  if (p.variable_bounds.size() != static_cast<std::size_t>(p.variable_count)) {
    throw std::invalid_argument("variable_bounds length must equal variable_count");
  }
  return p;
}

Dataset make_dataset(const ProblemSpec& spec) {
  if (spec.dataset_size < 2) throw std::invalid_argument("dataset_size must be >= 2");
  if (spec.variable_bounds.size() != static_cast<std::size_t>(spec.variable_count)) {
    throw std::invalid_argument("variable_bounds length must equal variable_count");
  }
  for (const auto& [lo, hi] : spec.variable_bounds) {
    if (!(lo < hi)) throw std::invalid_argument("variable bounds must satisfy lo < hi");
  }

  Rng rng(spec.dataset_seed);
  const auto v = static_cast<std::size_t>(spec.variable_count);
  Dataset out;
  out.X = DataMatrix(spec.dataset_size, v);
  out.y.resize(spec.dataset_size);
  std::vector<double> row(v);
  for (std::size_t r = 0; r < spec.dataset_size; ++r) {
    double y = 0.0;
    int attempts = 0;
    while (true) {
      for (std::size_t c = 0; c < v; ++c) {
        row[c] = rng.uniform(spec.variable_bounds[c].first, spec.variable_bounds[c].second);
      }
      y = target_eval(spec.target, row);
      if (std::isfinite(y)) break;
      if (++attempts > 1000) {
        throw std::runtime_error("target is infeasible almost everywhere on its box");
      }
    }
    for (std::size_t c = 0; c < v; ++c) out.X(r, c) = row[c];
    out.y[r] = y;
  }
  return out;
}

std::string dataset_csv(const Dataset& data) {
  std::string out;
  for (std::size_t c = 0; c < data.X.cols; ++c) {
    out += 'z';
    out += std::to_string(c + 1);
    out += ',';
  }
  out += "y\n";
  char buf[40];
  for (std::size_t r = 0; r < data.X.rows; ++r) {
    for (std::size_t c = 0; c < data.X.cols; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.X(r, c));
      out += buf;
      out += ',';
    }
    std::snprintf(buf, sizeof(buf), "%.17g", data.y[r]);
    out += buf;
    out += '\n';
  }
  return out;
}

namespace {

struct LowerFitness {
  double value = 1.0;
  bool feasible = false;
};

LowerFitness lower_fitness_detail(const ExprTree& tree, std::span<const double> constants,
                                  const Dataset& data) {
  const auto yhat = evaluate(tree, data.X, constants);
  if (!yhat) return {1.0, false};
  const auto r = pearson(*yhat, data.y);
  if (!r) return {1.0, true};  // feasible but constant output
  // |cor| can exceed 1 by an ulp; keep the fitness within [0, 1].
  return {std::clamp(1.0 - std::abs(*r), 0.0, 1.0), true};
}

}  // namespace

double lower_fitness(const ExprTree& tree, std::span<const double> constants,
                     const Dataset& data) {
  return lower_fitness_detail(tree, constants, data).value;
}

UpperEvaluation evaluate_upper(const ExprTree& tree, const Dataset& data,
                               std::pair<double, double> constant_bounds) {
  const int dc = count_constants(tree);
  UpperEvaluation out;

  if (dc == 0) {
    const LowerFitness r = lower_fitness_detail(tree, {}, data);
    out.fitness = r.value;
    out.feasible = r.feasible;
    return out;
  }

  const std::size_t stage_budget = 1000 * static_cast<std::size_t>(dc);
  std::size_t calls = 0;
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_c;
  bool any_feasible = false;

  const Objective objective = [&](std::span<const double> c) {
    const LowerFitness r = lower_fitness_detail(tree, c, data);
    ++calls;
    any_feasible = any_feasible || r.feasible;
    if (r.value < best) {
      best = r.value;
      best_c.assign(c.begin(), c.end());
    }
    return r.value;
  };

  BoxBounds box;
  box.lower.assign(static_cast<std::size_t>(dc), constant_bounds.first);
  box.upper.assign(static_cast<std::size_t>(dc), constant_bounds.second);

  direct_minimize(objective, box, stage_budget);

  // Nelder-Mead owns the second half of the budget; restart from the
  // incumbent whenever it converges before the stage is spent.
  while (calls < 2 * stage_budget) {
    const std::vector<double> start = best_c;
    nelder_mead(objective, start, box, 2 * stage_budget - calls);
  }

  out.fitness = best;
  out.constants = std::move(best_c);
  out.lower_evaluations = calls;
  out.feasible = any_feasible;
  return out;
}

}  // namespace tsmbo
