#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "tsmbo/problems.hpp"
#include "tsmbo/stats.hpp"

using namespace tsmbo;
using test_util::tree;

TEST_CASE("builtin problem specs") {
  for (const auto& name : ProblemSpec::builtin_names()) {
    const ProblemSpec p = ProblemSpec::builtin(name);
    CHECK(p.name == name);
    CHECK(p.variable_bounds.size() == static_cast<std::size_t>(p.variable_count));
    CHECK_NOTHROW(p.operator_set());
  }
  CHECK(ProblemSpec::builtin("sqr+log").name == "sqr-log");
  CHECK_THROWS_AS(ProblemSpec::builtin("nope"), std::invalid_argument);
}

TEST_CASE("problem spec json round trip") {
  const ProblemSpec p = ProblemSpec::builtin("kotanchek2d");
  const ProblemSpec q = ProblemSpec::from_json(p.to_json());
  CHECK(q.name == p.name);
  CHECK(q.target == p.target);
  CHECK(q.variable_count == p.variable_count);
  CHECK(q.variable_bounds == p.variable_bounds);
  CHECK(q.dataset_size == p.dataset_size);
  CHECK(q.operators == p.operators);
  CHECK(q.dataset_seed == p.dataset_seed);
  CHECK(q.constant_bounds == p.constant_bounds);

  SUBCASE("builtin shorthand with overrides") {
    const ProblemSpec r = ProblemSpec::from_json(R"({"name":"sqr","dataset_size":11})");
    CHECK(r.target == "sqr");
    CHECK(r.dataset_size == 11);
    CHECK(r.operators == ProblemSpec::builtin("sqr").operators);
  }
}

TEST_CASE("make_dataset") {
  SUBCASE("sqr targets its square") {
    const ProblemSpec spec = ProblemSpec::builtin("sqr");
    const Dataset d = make_dataset(spec);
    CHECK(d.X.rows == 20);
    CHECK(d.y.size() == 20);
    for (std::size_t i = 0; i < d.X.rows; ++i) {
      CHECK(d.X(i, 0) >= -1.0);
      CHECK(d.X(i, 0) <= 1.0);
      CHECK(d.y[i] == d.X(i, 0) * d.X(i, 0));
    }
  }

  SUBCASE("deterministic per seed") {
    const ProblemSpec spec = ProblemSpec::builtin("sine-cosine");
    const Dataset a = make_dataset(spec);
    const Dataset b = make_dataset(spec);
    CHECK(a.X.values == b.X.values);
    CHECK(a.y == b.y);
    ProblemSpec other = spec;
    other.dataset_seed += 1;
    const Dataset c = make_dataset(other);
    CHECK(a.X.values != c.X.values);
  }

  SUBCASE("kotanchek closed form") {
    CHECK(target_value("kotanchek2d", std::vector<double>{1.0, 2.5}) ==
          doctest::Approx(1.0 / 1.2).epsilon(1e-12));
  }

  SUBCASE("all builtin targets are finite on their boxes") {
    for (const auto& name : ProblemSpec::builtin_names()) {
      const Dataset d = make_dataset(ProblemSpec::builtin(name));
      for (double v : d.y) CHECK(std::isfinite(v));
    }
  }

  SUBCASE("csv export shape") {
    const Dataset d = make_dataset(ProblemSpec::builtin("kotanchek2d"));
    const std::string csv = dataset_csv(d);
    CHECK(csv.substr(0, csv.find('\n')) == "z1,z2,y");
  }
}

TEST_CASE("lower fitness") {
  const ProblemSpec spec = ProblemSpec::builtin("sqr");
  const Dataset data = make_dataset(spec);
  const OperatorSet ops = spec.operator_set();

  SUBCASE("affine transform of the target scores zero") {
    // z1*z1 is the target itself.
    CHECK(lower_fitness(tree("(* z1 z1)", ops), {}, data) == doctest::Approx(0.0));
    // c*(z1*z1) with any positive constant is still |cor| = 1.
    const std::vector<double> c = {3.7};
    CHECK(lower_fitness(tree("(* c (* z1 z1))", ops), c, data) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("infeasible evaluation is the penalty") {
    // log(z1) on [-1,1] hits non-positive inputs.
    CHECK(lower_fitness(tree("(log z1)", ops), {}, data) == 1.0);
  }

  SUBCASE("constant output is the penalty") {
    const std::vector<double> c = {2.0};
    CHECK(lower_fitness(tree("c", ops), c, data) == 1.0);
  }

  SUBCASE("fitness stays within [0, 1]") {
    Rng rng(41);
    const GeneratorParams params;
    for (int i = 0; i < 200; ++i) {
      const ExprTree t = ramped_half_and_half(ops, params, rng);
      std::vector<double> c(static_cast<std::size_t>(count_constants(t)));
      for (auto& v : c) v = rng.uniform(-10.0, 10.0);
      const double f = lower_fitness(t, c, data);
      CHECK(f >= 0.0);
      CHECK(f <= 1.0);
    }
  }
}

TEST_CASE("evaluate_upper") {
  const ProblemSpec spec = ProblemSpec::builtin("sqr");
  const Dataset data = make_dataset(spec);
  const OperatorSet ops = spec.operator_set();

  SUBCASE("no constants eliminates the lower level") {
    const UpperEvaluation e = evaluate_upper(tree("z1", ops), data, spec.constant_bounds);
    CHECK(e.lower_evaluations == 0);
    CHECK(e.fitness == doctest::Approx(lower_fitness(tree("z1", ops), {}, data)));
    CHECK(e.feasible);
  }

  SUBCASE("scaling constant changes nothing and spends 2000 evaluations") {
    const UpperEvaluation base = evaluate_upper(tree("z1", ops), data, spec.constant_bounds);
    const UpperEvaluation scaled =
        evaluate_upper(tree("(* c z1)", ops), data, spec.constant_bounds);
    CHECK(scaled.lower_evaluations == 2000);
    CHECK(scaled.fitness == doctest::Approx(base.fitness).epsilon(1e-9));
    CHECK(scaled.constants.size() == 1);
  }

  SUBCASE("call count scales with the number of constants") {
    const UpperEvaluation e =
        evaluate_upper(tree("(+ c (* c z1))", ops), data, spec.constant_bounds);
    CHECK(e.lower_evaluations == 4000);
  }

  SUBCASE("everywhere-infeasible tree gets the penalty") {
    // sqrt(z1 - c) with c >= 2 on z1 in [-1, 1]: the radicand is negative for
    // every constant the lower level can try.
    const UpperEvaluation hard = evaluate_upper(
        tree("(sqrt (- z1 c))", test_util::full_ops(1)), data, {2.0, 12.0});
    CHECK(hard.fitness == 1.0);
    CHECK_FALSE(hard.feasible);
    CHECK(hard.lower_evaluations == 2000);
  }

  SUBCASE("exact target reaches zero") {
    const UpperEvaluation e =
        evaluate_upper(tree("(* z1 z1)", ops), data, spec.constant_bounds);
    CHECK(e.fitness <= 1e-6);
  }

  SUBCASE("deterministic") {
    const ExprTree t = tree("(+ c (* z1 z1))", ops);
    const UpperEvaluation a = evaluate_upper(t, data, spec.constant_bounds);
    const UpperEvaluation b = evaluate_upper(t, data, spec.constant_bounds);
    CHECK(a.fitness == b.fitness);
    CHECK(a.constants == b.constants);
    CHECK(a.lower_evaluations == b.lower_evaluations);
  }
}

TEST_CASE("upper-level invariances on random trees") {
  const ProblemSpec spec = ProblemSpec::builtin("sqr");
  const Dataset data = make_dataset(spec);
  const OperatorSet ops = spec.operator_set();

  // Constant-free trees so that the wrapped tree's lower level is exactly the
  // flat direction introduced by the wrapper.
  OperatorSet no_const_ops(spec.operators, spec.variable_count, false);
  Rng rng(42);
  GeneratorParams params;
  params.constant_probability = 0.0;

  int checked = 0;
  while (checked < 10) {
    const ExprTree t = ramped_half_and_half(no_const_ops, params, rng);
    const double base = evaluate_upper(t, data, spec.constant_bounds).fitness;

    const ExprTree scaled(NodeLabel::op("*"), {ExprTree::leaf(NodeLabel::constant()), t});
    const ExprTree shifted(NodeLabel::op("+"), {ExprTree::leaf(NodeLabel::constant()), t});
    const UpperEvaluation se = evaluate_upper(scaled, data, spec.constant_bounds);
    const UpperEvaluation he = evaluate_upper(shifted, data, spec.constant_bounds);
    CHECK(se.fitness == doctest::Approx(base).epsilon(1e-9));
    CHECK(he.fitness == doctest::Approx(base).epsilon(1e-9));
    CHECK(se.lower_evaluations == 2000);
    CHECK(he.lower_evaluations == 2000);
    ++checked;
  }
}
