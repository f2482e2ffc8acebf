#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "test_util.hpp"
#include "tsmbo/expr.hpp"
#include "tsmbo/expr_ops.hpp"
#include "tsmbo/rng.hpp"

using namespace tsmbo;
using test_util::full_ops;
using test_util::tree;

namespace {

const char* kFig1 = "(+ (sqrt (- c z2)) (* z1 c))";

std::multiset<std::string> label_multiset(const ExprTree& t) {
  std::multiset<std::string> out;
  const auto walk = [&](const auto& self, const ExprTree& node) -> void {
    switch (node.label().kind) {
      case NodeKind::Operator:
        out.insert("op:" + node.label().symbol);
        break;
      case NodeKind::Variable:
        out.insert("z" + std::to_string(node.label().index));
        break;
      case NodeKind::Constant:
        out.insert("c");
        break;
    }
    for (const auto& child : node.children()) self(self, child);
  };
  walk(walk, t);
  return out;
}

}  // namespace

TEST_CASE("depth counts levels with leaves at one") {
  const auto ops = full_ops();
  CHECK(depth(tree("z1", ops)) == 1);
  CHECK(depth(tree("(+ z1 z2)", ops)) == 2);
  // Longest path of the example tree: + -> sqrt -> "-" -> leaf.
  CHECK(depth(tree(kFig1, ops)) == 4);
}

TEST_CASE("count_constants follows pre-order") {
  const auto ops = full_ops();
  CHECK(count_constants(tree("z1", ops)) == 0);
  CHECK(count_constants(tree(kFig1, ops)) == 2);
  CHECK(count_constants(tree("(+ c c)", ops)) == 2);
}

TEST_CASE("evaluate computes row-wise with positional constants") {
  const auto ops = full_ops();

  SUBCASE("simple addition") {
    const auto y = evaluate(tree("(+ z1 z2)", ops),
                            test_util::matrix(1, 2, {1.0, 2.0}), {});
    REQUIRE(y.has_value());
    CHECK((*y)[0] == doctest::Approx(3.0));
  }

  SUBCASE("negative radicand is infeasible") {
    const std::vector<double> c = {1.0, 1.0};
    const auto y = evaluate(tree(kFig1, ops), test_util::matrix(1, 2, {2.0, 3.0}), c);
    CHECK_FALSE(y.has_value());
  }

  SUBCASE("constants scale") {
    const std::vector<double> c = {2.0};
    const auto y =
        evaluate(tree("(* z1 c)", ops), test_util::column({1.0, 2.0, 3.0}), c);
    REQUIRE(y.has_value());
    CHECK((*y) == std::vector<double>{2.0, 4.0, 6.0});
  }

  SUBCASE("division by zero is infeasible") {
    const auto y = evaluate(tree("(/ z1 z2)", ops),
                            test_util::matrix(1, 2, {1.0, 0.0}), {});
    CHECK_FALSE(y.has_value());
  }

  SUBCASE("log of non-positive value is infeasible") {
    const auto y = evaluate(tree("(log z1)", ops), test_util::matrix(1, 2, {0.0, 1.0}), {});
    CHECK_FALSE(y.has_value());
  }

  SUBCASE("overflow to non-finite is infeasible") {
    const auto y = evaluate(tree("(exp (exp (exp z1)))", ops),
                            test_util::matrix(1, 2, {10.0, 0.0}), {});
    CHECK_FALSE(y.has_value());
  }

  SUBCASE("constant length mismatch throws") {
    CHECK_THROWS_AS(evaluate(tree("(* z1 c)", ops), test_util::matrix(1, 2, {1.0, 0.0}), {}),
                    std::invalid_argument);
  }

  SUBCASE("deterministic output") {
    Rng rng(7);
    const auto X = test_util::random_inputs(50, 2, -2.0, 2.0, rng);
    const auto t = tree("(+ (* z1 z2) (sin z1))", ops);
    const auto a = evaluate(t, X, {});
    const auto b = evaluate(t, X, {});
    REQUIRE(a.has_value());
    CHECK(*a == *b);
  }
}

TEST_CASE("sexpr format and parse") {
  const auto ops = full_ops();

  SUBCASE("example serialization") {
    CHECK(format_sexpr(tree(kFig1, ops)) == kFig1);
  }

  SUBCASE("single variable") {
    const ExprTree t = tree("z1", ops);
    CHECK(t.is_leaf());
    CHECK(t.label().kind == NodeKind::Variable);
    CHECK(t.label().index == 1);
  }

  SUBCASE("arity mismatch") {
    CHECK_THROWS_AS(tree("(+ z1)", ops), ParseError);
  }

  SUBCASE("unknown symbol with position") {
    try {
      tree("(+ z1 w2)", ops);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.position == 6);
    }
  }

  SUBCASE("variable index out of range") {
    CHECK_THROWS_AS(tree("z3", ops), ParseError);
  }

  SUBCASE("trailing tokens") {
    CHECK_THROWS_AS(tree("z1 z2", ops), ParseError);
  }

  SUBCASE("round trip over random trees") {
    Rng rng(11);
    const GeneratorParams params;
    for (int i = 0; i < 1000; ++i) {
      const ExprTree t = ramped_half_and_half(ops, params, rng);
      CHECK(parse_sexpr(format_sexpr(t), ops) == t);
    }
  }
}

TEST_CASE("random tree generation") {
  const auto ops = full_ops();

  SUBCASE("max depth one gives a leaf") {
    Rng rng(3);
    GeneratorParams params;
    params.max_depth = 1;
    for (int i = 0; i < 50; ++i) {
      CHECK(random_tree(ops, params, GrowMode::Grow, rng).is_leaf());
      CHECK(random_tree(ops, params, GrowMode::Full, rng).is_leaf());
    }
  }

  SUBCASE("depth bound and arity consistency") {
    Rng rng(4);
    const GeneratorParams params;
    for (int i = 0; i < 1000; ++i) {
      const ExprTree t = ramped_half_and_half(ops, params, rng);
      CHECK(depth(t) <= params.max_depth);
      CHECK(arity_consistent(t, ops));
    }
  }

  SUBCASE("full mode fills every level") {
    Rng rng(5);
    GeneratorParams params;
    params.max_depth = 3;
    for (int i = 0; i < 100; ++i) {
      const ExprTree t = random_tree(ops, params, GrowMode::Full, rng);
      CHECK(depth(t) == 3);
    }
  }

  SUBCASE("terminal constant fraction matches the configured probability") {
    Rng rng(6);
    GeneratorParams params;
    params.max_depth = 1;  // every draw is a terminal
    int constants = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      if (random_tree(ops, params, GrowMode::Grow, rng).label().kind ==
          NodeKind::Constant) {
        ++constants;
      }
    }
    const double fraction = double(constants) / n;
    CHECK(fraction >= 0.17);
    CHECK(fraction <= 0.23);
  }

  SUBCASE("identical seeds reproduce identical trees") {
    Rng a(42);
    Rng b(42);
    const GeneratorParams params;
    for (int i = 0; i < 20; ++i) {
      CHECK(ramped_half_and_half(ops, params, a) == ramped_half_and_half(ops, params, b));
    }
  }
}

TEST_CASE("crossover swaps subtrees") {
  const auto ops = full_ops();

  SUBCASE("two leaves swap roots") {
    Rng rng(1);
    const auto [ca, cb] = crossover_subtree(tree("z1", ops), tree("z2", ops), rng);
    CHECK(ca == tree("z2", ops));
    CHECK(cb == tree("z1", ops));
  }

  SUBCASE("label multiset is conserved and offspring stay consistent") {
    Rng rng(12);
    const GeneratorParams params;
    for (int i = 0; i < 1000; ++i) {
      const ExprTree a = ramped_half_and_half(ops, params, rng);
      const ExprTree b = ramped_half_and_half(ops, params, rng);
      const auto [ca, cb] = crossover_subtree(a, b, rng);
      CHECK(arity_consistent(ca, ops));
      CHECK(arity_consistent(cb, ops));

      auto parents = label_multiset(a);
      for (const auto& l : label_multiset(b)) parents.insert(l);
      auto offspring = label_multiset(ca);
      for (const auto& l : label_multiset(cb)) offspring.insert(l);
      CHECK(parents == offspring);
    }
  }
}

TEST_CASE("mutation") {
  const auto ops = full_ops();

  SUBCASE("all probabilities zero is the identity") {
    Rng rng(9);
    MutationParams params;
    params.p_insert_subtree = 0.0;
    params.p_delete_subtree = 0.0;
    params.p_subtree_vs_leaf = 0.0;
    const GeneratorParams gen;
    for (int i = 0; i < 200; ++i) {
      const ExprTree t = ramped_half_and_half(ops, gen, rng);
      CHECK(mutate_subtree(t, ops, params, rng) == t);
    }
  }

  SUBCASE("depth cap holds under mutation") {
    Rng rng(10);
    const MutationParams params;
    const GeneratorParams gen;
    for (int i = 0; i < 1000; ++i) {
      ExprTree t = ramped_half_and_half(ops, gen, rng);
      t = mutate_subtree(t, ops, params, rng);
      CHECK(depth(t) <= params.max_depth);
      CHECK(arity_consistent(t, ops));
    }
  }

  SUBCASE("forced deletion collapses the root") {
    Rng rng(13);
    MutationParams params;
    params.p_delete_subtree = 1.0;
    const ExprTree t = mutate_subtree(tree("(+ z1 z2)", ops), ops, params, rng);
    CHECK(t.is_leaf());
  }
}
