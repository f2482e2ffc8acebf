#include "tsmbo/expr_ops.hpp"

#include <stdexcept>

namespace tsmbo {

namespace {

ExprTree random_terminal(const OperatorSet& ops, double constant_probability, Rng& rng) {
  const bool have_vars = ops.variable_count() > 0;
  if (ops.constants_allowed() && (!have_vars || rng.bernoulli(constant_probability))) {
    return ExprTree::leaf(NodeLabel::constant());
  }
  return ExprTree::leaf(NodeLabel::variable(1 + static_cast<int>(rng.uniform_index(
                            static_cast<std::size_t>(ops.variable_count())))));
}

ExprTree generate(const OperatorSet& ops, const GeneratorParams& params, GrowMode mode,
                  Rng& rng, int remaining_depth) {
  bool make_operator = false;
  if (remaining_depth > 1 && !ops.entries().empty()) {
    make_operator = mode == GrowMode::Full ? true : rng.bernoulli(0.5);
  }
  if (!make_operator) return random_terminal(ops, params.constant_probability, rng);

  const auto& entry = ops.entries()[rng.uniform_index(ops.entries().size())];
  std::vector<ExprTree> children;
  children.reserve(static_cast<std::size_t>(entry.arity));
  for (int i = 0; i < entry.arity; ++i) {
    children.push_back(generate(ops, params, mode, rng, remaining_depth - 1));
  }
  return ExprTree(NodeLabel::op(entry.symbol), std::move(children));
}

const ExprTree& subtree_at(const ExprTree& tree, std::size_t index) {
  if (index == 0) return tree;
  std::size_t offset = 1;
  for (const auto& child : tree.children()) {
    const std::size_t n = child.node_count();
    if (index < offset + n) return subtree_at(child, index - offset);
    offset += n;
  }
  throw std::out_of_range("subtree index out of range");
}

ExprTree replace_at(const ExprTree& tree, std::size_t index, const ExprTree& replacement) {
  if (index == 0) return replacement;
  std::size_t offset = 1;
  std::vector<ExprTree> children;
  children.reserve(tree.children().size());
  bool done = false;
  for (const auto& child : tree.children()) {
    const std::size_t n = child.node_count();
    if (!done && index < offset + n) {
      children.push_back(replace_at(child, index - offset, replacement));
      done = true;
    } else {
      children.push_back(child);
    }
    offset += n;
  }
  if (!done) throw std::out_of_range("subtree index out of range");
  return ExprTree(tree.label(), std::move(children));
}

// Replacement content for an insertion: an operator node with probability
// p_subtree_vs_leaf (while depth budget remains), otherwise a leaf.
ExprTree grow_replacement(const OperatorSet& ops, const MutationParams& params, Rng& rng,
                          int remaining_depth) {
  if (remaining_depth <= 1 || ops.entries().empty() ||
      !rng.bernoulli(params.p_subtree_vs_leaf)) {
    return random_terminal(ops, params.constant_probability, rng);
  }
  const auto& entry = ops.entries()[rng.uniform_index(ops.entries().size())];
  std::vector<ExprTree> children;
  children.reserve(static_cast<std::size_t>(entry.arity));
  for (int i = 0; i < entry.arity; ++i) {
    children.push_back(grow_replacement(ops, params, rng, remaining_depth - 1));
  }
  return ExprTree(NodeLabel::op(entry.symbol), std::move(children));
}

ExprTree mutate_node(const ExprTree& node, const OperatorSet& ops,
                     const MutationParams& params, Rng& rng, int node_depth) {
  if (node.is_leaf()) {
    if (rng.bernoulli(params.p_insert_subtree)) {
      const int budget = std::max(1, params.max_depth - node_depth + 1);
      return grow_replacement(ops, params, rng, budget);
    }
    // Constant jitter would go here; anonymous upper-level constants make it
    // a no-op (the lower level owns the values).
    return node;
  }
  if (rng.bernoulli(params.p_delete_subtree)) {
    return random_terminal(ops, params.constant_probability, rng);
  }
  std::vector<ExprTree> children;
  children.reserve(node.children().size());
  for (const auto& child : node.children()) {
    children.push_back(mutate_node(child, ops, params, rng, node_depth + 1));
  }
  return ExprTree(node.label(), std::move(children));
}

}  // namespace

ExprTree random_tree(const OperatorSet& ops, const GeneratorParams& params, GrowMode mode,
                     Rng& rng) {
  if (params.max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
  return generate(ops, params, mode, rng, params.max_depth);
}

ExprTree ramped_half_and_half(const OperatorSet& ops, const GeneratorParams& params,
                              Rng& rng) {
  if (params.max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
  const GrowMode mode = rng.bernoulli(0.5) ? GrowMode::Grow : GrowMode::Full;
  GeneratorParams ramped = params;
  ramped.max_depth = params.max_depth < 2 ? params.max_depth : rng.uniform_int(2, params.max_depth);
  return random_tree(ops, ramped, mode, rng);
}

std::pair<ExprTree, ExprTree> crossover_subtree(const ExprTree& a, const ExprTree& b,
                                                Rng& rng) {
  const std::size_t ia = rng.uniform_index(a.node_count());
  const std::size_t ib = rng.uniform_index(b.node_count());
  ExprTree sub_a = subtree_at(a, ia);
  ExprTree sub_b = subtree_at(b, ib);
  return {replace_at(a, ia, sub_b), replace_at(b, ib, sub_a)};
}

ExprTree mutate_subtree(const ExprTree& tree, const OperatorSet& ops,
                        const MutationParams& params, Rng& rng) {
  return mutate_node(tree, ops, params, rng, 1);
}

}  // namespace tsmbo
