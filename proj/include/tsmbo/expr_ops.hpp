#pragma once

#include <utility>

#include "tsmbo/expr.hpp"
#include "tsmbo/rng.hpp"

namespace tsmbo {

struct GeneratorParams {
  int max_depth = 4;
  double constant_probability = 0.2;
};

struct MutationParams {
  double p_insert_subtree = 0.1;
  double p_delete_subtree = 0.1;
  double p_subtree_vs_leaf = 0.1;
  double constant_probability = 0.2;
  int max_depth = 4;
};

enum class GrowMode { Grow, Full };

// Random tree of depth <= params.max_depth. Full mode places operators at
// every level above the target depth; grow mode picks operator vs terminal
// with probability 0.5 per node.
ExprTree random_tree(const OperatorSet& ops, const GeneratorParams& params,
                     GrowMode mode, Rng& rng);

// Mode drawn uniformly, target depth drawn uniformly in [2, max_depth].
ExprTree ramped_half_and_half(const OperatorSet& ops, const GeneratorParams& params,
                              Rng& rng);

// Swaps one uniformly chosen subtree of each parent.
std::pair<ExprTree, ExprTree> crossover_subtree(const ExprTree& a, const ExprTree& b,
                                                Rng& rng);

// Recursive traversal: leaves are replaced by random subtrees with
// p_insert_subtree, inner nodes collapse to a random leaf with
// p_delete_subtree. Inserted subtrees never push the result beyond
// params.max_depth (for inputs within that depth).
ExprTree mutate_subtree(const ExprTree& tree, const OperatorSet& ops,
                        const MutationParams& params, Rng& rng);

}  // namespace tsmbo
