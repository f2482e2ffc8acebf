#pragma once

// Test-only brute-force tree edit distance, independent of the production
// dynamic program: enumerates every valid ordered-tree mapping (one-to-one,
// ancestor-preserving, sibling-order-preserving) and takes the cheapest
// relabel/delete/insert completion. Exact for small trees.

#include <algorithm>
#include <vector>

#include "tsmbo/expr.hpp"

namespace test_util {

struct PreorderView {
  std::vector<const tsmbo::NodeLabel*> labels;
  std::vector<int> parent;

  bool ancestor(int a, int b) const {  // a proper ancestor of b
    for (int p = parent[static_cast<std::size_t>(b)]; p >= 0;
         p = parent[static_cast<std::size_t>(p)]) {
      if (p == a) return true;
    }
    return false;
  }
};

inline void preorder_walk(const tsmbo::ExprTree& t, int parent, PreorderView& out) {
  const int index = static_cast<int>(out.labels.size());
  out.labels.push_back(&t.label());
  out.parent.push_back(parent);
  for (const auto& child : t.children()) preorder_walk(child, index, out);
}

inline PreorderView preorder_view(const tsmbo::ExprTree& t) {
  PreorderView out;
  preorder_walk(t, -1, out);
  return out;
}

class TedOracle {
 public:
  TedOracle(const tsmbo::ExprTree& a, const tsmbo::ExprTree& b)
      : a_(preorder_view(a)), b_(preorder_view(b)) {}

  int distance() {
    best_ = static_cast<int>(a_.labels.size() + b_.labels.size());
    pairs_.clear();
    used_b_.assign(b_.labels.size(), false);
    search(0, 0);
    return best_;
  }

 private:
  void search(int next_a, int relabel_cost) {
    const int na = static_cast<int>(a_.labels.size());
    const int nb = static_cast<int>(b_.labels.size());
    const int mapped = static_cast<int>(pairs_.size());
    if (next_a == na) {
      const int cost = relabel_cost + (na - mapped) + (nb - mapped);
      best_ = std::min(best_, cost);
      return;
    }
    // Option 1: leave next_a unmapped (deleted).
    search(next_a + 1, relabel_cost);
    // Option 2: map next_a to every compatible node of B.
    for (int j = 0; j < nb; ++j) {
      if (used_b_[static_cast<std::size_t>(j)]) continue;
      if (!compatible(next_a, j)) continue;
      used_b_[static_cast<std::size_t>(j)] = true;
      pairs_.emplace_back(next_a, j);
      const int rl = (*a_.labels[static_cast<std::size_t>(next_a)] ==
                      *b_.labels[static_cast<std::size_t>(j)])
                         ? 0
                         : 1;
      search(next_a + 1, relabel_cost + rl);
      pairs_.pop_back();
      used_b_[static_cast<std::size_t>(j)] = false;
    }
  }

  bool compatible(int i2, int j2) const {
    for (const auto& [i1, j1] : pairs_) {
      // i1 < i2 in preorder by construction.
      if (a_.ancestor(i1, i2)) {
        if (!b_.ancestor(j1, j2)) return false;
      } else {
        // i1 is strictly to the left of i2.
        if (!(j1 < j2) || b_.ancestor(j1, j2) || b_.ancestor(j2, j1)) return false;
      }
    }
    return true;
  }

  PreorderView a_;
  PreorderView b_;
  std::vector<std::pair<int, int>> pairs_;
  std::vector<bool> used_b_;
  int best_ = 0;
};

inline int ted_brute_force(const tsmbo::ExprTree& a, const tsmbo::ExprTree& b) {
  TedOracle oracle(a, b);
  return oracle.distance();
}

}  // namespace test_util
