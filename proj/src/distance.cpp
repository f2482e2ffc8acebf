#include "tsmbo/distance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tsmbo/stats.hpp"

namespace tsmbo {

const char* measure_name(DistanceMeasure m) {
  switch (m) {
    case DistanceMeasure::Shd2:
      return "shd2";
    case DistanceMeasure::Phd:
      return "phd";
    case DistanceMeasure::Ted:
      return "ted";
    case DistanceMeasure::Shd1:
      return "shd1";
  }
  return "?";
}

double phd(const ExprTree& a, const ExprTree& b, const DataMatrix& X) {
  if (a == b) return 0.0;
  const auto ya = evaluate_with_unit_constants(a, X);
  const auto yb = evaluate_with_unit_constants(b, X);
  if (!ya || !yb) return 1.0;
  const auto r = pearson(*ya, *yb);
  if (!r) return 1.0;
  return std::clamp(1.0 - std::abs(*r), 0.0, 1.0);
}

namespace {

// Zhang-Shasha over postorder-flattened trees.
struct FlatTree {
  std::vector<const NodeLabel*> labels;  // postorder
  std::vector<int> lml;                  // leftmost leaf index per node
  std::vector<int> keyroots;             // ascending
};

int flatten_node(const ExprTree& t, FlatTree& out) {
  int first_leaf = -1;
  for (const auto& child : t.children()) {
    const int l = flatten_node(child, out);
    if (first_leaf < 0) first_leaf = l;
  }
  const int index = static_cast<int>(out.labels.size());
  out.labels.push_back(&t.label());
  out.lml.push_back(first_leaf < 0 ? index : first_leaf);
  return out.lml.back();
}

FlatTree flatten(const ExprTree& t) {
  FlatTree out;
  out.labels.reserve(t.node_count());
  out.lml.reserve(t.node_count());
  flatten_node(t, out);
  // Keyroots: for each distinct leftmost-leaf value, the highest node.
  const int n = static_cast<int>(out.labels.size());
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<int> roots;
  for (int i = n - 1; i >= 0; --i) {
    if (!seen[static_cast<std::size_t>(out.lml[i])]) {
      seen[static_cast<std::size_t>(out.lml[i])] = 1;
      roots.push_back(i);
    }
  }
  std::sort(roots.begin(), roots.end());
  out.keyroots = std::move(roots);
  return out;
}

inline int relabel_cost(const NodeLabel& a, const NodeLabel& b) { return a == b ? 0 : 1; }

class Workspace {
 public:
  int* grid(std::size_t rows, std::size_t cols) {
    if (buffer_.size() < rows * cols) buffer_.resize(rows * cols);
    stride_ = cols;
    return buffer_.data();
  }
  std::size_t stride() const { return stride_; }

 private:
  std::vector<int> buffer_;
  std::size_t stride_ = 0;
};

int ted_int(const ExprTree& ta, const ExprTree& tb) {
  const FlatTree a = flatten(ta);
  const FlatTree b = flatten(tb);
  const int na = static_cast<int>(a.labels.size());
  const int nb = static_cast<int>(b.labels.size());

  std::vector<int> td(static_cast<std::size_t>(na) * static_cast<std::size_t>(nb), 0);
  auto tree_dist = [&](int i, int j) -> int& {
    return td[static_cast<std::size_t>(i) * static_cast<std::size_t>(nb) +
              static_cast<std::size_t>(j)];
  };

  thread_local Workspace ws;

  for (int ki : a.keyroots) {
    const int li = a.lml[ki];
    const int m = ki - li + 2;
    for (int kj : b.keyroots) {
      const int lj = b.lml[kj];
      const int n = kj - lj + 2;

      int* fd = ws.grid(static_cast<std::size_t>(m), static_cast<std::size_t>(n));
      const auto at = [&](int x, int y) -> int& {
        return fd[static_cast<std::size_t>(x) * static_cast<std::size_t>(n) +
                  static_cast<std::size_t>(y)];
      };

      at(0, 0) = 0;
      for (int x = 1; x < m; ++x) at(x, 0) = at(x - 1, 0) + 1;
      for (int y = 1; y < n; ++y) at(0, y) = at(0, y - 1) + 1;

      for (int x = 1; x < m; ++x) {
        const int ax = li + x - 1;
        for (int y = 1; y < n; ++y) {
          const int by = lj + y - 1;
          const int del = at(x - 1, y) + 1;
          const int ins = at(x, y - 1) + 1;
          int best;
          if (a.lml[ax] == li && b.lml[by] == lj) {
            best = at(x - 1, y - 1) + relabel_cost(*a.labels[ax], *b.labels[by]);
            best = std::min(best, std::min(del, ins));
            tree_dist(ax, by) = best;
          } else {
            const int px = a.lml[ax] - li;
            const int py = b.lml[by] - lj;
            best = at(px, py) + tree_dist(ax, by);
            best = std::min(best, std::min(del, ins));
          }
          at(x, y) = best;
        }
      }
    }
  }
  return tree_dist(na - 1, nb - 1);
}

}  // namespace

double ted(const ExprTree& a, const ExprTree& b) {
  return static_cast<double>(ted_int(a, b));
}

double shd1(const ExprTree& a, const ExprTree& b) {
  const std::size_t m = a.arity();
  if (m != b.arity()) return 1.0;
  const double hd = a.label() == b.label() ? 0.0 : 1.0;
  if (m == 0) return hd;
  double sum = hd;
  for (std::size_t i = 0; i < m; ++i) sum += shd1(a.children()[i], b.children()[i]);
  return sum / static_cast<double>(m + 1);
}

double shd2(const ExprTree& a, const ExprTree& b) {
  const std::size_t m = a.arity();
  if (m != b.arity()) return 1.0;
  const double hd = a.label() == b.label() ? 0.0 : 1.0;
  if (m == 0) return hd;
  if (m == 2) {
    const double aligned = shd2(a.children()[0], b.children()[0]) +
                           shd2(a.children()[1], b.children()[1]);
    const double swapped = shd2(a.children()[0], b.children()[1]) +
                           shd2(a.children()[1], b.children()[0]);
    return (hd + std::min(aligned, swapped)) / 3.0;
  }
  double sum = hd;
  for (std::size_t i = 0; i < m; ++i) sum += shd2(a.children()[i], b.children()[i]);
  return sum / static_cast<double>(m + 1);
}

DistanceMatrix distance_matrix(std::span<const ExprTree> trees, DistanceMeasure measure,
                               const DataMatrix& X) {
  if (trees.empty()) throw std::invalid_argument("distance_matrix: no trees");
  DistanceMatrix out(measure, trees.size());
  for (std::size_t i = 0; i < trees.size(); ++i) {
    for (std::size_t j = i + 1; j < trees.size(); ++j) {
      double d = 0.0;
      switch (measure) {
        case DistanceMeasure::Shd2:
          d = shd2(trees[i], trees[j]);
          break;
        case DistanceMeasure::Phd:
          d = phd(trees[i], trees[j], X);
          break;
        case DistanceMeasure::Ted:
          d = ted(trees[i], trees[j]);
          break;
        case DistanceMeasure::Shd1:
          d = shd1(trees[i], trees[j]);
          break;
      }
      out(i, j) = d;
      out(j, i) = d;
    }
  }
  return out;
}

std::string distance_matrix_csv(const DistanceMatrix& m, std::span<const ExprTree> trees) {
  if (trees.size() != m.n) throw std::invalid_argument("tree/matrix size mismatch");
  std::string out;
  for (std::size_t j = 0; j < trees.size(); ++j) {
    if (j > 0) out += ',';
    out += format_sexpr(trees[j]);
  }
  out += '\n';
  char buf[40];
  for (std::size_t i = 0; i < m.n; ++i) {
    for (std::size_t j = 0; j < m.n; ++j) {
      if (j > 0) out += ',';
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

DistanceContext::DistanceContext(DataMatrix X) : X_(std::move(X)) {}

std::optional<std::vector<double>> DistanceContext::standardized_phenotype(
    const ExprTree& tree) const {
  auto y = evaluate_with_unit_constants(tree, X_);
  if (!y) return std::nullopt;
  double m = 0.0;
  for (double v : *y) m += v;
  m /= static_cast<double>(y->size());
  double norm2 = 0.0;
  for (double& v : *y) {
    v -= m;
    norm2 += v * v;
  }
  if (norm2 <= 0.0) return std::nullopt;  // constant output: treated like infeasible
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& v : *y) v *= inv;
  return y;
}

TreeId DistanceContext::intern(const ExprTree& tree) {
  std::string key = format_sexpr(tree);
  if (auto it = by_sexpr_.find(key); it != by_sexpr_.end()) return it->second;
  const TreeId id = entries_.size();
  Entry e;
  e.tree = tree;
  e.sexpr = key;
  e.phenotype = standardized_phenotype(tree);
  entries_.push_back(std::move(e));
  by_sexpr_.emplace(std::move(key), id);
  return id;
}

std::optional<TreeId> DistanceContext::find(const std::string& sexpr) const {
  if (auto it = by_sexpr_.find(sexpr); it != by_sexpr_.end()) return it->second;
  return std::nullopt;
}

namespace {

double phenotype_distance(const std::optional<std::vector<double>>& a,
                          const std::optional<std::vector<double>>& b) {
  if (!a || !b) return 1.0;
  double dot = 0.0;
  for (std::size_t i = 0; i < a->size(); ++i) dot += (*a)[i] * (*b)[i];
  dot = std::clamp(dot, -1.0, 1.0);
  return 1.0 - std::abs(dot);
}

}  // namespace

DistanceTriple DistanceContext::triple(TreeId a, TreeId b) {
  if (a == b) return {};
  const std::uint64_t lo = std::min(a, b);
  const std::uint64_t hi = std::max(a, b);
  const std::uint64_t key = (lo << 32) | hi;
  if (auto it = pair_cache_.find(key); it != pair_cache_.end()) return it->second;

  const Entry& ea = entries_[a];
  const Entry& eb = entries_[b];
  DistanceTriple t;
  t.shd2 = tsmbo::shd2(ea.tree, eb.tree);
  t.ted = tsmbo::ted(ea.tree, eb.tree);
  t.phd = phenotype_distance(ea.phenotype, eb.phenotype);
  pair_cache_.emplace(key, t);
  return t;
}

double DistanceContext::distance(TreeId a, TreeId b, DistanceMeasure measure) {
  if (measure == DistanceMeasure::Shd1) return shd1(tree(a), tree(b));
  const DistanceTriple t = triple(a, b);
  switch (measure) {
    case DistanceMeasure::Shd2:
      return t.shd2;
    case DistanceMeasure::Phd:
      return t.phd;
    case DistanceMeasure::Ted:
      return t.ted;
    default:
      return 0.0;
  }
}

DistanceContext::Candidate DistanceContext::make_candidate(ExprTree tree) const {
  Candidate c;
  c.sexpr = format_sexpr(tree);
  c.phenotype = standardized_phenotype(tree);
  c.tree = std::move(tree);
  return c;
}

DistanceTriple DistanceContext::triple(const Candidate& candidate, TreeId id) const {
  const Entry& e = entries_[id];
  if (candidate.sexpr == e.sexpr) return {};
  DistanceTriple t;
  t.shd2 = tsmbo::shd2(candidate.tree, e.tree);
  t.ted = tsmbo::ted(candidate.tree, e.tree);
  t.phd = phenotype_distance(candidate.phenotype, e.phenotype);
  return t;
}

}  // namespace tsmbo
