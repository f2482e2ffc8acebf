#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tsmbo/expr.hpp"

namespace tsmbo {

enum class DistanceMeasure { Shd2, Phd, Ted, Shd1 };

const char* measure_name(DistanceMeasure m);

// The three distances entering the combined kernel.
struct DistanceTriple {
  double shd2 = 0.0;
  double phd = 0.0;
  double ted = 0.0;
};

// Phenotypic distance: 1 - |cor| of the two outputs with all constants set to
// one. Structurally equal trees give 0; infeasible or zero-variance outputs
// give 1.
double phd(const ExprTree& a, const ExprTree& b, const DataMatrix& X);

// Exact ordered tree edit distance (Zhang-Shasha) with unit costs for node
// deletion, insertion and relabeling.
double ted(const ExprTree& a, const ExprTree& b);

// Structural Hamming distance, original recursion.
double shd1(const ExprTree& a, const ExprTree& b);

// SHD variant that picks the cheaper of the two child alignments at binary
// nodes.
double shd2(const ExprTree& a, const ExprTree& b);

struct DistanceMatrix {
  DistanceMeasure measure = DistanceMeasure::Shd2;
  std::size_t n = 0;
  std::vector<double> values;  // row-major n x n

  DistanceMatrix() = default;
  DistanceMatrix(DistanceMeasure m, std::size_t n_) : measure(m), n(n_), values(n_ * n_, 0.0) {}
  double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values[i * n + j]; }
};

DistanceMatrix distance_matrix(std::span<const ExprTree> trees, DistanceMeasure measure,
                               const DataMatrix& X);

// CSV export: header row of tree s-expressions, then one row per tree in
// input order.
std::string distance_matrix_csv(const DistanceMatrix& m, std::span<const ExprTree> trees);

using TreeId = std::size_t;

// Per-run distance bookkeeping: interns trees by canonical s-expression (so a
// structural duplicate maps to the same id), caches phenotypes and pairwise
// distance triples, and computes triples against transient candidate trees
// without polluting the cache. Not thread-safe; one context per run.
class DistanceContext {
 public:
  explicit DistanceContext(DataMatrix X);

  TreeId intern(const ExprTree& tree);

  std::size_t size() const { return entries_.size(); }
  const ExprTree& tree(TreeId id) const { return entries_[id].tree; }
  const std::string& sexpr(TreeId id) const { return entries_[id].sexpr; }
  std::optional<TreeId> find(const std::string& sexpr) const;
  const DataMatrix& data() const { return X_; }

  // Cached by unordered pair.
  DistanceTriple triple(TreeId a, TreeId b);

  double distance(TreeId a, TreeId b, DistanceMeasure measure);

  // A tree prepared for repeated distance queries against interned trees.
  struct Candidate {
    ExprTree tree;
    std::string sexpr;
    // Centered, unit-norm output with constants = 1; nullopt when infeasible
    // or constant (both are at phenotypic distance 1 from everything else).
    std::optional<std::vector<double>> phenotype;
  };

  Candidate make_candidate(ExprTree tree) const;
  DistanceTriple triple(const Candidate& candidate, TreeId id) const;

 private:
  struct Entry {
    ExprTree tree;
    std::string sexpr;
    std::optional<std::vector<double>> phenotype;
  };

  std::optional<std::vector<double>> standardized_phenotype(const ExprTree& tree) const;

  DataMatrix X_;
  std::vector<Entry> entries_;
  std::unordered_map<std::string, TreeId> by_sexpr_;
  std::unordered_map<std::uint64_t, DistanceTriple> pair_cache_;
};

}  // namespace tsmbo
