#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tsmbo {

enum class NodeKind { Operator, Variable, Constant };

// Label of one tree node. Constants are anonymous: a constant leaf carries no
// value or index; its identity is its pre-order position among constants.
struct NodeLabel {
  NodeKind kind = NodeKind::Constant;
  std::string symbol;  // operator name, set only when kind == Operator
  int index = 0;       // 1-based variable index, set only when kind == Variable

  static NodeLabel op(std::string name) {
    return NodeLabel{NodeKind::Operator, std::move(name), 0};
  }
  static NodeLabel variable(int index) {
    return NodeLabel{NodeKind::Variable, {}, index};
  }
  static NodeLabel constant() { return NodeLabel{}; }
};

// Operators compare by symbol, variables by index, constants are all equal.
bool operator==(const NodeLabel& a, const NodeLabel& b);
inline bool operator!=(const NodeLabel& a, const NodeLabel& b) { return !(a == b); }

// Ordered, labeled expression tree with value semantics.
class ExprTree {
 public:
  ExprTree() = default;
  explicit ExprTree(NodeLabel label, std::vector<ExprTree> children = {})
      : label_(std::move(label)), children_(std::move(children)) {}

  static ExprTree leaf(NodeLabel label) { return ExprTree(std::move(label)); }

  const NodeLabel& label() const { return label_; }
  const std::vector<ExprTree>& children() const { return children_; }
  std::vector<ExprTree>& children() { return children_; }

  std::size_t arity() const { return children_.size(); }
  bool is_leaf() const { return children_.empty(); }

  std::size_t node_count() const;

 private:
  NodeLabel label_;
  std::vector<ExprTree> children_;
};

// Structural equality under anonymous constant labels.
bool operator==(const ExprTree& a, const ExprTree& b);
inline bool operator!=(const ExprTree& a, const ExprTree& b) { return !(a == b); }

// Leaf depth is 1, internal nodes add one per level.
int depth(const ExprTree& tree);

// Number of constant leaves; their lower-level positions 1..d_c follow
// pre-order traversal.
int count_constants(const ExprTree& tree);

struct OperatorEntry {
  std::string symbol;
  int arity = 2;  // 1 or 2
};

// The operator vocabulary plus terminal configuration of one problem.
class OperatorSet {
 public:
  // Symbols must come from the built-in vocabulary; throws std::invalid_argument
  // otherwise, or when no terminal kind is available.
  OperatorSet(const std::vector<std::string>& symbols, int variable_count,
              bool constants_allowed);

  const std::vector<OperatorEntry>& entries() const { return entries_; }
  int variable_count() const { return variable_count_; }
  bool constants_allowed() const { return constants_allowed_; }

  // Arity of a symbol in this set, or nullopt when the symbol is not present.
  std::optional<int> arity_of(std::string_view symbol) const;

  std::vector<std::string> symbols() const;

  // Arity in the built-in vocabulary {+,-,*,/,sqrt,sin,cos,exp,log}.
  static std::optional<int> builtin_arity(std::string_view symbol);

 private:
  std::vector<OperatorEntry> entries_;
  int variable_count_ = 0;
  bool constants_allowed_ = true;
};

// Checks that every operator node has children matching its arity in `ops`
// and that variable indices are within range.
bool arity_consistent(const ExprTree& tree, const OperatorSet& ops);

// Dense row-major matrix of problem inputs (n rows, one column per variable).
struct DataMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  DataMatrix() = default;
  DataMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
};

// Row-wise evaluation of the expression over X with the given constant values
// (pre-order assignment). Returns nullopt when any row hits a domain violation
// or a non-finite intermediate or final value.
std::optional<std::vector<double>> evaluate(const ExprTree& tree, const DataMatrix& X,
                                            std::span<const double> constants);

// Evaluation with every constant set to one (the phenotype used by the
// phenotypic distance).
std::optional<std::vector<double>> evaluate_with_unit_constants(const ExprTree& tree,
                                                                const DataMatrix& X);

// S-expression text form, e.g. "(+ (sqrt (- c z2)) (* z1 c))". Constants
// serialize as the bare token `c`.
std::string format_sexpr(const ExprTree& tree);

struct ParseError : std::runtime_error {
  ParseError(const std::string& message, std::size_t position)
      : std::runtime_error(message + " at position " + std::to_string(position)),
        position(position) {}
  std::size_t position;
};

// Inverse of format_sexpr. Validates symbols, arities and variable indices
// against `ops`; throws ParseError with the offending position otherwise.
ExprTree parse_sexpr(std::string_view text, const OperatorSet& ops);

}  // namespace tsmbo
