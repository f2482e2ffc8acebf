#include "tsmbo/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <sstream>

namespace tsmbo {

bool operator==(const NodeLabel& a, const NodeLabel& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case NodeKind::Operator:
      return a.symbol == b.symbol;
    case NodeKind::Variable:
      return a.index == b.index;
    case NodeKind::Constant:
      return true;
  }
  return false;
}

std::size_t ExprTree::node_count() const {
  std::size_t n = 1;
  for (const auto& child : children_) n += child.node_count();
  return n;
}

bool operator==(const ExprTree& a, const ExprTree& b) {
  if (!(a.label() == b.label())) return false;
  if (a.children().size() != b.children().size()) return false;
  for (std::size_t i = 0; i < a.children().size(); ++i) {
    if (!(a.children()[i] == b.children()[i])) return false;
  }
  return true;
}

int depth(const ExprTree& tree) {
  int deepest = 0;
  for (const auto& child : tree.children()) deepest = std::max(deepest, depth(child));
  return 1 + deepest;
}

int count_constants(const ExprTree& tree) {
  int n = tree.label().kind == NodeKind::Constant ? 1 : 0;
  for (const auto& child : tree.children()) n += count_constants(child);
  return n;
}

namespace {

struct BuiltinOp {
  const char* symbol;
  int arity;
};

constexpr std::array<BuiltinOp, 9> kBuiltinOps = {{
    {"+", 2},
    {"-", 2},
    {"*", 2},
    {"/", 2},
    {"sqrt", 1},
    {"sin", 1},
    {"cos", 1},
    {"exp", 1},
    {"log", 1},
}};

}  // namespace

std::optional<int> OperatorSet::builtin_arity(std::string_view symbol) {
  for (const auto& op : kBuiltinOps) {
    if (symbol == op.symbol) return op.arity;
  }
  return std::nullopt;
}

OperatorSet::OperatorSet(const std::vector<std::string>& symbols, int variable_count,
                         bool constants_allowed)
    : variable_count_(variable_count), constants_allowed_(constants_allowed) {
  if (variable_count < 0) throw std::invalid_argument("negative variable count");
  if (variable_count == 0 && !constants_allowed) {
    throw std::invalid_argument("operator set has no terminal kind");
  }
  for (const auto& s : symbols) {
    auto arity = builtin_arity(s);
    if (!arity) throw std::invalid_argument("unknown operator symbol: " + s);
    if (arity_of(s)) throw std::invalid_argument("duplicate operator symbol: " + s);
    entries_.push_back({s, *arity});
  }
}

std::optional<int> OperatorSet::arity_of(std::string_view symbol) const {
  for (const auto& e : entries_) {
    if (e.symbol == symbol) return e.arity;
  }
  return std::nullopt;
}

std::vector<std::string> OperatorSet::symbols() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.symbol);
  return out;
}

bool arity_consistent(const ExprTree& tree, const OperatorSet& ops) {
  switch (tree.label().kind) {
    case NodeKind::Operator: {
      auto arity = ops.arity_of(tree.label().symbol);
      if (!arity || tree.children().size() != static_cast<std::size_t>(*arity)) return false;
      break;
    }
    case NodeKind::Variable:
      if (!tree.children().empty()) return false;
      if (tree.label().index < 1 || tree.label().index > ops.variable_count()) return false;
      break;
    case NodeKind::Constant:
      if (!tree.children().empty()) return false;
      break;
  }
  for (const auto& child : tree.children()) {
    if (!arity_consistent(child, ops)) return false;
  }
  return true;
}

namespace {

// Evaluates one node for one row; returns false on a domain violation or a
// non-finite value. The constant cursor advances in pre-order.
bool eval_node(const ExprTree& t, const DataMatrix& X, std::size_t row,
               std::span<const double> c, std::size_t& cursor, double& out) {
  switch (t.label().kind) {
    case NodeKind::Constant:
      out = c[cursor++];
      return std::isfinite(out);
    case NodeKind::Variable:
      out = X(row, static_cast<std::size_t>(t.label().index - 1));
      return std::isfinite(out);
    case NodeKind::Operator:
      break;
  }

  const std::string& sym = t.label().symbol;
  if (t.children().size() == 2) {
    double a = 0.0;
    double b = 0.0;
    if (!eval_node(t.children()[0], X, row, c, cursor, a)) return false;
    if (!eval_node(t.children()[1], X, row, c, cursor, b)) return false;
    if (sym == "+") {
      out = a + b;
    } else if (sym == "-") {
      out = a - b;
    } else if (sym == "*") {
      out = a * b;
    } else if (sym == "/") {
      out = a / b;  // b == 0 produces a non-finite value, caught below
    } else {
      throw std::logic_error("unknown binary operator: " + sym);
    }
    return std::isfinite(out);
  }

  double a = 0.0;
  if (!eval_node(t.children()[0], X, row, c, cursor, a)) return false;
  if (sym == "sqrt") {
    if (a < 0.0) return false;
    out = std::sqrt(a);
  } else if (sym == "sin") {
    out = std::sin(a);
  } else if (sym == "cos") {
    out = std::cos(a);
  } else if (sym == "exp") {
    out = std::exp(a);
  } else if (sym == "log") {
    if (a <= 0.0) return false;
    out = std::log(a);
  } else {
    throw std::logic_error("unknown unary operator: " + sym);
  }
  return std::isfinite(out);
}

}  // namespace

std::optional<std::vector<double>> evaluate(const ExprTree& tree, const DataMatrix& X,
                                            std::span<const double> constants) {
  if (constants.size() != static_cast<std::size_t>(count_constants(tree))) {
    throw std::invalid_argument("constant vector length does not match d_c");
  }
  std::vector<double> out(X.rows, 0.0);
  for (std::size_t r = 0; r < X.rows; ++r) {
    std::size_t cursor = 0;
    double v = 0.0;
    if (!eval_node(tree, X, r, constants, cursor, v)) return std::nullopt;
    out[r] = v;
  }
  return out;
}

std::optional<std::vector<double>> evaluate_with_unit_constants(const ExprTree& tree,
                                                                const DataMatrix& X) {
  std::vector<double> ones(static_cast<std::size_t>(count_constants(tree)), 1.0);
  return evaluate(tree, X, ones);
}

namespace {

void format_node(const ExprTree& t, std::string& out) {
  switch (t.label().kind) {
    case NodeKind::Constant:
      out += 'c';
      return;
    case NodeKind::Variable:
      out += 'z';
      out += std::to_string(t.label().index);
      return;
    case NodeKind::Operator:
      out += '(';
      out += t.label().symbol;
      for (const auto& child : t.children()) {
        out += ' ';
        format_node(child, out);
      }
      out += ')';
      return;
  }
}

struct Token {
  enum class Type { Open, Close, Atom, End };
  Type type = Type::End;
  std::string text;
  std::size_t position = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    if (pos_ >= text_.size()) return {Token::Type::End, "", pos_};
    const std::size_t start = pos_;
    const char ch = text_[pos_];
    if (ch == '(') {
      ++pos_;
      return {Token::Type::Open, "(", start};
    }
    if (ch == ')') {
      ++pos_;
      return {Token::Type::Close, ")", start};
    }
    while (pos_ < text_.size() && text_[pos_] != '(' && text_[pos_] != ')' &&
           !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    return {Token::Type::Atom, std::string(text_.substr(start, pos_ - start)), start};
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

ExprTree parse_leaf(const Token& tok, const OperatorSet& ops) {
  if (tok.text == "c") return ExprTree::leaf(NodeLabel::constant());
  if (tok.text.size() >= 2 && tok.text[0] == 'z' &&
      std::all_of(tok.text.begin() + 1, tok.text.end(),
                  [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    const int idx = std::stoi(tok.text.substr(1));
    if (idx < 1 || idx > ops.variable_count()) {
      throw ParseError("variable index out of range: " + tok.text, tok.position);
    }
    return ExprTree::leaf(NodeLabel::variable(idx));
  }
  throw ParseError("unknown symbol: " + tok.text, tok.position);
}

ExprTree parse_expr(Lexer& lex, Token tok, const OperatorSet& ops) {
  if (tok.type == Token::Type::Atom) return parse_leaf(tok, ops);
  if (tok.type != Token::Type::Open) {
    throw ParseError("unexpected token '" + tok.text + "'", tok.position);
  }

  Token head = lex.next();
  if (head.type != Token::Type::Atom) {
    throw ParseError("expected operator after '('", head.position);
  }
  auto arity = ops.arity_of(head.text);
  if (!arity) throw ParseError("unknown symbol: " + head.text, head.position);

  std::vector<ExprTree> children;
  while (true) {
    Token next = lex.next();
    if (next.type == Token::Type::Close) break;
    if (next.type == Token::Type::End) {
      throw ParseError("unterminated expression", next.position);
    }
    children.push_back(parse_expr(lex, next, ops));
  }
  if (children.size() != static_cast<std::size_t>(*arity)) {
    throw ParseError("operator '" + head.text + "' expects " + std::to_string(*arity) +
                         " arguments, got " + std::to_string(children.size()),
                     head.position);
  }
  return ExprTree(NodeLabel::op(head.text), std::move(children));
}

}  // namespace

std::string format_sexpr(const ExprTree& tree) {
  std::string out;
  format_node(tree, out);
  return out;
}

ExprTree parse_sexpr(std::string_view text, const OperatorSet& ops) {
  Lexer lex(text);
  Token first = lex.next();
  if (first.type == Token::Type::End) throw ParseError("empty input", 0);
  ExprTree tree = parse_expr(lex, first, ops);
  Token rest = lex.next();
  if (rest.type != Token::Type::End) {
    throw ParseError("trailing input '" + rest.text + "'", rest.position);
  }
  return tree;
}

}  // namespace tsmbo
