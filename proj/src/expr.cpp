#include "kanforge/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>

namespace kanforge {

struct CompTree::Node {
  int coord = 0;
  OpKind op = OpKind::Add;
  std::vector<CompTree> children;
};

std::set<OpKind> standard_ops() {
  return {OpKind::Add, OpKind::Sub, OpKind::Mul, OpKind::Sin, OpKind::Cos};
}

int arity(OpKind op) {
  switch (op) {
    case OpKind::Add:
    case OpKind::Sub:
    case OpKind::Mul:
      return 2;
    default:
      return 1;
  }
}

std::string_view op_name(OpKind op) {
  switch (op) {
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Sin: return "sin";
    case OpKind::Cos: return "cos";
    case OpKind::Relu: return "relu";
    case OpKind::Abs: return "abs";
  }
  return "?";
}

std::optional<OpKind> op_from_name(std::string_view name) {
  for (OpKind op : kAllOps) {
    if (op_name(op) == name) return op;
  }
  return std::nullopt;
}

CompTree CompTree::leaf(int coord) {
  if (coord < 1) throw std::invalid_argument("leaf coordinate index must be >= 1");
  auto node = std::make_shared<Node>();
  node->coord = coord;
  return CompTree(std::move(node));
}

CompTree CompTree::node(OpKind op, std::vector<CompTree> children) {
  if (static_cast<int>(children.size()) != arity(op)) {
    throw std::invalid_argument("wrong number of children for " + std::string(op_name(op)));
  }
  auto node = std::make_shared<Node>();
  node->op = op;
  node->children = std::move(children);
  return CompTree(std::move(node));
}

CompTree CompTree::unary(OpKind op, CompTree child) { return node(op, {std::move(child)}); }

CompTree CompTree::binary(OpKind op, CompTree lhs, CompTree rhs) {
  return node(op, {std::move(lhs), std::move(rhs)});
}

bool CompTree::is_leaf() const { return node_->children.empty(); }
int CompTree::coord() const { return node_->coord; }
OpKind CompTree::op() const { return node_->op; }
std::span<const CompTree> CompTree::children() const { return node_->children; }

bool CompTree::operator==(const CompTree& other) const {
  if (node_ == other.node_) return true;
  if (is_leaf() != other.is_leaf()) return false;
  if (is_leaf()) return coord() == other.coord();
  if (op() != other.op()) return false;
  auto a = children();
  auto b = other.children();
  return std::equal(a.begin(), a.end(), b.begin(), b.end());
}

namespace {

void flatten_into(const CompTree& t, int parent, int depth, std::vector<FlatNode>& out) {
  const int id = static_cast<int>(out.size());
  out.push_back({});
  out[id].parent = parent;
  out[id].depth = depth;
  if (t.is_leaf()) {
    out[id].leaf = true;
    out[id].coord = t.coord();
    return;
  }
  out[id].op = t.op();
  for (const CompTree& c : t.children()) {
    out[id].children.push_back(static_cast<int>(out.size()));
    flatten_into(c, id, depth + 1, out);
  }
}

}  // namespace

std::vector<FlatNode> flatten(const CompTree& tree) {
  std::vector<FlatNode> out;
  flatten_into(tree, -1, 0, out);
  return out;
}

std::vector<int> post_order_internal(const std::vector<FlatNode>& nodes) {
  std::vector<int> order;
  // Iterative post-order; children visited left to right.
  std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto& [id, next] = stack.back();
    if (next < nodes[id].children.size()) {
      int child = nodes[id].children[next++];
      stack.emplace_back(child, 0);
      continue;
    }
    if (!nodes[id].leaf) order.push_back(id);
    stack.pop_back();
  }
  return order;
}

TreeStats tree_stats(const CompTree& tree) {
  const auto nodes = flatten(tree);
  TreeStats s;
  // Leaf coordinate sets per node, merged bottom-up (ids are pre-order, so
  // children always have larger ids than their parent).
  std::vector<std::vector<int>> coords(nodes.size());
  for (int id = static_cast<int>(nodes.size()) - 1; id >= 0; --id) {
    const FlatNode& nd = nodes[id];
    s.depth = std::max(s.depth, nd.depth);
    if (nd.leaf) {
      s.n = std::max(s.n, nd.coord);
      coords[id] = {nd.coord};
    } else {
      ++s.N;
      for (int c : nd.children) {
        coords[id].insert(coords[id].end(), coords[c].begin(), coords[c].end());
      }
      std::sort(coords[id].begin(), coords[id].end());
      coords[id].erase(std::unique(coords[id].begin(), coords[id].end()), coords[id].end());
    }
    s.sparsity = std::max(s.sparsity, static_cast<int>(coords[id].size()));
  }
  return s;
}

double apply_op(OpKind op, double a, double b) {
  switch (op) {
    case OpKind::Add: return a + b;
    case OpKind::Sub: return a - b;
    case OpKind::Mul: return a * b;
    case OpKind::Sin: return std::sin(a);
    case OpKind::Cos: return std::cos(a);
    case OpKind::Relu: return a > 0.0 ? a : 0.0;
    case OpKind::Abs: return std::fabs(a);
  }
  return 0.0;
}

double eval_tree(const CompTree& tree, std::span<const double> x) {
  if (tree.is_leaf()) {
    const auto p = static_cast<std::size_t>(tree.coord());
    if (p > x.size()) throw std::invalid_argument("evaluation point has too few coordinates");
    return x[p - 1];
  }
  auto ch = tree.children();
  const double a = eval_tree(ch[0], x);
  const double b = ch.size() > 1 ? eval_tree(ch[1], x) : 0.0;
  return apply_op(tree.op(), a, b);
}

ParseError::ParseError(Kind kind, std::size_t offset, const std::string& what)
    : std::runtime_error(what + " at byte " + std::to_string(offset)), kind_(kind), offset_(offset) {}

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  CompTree parse() {
    CompTree t = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return t;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
    throw ParseError(ParseError::Kind::Syntax, at, msg);
  }
  [[noreturn]] void fail(const std::string& msg) const { fail(msg, pos_); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= text_.size()) fail(std::string("expected '") + c + "' but input ended");
      fail(std::string("expected '") + c + "'");
    }
  }

  CompTree expr() {
    CompTree lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = CompTree::binary(OpKind::Add, lhs, term());
      } else if (accept('-')) {
        lhs = CompTree::binary(OpKind::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  CompTree term() {
    CompTree lhs = factor();
    while (accept('*')) lhs = CompTree::binary(OpKind::Mul, lhs, factor());
    return lhs;
  }

  CompTree factor() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    if (accept('(')) {
      CompTree inner = expr();
      expect(')');
      return inner;
    }
    const char c = text_[pos_];
    if (!std::isalpha(static_cast<unsigned char>(c))) {
      fail("unexpected character '" + std::string(1, c) + "'");
    }
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::string_view word = text_.substr(start, pos_ - start);

    if (word == "x" && pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      return variable(start);
    }
    if (word == "x") fail("expected variable index after 'x'", start);
    if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      fail("unknown variable '" + std::string(word) + "'", start);
    }
    const auto op = op_from_name(word);
    if (!op || arity(*op) != 1) {
      throw ParseError(ParseError::Kind::UnknownFunction, start,
                       "unknown function '" + std::string(word) + "'");
    }
    expect('(');
    CompTree arg = expr();
    expect(')');
    return CompTree::unary(*op, arg);
  }

  CompTree variable(std::size_t start) {
    long long index = 0;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      index = index * 10 + (text_[pos_] - '0');
      if (index > std::numeric_limits<int>::max()) fail("variable index too large", start);
      ++pos_;
    }
    if (index == 0) {
      throw ParseError(ParseError::Kind::ZeroIndex, start, "variable index must be >= 1");
    }
    return CompTree::leaf(static_cast<int>(index));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

// Binding strength for rendering: 1 for +/-, 2 for *, 3 for atoms/calls.
int precedence(const CompTree& t) {
  if (t.is_leaf()) return 3;
  switch (t.op()) {
    case OpKind::Add:
    case OpKind::Sub: return 1;
    case OpKind::Mul: return 2;
    default: return 3;
  }
}

void render_into(const CompTree& t, std::string& out) {
  if (t.is_leaf()) {
    out += 'x';
    out += std::to_string(t.coord());
    return;
  }
  auto ch = t.children();
  if (arity(t.op()) == 1) {
    out += op_name(t.op());
    out += '(';
    render_into(ch[0], out);
    out += ')';
    return;
  }
  const int p = precedence(t);
  const bool wrap_lhs = precedence(ch[0]) < p;
  // Left associativity: an equal-precedence right operand needs parentheses.
  const bool wrap_rhs = precedence(ch[1]) <= p;
  if (wrap_lhs) out += '(';
  render_into(ch[0], out);
  if (wrap_lhs) out += ')';
  out += t.op() == OpKind::Add ? '+' : t.op() == OpKind::Sub ? '-' : '*';
  if (wrap_rhs) out += '(';
  render_into(ch[1], out);
  if (wrap_rhs) out += ')';
}

}  // namespace

CompTree parse_expression(std::string_view text) { return Parser(text).parse(); }

std::string render(const CompTree& tree) {
  std::string out;
  render_into(tree, out);
  return out;
}

std::string tree_hash(const CompTree& tree) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : render(tree)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<OpViolation> validate_opset(const CompTree& tree, const std::set<OpKind>& allowed) {
  std::vector<OpViolation> out;
  const auto nodes = flatten(tree);
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    if (!nodes[id].leaf && !allowed.contains(nodes[id].op)) {
      out.push_back({static_cast<int>(id), nodes[id].op});
    }
  }
  return out;
}

}  // namespace kanforge
