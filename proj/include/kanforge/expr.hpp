#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kanforge {

enum class OpKind { Add, Sub, Mul, Sin, Cos, Relu, Abs };

inline constexpr OpKind kAllOps[] = {OpKind::Add, OpKind::Sub, OpKind::Mul, OpKind::Sin,
                                     OpKind::Cos, OpKind::Relu, OpKind::Abs};

/// The operation set {+, -, *, sin, cos}.
std::set<OpKind> standard_ops();

int arity(OpKind op);
std::string_view op_name(OpKind op);
std::optional<OpKind> op_from_name(std::string_view name);

/// Immutable computation tree. Leaves are coordinate projections x_p (p >= 1),
/// internal nodes carry an operation and `arity(op)` ordered children.
/// Copies share structure.
class CompTree {
 public:
  static CompTree leaf(int coord);
  static CompTree node(OpKind op, std::vector<CompTree> children);
  static CompTree unary(OpKind op, CompTree child);
  static CompTree binary(OpKind op, CompTree lhs, CompTree rhs);

  bool is_leaf() const;
  int coord() const;  // leaf only
  OpKind op() const;  // internal only
  std::span<const CompTree> children() const;

  bool operator==(const CompTree& other) const;

 private:
  struct Node;
  explicit CompTree(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

struct TreeStats {
  int n = 0;         // input dimension (max leaf index)
  int N = 0;         // internal node count
  int depth = 0;     // longest root-to-leaf path, in edges
  int sparsity = 0;  // max distinct leaf coordinates below an internal node
};

TreeStats tree_stats(const CompTree& tree);

/// Pre-order flattening. Node ids are pre-order positions over all nodes
/// (leaves included); they are the stable identifiers used everywhere else.
struct FlatNode {
  bool leaf = false;
  int coord = 0;               // leaf only
  OpKind op = OpKind::Add;     // internal only
  std::vector<int> children;   // ids
  int parent = -1;
  int depth = 0;               // distance from the root
};

std::vector<FlatNode> flatten(const CompTree& tree);

/// Internal node ids in evaluation order: left subtree, right subtree, node.
std::vector<int> post_order_internal(const std::vector<FlatNode>& nodes);

double eval_tree(const CompTree& tree, std::span<const double> x);
double apply_op(OpKind op, double a, double b = 0.0);

class ParseError : public std::runtime_error {
 public:
  enum class Kind { Syntax, UnknownFunction, ZeroIndex };
  ParseError(Kind kind, std::size_t offset, const std::string& what);
  Kind kind() const { return kind_; }
  std::size_t offset() const { return offset_; }

 private:
  Kind kind_;
  std::size_t offset_;
};

CompTree parse_expression(std::string_view text);

/// Canonical text with the minimum parentheses needed to reparse to the
/// same tree.
std::string render(const CompTree& tree);

/// 64-bit FNV-1a of the canonical rendering, as 16 hex digits.
std::string tree_hash(const CompTree& tree);

struct OpViolation {
  int node_id;
  OpKind op;
};

std::vector<OpViolation> validate_opset(const CompTree& tree, const std::set<OpKind>& allowed);

}  // namespace kanforge
