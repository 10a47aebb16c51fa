#pragma once

// Reference implementations written independently of the library, used as
// test oracles. They share no code with src/.

#include <cctype>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "kanforge/expr.hpp"

namespace oracle {

// Shunting-yard to RPN, then a stack machine.
struct Token {
  enum Kind { Var, Op, Func, LParen, RParen } kind;
  std::string text;
  int var = 0;
};

inline std::vector<Token> tokenize(const std::string& s) {
  std::vector<Token> out;
  for (std::size_t i = 0; i < s.size();) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '(') {
      out.push_back({Token::LParen, "(", 0});
      ++i;
    } else if (c == ')') {
      out.push_back({Token::RParen, ")", 0});
      ++i;
    } else if (c == '+' || c == '-' || c == '*') {
      out.push_back({Token::Op, std::string(1, c), 0});
      ++i;
    } else if (c == 'x' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
      std::size_t j = i + 1;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      out.push_back({Token::Var, s.substr(i, j - i), std::stoi(s.substr(i + 1, j - i - 1))});
      i = j;
    } else {
      std::size_t j = i;
      while (j < s.size() && std::isalpha(static_cast<unsigned char>(s[j]))) ++j;
      if (j == i) throw std::runtime_error("oracle: bad character");
      out.push_back({Token::Func, s.substr(i, j - i), 0});
      i = j;
    }
  }
  return out;
}

inline int precedence(const std::string& op) { return op == "*" ? 2 : 1; }

inline std::vector<Token> to_rpn(const std::vector<Token>& tokens) {
  std::vector<Token> out, stack;
  for (const Token& t : tokens) {
    switch (t.kind) {
      case Token::Var:
        out.push_back(t);
        break;
      case Token::Func:
      case Token::LParen:
        stack.push_back(t);
        break;
      case Token::Op:
        while (!stack.empty() && stack.back().kind == Token::Op &&
               precedence(stack.back().text) >= precedence(t.text)) {
          out.push_back(stack.back());
          stack.pop_back();
        }
        stack.push_back(t);
        break;
      case Token::RParen:
        while (stack.back().kind != Token::LParen) {
          out.push_back(stack.back());
          stack.pop_back();
        }
        stack.pop_back();
        if (!stack.empty() && stack.back().kind == Token::Func) {
          out.push_back(stack.back());
          stack.pop_back();
        }
        break;
    }
  }
  while (!stack.empty()) {
    out.push_back(stack.back());
    stack.pop_back();
  }
  return out;
}

inline double eval_rpn(const std::vector<Token>& rpn, const std::vector<double>& x) {
  std::vector<double> st;
  for (const Token& t : rpn) {
    if (t.kind == Token::Var) {
      st.push_back(x.at(t.var - 1));
    } else if (t.kind == Token::Func) {
      const double a = st.back();
      if (t.text == "sin") st.back() = std::sin(a);
      else if (t.text == "cos") st.back() = std::cos(a);
      else if (t.text == "relu") st.back() = a > 0.0 ? a : 0.0;
      else if (t.text == "abs") st.back() = std::fabs(a);
      else throw std::runtime_error("oracle: unknown function");
    } else {
      const double b = st.back();
      st.pop_back();
      const double a = st.back();
      if (t.text == "+") st.back() = a + b;
      else if (t.text == "-") st.back() = a - b;
      else st.back() = a * b;
    }
  }
  return st.back();
}

inline double eval_text(const std::string& expr, const std::vector<double>& x) {
  return eval_rpn(to_rpn(tokenize(expr)), x);
}

// Random trees for properties, drawn independently of the library generator.
inline kanforge::CompTree random_tree(std::mt19937_64& rng, int max_depth, int max_coord,
                                      bool all_ops = false, int depth = 0) {
  using kanforge::CompTree;
  using kanforge::OpKind;
  std::uniform_int_distribution<int> coord(1, max_coord);
  std::bernoulli_distribution stop(depth == 0 ? 0.0 : 0.3);
  if (depth >= max_depth || stop(rng)) return CompTree::leaf(coord(rng));
  const std::vector<OpKind> ops = all_ops ? std::vector<OpKind>{OpKind::Add, OpKind::Sub, OpKind::Mul, OpKind::Sin,
                                                                OpKind::Cos, OpKind::Relu, OpKind::Abs}
                                          : std::vector<OpKind>{OpKind::Add, OpKind::Sub, OpKind::Mul, OpKind::Sin,
                                                                OpKind::Cos};
  std::uniform_int_distribution<std::size_t> pick(0, ops.size() - 1);
  const OpKind op = ops[pick(rng)];
  if (op == OpKind::Add || op == OpKind::Sub || op == OpKind::Mul) {
    auto a = random_tree(rng, max_depth, max_coord, all_ops, depth + 1);
    auto b = random_tree(rng, max_depth, max_coord, all_ops, depth + 1);
    return CompTree::binary(op, a, b);
  }
  return CompTree::unary(op, random_tree(rng, max_depth, max_coord, all_ops, depth + 1));
}

// Slope scan: max |f(t_{i+1}) - f(t_i)| / (t_{i+1} - t_i) over m equal steps.
inline double slope_scan(const std::function<double(double)>& f, double a, double b, int m) {
  double best = 0.0;
  double prev = f(a);
  for (int i = 1; i <= m; ++i) {
    const double t0 = a + (b - a) * (i - 1) / m;
    const double t1 = i == m ? b : a + (b - a) * i / m;
    const double cur = f(t1);
    best = std::max(best, std::fabs(cur - prev) / (t1 - t0));
    prev = cur;
  }
  return best;
}

// Textbook recursive Cox-de Boor basis on an explicit knot vector, with the
// right end point assigned to the last nonempty span.
inline double bspline_basis(const std::vector<double>& t, int i, int k, double x) {
  if (k == 0) {
    const double last = t.back();
    if (x == last) {
      // the last nonempty span owns the right end point
      int j = static_cast<int>(t.size()) - 2;
      while (j > 0 && t[j] == t[j + 1]) --j;
      return i == j ? 1.0 : 0.0;
    }
    return t[i] <= x && x < t[i + 1] ? 1.0 : 0.0;
  }
  double v = 0.0;
  if (t[i + k] != t[i]) v += (x - t[i]) / (t[i + k] - t[i]) * bspline_basis(t, i, k - 1, x);
  if (t[i + k + 1] != t[i + 1]) v += (t[i + k + 1] - x) / (t[i + k + 1] - t[i + 1]) * bspline_basis(t, i + 1, k - 1, x);
  return v;
}

// Clamped knot vector: a and b repeated k + 1 times around the interior breakpoints.
inline std::vector<double> clamped_knots(const std::vector<double>& breaks, int k) {
  std::vector<double> t(k, breaks.front());
  t.insert(t.end(), breaks.begin(), breaks.end());
  t.insert(t.end(), k, breaks.back());
  return t;
}

inline double spline_value(const std::vector<double>& breaks, const std::vector<double>& coef, int k, double x) {
  const auto t = clamped_knots(breaks, k);
  double s = 0.0;
  for (std::size_t i = 0; i < coef.size(); ++i) s += coef[i] * bspline_basis(t, static_cast<int>(i), k, x);
  return s;
}

// Layer widths of the full identity-wire construction, counted group by
// group: n inputs, completed values still waiting for their parent, and the
// running block's hidden neurons (plus a copy neuron when a binary node reads
// one coordinate twice).
struct Step {
  int node;
  int parent;
  int c;
  int hidden;  // hidden neurons per hidden layer of the block
  bool copy;
};

inline void collect(const kanforge::CompTree& t, int parent, int& next_id, std::vector<Step>& out) {
  const int id = next_id++;
  if (t.is_leaf()) return;
  for (const auto& ch : t.children()) collect(ch, id, next_id, out);
  const bool mul = t.op() == kanforge::OpKind::Mul;
  bool copy = false;
  if (t.children().size() == 2 && t.children()[0].is_leaf() && t.children()[1].is_leaf()) {
    copy = t.children()[0].coord() == t.children()[1].coord();
  }
  out.push_back({id, parent, mul ? 3 : 1, mul ? 2 : 0, copy});
}

inline std::vector<int> faithful_widths(const kanforge::CompTree& tree, int n) {
  if (tree.is_leaf()) return {n, 1};
  int next = 0;
  std::vector<Step> steps;
  collect(tree, -1, next, steps);
  const int offset = steps.front().copy ? 1 : 0;
  std::vector<int> start, end;
  int l = offset;
  for (const Step& s : steps) {
    start.push_back(l);
    l += s.c;
    end.push_back(l);
  }
  const int L = l;
  std::vector<int> widths(L + 1, n);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    int until = L;
    for (std::size_t j = 0; j < steps.size(); ++j) {
      if (steps[j].node == steps[i].parent) until = start[j];
    }
    for (int k = end[i]; k <= until; ++k) ++widths[k];          // live value
    for (int k = start[i] + 1; k < end[i]; ++k) widths[k] += steps[i].hidden;  // block internals
    if (steps[i].copy) ++widths[start[i]];                       // copy neuron
  }
  return widths;
}

}  // namespace oracle
