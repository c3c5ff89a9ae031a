#pragma once

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "relsens/error.hpp"
#include "relsens/limit_state.hpp"

namespace relsens {
namespace expr {

// Grammar (see docs/cli.md for the EBNF):
//   expression := term { ("+" | "-") term }
//   term       := unary { ("*" | "/") unary }
//   unary      := "-" unary | power
//   power      := primary [ "^" unary ]          (right associative)
//   primary    := number | name | name "(" expression {"," expression} ")"
//               | "(" expression ")"
// Functions: tan exp ln sqrt abs (one argument), min max (two arguments).
// Named constant: pi. Angles are in radians.

struct Node {
  enum class Op {
    Constant, Input, Negate, Add, Sub, Mul, Div, Pow,
    Tan, Exp, Ln, Sqrt, Abs, Min, Max,
  };
  Op op;
  double value = 0.0;       // Constant
  std::size_t input = 0;    // Input
  std::unique_ptr<Node> lhs;
  std::unique_ptr<Node> rhs;

  double eval(std::span<const double> x) const {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    switch (op) {
      case Op::Constant: return value;
      case Op::Input: return x[input];
      case Op::Negate: return -lhs->eval(x);
      case Op::Add: return lhs->eval(x) + rhs->eval(x);
      case Op::Sub: return lhs->eval(x) - rhs->eval(x);
      case Op::Mul: return lhs->eval(x) * rhs->eval(x);
      case Op::Div: {
        const double d = rhs->eval(x);
        return d == 0.0 ? nan : lhs->eval(x) / d;
      }
      case Op::Pow: return std::pow(lhs->eval(x), rhs->eval(x));
      case Op::Tan: return std::tan(lhs->eval(x));
      case Op::Exp: return std::exp(lhs->eval(x));
      case Op::Ln: {
        const double v = lhs->eval(x);
        return v > 0.0 ? std::log(v) : nan;
      }
      case Op::Sqrt: {
        const double v = lhs->eval(x);
        return v >= 0.0 ? std::sqrt(v) : nan;
      }
      case Op::Abs: return std::abs(lhs->eval(x));
      case Op::Min: return std::fmin(lhs->eval(x), rhs->eval(x));
      case Op::Max: return std::fmax(lhs->eval(x), rhs->eval(x));
    }
    return nan;
  }
};

using NodePtr = std::unique_ptr<Node>;

inline NodePtr make_constant(double v) {
  auto n = std::make_unique<Node>();
  n->op = Node::Op::Constant;
  n->value = v;
  return n;
}

inline NodePtr make_unary(Node::Op op, NodePtr child) {
  auto n = std::make_unique<Node>();
  n->op = op;
  n->lhs = std::move(child);
  return n;
}

inline NodePtr make_binary(Node::Op op, NodePtr l, NodePtr r) {
  auto n = std::make_unique<Node>();
  n->op = op;
  n->lhs = std::move(l);
  n->rhs = std::move(r);
  return n;
}

class Parser {
 public:
  // text must outlive the parser and be NUL-terminated (std::string)
  Parser(const std::string& text, const std::vector<std::string>& input_names,
         const std::map<std::string, double>& constants)
      : text_(text), constants_(constants) {
    for (std::size_t i = 0; i < input_names.size(); ++i) {
      inputs_[input_names[i]] = i;
    }
  }

  NodePtr parse() {
    NodePtr root = expression();
    skip_space();
    if (pos_ != text_.size()) {
      fail(ErrorCode::ParseError, "unexpected trailing input");
    }
    return root;
  }

 private:
  [[noreturn]] void fail(ErrorCode code, const std::string& what) const {
    throw Error(code, what + " at position " + std::to_string(pos_));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  char peek() {
    skip_space();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  bool consume(char c) {
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expression() {
    NodePtr node = term();
    while (true) {
      if (consume('+')) {
        node = make_binary(Node::Op::Add, std::move(node), term());
      } else if (consume('-')) {
        node = make_binary(Node::Op::Sub, std::move(node), term());
      } else {
        return node;
      }
    }
  }

  NodePtr term() {
    NodePtr node = unary();
    while (true) {
      if (consume('*')) {
        node = make_binary(Node::Op::Mul, std::move(node), unary());
      } else if (consume('/')) {
        node = make_binary(Node::Op::Div, std::move(node), unary());
      } else {
        return node;
      }
    }
  }

  NodePtr unary() {
    if (consume('-')) return make_unary(Node::Op::Negate, unary());
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (consume('^')) {
      return make_binary(Node::Op::Pow, std::move(base), unary());
    }
    return base;
  }

  NodePtr primary() {
    const char c = peek();
    if (c == '\0') fail(ErrorCode::ParseError, "unexpected end of input");
    if (c == '(') {
      ++pos_;
      NodePtr inner = expression();
      if (!consume(')')) fail(ErrorCode::ParseError, "expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return name();
    fail(ErrorCode::ParseError, std::string("unexpected character '") + c + "'");
  }

  NodePtr number() {
    skip_space();
    const char* begin = text_.data() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail(ErrorCode::ParseError, "malformed number");
    pos_ += static_cast<std::size_t>(end - begin);
    return make_constant(v);
  }

  NodePtr name() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string ident(text_.substr(start, pos_ - start));

    if (peek() == '(') {
      ++pos_;
      return call(ident);
    }
    if (ident == "pi") return make_constant(3.14159265358979323846);
    if (auto it = inputs_.find(ident); it != inputs_.end()) {
      auto n = std::make_unique<Node>();
      n->op = Node::Op::Input;
      n->input = it->second;
      return n;
    }
    if (auto it = constants_.find(ident); it != constants_.end()) {
      return make_constant(it->second);
    }
    pos_ = start;
    fail(ErrorCode::UnknownIdentifier, "unknown identifier '" + ident + "'");
  }

  NodePtr call(const std::string& fn) {
    static const std::map<std::string, Node::Op, std::less<>> one_arg = {
        {"tan", Node::Op::Tan}, {"exp", Node::Op::Exp}, {"ln", Node::Op::Ln},
        {"sqrt", Node::Op::Sqrt}, {"abs", Node::Op::Abs}};
    static const std::map<std::string, Node::Op, std::less<>> two_arg = {
        {"min", Node::Op::Min}, {"max", Node::Op::Max}};

    NodePtr first = expression();
    if (auto it = one_arg.find(fn); it != one_arg.end()) {
      if (!consume(')')) fail(ErrorCode::ParseError, "expected ')'");
      return make_unary(it->second, std::move(first));
    }
    if (auto it = two_arg.find(fn); it != two_arg.end()) {
      if (!consume(',')) fail(ErrorCode::ParseError, "expected ',' in " + fn + "()");
      NodePtr second = expression();
      if (!consume(')')) fail(ErrorCode::ParseError, "expected ')'");
      return make_binary(it->second, std::move(first), std::move(second));
    }
    fail(ErrorCode::UnknownIdentifier, "unknown function '" + fn + "'");
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  std::map<std::string, std::size_t, std::less<>> inputs_;
  const std::map<std::string, double>& constants_;
};

}  // namespace expr

/// Parses an arithmetic expression into a limit state over the named inputs.
/// Identifiers resolve to inputs first, then to the supplied constants, which
/// are folded into the tree at parse time. Evaluation faults (division by
/// zero, log of a non-positive value) yield NaN, which downstream
/// indicator/sampling code reports.
inline LimitState parse_expression(const std::string& text,
                                   std::vector<std::string> input_names,
                                   const std::map<std::string, double>& constants = {}) {
  expr::Parser parser(text, input_names, constants);
  std::shared_ptr<expr::Node> root{parser.parse().release()};

  LimitState ls;
  ls.input_names = std::move(input_names);
  ls.evaluate = [root](std::span<const double> x) { return root->eval(x); };
  return ls;
}

}  // namespace relsens
