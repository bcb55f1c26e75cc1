#pragma once

// Arithmetic expressions over x1..xn: recursive-descent parser, canonical
// printer, tree evaluator and a compiled postfix form.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' ['-'] integer)*
//   primary := number | 'x' index | func '(' args ')' | '(' expr ')'
//   func    := abs | sqrt (one argument), min | max (two arguments)

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cselect/error.hpp"

namespace cselect {

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

enum class ExprOp { constant, variable, neg, abs, sqrt, add, sub, mul, div, min, max, pow };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Immutable expression node. Constants are finite and non-negative (a minus
/// sign is a neg node); variables are 0-based.
struct Expr {
  ExprOp op;
  double value = 0.0;
  std::size_t var = 0;
  int exponent = 0;
  ExprPtr a, b;

  static ExprPtr constant(double v) {
    if (!std::isfinite(v) || v < 0.0) throw PreconditionError("expression constants are finite and non-negative");
    return std::make_shared<const Expr>(Expr{ExprOp::constant, v, 0, 0, nullptr, nullptr});
  }
  static ExprPtr variable(std::size_t index) {
    return std::make_shared<const Expr>(Expr{ExprOp::variable, 0.0, index, 0, nullptr, nullptr});
  }
  static ExprPtr unary(ExprOp op, ExprPtr a) {
    return std::make_shared<const Expr>(Expr{op, 0.0, 0, 0, std::move(a), nullptr});
  }
  static ExprPtr binary(ExprOp op, ExprPtr a, ExprPtr b) {
    return std::make_shared<const Expr>(Expr{op, 0.0, 0, 0, std::move(a), std::move(b)});
  }
  static ExprPtr pow(ExprPtr base, int exponent) {
    return std::make_shared<const Expr>(Expr{ExprOp::pow, 0.0, 0, exponent, std::move(base), nullptr});
  }
};

inline bool is_unary(ExprOp op) { return op == ExprOp::neg || op == ExprOp::abs || op == ExprOp::sqrt; }
inline bool is_binary(ExprOp op) {
  return op == ExprOp::add || op == ExprOp::sub || op == ExprOp::mul || op == ExprOp::div || op == ExprOp::min ||
         op == ExprOp::max;
}

namespace detail {

class ExprParser {
 public:
  ExprParser(std::string_view src, std::size_t dims) : src_(src), dims_(dims) {}

  ExprPtr parse() {
    ExprPtr e = expr();
    skip();
    if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }
  [[noreturn]] void fail_at(const std::string& what, std::size_t at) const { throw ParseError(what, at); }

  void skip() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!eat(c)) fail(pos_ < src_.size() ? "expected '" + std::string(1, c) + "'" : "unexpected end of input");
  }

  ExprPtr expr() {
    ExprPtr lhs = term();
    for (;;) {
      if (eat('+')) lhs = Expr::binary(ExprOp::add, lhs, term());
      else if (eat('-')) lhs = Expr::binary(ExprOp::sub, lhs, term());
      else return lhs;
    }
  }

  ExprPtr term() {
    ExprPtr lhs = unary();
    for (;;) {
      if (eat('*')) lhs = Expr::binary(ExprOp::mul, lhs, unary());
      else if (eat('/')) lhs = Expr::binary(ExprOp::div, lhs, unary());
      else return lhs;
    }
  }

  ExprPtr unary() {
    if (eat('-')) return Expr::unary(ExprOp::neg, unary());
    return power();
  }

  ExprPtr power() {
    ExprPtr base = primary();
    while (eat('^')) {
      skip();
      const std::size_t start = pos_;
      bool negative = false;
      if (pos_ < src_.size() && src_[pos_] == '-') {
        negative = true;
        ++pos_;
      }
      if (pos_ >= src_.size()) fail("unexpected end of input");
      if (!std::isdigit(static_cast<unsigned char>(src_[pos_]))) fail("expected an integer exponent");
      long long n = 0;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        n = n * 10 + (src_[pos_] - '0');
        if (n > 1000000) fail_at("exponent too large", start);
        ++pos_;
      }
      if (pos_ < src_.size() && (src_[pos_] == '.' || src_[pos_] == 'e' || src_[pos_] == 'E'))
        fail_at("exponent must be an integer", start);
      base = Expr::pow(base, static_cast<int>(negative ? -n : n));
    }
    return base;
  }

  ExprPtr primary() {
    skip();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      ExprPtr e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  ExprPtr number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        ++pos_;
        ++n;
      }
      return n;
    };
    std::size_t mantissa = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      mantissa += digits();
    }
    if (mantissa == 0) fail_at("malformed number", start);
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (digits() == 0) fail_at("malformed number", start);
    }
    const std::string text(src_.substr(start, pos_ - start));
    const double v = std::strtod(text.c_str(), nullptr);
    if (!std::isfinite(v)) fail_at("number out of range", start);
    return Expr::constant(v);
  }

  ExprPtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    const std::string_view name = src_.substr(start, pos_ - start);
    if (name.size() > 1 && name[0] == 'x' && name.find_first_not_of("0123456789", 1) == std::string_view::npos) {
      if (name[1] == '0' || name.size() > 10) fail_at("unknown variable '" + std::string(name) + "'", start);
      const std::size_t index = std::stoul(std::string(name.substr(1)));
      if (index > dims_) fail_at("variable '" + std::string(name) + "' out of range", start);
      return Expr::variable(index - 1);
    }
    ExprOp op;
    int arity;
    if (name == "abs") op = ExprOp::abs, arity = 1;
    else if (name == "sqrt") op = ExprOp::sqrt, arity = 1;
    else if (name == "min") op = ExprOp::min, arity = 2;
    else if (name == "max") op = ExprOp::max, arity = 2;
    else fail_at("unknown identifier '" + std::string(name) + "'", start);
    expect('(');
    ExprPtr a = expr();
    if (arity == 1) {
      expect(')');
      return Expr::unary(op, a);
    }
    expect(',');
    ExprPtr b = expr();
    expect(')');
    return Expr::binary(op, a, b);
  }

  std::string_view src_;
  std::size_t dims_;
  std::size_t pos_ = 0;
};

inline double apply_pow(double base, int exponent) {
  if (exponent < 0 && base == 0.0) throw EvalError("division by zero in negative power");
  return std::pow(base, static_cast<double>(exponent));
}

inline double apply_unary(ExprOp op, double a) {
  switch (op) {
    case ExprOp::neg: return -a;
    case ExprOp::abs: return std::abs(a);
    case ExprOp::sqrt:
      if (a < 0.0) throw EvalError("sqrt of a negative number");
      return std::sqrt(a);
    default: throw Error("not a unary operator");
  }
}

inline double apply_binary(ExprOp op, double a, double b) {
  switch (op) {
    case ExprOp::add: return a + b;
    case ExprOp::sub: return a - b;
    case ExprOp::mul: return a * b;
    case ExprOp::div:
      if (b == 0.0) throw EvalError("division by zero");
      return a / b;
    case ExprOp::min: return std::min(a, b);
    case ExprOp::max: return std::max(a, b);
    default: throw Error("not a binary operator");
  }
}

}  // namespace detail

/// Parses `src`; variables beyond x`dims` are rejected.
inline ExprPtr parse_expr(std::string_view src, std::size_t dims = std::numeric_limits<std::size_t>::max()) {
  return detail::ExprParser(src, dims).parse();
}

inline double evaluate(const Expr& e, std::span<const double> x) {
  switch (e.op) {
    case ExprOp::constant: return e.value;
    case ExprOp::variable:
      if (e.var >= x.size()) throw DimensionError("variable x" + std::to_string(e.var + 1) + " out of range");
      return x[e.var];
    case ExprOp::pow: return detail::apply_pow(evaluate(*e.a, x), e.exponent);
    default:
      if (is_unary(e.op)) return detail::apply_unary(e.op, evaluate(*e.a, x));
      return detail::apply_binary(e.op, evaluate(*e.a, x), evaluate(*e.b, x));
  }
}

/// Largest variable index used plus one (0 for a closed expression).
inline std::size_t variable_count(const Expr& e) {
  if (e.op == ExprOp::variable) return e.var + 1;
  std::size_t n = 0;
  if (e.a) n = std::max(n, variable_count(*e.a));
  if (e.b) n = std::max(n, variable_count(*e.b));
  return n;
}

/// Canonical text: binary operators fully parenthesized, constants with 17
/// significant digits. Parsing the output gives back an equal tree.
inline std::string print(const Expr& e) {
  switch (e.op) {
    case ExprOp::constant: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", e.value);
      return buf;
    }
    case ExprOp::variable: return "x" + std::to_string(e.var + 1);
    case ExprOp::neg: return "-" + print(*e.a);
    case ExprOp::abs: return "abs(" + print(*e.a) + ")";
    case ExprOp::sqrt: return "sqrt(" + print(*e.a) + ")";
    case ExprOp::min: return "min(" + print(*e.a) + ", " + print(*e.b) + ")";
    case ExprOp::max: return "max(" + print(*e.a) + ", " + print(*e.b) + ")";
    case ExprOp::pow: {
      const bool wrap = e.a->op == ExprOp::neg || e.a->op == ExprOp::pow;
      const std::string base = wrap ? "(" + print(*e.a) + ")" : print(*e.a);
      return base + "^" + std::to_string(e.exponent);
    }
    case ExprOp::add: return "(" + print(*e.a) + " + " + print(*e.b) + ")";
    case ExprOp::sub: return "(" + print(*e.a) + " - " + print(*e.b) + ")";
    case ExprOp::mul: return "(" + print(*e.a) + " * " + print(*e.b) + ")";
    case ExprOp::div: return "(" + print(*e.a) + " / " + print(*e.b) + ")";
  }
  return {};
}

inline bool structurally_equal(const Expr& l, const Expr& r) {
  if (l.op != r.op) return false;
  switch (l.op) {
    case ExprOp::constant: return l.value == r.value;
    case ExprOp::variable: return l.var == r.var;
    case ExprOp::pow: return l.exponent == r.exponent && structurally_equal(*l.a, *r.a);
    default:
      if (!structurally_equal(*l.a, *r.a)) return false;
      return is_unary(l.op) || structurally_equal(*l.b, *r.b);
  }
}

/// Postfix program for repeated evaluation; same arithmetic as evaluate().
class CompiledExpr {
 public:
  explicit CompiledExpr(const ExprPtr& e) : vars_(variable_count(*e)) { emit(*e); }

  double operator()(std::span<const double> x) const {
    if (x.size() < vars_) throw DimensionError("compiled expression needs " + std::to_string(vars_) + " variables");
    std::vector<double> stack;
    stack.reserve(16);
    for (const auto& in : code_) {
      switch (in.op) {
        case ExprOp::constant: stack.push_back(in.value); break;
        case ExprOp::variable: stack.push_back(x[in.var]); break;
        case ExprOp::pow: stack.back() = detail::apply_pow(stack.back(), in.exponent); break;
        default:
          if (is_unary(in.op)) {
            stack.back() = detail::apply_unary(in.op, stack.back());
          } else {
            const double b = stack.back();
            stack.pop_back();
            stack.back() = detail::apply_binary(in.op, stack.back(), b);
          }
      }
    }
    return stack.back();
  }

  std::size_t variables() const noexcept { return vars_; }

 private:
  struct Instr {
    ExprOp op;
    double value;
    std::size_t var;
    int exponent;
  };

  void emit(const Expr& e) {
    if (e.a) emit(*e.a);
    if (e.b) emit(*e.b);
    code_.push_back({e.op, e.value, e.var, e.exponent});
  }

  std::size_t vars_;
  std::vector<Instr> code_;
};

}  // namespace cselect
