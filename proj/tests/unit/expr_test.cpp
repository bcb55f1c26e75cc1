#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "cselect/expr.hpp"
#include "cselect/random.hpp"

using namespace cselect;

namespace {

double eval(const std::string& src, std::vector<double> x = {}) {
  return evaluate(*parse_expr(src, x.empty() ? 3 : x.size()), x.empty() ? std::vector<double>(3, 0.0) : x);
}

std::size_t error_offset(const std::string& src, std::size_t dims = 2) {
  try {
    parse_expr(src, dims);
  } catch (const ParseError& e) {
    return e.offset();
  }
  ADD_FAILURE() << "no parse error for '" << src << "'";
  return 0;
}

ExprPtr random_expr(Rng& rng, int depth) {
  const double r = rng.uniform();
  if (depth == 0 || r < 0.2) {
    if (rng.uniform() < 0.5) return Expr::variable(static_cast<std::size_t>(rng.uniform(0, 2)));
    return Expr::constant(std::round(rng.uniform(0, 50)) / 8.0);
  }
  if (r < 0.4) {
    static const ExprOp ops[] = {ExprOp::neg, ExprOp::abs, ExprOp::sqrt};
    return Expr::unary(ops[static_cast<int>(rng.uniform(0, 3))], random_expr(rng, depth - 1));
  }
  if (r < 0.5) return Expr::pow(random_expr(rng, depth - 1), static_cast<int>(rng.uniform(-3, 4)));
  static const ExprOp ops[] = {ExprOp::add, ExprOp::sub, ExprOp::mul, ExprOp::div, ExprOp::min, ExprOp::max};
  return Expr::binary(ops[static_cast<int>(rng.uniform(0, 6))], random_expr(rng, depth - 1),
                      random_expr(rng, depth - 1));
}

}  // namespace

TEST(Parse, Examples) {
  EXPECT_EQ(eval("sqrt(1+x1^2)", {0.0}), 1.0);
  EXPECT_EQ(eval("min(x1, 2*x2+1)", {3.0, 0.5}), 2.0);
  EXPECT_EQ(error_offset("1+"), 2u);
}

TEST(Parse, Precedence) {
  EXPECT_EQ(eval("2+3*4"), 14.0);
  EXPECT_EQ(eval("(2+3)*4"), 20.0);
  EXPECT_EQ(eval("-2^2"), -4.0);
  EXPECT_EQ(eval("2^-1"), 0.5);
  EXPECT_EQ(eval("8/4/2"), 1.0);
  EXPECT_EQ(eval("1-2-3"), -4.0);
  EXPECT_EQ(eval("--3"), 3.0);
  EXPECT_EQ(eval("max(abs(-2), 1.5e0)"), 2.0);
}

TEST(Parse, Variables) {
  EXPECT_EQ(eval("x1*x2 + x3", {2.0, 3.0, 4.0}), 10.0);
  EXPECT_THROW(parse_expr("x0", 2), ParseError);
  EXPECT_THROW(parse_expr("x3", 2), ParseError);
  EXPECT_EQ(variable_count(*parse_expr("x2+1", 2)), 2u);
}

TEST(Parse, GoldenErrorOffsets) {
  EXPECT_EQ(error_offset(""), 0u);
  EXPECT_EQ(error_offset("(1"), 2u);
  EXPECT_EQ(error_offset("x1 2"), 3u);
  EXPECT_EQ(error_offset("foo(1)"), 0u);
  EXPECT_EQ(error_offset("min(1)"), 5u);
  EXPECT_EQ(error_offset("x1^"), 3u);
  EXPECT_EQ(error_offset("x1^1.5"), 3u);
  EXPECT_EQ(error_offset("sqrt(x1,)"), 7u);
  EXPECT_EQ(error_offset("1 + * 2"), 4u);
}

TEST(Evaluate, Errors) {
  EXPECT_THROW(eval("1/0"), EvalError);
  EXPECT_THROW(eval("sqrt(-1)"), EvalError);
  EXPECT_THROW(eval("0^-1"), EvalError);
  EXPECT_EQ(eval("0^0"), 1.0);
}

TEST(Print, RoundTripsStructure) {
  Rng rng(17);
  for (int i = 0; i < 300; ++i) {
    const auto e = random_expr(rng, 5);
    const auto back = parse_expr(print(*e), 2);
    EXPECT_TRUE(structurally_equal(*e, *back)) << print(*e);
  }
}

TEST(Print, ParseIsDeterministic) {
  const auto a = parse_expr("min(x1, 2*x2+1) - abs(x1)^3", 2);
  const auto b = parse_expr("min(x1, 2*x2+1) - abs(x1)^3", 2);
  EXPECT_TRUE(structurally_equal(*a, *b));
  EXPECT_EQ(print(*a), print(*b));
}

TEST(Compiled, AgreesWithTreeEvaluation) {
  Rng rng(19);
  int compared = 0;
  for (int i = 0; i < 500; ++i) {
    const auto e = random_expr(rng, 5);
    const std::vector<double> x = {rng.uniform(-3, 3), rng.uniform(-3, 3)};
    const CompiledExpr c(e);
    double tree = 0, flat = 0;
    bool tree_err = false, flat_err = false;
    try {
      tree = evaluate(*e, x);
    } catch (const EvalError&) {
      tree_err = true;
    }
    try {
      flat = c(x);
    } catch (const EvalError&) {
      flat_err = true;
    }
    ASSERT_EQ(tree_err, flat_err) << print(*e);
    if (!tree_err) {
      ++compared;
      if (std::isnan(tree)) {
        EXPECT_TRUE(std::isnan(flat));
      } else {
        EXPECT_EQ(tree, flat) << print(*e);
      }
    }
  }
  EXPECT_GT(compared, 100);
}

TEST(Factories, RejectNegativeOrInfiniteConstants) {
  EXPECT_THROW(Expr::constant(-1.0), PreconditionError);
  EXPECT_THROW(Expr::constant(std::numeric_limits<double>::infinity()), PreconditionError);
}
