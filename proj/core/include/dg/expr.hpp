#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dg/number.hpp"
#include "dg/value.hpp"

namespace dg {

enum class ExprOp {
  Const,
  Var,
  Neg,
  Add,
  Sub,
  Mul,
  Div,
  Pow,  // integer exponent only
  Exp,
  Abs,
  Delta,  // Kronecker (discrete) or solvable Dirac (real) delta of its argument
  Lt,
  Le,
  Gt,
  Ge,
  Eq,
  Ne,
  NormalPdf,   // normal_pdf(y; mean, sd)
  UniformPdf,  // uniform_pdf(y; lo, hi), density on a real interval
  UniformPmf,  // uniform_pmf(c; lo, hi), mass on an integer range
  Sum,         // sum of the body over a finite domain; produced by rate factoring
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Immutable rate-language expression node. Trees are shared freely.
struct Expr {
  ExprOp op = ExprOp::Const;
  Number value;              // Const
  std::string name;          // Var, and the bound variable of Sum
  std::int64_t exponent = 0; // Pow
  std::vector<ExprPtr> args;
  std::string domain_name;   // Sum
  std::vector<Value> domain; // Sum
};

namespace expr {

ExprPtr constant(Number value);
ExprPtr constant(std::int64_t value);
ExprPtr var(std::string name);
ExprPtr unary(ExprOp op, ExprPtr arg);
ExprPtr binary(ExprOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr power(ExprPtr base, std::int64_t exponent);
ExprPtr call(ExprOp op, std::vector<ExprPtr> args);
ExprPtr sum_over(std::string var, std::string domain_name, std::vector<Value> domain, ExprPtr body);

// Folding constructors: collapse constant subtrees and the neutral elements
// 0 and 1. Used where expressions are synthesized rather than parsed.
ExprPtr add(ExprPtr a, ExprPtr b);
ExprPtr sub(ExprPtr a, ExprPtr b);
ExprPtr mul(ExprPtr a, ExprPtr b);
ExprPtr div(ExprPtr a, ExprPtr b);
ExprPtr neg(ExprPtr a);

bool is_const(const ExprPtr& e);
bool is_const(const ExprPtr& e, std::int64_t v);

}  // namespace expr

/// Structural equality; constants compare by numerical value.
bool equal(const ExprPtr& a, const ExprPtr& b);

/// Concrete syntax that the grammar parser reads back to an equal tree.
std::string render(const ExprPtr& e);

void collect_vars(const ExprPtr& e, std::set<std::string>& out);
std::set<std::string> free_vars(const ExprPtr& e);
bool mentions(const ExprPtr& e, const std::string& var);

/// Replaces free variables by expressions.
ExprPtr substitute(const ExprPtr& e, const std::map<std::string, ExprPtr>& replacement);

/// Flattens a product tree into its factors (a non-product is one factor).
std::vector<ExprPtr> factors(const ExprPtr& e);
/// Rebuilds a product; the empty product is 1.
ExprPtr product(const std::vector<ExprPtr>& fs);

/// e == coefficient * var + offset with neither part mentioning var.
struct LinearForm {
  ExprPtr coefficient;
  ExprPtr offset;
};
std::optional<LinearForm> linear_in(const ExprPtr& e, const std::string& var);

/// Solves e == 0 for var when e is linear in var with a nonzero constant
/// coefficient.
std::optional<ExprPtr> solve_linear(const ExprPtr& e, const std::string& var);

}  // namespace dg
