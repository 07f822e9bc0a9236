#include "dg/expr.hpp"

#include <sstream>

namespace dg {
namespace expr {

ExprPtr constant(Number value) {
  auto e = std::make_shared<Expr>();
  e->op = ExprOp::Const;
  e->value = value;
  return e;
}

ExprPtr constant(std::int64_t value) { return constant(Number::rational(value)); }

ExprPtr var(std::string name) {
  auto e = std::make_shared<Expr>();
  e->op = ExprOp::Var;
  e->name = std::move(name);
  return e;
}

ExprPtr unary(ExprOp op, ExprPtr arg) {
  auto e = std::make_shared<Expr>();
  e->op = op;
  e->args = {std::move(arg)};
  return e;
}

ExprPtr binary(ExprOp op, ExprPtr lhs, ExprPtr rhs) {
  auto e = std::make_shared<Expr>();
  e->op = op;
  e->args = {std::move(lhs), std::move(rhs)};
  return e;
}

ExprPtr power(ExprPtr base, std::int64_t exponent) {
  auto e = std::make_shared<Expr>();
  e->op = ExprOp::Pow;
  e->exponent = exponent;
  e->args = {std::move(base)};
  return e;
}

ExprPtr call(ExprOp op, std::vector<ExprPtr> args) {
  auto e = std::make_shared<Expr>();
  e->op = op;
  e->args = std::move(args);
  return e;
}

ExprPtr sum_over(std::string var, std::string domain_name, std::vector<Value> domain, ExprPtr body) {
  auto e = std::make_shared<Expr>();
  e->op = ExprOp::Sum;
  e->name = std::move(var);
  e->domain_name = std::move(domain_name);
  e->domain = std::move(domain);
  e->args = {std::move(body)};
  return e;
}

bool is_const(const ExprPtr& e) { return e->op == ExprOp::Const; }

bool is_const(const ExprPtr& e, std::int64_t v) {
  return e->op == ExprOp::Const && e->value == Number::rational(v);
}

ExprPtr add(ExprPtr a, ExprPtr b) {
  if (is_const(a) && is_const(b)) return constant(a->value + b->value);
  if (is_const(a, 0)) return b;
  if (is_const(b, 0)) return a;
  if (b->op == ExprOp::Neg) return binary(ExprOp::Sub, std::move(a), b->args[0]);
  return binary(ExprOp::Add, std::move(a), std::move(b));
}

ExprPtr sub(ExprPtr a, ExprPtr b) {
  if (is_const(a) && is_const(b)) return constant(a->value - b->value);
  if (is_const(b, 0)) return a;
  if (is_const(a, 0)) return neg(std::move(b));
  if (b->op == ExprOp::Neg) return binary(ExprOp::Add, std::move(a), b->args[0]);
  return binary(ExprOp::Sub, std::move(a), std::move(b));
}

ExprPtr mul(ExprPtr a, ExprPtr b) {
  if (is_const(a) && is_const(b)) return constant(a->value * b->value);
  if (is_const(a, 0) || is_const(b, 0)) return constant(0);
  if (is_const(a, 1)) return b;
  if (is_const(b, 1)) return a;
  if (is_const(a, -1)) return neg(std::move(b));
  if (is_const(b, -1)) return neg(std::move(a));
  return binary(ExprOp::Mul, std::move(a), std::move(b));
}

ExprPtr div(ExprPtr a, ExprPtr b) {
  if (is_const(a) && is_const(b) && !b->value.is_zero()) return constant(a->value / b->value);
  if (is_const(b, 1)) return a;
  if (is_const(b, -1)) return neg(std::move(a));
  if (is_const(a, 0) && !(is_const(b) && b->value.is_zero())) return constant(0);
  return binary(ExprOp::Div, std::move(a), std::move(b));
}

ExprPtr neg(ExprPtr a) {
  if (is_const(a)) return constant(-a->value);
  if (a->op == ExprOp::Neg) return a->args[0];
  return unary(ExprOp::Neg, std::move(a));
}

}  // namespace expr

bool equal(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->op != b->op) return false;
  switch (a->op) {
    case ExprOp::Const:
      return a->value == b->value;
    case ExprOp::Var:
      return a->name == b->name;
    case ExprOp::Pow:
      if (a->exponent != b->exponent) return false;
      break;
    case ExprOp::Sum:
      if (a->name != b->name || a->domain_name != b->domain_name || a->domain != b->domain)
        return false;
      break;
    default:
      break;
  }
  if (a->args.size() != b->args.size()) return false;
  for (std::size_t i = 0; i < a->args.size(); ++i)
    if (!equal(a->args[i], b->args[i])) return false;
  return true;
}

namespace {

// precedence levels used by the printer
constexpr int kCmp = 1;
constexpr int kAdd = 2;
constexpr int kMul = 3;
constexpr int kUnary = 4;
constexpr int kPow = 5;
constexpr int kPrimary = 6;

int precedence(const Expr& e) {
  switch (e.op) {
    case ExprOp::Lt:
    case ExprOp::Le:
    case ExprOp::Gt:
    case ExprOp::Ge:
    case ExprOp::Eq:
    case ExprOp::Ne:
      return kCmp;
    case ExprOp::Add:
    case ExprOp::Sub:
      return kAdd;
    case ExprOp::Mul:
    case ExprOp::Div:
      return kMul;
    case ExprOp::Neg:
      return kUnary;
    case ExprOp::Pow:
      return kPow;
    case ExprOp::Const:
      return e.value.sign() < 0 || e.value.str().find('/') != std::string::npos ? kUnary : kPrimary;
    default:
      return kPrimary;
  }
}

const char* binary_symbol(ExprOp op) {
  switch (op) {
    case ExprOp::Add: return " + ";
    case ExprOp::Sub: return " - ";
    case ExprOp::Mul: return " * ";
    case ExprOp::Div: return " / ";
    case ExprOp::Lt: return " < ";
    case ExprOp::Le: return " <= ";
    case ExprOp::Gt: return " > ";
    case ExprOp::Ge: return " >= ";
    case ExprOp::Eq: return " == ";
    case ExprOp::Ne: return " != ";
    default: return " ? ";
  }
}

const char* call_name(ExprOp op) {
  switch (op) {
    case ExprOp::Exp: return "exp";
    case ExprOp::Abs: return "abs";
    case ExprOp::Delta: return "delta";
    case ExprOp::NormalPdf: return "normal_pdf";
    case ExprOp::UniformPdf: return "uniform_pdf";
    case ExprOp::UniformPmf: return "uniform_pmf";
    default: return "?";
  }
}

void print(std::ostream& os, const ExprPtr& e, int min_prec);

void print_wrapped(std::ostream& os, const ExprPtr& e, int min_prec) {
  if (precedence(*e) < min_prec) {
    os << '(';
    print(os, e, 0);
    os << ')';
  } else {
    print(os, e, min_prec);
  }
}

void print(std::ostream& os, const ExprPtr& e, int) {
  switch (e->op) {
    case ExprOp::Const: {
      os << e->value.str();
      return;
    }
    case ExprOp::Var:
      os << e->name;
      return;
    case ExprOp::Neg:
      os << '-';
      print_wrapped(os, e->args[0], kPow);
      return;
    case ExprOp::Add:
    case ExprOp::Sub:
      print_wrapped(os, e->args[0], kAdd);
      os << binary_symbol(e->op);
      print_wrapped(os, e->args[1], kMul);
      return;
    case ExprOp::Mul:
    case ExprOp::Div:
      print_wrapped(os, e->args[0], kMul);
      os << binary_symbol(e->op);
      print_wrapped(os, e->args[1], kUnary + 1);
      return;
    case ExprOp::Pow:
      print_wrapped(os, e->args[0], kPrimary);
      os << '^' << e->exponent;
      return;
    case ExprOp::Lt:
    case ExprOp::Le:
    case ExprOp::Gt:
    case ExprOp::Ge:
    case ExprOp::Eq:
    case ExprOp::Ne:
      print_wrapped(os, e->args[0], kAdd);
      os << binary_symbol(e->op);
      print_wrapped(os, e->args[1], kAdd);
      return;
    case ExprOp::Exp:
    case ExprOp::Abs:
    case ExprOp::Delta:
      os << call_name(e->op) << '(';
      print(os, e->args[0], 0);
      os << ')';
      return;
    case ExprOp::NormalPdf:
    case ExprOp::UniformPdf:
    case ExprOp::UniformPmf:
      os << call_name(e->op) << '(';
      print(os, e->args[0], 0);
      os << "; ";
      print(os, e->args[1], 0);
      os << ", ";
      print(os, e->args[2], 0);
      os << ')';
      return;
    case ExprOp::Sum:
      os << "sum(" << e->name << " in " << e->domain_name << ": ";
      print(os, e->args[0], 0);
      os << ')';
      return;
  }
}

}  // namespace

std::string render(const ExprPtr& e) {
  std::ostringstream os;
  print(os, e, 0);
  return os.str();
}

void collect_vars(const ExprPtr& e, std::set<std::string>& out) {
  if (e->op == ExprOp::Var) {
    out.insert(e->name);
    return;
  }
  if (e->op == ExprOp::Sum) {
    std::set<std::string> inner;
    collect_vars(e->args[0], inner);
    inner.erase(e->name);
    out.insert(inner.begin(), inner.end());
    return;
  }
  for (const auto& a : e->args) collect_vars(a, out);
}

std::set<std::string> free_vars(const ExprPtr& e) {
  std::set<std::string> out;
  collect_vars(e, out);
  return out;
}

bool mentions(const ExprPtr& e, const std::string& var) {
  if (e->op == ExprOp::Var) return e->name == var;
  if (e->op == ExprOp::Sum && e->name == var) return false;
  for (const auto& a : e->args)
    if (mentions(a, var)) return true;
  return false;
}

ExprPtr substitute(const ExprPtr& e, const std::map<std::string, ExprPtr>& replacement) {
  if (e->op == ExprOp::Var) {
    auto it = replacement.find(e->name);
    return it == replacement.end() ? e : it->second;
  }
  if (e->args.empty()) return e;
  if (e->op == ExprOp::Sum && replacement.count(e->name)) {
    auto inner = replacement;
    inner.erase(e->name);
    auto copy = std::make_shared<Expr>(*e);
    copy->args = {substitute(e->args[0], inner)};
    return copy;
  }
  bool changed = false;
  std::vector<ExprPtr> args;
  args.reserve(e->args.size());
  for (const auto& a : e->args) {
    args.push_back(substitute(a, replacement));
    changed = changed || args.back() != a;
  }
  if (!changed) return e;
  auto copy = std::make_shared<Expr>(*e);
  copy->args = std::move(args);
  return copy;
}

std::vector<ExprPtr> factors(const ExprPtr& e) {
  if (e->op != ExprOp::Mul) return {e};
  auto out = factors(e->args[0]);
  auto rhs = factors(e->args[1]);
  out.insert(out.end(), rhs.begin(), rhs.end());
  return out;
}

ExprPtr product(const std::vector<ExprPtr>& fs) {
  if (fs.empty()) return expr::constant(1);
  ExprPtr out = fs.front();
  for (std::size_t i = 1; i < fs.size(); ++i) out = expr::binary(ExprOp::Mul, out, fs[i]);
  return out;
}

std::optional<LinearForm> linear_in(const ExprPtr& e, const std::string& v) {
  if (!mentions(e, v)) return LinearForm{expr::constant(0), e};
  switch (e->op) {
    case ExprOp::Var:
      return LinearForm{expr::constant(1), expr::constant(0)};
    case ExprOp::Neg: {
      auto a = linear_in(e->args[0], v);
      if (!a) return std::nullopt;
      return LinearForm{expr::neg(a->coefficient), expr::neg(a->offset)};
    }
    case ExprOp::Add:
    case ExprOp::Sub: {
      auto a = linear_in(e->args[0], v);
      auto b = linear_in(e->args[1], v);
      if (!a || !b) return std::nullopt;
      if (e->op == ExprOp::Add)
        return LinearForm{expr::add(a->coefficient, b->coefficient), expr::add(a->offset, b->offset)};
      return LinearForm{expr::sub(a->coefficient, b->coefficient), expr::sub(a->offset, b->offset)};
    }
    case ExprOp::Mul: {
      const bool left = mentions(e->args[0], v);
      const bool right = mentions(e->args[1], v);
      if (left && right) return std::nullopt;
      const auto& with_v = left ? e->args[0] : e->args[1];
      const auto& scale = left ? e->args[1] : e->args[0];
      auto a = linear_in(with_v, v);
      if (!a) return std::nullopt;
      return LinearForm{expr::mul(scale, a->coefficient), expr::mul(scale, a->offset)};
    }
    case ExprOp::Div: {
      if (mentions(e->args[1], v)) return std::nullopt;
      auto a = linear_in(e->args[0], v);
      if (!a) return std::nullopt;
      return LinearForm{expr::div(a->coefficient, e->args[1]), expr::div(a->offset, e->args[1])};
    }
    case ExprOp::Pow:
      if (e->exponent == 1) return linear_in(e->args[0], v);
      return std::nullopt;
    default:
      return std::nullopt;
  }
}

std::optional<ExprPtr> solve_linear(const ExprPtr& e, const std::string& var) {
  auto form = linear_in(e, var);
  if (!form || !expr::is_const(form->coefficient) || form->coefficient->value.is_zero())
    return std::nullopt;
  return expr::div(expr::neg(form->offset), form->coefficient);
}

}  // namespace dg
