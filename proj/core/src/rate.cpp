#include "dg/rate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dg/error.hpp"

namespace dg {

Substitution::Substitution(std::initializer_list<std::pair<std::string, Value>> init) {
  for (const auto& [k, v] : init) bind(k, v);
}

void Substitution::bind(const std::string& name, Value value) {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), name,
                             [](const auto& e, const std::string& n) { return e.first < n; });
  if (it != entries_.end() && it->first == name) {
    it->second = value;
    return;
  }
  entries_.insert(it, {name, value});
}

const Value* Substitution::find(std::string_view name) const {
  for (const auto& e : entries_)
    if (e.first == name) return &e.second;
  return nullptr;
}

// ---------------------------------------------------------------- RngStream

namespace {

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> c,
                                           std::array<std::uint32_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(0xD2511F53u, c[0], hi0, lo0);
    mulhilo(0xCD9E8D57u, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += 0x9E3779B9u;
    k[1] += 0xBB67AE85u;
  }
  return c;
}

}  // namespace

std::uint64_t RngStream::next_u64() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const auto out = philox4x32_10(
      {static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
       static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
      {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
  ++counter_;
  spare_ = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
  have_spare_ = true;
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

double RngStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double RngStream::exponential(double rate) { return -std::log(uniform_open_zero()) / rate; }

double RngStream::normal(double mean, double sd) {
  // Box-Muller; one variate per call keeps the draw count predictable
  const double u1 = uniform_open_zero();
  const double u2 = uniform();
  return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// ------------------------------------------------------------- evaluation

double normal_density(double y, double mean, double sd) {
  const double z = (y - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

namespace {

Number boolean(bool b) { return Number::rational(b ? 1 : 0); }

}  // namespace

Number eval_expr(const ExprPtr& e, const Substitution& theta) {
  switch (e->op) {
    case ExprOp::Const:
      return e->value;
    case ExprOp::Var: {
      const Value* v = theta.find(e->name);
      if (!v) throw Error(ErrorKind::UnboundVariable, "unbound variable '" + e->name + "'");
      return v->to_number();
    }
    case ExprOp::Neg:
      return -eval_expr(e->args[0], theta);
    case ExprOp::Add:
      return eval_expr(e->args[0], theta) + eval_expr(e->args[1], theta);
    case ExprOp::Sub:
      return eval_expr(e->args[0], theta) - eval_expr(e->args[1], theta);
    case ExprOp::Mul: {
      const Number a = eval_expr(e->args[0], theta);
      if (a.exact() && a.is_zero()) return a;
      return a * eval_expr(e->args[1], theta);
    }
    case ExprOp::Div:
      return eval_expr(e->args[0], theta) / eval_expr(e->args[1], theta);
    case ExprOp::Pow:
      return eval_expr(e->args[0], theta).pow(e->exponent);
    case ExprOp::Exp: {
      const Number a = eval_expr(e->args[0], theta);
      if (a.exact() && a.is_zero()) return Number::rational(1);
      return Number::real(std::exp(a.to_double()));
    }
    case ExprOp::Abs: {
      const Number a = eval_expr(e->args[0], theta);
      return a.sign() < 0 ? -a : a;
    }
    case ExprOp::Delta:
      return boolean(eval_expr(e->args[0], theta).is_zero());
    case ExprOp::Lt:
      return boolean(compare(eval_expr(e->args[0], theta), eval_expr(e->args[1], theta)) < 0);
    case ExprOp::Le:
      return boolean(compare(eval_expr(e->args[0], theta), eval_expr(e->args[1], theta)) <= 0);
    case ExprOp::Gt:
      return boolean(compare(eval_expr(e->args[0], theta), eval_expr(e->args[1], theta)) > 0);
    case ExprOp::Ge:
      return boolean(compare(eval_expr(e->args[0], theta), eval_expr(e->args[1], theta)) >= 0);
    case ExprOp::Eq:
      return boolean(compare(eval_expr(e->args[0], theta), eval_expr(e->args[1], theta)) == 0);
    case ExprOp::Ne:
      return boolean(compare(eval_expr(e->args[0], theta), eval_expr(e->args[1], theta)) != 0);
    case ExprOp::NormalPdf: {
      const double y = eval_expr(e->args[0], theta).to_double();
      const double mean = eval_expr(e->args[1], theta).to_double();
      const double sd = eval_expr(e->args[2], theta).to_double();
      if (!(sd > 0.0))
        throw Error(ErrorKind::InvalidDistributionParameter, "normal_pdf requires sd > 0");
      return Number::real(normal_density(y, mean, sd));
    }
    case ExprOp::UniformPdf: {
      const Number y = eval_expr(e->args[0], theta);
      const Number lo = eval_expr(e->args[1], theta);
      const Number hi = eval_expr(e->args[2], theta);
      if (compare(hi, lo) <= 0)
        throw Error(ErrorKind::InvalidDistributionParameter, "uniform_pdf requires lo < hi");
      if (compare(y, lo) < 0 || compare(y, hi) > 0) return Number::rational(0);
      return Number::rational(1) / (hi - lo);
    }
    case ExprOp::UniformPmf: {
      const Number y = eval_expr(e->args[0], theta);
      const Number lo = eval_expr(e->args[1], theta);
      const Number hi = eval_expr(e->args[2], theta);
      if (!lo.is_integer() || !hi.is_integer() || compare(hi, lo) < 0)
        throw Error(ErrorKind::InvalidDistributionParameter,
                    "uniform_pmf requires integer bounds lo <= hi");
      if (!y.is_integer() || compare(y, lo) < 0 || compare(y, hi) > 0) return Number::rational(0);
      return Number::rational(1) / (hi - lo + Number::rational(1));
    }
    case ExprOp::Sum: {
      Substitution inner = theta;
      Number total = Number::rational(0);
      for (const Value& v : e->domain) {
        inner.bind(e->name, v);
        total = total + eval_expr(e->args[0], inner);
      }
      return total;
    }
  }
  return Number::rational(0);
}

double eval_rate(const ExprPtr& e, const Substitution& theta) {
  const double v = eval_expr(e, theta).to_double();
  if (std::isnan(v)) throw Error(ErrorKind::NegativeRate, "rate evaluated to NaN: " + render(e));
  if (v < 0.0) {
    if (v < -kNegativeRateTolerance)
      throw Error(ErrorKind::NegativeRate,
                  "rate " + render(e) + " evaluated to " + std::to_string(v));
    return 0.0;
  }
  return v;
}

// ----------------------------------------------------------------- kernels

const std::string& kernel_var(const KernelBinding& b) {
  return std::visit(
      [](const auto& k) -> const std::string& {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, FiniteSumKernel>)
          return k.vars.front().var;
        else
          return k.var;
      },
      b);
}

std::vector<std::string> kernel_vars(const KernelBinding& b) {
  if (const auto* f = std::get_if<FiniteSumKernel>(&b)) {
    std::vector<std::string> out;
    for (const auto& v : f->vars) out.push_back(v.var);
    return out;
  }
  return {kernel_var(b)};
}

std::string describe(const KernelBinding& b) {
  return std::visit(
      [](const auto& k) -> std::string {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, AssignKernel>) {
          return k.var + " := " + render(k.value);
        } else if constexpr (std::is_same_v<T, NormalKernel>) {
          return k.var + " ~ normal(" + render(k.mean) + ", " + render(k.sd) + ")";
        } else if constexpr (std::is_same_v<T, UniformKernel>) {
          return k.var + " ~ uniform(" + render(k.lo) + ", " + render(k.hi) + ")";
        } else {
          std::string s;
          for (const auto& v : k.vars) s += (s.empty() ? "" : ", ") + v.var + " in " + v.space;
          return "(" + s + ") ~ finite-sum " + render(k.weight);
        }
      },
      b);
}

std::optional<Value> to_slot_value(const Number& n, bool integral) {
  if (integral) {
    if (!n.is_integer()) return std::nullopt;
    return Value::integer(n.to_integer());
  }
  return Value::real(n.to_double());
}

std::vector<std::pair<Substitution, double>> finite_outcomes(const FiniteSumKernel& k,
                                                             const Substitution& theta) {
  std::vector<std::pair<Substitution, double>> out;
  std::vector<std::size_t> idx(k.vars.size(), 0);
  for (const auto& v : k.vars)
    if (v.domain.empty()) return out;
  Substitution inner = theta;
  while (true) {
    Substitution ext;
    for (std::size_t i = 0; i < k.vars.size(); ++i) {
      inner.bind(k.vars[i].var, k.vars[i].domain[idx[i]]);
      ext.bind(k.vars[i].var, k.vars[i].domain[idx[i]]);
    }
    out.emplace_back(std::move(ext), eval_rate(k.weight, inner));
    std::size_t d = 0;
    while (d < idx.size() && ++idx[d] == k.vars[d].domain.size()) idx[d++] = 0;
    if (d == idx.size()) break;
  }
  return out;
}

Value sample_continuous(const KernelBinding& b, const Substitution& theta, RngStream& rng) {
  if (const auto* n = std::get_if<NormalKernel>(&b)) {
    const double mean = eval_expr(n->mean, theta).to_double();
    const double sd = eval_expr(n->sd, theta).to_double();
    if (!(sd > 0.0) || !std::isfinite(sd) || !std::isfinite(mean))
      throw Error(ErrorKind::InvalidDistributionParameter,
                  "normal kernel for '" + n->var + "' requires finite mean and sd > 0");
    return Value::real(rng.normal(mean, sd));
  }
  if (const auto* u = std::get_if<UniformKernel>(&b)) {
    const double lo = eval_expr(u->lo, theta).to_double();
    const double hi = eval_expr(u->hi, theta).to_double();
    if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi))
      throw Error(ErrorKind::InvalidDistributionParameter,
                  "uniform kernel for '" + u->var + "' requires lo < hi");
    return Value::real(lo + (hi - lo) * rng.uniform());
  }
  throw Error(ErrorKind::InvalidArgument, "not a continuous kernel: " + describe(b));
}

std::optional<Substitution> sample_kernel(const OutputKernel& kernel, const Substitution& theta,
                                          RngStream& rng) {
  Substitution ext;
  for (const auto& b : kernel) {
    if (const auto* a = std::get_if<AssignKernel>(&b)) {
      auto v = to_slot_value(eval_expr(a->value, theta), a->integral);
      if (!v) return std::nullopt;
      ext.bind(a->var, *v);
    } else if (const auto* f = std::get_if<FiniteSumKernel>(&b)) {
      auto outcomes = finite_outcomes(*f, theta);
      double total = 0.0;
      for (const auto& o : outcomes) total += o.second;
      if (!(total > 0.0))
        throw Error(ErrorKind::InvalidDistributionParameter,
                    "finite-sum kernel has zero total weight");
      double u = rng.uniform() * total;
      std::size_t pick = outcomes.size() - 1;
      for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (u < outcomes[i].second) {
          pick = i;
          break;
        }
        u -= outcomes[i].second;
      }
      while (outcomes[pick].second <= 0.0 && pick > 0) --pick;  // roundoff at the tail
      for (const auto& [name, value] : outcomes[pick].first) ext.bind(name, value);
    } else {
      ext.bind(kernel_var(b), sample_continuous(b, theta, rng));
    }
  }
  return ext;
}

}  // namespace dg
