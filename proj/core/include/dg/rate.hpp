#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "dg/expr.hpp"
#include "dg/value.hpp"

namespace dg {

/// Variable assignment θ. Kept as a name-sorted flat vector; rules bind a
/// handful of variables, so lookup is a short scan.
class Substitution {
 public:
  Substitution() = default;
  Substitution(std::initializer_list<std::pair<std::string, Value>> init);

  void bind(const std::string& name, Value value);
  const Value* find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  friend bool operator==(const Substitution&, const Substitution&) = default;

 private:
  std::vector<std::pair<std::string, Value>> entries_;
};

/// Counter-based generator (Philox4x32-10) keyed by (seed, stream); the
/// draw index is the counter. Streams with distinct ids never overlap, and
/// any position can be replayed by constructing with the same triple.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t draw_index = 0)
      : seed_(seed), stream_(stream), counter_(draw_index) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_open_zero() { return 1.0 - uniform(); }
  double exponential(double rate);
  double normal(double mean, double sd);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t draws() const { return counter_ * 2 - (have_spare_ ? 1 : 0); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_;
  std::uint64_t spare_ = 0;
  bool have_spare_ = false;
};

/// Evaluates an expression. Throws UnboundVariable, DivisionByZero.
Number eval_expr(const ExprPtr& e, const Substitution& theta);

/// Evaluates an expression in rate position: results below -1e-12 raise
/// NegativeRate, smaller negatives are clamped to zero.
double eval_rate(const ExprPtr& e, const Substitution& theta);

inline constexpr double kNegativeRateTolerance = 1e-12;

double normal_density(double y, double mean, double sd);

// Output-kernel bindings produced by rate factoring. Parameters reference
// LHS-bound variables only.
struct AssignKernel {
  std::string var;
  ExprPtr value;
  bool integral = false;  // target slot is a discrete space
};
struct NormalKernel {
  std::string var;
  ExprPtr mean;
  ExprPtr sd;
};
struct UniformKernel {
  std::string var;
  ExprPtr lo;
  ExprPtr hi;
};
struct FiniteVar {
  std::string var;
  std::string space;
  std::vector<Value> domain;
};
/// Joint finite sum over one or more discrete output variables with a
/// nonnegative weight; the pure rate absorbs the total weight.
struct FiniteSumKernel {
  std::vector<FiniteVar> vars;
  ExprPtr weight;
};

using KernelBinding = std::variant<AssignKernel, NormalKernel, UniformKernel, FiniteSumKernel>;
using OutputKernel = std::vector<KernelBinding>;

const std::string& kernel_var(const KernelBinding& b);
std::vector<std::string> kernel_vars(const KernelBinding& b);
std::string describe(const KernelBinding& b);

/// Converts an evaluated output to a slot value; nullopt if an integral
/// slot receives a non-integer.
std::optional<Value> to_slot_value(const Number& n, bool integral);

/// Enumerates the finite outcomes of a finite-sum binding under theta, with
/// their weights (zero weights included).
std::vector<std::pair<Substitution, double>> finite_outcomes(const FiniteSumKernel& k,
                                                             const Substitution& theta);

/// Draws values for every RHS-only variable of the kernel. Returns the
/// extension only (not theta itself). Throws InvalidDistributionParameter
/// on bad distribution parameters; nullopt when an assignment lands outside
/// an integral slot.
std::optional<Substitution> sample_kernel(const OutputKernel& kernel, const Substitution& theta,
                                          RngStream& rng);

/// Samples one of the continuous bindings (normal, uniform) under theta.
Value sample_continuous(const KernelBinding& b, const Substitution& theta, RngStream& rng);

}  // namespace dg
