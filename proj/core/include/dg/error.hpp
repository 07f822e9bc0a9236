#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dg {

/// Position inside a source text. Lines and columns are 1-based.
struct SourceSpan {
  std::string file;
  std::uint32_t line = 1;
  std::uint32_t column = 1;

  std::string str() const;
};

enum class ErrorKind {
  // grammar-core
  ArityMismatch,
  SpaceMismatch,
  UnboundRhsVariable,
  InvalidMaxCopy,
  DuplicateIdentifier,
  UnknownIdentifier,
  InvalidConstant,
  SolveInStochasticGrammar,
  UnsolvableRealConstraint,
  NonFactorable,
  // rate-lang
  DivisionByZero,
  NegativeRate,
  UnboundVariable,
  InvalidDistributionParameter,
  // pool-state
  InsufficientCopies,
  CapExceeded,
  PoolCapGuardExceeded,
  // match-engine
  InfiniteMatchSpace,
  // simulators
  GridBeyondEnd,
  AllPathsAbsorbed,
  // exact-operator
  StateSpaceTooLarge,
  InfiniteSpace,
  NonFiniteKernel,
  InterpolationFailure,
  ZeroNormalizer,
  // reductions
  FanoutExceeded,
  DuplicateLabel,
  MalformedChain,
  // hybrid
  MultiTermSolveRule,
  NonfiniteState,
  // plumbing
  Syntax,
  Io,
  InvalidArgument,
};

std::string_view to_string(ErrorKind kind);

/// Exception carrying a machine-checkable kind. `where` names the rule or
/// file involved, when one is known.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string where = {});

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& where() const noexcept { return where_; }

 private:
  ErrorKind kind_;
  std::string where_;
};

}  // namespace dg
