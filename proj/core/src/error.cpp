#include "dg/error.hpp"

namespace dg {

std::string SourceSpan::str() const {
  return (file.empty() ? std::string("<input>") : file) + ":" + std::to_string(line) + ":" +
         std::to_string(column);
}

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ArityMismatch: return "arity-mismatch";
    case ErrorKind::SpaceMismatch: return "space-mismatch";
    case ErrorKind::UnboundRhsVariable: return "unbound-rhs-variable";
    case ErrorKind::InvalidMaxCopy: return "invalid-max-copy";
    case ErrorKind::DuplicateIdentifier: return "duplicate-identifier";
    case ErrorKind::UnknownIdentifier: return "unknown-identifier";
    case ErrorKind::InvalidConstant: return "invalid-constant";
    case ErrorKind::SolveInStochasticGrammar: return "solve-in-stochastic-grammar";
    case ErrorKind::UnsolvableRealConstraint: return "unsolvable-real-constraint";
    case ErrorKind::NonFactorable: return "non-factorable";
    case ErrorKind::DivisionByZero: return "division-by-zero";
    case ErrorKind::NegativeRate: return "negative-rate";
    case ErrorKind::UnboundVariable: return "unbound-variable";
    case ErrorKind::InvalidDistributionParameter: return "invalid-distribution-parameter";
    case ErrorKind::InsufficientCopies: return "insufficient-copies";
    case ErrorKind::CapExceeded: return "cap-exceeded";
    case ErrorKind::PoolCapGuardExceeded: return "pool-cap-guard-exceeded";
    case ErrorKind::InfiniteMatchSpace: return "infinite-match-space";
    case ErrorKind::GridBeyondEnd: return "grid-beyond-end";
    case ErrorKind::AllPathsAbsorbed: return "all-paths-absorbed";
    case ErrorKind::StateSpaceTooLarge: return "state-space-too-large";
    case ErrorKind::InfiniteSpace: return "infinite-space";
    case ErrorKind::NonFiniteKernel: return "non-finite-kernel";
    case ErrorKind::InterpolationFailure: return "interpolation-failure";
    case ErrorKind::ZeroNormalizer: return "zero-normalizer";
    case ErrorKind::FanoutExceeded: return "fanout-exceeded";
    case ErrorKind::DuplicateLabel: return "duplicate-label";
    case ErrorKind::MalformedChain: return "malformed-chain";
    case ErrorKind::MultiTermSolveRule: return "multi-term-solve-rule";
    case ErrorKind::NonfiniteState: return "nonfinite-state";
    case ErrorKind::Syntax: return "syntax";
    case ErrorKind::Io: return "io";
    case ErrorKind::InvalidArgument: return "invalid-argument";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message, std::string where)
    : std::runtime_error(where.empty() ? message : where + ": " + message),
      kind_(kind),
      where_(std::move(where)) {}

}  // namespace dg
