#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dg/error.hpp"
#include "dg/expr.hpp"
#include "dg/rate.hpp"
#include "dg/value.hpp"

namespace dg {

enum class SpaceKind { Enumeration, BoundedInt, Integer, Real, Oid };
enum class Measure { Counting, Length };

/// A base space D_b. `int`, `real` and `oid` are built in; bounded integer
/// ranges and enumerations may be declared by name or written inline, in
/// which case the space is registered under its own spelling.
struct Space {
  std::string name;
  SpaceKind kind = SpaceKind::Integer;
  std::vector<std::string> values;  // Enumeration
  std::int64_t lo = 0, hi = 0;      // BoundedInt
  bool anonymous = false;

  bool finite() const { return kind == SpaceKind::Enumeration || kind == SpaceKind::BoundedInt; }
  bool discrete() const { return kind != SpaceKind::Real; }
  Measure measure() const { return discrete() ? Measure::Counting : Measure::Length; }
  std::size_t size() const;
  /// Enumerated values; only meaningful when finite().
  std::vector<Value> domain() const;
  bool contains(const Value& v) const;
  std::string render_value(const Value& v) const;
  /// Inline spelling (`int[0..3]`, `{'a','b'}`, `int`).
  std::string spelling() const;

  static Space enumeration(std::string name, std::vector<std::string> values);
  static Space bounded(std::string name, std::int64_t lo, std::int64_t hi);
  static Space integer();
  static Space real();
  static Space oid();
};

/// Sentinel for an absent OID (nil neighbor pointer).
inline constexpr std::int64_t kNilOid = -1;

struct TypeDecl {
  std::string name;
  std::vector<std::string> signature;     // space names
  std::optional<std::int64_t> max_copy;   // nullopt: unbounded
  std::optional<int> fanout;              // set for graph node types
  SourceSpan span;
};

struct Arg {
  enum class Kind { Var, Const } kind = Kind::Var;
  std::string var;
  Value value;
  SourceSpan span;

  static Arg variable(std::string v) { return Arg{Kind::Var, std::move(v), {}, {}}; }
  static Arg constant(Value v) { return Arg{Kind::Const, {}, v, {}}; }
  friend bool operator==(const Arg& a, const Arg& b) {
    return a.kind == b.kind && a.var == b.var && (a.kind == Kind::Var || a.value == b.value);
  }
};

struct TermPattern {
  std::string type;
  std::vector<Arg> args;
  SourceSpan span;
  friend bool operator==(const TermPattern& a, const TermPattern& b) {
    return a.type == b.type && a.args == b.args;
  }
};

enum class ClauseKind { With, SubjectTo, Solving };

struct DriftEquation {
  std::string var;
  ExprPtr rhs;
};
struct DiffusionEntry {
  std::string var_i, var_j;
  ExprPtr value;
};

struct Rule {
  std::string id;
  std::vector<TermPattern> lhs;
  std::vector<TermPattern> rhs;
  ClauseKind clause = ClauseKind::With;
  ExprPtr expr;  // rate (With) or constraint (SubjectTo)
  std::vector<DriftEquation> drift;        // Solving
  std::vector<DiffusionEntry> diffusion;   // Solving
  SourceSpan span;
};

/// Labeled graph term `L := T(args; [neighbors])`. Neighbor entries are
/// labels or "nil".
struct GraphTerm {
  std::string label;
  std::string type;
  std::vector<Arg> args;
  std::vector<std::string> neighbors;
  SourceSpan span;
};

struct GraphRule {
  std::string id;
  std::vector<GraphTerm> lhs;
  std::vector<std::string> kept;  // labels on the RHS that keep their LHS term
  std::vector<GraphTerm> rhs;
  ClauseKind clause = ClauseKind::With;
  ExprPtr expr;
  SourceSpan span;
};

/// Grounded term; `type` indexes Grammar::types.
struct GroundTerm {
  std::uint32_t type = 0;
  std::vector<Value> args;

  friend auto operator<=>(const GroundTerm&, const GroundTerm&) = default;
  friend bool operator==(const GroundTerm&, const GroundTerm&) = default;
};

struct NamedConstant {
  std::string name;
  Number value;
  SourceSpan span;
};

struct InitEntry {
  TermPattern term;  // constants only
  std::int64_t count = 1;
};

struct Grammar {
  std::vector<NamedConstant> params;
  std::vector<NamedConstant> options;
  std::vector<Space> spaces;  // declared and inline-registered spaces
  std::vector<TypeDecl> types;
  std::vector<Rule> rules;
  std::vector<GraphRule> graph_rules;
  std::vector<InitEntry> initial;

  const Space* find_space(const std::string& name) const;
  /// Registers a space (or finds an equal one) and returns its name.
  std::string intern_space(const Space& s);
  const TypeDecl* find_type(const std::string& name) const;
  std::optional<std::uint32_t> type_index(const std::string& name) const;
  const Rule* find_rule(const std::string& id) const;
  const NamedConstant* find_param(const std::string& name) const;
  std::optional<Number> option(const std::string& name) const;
  bool has_solve_clauses() const;
  const Space& slot_space(const TypeDecl& t, std::size_t slot) const;
};

// ------------------------------------------------------------ validation

struct Diagnostic {
  ErrorKind kind;
  std::string message;
  std::string rule;
  SourceSpan span;
  std::string str() const;
};

struct ValidationReport {
  std::vector<Diagnostic> errors;
  bool ok() const { return errors.empty(); }
  std::string str() const;
};

ValidationReport validate_grammar(const Grammar& g);
/// Throws the first diagnostic as an Error.
void require_valid(const Grammar& g);

/// Space of every variable occurring in the rule's terms, checked for
/// consistency. Throws SpaceMismatch / UnknownIdentifier / ArityMismatch.
std::map<std::string, const Space*> rule_variable_spaces(const Grammar& g, const Rule& r);
std::set<std::string> lhs_variables(const Rule& r);
std::set<std::string> rhs_only_variables(const Rule& r);

/// Replaces `subject to` by an equivalent `with` clause. Solving and with
/// rules pass through unchanged.
Rule desugar_clause(const Grammar& g, const Rule& r);

struct FactoredRate {
  ExprPtr pure_rate;   // references LHS variables and params only
  ExprPtr rest;        // the LHS-only factors of the rate
  OutputKernel kernel; // one binding per RHS-only variable
};

/// Splits a desugared `with` rate into a pure rate and an output kernel.
FactoredRate factor_rate(const Grammar& g, const Rule& r);
/// Multiplies the kernel factors back onto the rest.
ExprPtr recompose(const FactoredRate& f);

/// Substitutes grammar params into an expression.
ExprPtr bind_params(const Grammar& g, const ExprPtr& e);

// ------------------------------------------------------------ equality

bool structurally_equal(const Rule& a, const Rule& b);
bool structurally_equal(const Grammar& a, const Grammar& b);
/// Like structural equality but LHS and RHS compare as multisets.
bool semantically_equal(const Rule& a, const Rule& b);
bool semantically_equal(const Grammar& a, const Grammar& b);

}  // namespace dg
