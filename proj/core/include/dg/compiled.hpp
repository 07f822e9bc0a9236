#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dg/grammar.hpp"
#include "dg/pool.hpp"

namespace dg {

/// One argument slot of a compiled term: a constant or a variable index.
struct SlotRef {
  bool is_const = false;
  Value value;
  int var = -1;
};

struct CompiledTerm {
  std::uint32_t type = 0;
  std::vector<SlotRef> slots;
};

struct CompiledVar {
  std::string name;
  const Space* space = nullptr;
  bool lhs = false;
  bool continuous_kernel = false;  // drawn from a density kernel
};

/// A jump rule resolved against its grammar: params bound, clause
/// desugared, rate factored, variables numbered (LHS variables first).
struct CompiledRule {
  std::size_t index = 0;
  std::string id;
  const Rule* source = nullptr;
  std::vector<CompiledTerm> lhs, rhs;
  std::vector<CompiledVar> vars;
  std::size_t num_lhs_vars = 0;
  ExprPtr rate;       // desugared full rate, params bound
  FactoredRate factored;
  std::vector<std::uint32_t> touched_types;  // LHS and RHS types
  bool needs_feasibility = false;            // caps or assignments can zero an outcome
  bool solving = false;
};

struct CompiledGrammar {
  std::shared_ptr<const Grammar> grammar;
  std::shared_ptr<const PoolSchema> schema;
  std::vector<CompiledRule> rules;         // jump rules, grammar order
  std::vector<std::size_t> solve_rules;    // indices into grammar->rules
  std::vector<std::vector<std::size_t>> rules_by_type;

  const Grammar& g() const { return *grammar; }
  bool has_solve() const { return !solve_rules.empty(); }
};

/// Validates (throws on the first error) and compiles the jump rules.
std::shared_ptr<const CompiledGrammar> compile(const Grammar& g,
                                               std::int64_t total_guard = 10'000'000);

}  // namespace dg
