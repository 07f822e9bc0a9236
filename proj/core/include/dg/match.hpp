#pragma once

#include <functional>
#include <vector>

#include "dg/compiled.hpp"

namespace dg {

/// Ordered injective assignment of LHS slots to labeled pool copies.
struct Match {
  std::size_t rule_index = 0;
  std::string rule;
  std::vector<std::pair<GroundTerm, std::int64_t>> slots;  // term and copy label
  Substitution theta;
  double pure_rate_value = 0.0;
};

/// Matches that differ only in copy labels, counted once with their
/// multiplicity (the falling factorial of the copy numbers involved).
struct GroupedMatch {
  std::vector<const GroundTerm*> slots;
  std::vector<Value> values;  // by variable index; LHS variables bound
  double multiplicity = 0.0;
};

/// Visits every distinct LHS instantiation.
void for_each_grouped_match(const CompiledRule& r, const PoolState& p,
                            const std::function<void(const GroupedMatch&)>& visit);

Substitution lhs_substitution(const CompiledRule& r, const std::vector<Value>& values);

/// A finite outcome of the output kernel: the RHS-only variables it fixes
/// and its weight.
struct Outcome {
  std::vector<Value> values;  // full variable vector (continuous slots unset)
  double weight = 0.0;
};

/// Feasible finite outcomes of one instantiation. Infeasible outcomes
/// (caps, values outside their spaces) are dropped.
std::vector<Outcome> feasible_outcomes(const CompiledRule& r, const PoolState& p, const GroupedMatch& m);

/// rest(theta) times the feasible outcome weight; zero if nothing is feasible.
double match_rate(const CompiledRule& r, const PoolState& p, const GroupedMatch& m);

std::vector<Match> enumerate_matches(const CompiledGrammar& cg, std::size_t rule_index, const PoolState& p);
double rule_propensity(const CompiledGrammar& cg, std::size_t rule_index, const PoolState& p);

struct PropensityTable {
  std::vector<double> per_rule;
  double total = 0.0;
};
PropensityTable total_propensity(const CompiledGrammar& cg, const PoolState& p);

/// Picks the match and finite outcome at position `target` in [0, propensity)
/// of the rule's cumulative rate order, samples continuous kernels from rng,
/// and returns the event. The rule's propensity must be positive.
Event fire_rule(const CompiledGrammar& cg, std::size_t rule_index, const PoolState& p, double target,
                RngStream& rng);

/// Ground terms produced by an instantiation with every variable bound.
std::vector<GroundTerm> instantiate(const std::vector<CompiledTerm>& terms, const std::vector<Value>& values);

}  // namespace dg
