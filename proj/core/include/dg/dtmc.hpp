#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dg/ctmc.hpp"

namespace dg {

/// Distribution over pool states keyed by copy numbers (the OID counter is
/// not part of the key).
using Distribution = std::map<PoolState::Counts, double>;

struct DiscreteStep {
  Event event;
  double total = 0.0;  // R at the pre-firing state
};

/// Fires one match chosen proportionally to its rate among all matches.
/// nullopt when nothing is enabled.
std::optional<DiscreteStep> step_discrete(const CompiledGrammar& cg, const PoolState& p, RngStream& rng);

struct WeightedTrajectory {
  EventTrace trace;  // Event::step set, Event::time unused
  double log_weight = 0.0;
  bool absorbed_early = false;
};

struct DiscreteResult {
  std::size_t steps = 0;
  std::size_t replicates = 0;
  std::size_t absorbed = 0;  // paths that ran out of enabled matches before `steps`
  Distribution weighted;     // estimates the globally normalized H^s p0
  Distribution embedded;     // unweighted: the embedded jump chain
  std::vector<WeightedTrajectory> trajectories;  // only when requested
};

/// Importance-weighted sampler: each replicate is an embedded-chain path
/// carrying weight prod R. Replicate r uses RngStream(seed, r).
/// Throws AllPathsAbsorbed when no path survives `steps` firings.
DiscreteResult simulate_discrete_weighted(const CompiledGrammar& cg, const PoolState& p0, std::size_t steps,
                                          std::size_t replicates, std::uint64_t seed, std::size_t jobs = 1,
                                          bool keep_trajectories = false);

/// Total variation distance, 0.5 * L1.
double tv_distance(const Distribution& a, const Distribution& b);
double l1_distance(const Distribution& a, const Distribution& b);

/// Two-column text: state descriptor, probability.
std::string distribution_table(const Grammar& g, const Distribution& d);

std::string trajectory_to_jsonl(const CompiledGrammar& cg, const WeightedTrajectory& w);

}  // namespace dg
