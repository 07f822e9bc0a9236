#pragma once

// Reference implementations used only by the tests. They are written
// directly from the model definitions and share no code with the library
// beyond parsing and state indexing.

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dg/reductions.hpp"

namespace dgtest {

/// Random grammar text: 1-4 types, caps 1-3, 1-5 rules, at most six ground
/// slots. Some types carry one parameter over int[0..1].
std::string random_small_grammar(std::mt19937_64& rng);

/// Horn program with up to `max_atoms` atoms.
dg::HornProgram random_horn(std::mt19937_64& rng, std::size_t max_atoms);
/// Naive fixpoint iteration: apply every clause until nothing changes.
std::set<std::string> naive_fixpoint(const dg::HornProgram& prog);

/// L-system over a subset of {A, B, C} with productions of length 0..3.
dg::LSystem random_lsystem(std::mt19937_64& rng);

/// Small explicit CTMC: rate[i][j] is the jump rate from i to j.
struct Chain {
  std::vector<std::vector<double>> rate;
  std::size_t size() const { return rate.size(); }
  double exit(std::size_t i) const;
};

/// Distribution over end states of paths with exactly s jumps in [0, t],
/// normalized. Every path is enumerated; its holding-time integral is the
/// (s, 0) entry of exp(t M) for the path's bidiagonal matrix M.
std::vector<double> path_sum_conditioned(const Chain& c, std::size_t start, double t, std::size_t s);
/// Sum over s-jump paths of the rate products, normalized.
std::vector<double> path_weight_distribution(const Chain& c, std::size_t start, std::size_t s);

/// Mass-action generator over occupation vectors bounded by a common cap.
/// Reactions use falling-factorial propensities; a reaction whose products
/// would exceed the cap is disabled in that state.
struct MassAction {
  std::size_t species = 0;
  std::int64_t cap = 0;
  struct Reaction {
    std::vector<std::int64_t> in, out;
    double rate = 0.0;
  };
  std::vector<Reaction> reactions;
};
/// Dense generator indexed like `index(occupation)`.
std::vector<std::vector<double>> mass_action_generator(const MassAction& m,
                                                       const std::vector<std::vector<std::int64_t>>& states);

double tv(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace dgtest
