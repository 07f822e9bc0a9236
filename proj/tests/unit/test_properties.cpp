// Randomized properties over generated grammars and pools.

#include <doctest.h>

#include <random>

#include "dg/exact.hpp"
#include "dg/parser.hpp"
#include "oracles.hpp"

using namespace dg;

TEST_CASE("generated grammars validate and round-trip") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 200; ++i) {
    const std::string text = dgtest::random_small_grammar(rng);
    const ParseResult r = parse_grammar(text, "<gen>");
    REQUIRE_MESSAGE(r.ok(), text);
    const Grammar back = parse_grammar_or_throw(render_grammar(*r.grammar));
    CHECK_MESSAGE(structurally_equal(*r.grammar, back), text);
  }
}

TEST_CASE("replaying an ssa run never breaks caps or counts") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 40; ++i) {
    const Grammar g = parse_grammar_or_throw(dgtest::random_small_grammar(rng));
    auto cg = compile(g);
    RngStream stream(static_cast<std::uint64_t>(i), 0);
    const EventTrace tr = simulate_ssa(*cg, PoolState(cg->schema), 5.0, stream);
    CHECK(replay_trace(tr) == tr.final_state);
  }
}

TEST_CASE("master evolution conserves mass and stays nonnegative") {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 30; ++i) {
    auto cg = compile(parse_grammar_or_throw(dgtest::random_small_grammar(rng)));
    const StateSpace ss = enumerate_states(cg);
    const GeneratorSet gen = build_generator(ss);
    const Eigen::VectorXd p = evolve_master(gen, ss.point_mass(PoolState(cg->schema)), 0.7);
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(p.minCoeff() >= 0.0);
  }
}

TEST_CASE("horn import reaches the least model from the empty pool") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 25; ++i) {
    const HornProgram prog = dgtest::random_horn(rng, 8);
    CHECK(least_model(prog) == dgtest::naive_fixpoint(prog));
    CHECK(validate_grammar(import_logic_program(prog)).ok());
  }
}

TEST_CASE("path-sum oracle tends to the rate-product distribution") {
  const dgtest::Chain c{{{0, 2, 1}, {1, 0, 4}, {3, 1, 0}}};
  const auto w = dgtest::path_weight_distribution(c, 0, 3);
  CHECK(dgtest::tv(dgtest::path_sum_conditioned(c, 0, 1e-7, 3), w) < 1e-5);
}
