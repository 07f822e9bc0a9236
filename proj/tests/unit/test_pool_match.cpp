#include <doctest.h>

#include "dg/match.hpp"
#include "dg/parser.hpp"

using namespace dg;

namespace {

GroundTerm term(const Grammar& g, const std::string& text) { return parse_ground_term(g, text); }

}  // namespace

TEST_CASE("pool copy numbers, caps and persistence") {
  const Grammar g = parse_grammar_or_throw("type A(int);\ntype F : cap 1;\n");
  auto schema = PoolSchema::from(g);
  PoolState p(schema);
  p.add(term(g, "A(1)"), 3);
  const PoolState snapshot = p;
  p.remove(term(g, "A(1)"));
  CHECK(p.copy_number(term(g, "A(1)")) == 2);
  CHECK(snapshot.copy_number(term(g, "A(1)")) == 3);
  CHECK(p.total() == 2);
  p.add(term(g, "F"));
  try {
    p.add(term(g, "F"));
    FAIL("cap not enforced");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::CapExceeded);
  }
  try {
    p.remove(term(g, "A(7)"));
    FAIL("removal of an absent term");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InsufficientCopies);
  }
}

TEST_CASE("total guard") {
  const Grammar g = parse_grammar_or_throw("type A;\n");
  PoolState p(PoolSchema::from(g, 10));
  p.add(term(g, "A"), 10);
  CHECK_THROWS_AS(p.add(term(g, "A")), Error);
}

TEST_CASE("fresh oids are consecutive") {
  const Grammar g = parse_grammar_or_throw("type A;\n");
  PoolState p(PoolSchema::from(g));
  p.set_next_oid(5);
  const auto [ids, q] = p.fresh_oids(3);
  CHECK(ids == std::vector<std::int64_t>{5, 6, 7});
  CHECK(q.next_oid() == 8);
  CHECK(p.next_oid() == 5);
}

TEST_CASE("pool text round trip") {
  const Grammar g = parse_grammar_or_throw("space S = {'a', 'b'};\ntype C(oid, S, oid);\ntype N(real);\n");
  PoolState p(PoolSchema::from(g));
  p.add(term(g, "C(0, 'a', 1)"));
  p.add(term(g, "C(1, 'b', nil)"), 2);
  p.add(term(g, "N(0.125)"));
  p.set_next_oid(2);
  const PoolState back = parse_pool(g, serialize_pool(g, p), p.schema());
  CHECK(back == p);
}

TEST_CASE("ordered matches count falling factorials") {
  const Grammar g = parse_grammar_or_throw("type A;\ntype B;\nrule r: A, A, B -> B with 0.5;\ninit A * 4, B * 3;\n");
  auto cg = compile(g);
  const PoolState p = initial_pool(g, cg->schema);
  // 4 * 3 ordered pairs of A copies, 3 choices of B.
  CHECK(rule_propensity(*cg, 0, p) == doctest::Approx(0.5 * 4 * 3 * 3));
  CHECK(enumerate_matches(*cg, 0, p).size() == 36);
}

TEST_CASE("parameter binding across LHS terms") {
  const Grammar g = parse_grammar_or_throw(
      "type A(int);\ntype B(int);\nrule r: A(x), B(x) -> with x + 1;\ninit A(1), A(2) * 2, B(2), B(3);\n");
  auto cg = compile(g);
  const PoolState p = initial_pool(g, cg->schema);
  // Only x = 2 matches: 2 copies of A(2), 1 of B(2), rate 3.
  CHECK(rule_propensity(*cg, 0, p) == doctest::Approx(6.0));
}

TEST_CASE("output kernels reach the right outcomes") {
  const Grammar g = parse_grammar_or_throw(
      "space R = int[0..2];\ntype A(R);\nrule hop: A(x) -> A(z) with (z + 1);\ninit A(0);\n");
  auto cg = compile(g);
  const PoolState p = initial_pool(g, cg->schema);
  // Finite sum over z in 0..2 of z + 1.
  CHECK(rule_propensity(*cg, 0, p) == doctest::Approx(6.0));
  RngStream rng(1, 0);
  std::map<std::int64_t, int> hist;
  for (int i = 0; i < 6000; ++i) {
    const double target = rng.uniform() * 6.0;
    const Event e = fire_rule(*cg, 0, p, target, rng);
    hist[e.produced.at(0).args.at(0).as_integer()]++;
  }
  CHECK(hist[0] == doctest::Approx(1000).epsilon(0.12));
  CHECK(hist[2] == doctest::Approx(3000).epsilon(0.06));
}

TEST_CASE("capped outcomes are infeasible") {
  const Grammar g = parse_grammar_or_throw("type A;\ntype F : cap 1;\nrule make: A -> F with 2;\ninit A * 3, F;\n");
  auto cg = compile(g);
  CHECK(rule_propensity(*cg, 0, initial_pool(g, cg->schema)) == 0.0);
}

TEST_CASE("apply_event moves exactly the consumed and produced terms") {
  const Grammar g = parse_grammar_or_throw("type A(int);\nrule inc: A(x) -> A(y) subject to y - x - 1;\ninit A(0);\n");
  auto cg = compile(g);
  const PoolState p = initial_pool(g, cg->schema);
  RngStream rng(3, 0);
  const Event e = fire_rule(*cg, 0, p, 0.0, rng);
  const PoolState q = apply_event(p, e);
  CHECK(q.copy_number(term(g, "A(1)")) == 1);
  CHECK(q.copy_number(term(g, "A(0)")) == 0);
  CHECK(p.copy_number(term(g, "A(0)")) == 1);
  CHECK(e.theta.find("y")->as_integer() == 1);
}

TEST_CASE("pool descriptor") {
  const Grammar g = parse_grammar_or_throw("type A(int);\ntype B;\ninit A(1) * 2, B;\n");
  CHECK(describe_pool(g, initial_pool(g)) == "{A(1):2, B:1}");
}
