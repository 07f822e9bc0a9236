#include <doctest.h>

#include "dg/parser.hpp"

using namespace dg;

namespace {

ErrorKind first_error(const std::string& text) {
  const ParseResult r = parse_grammar(text, "t.dg");
  REQUIRE_FALSE(r.ok());
  return r.errors.front().kind;
}

}  // namespace

TEST_CASE("a grammar with every declaration kind parses") {
  const std::string text =
      "param k = 2;\n"
      "option h = 0.01;\n"
      "space Color = {'red', 'blue'};\n"
      "space Small = int[0..3];\n"
      "type Cell(Color, Small) : cap 2;\n"
      "type Mass(real);\n"
      "rule paint: Cell('red', n) -> Cell('blue', n) with k * (n + 1);\n"
      "rule grow: Cell(c, n) -> Cell(c, m) subject to m - n - 1;\n"
      "rule drift: Mass(x) -> Mass(x) solving dx/dt = -k * x;\n"
      "init Cell('red', 0) * 2, Mass(1.5);\n";
  const ParseResult r = parse_grammar(text, "all.dg");
  REQUIRE_MESSAGE(r.ok(), (r.errors.empty() ? "" : r.errors.front().str()));
  const Grammar& g = *r.grammar;
  CHECK(g.types.size() == 2);
  CHECK(g.rules.size() == 3);
  CHECK(*g.find_type("Cell")->max_copy == 2);
  CHECK(g.option("h")->to_double() == 0.01);
  CHECK(g.has_solve_clauses());
  CHECK(g.initial.front().count == 2);
}

TEST_CASE("render then parse reproduces the grammar") {
  const std::string text =
      "space Pos = int;\n"
      "type b(Pos);\n"
      "type m(Pos) : cap 1;\n"
      "rule eat: b(x), m(y) -> m(y) with exp(-abs(x - y));\n"
      "rule step: b(x) -> b(z) with 0.5 * delta(z - x + 1);\n"
      "init b(3), m(0);\n";
  const Grammar g = parse_grammar_or_throw(text);
  const std::string once = render_grammar(g);
  const Grammar back = parse_grammar_or_throw(once);
  CHECK(structurally_equal(g, back));
  CHECK(render_grammar(back) == once);
}

TEST_CASE("syntax errors report a location and expected tokens") {
  const ParseResult r = parse_grammar("type A;\nrule r: A -> with ;\n", "bad.dg");
  REQUIRE_FALSE(r.ok());
  CHECK(r.errors.front().span.line == 2);
  CHECK(r.errors.front().span.file == "bad.dg");
  CHECK(r.errors.front().str().find("bad.dg:2") != std::string::npos);
}

TEST_CASE("validation errors") {
  CHECK(first_error("type A(int);\nrule r: A -> with 1;\n") == ErrorKind::ArityMismatch);
  CHECK(first_error("type A(int);\nrule r: A(x) -> A(y) with 1;\n") == ErrorKind::UnboundRhsVariable);
  CHECK(first_error("type A : cap 0;\n") == ErrorKind::InvalidMaxCopy);
  CHECK(first_error("type A;\ntype A;\n") == ErrorKind::DuplicateIdentifier);
  CHECK(first_error("type A;\nrule r: B -> A with 1;\n") == ErrorKind::UnknownIdentifier);
  CHECK(first_error("space S = {'a'};\ntype A(S);\nrule r: A('b') -> with 1;\n") == ErrorKind::InvalidConstant);
  CHECK(first_error("space S = {'a'};\ntype A(S);\ntype B(int);\nrule r: A(x), B(x) -> with 1;\n") ==
        ErrorKind::SpaceMismatch);
  CHECK(first_error("type A;\nrule r: A, A -> with 1;\nrule r: A -> with 1;\n") == ErrorKind::DuplicateIdentifier);
}

TEST_CASE("subject to desugars into a delta rate") {
  const Grammar g = parse_grammar_or_throw("type A(int);\nrule r: A(x) -> A(z) subject to z - x - 1;\n");
  const Rule d = desugar_clause(g, g.rules[0]);
  CHECK(d.clause == ClauseKind::With);
  const std::string rate = render(d.expr);
  CHECK(rate.find("delta") != std::string::npos);
}

TEST_CASE("rate factoring splits the pure rate from the output kernel") {
  const Grammar g = parse_grammar_or_throw(
      "param k = 3;\ntype A(int);\ntype B(real);\n"
      "rule r: A(x) -> A(z), B(y) with k * x * delta(z - x - 1) * normal_pdf(y; x, 0.5);\n");
  const FactoredRate f = factor_rate(g, g.rules[0]);
  CHECK(f.kernel.size() == 2);
  const Substitution theta{{"x", Value(std::int64_t{2})}, {"k", Value(std::int64_t{3})}};
  CHECK(eval_expr(bind_params(g, f.pure_rate), theta).to_double() == doctest::Approx(6.0));
}

TEST_CASE("multiset equality ignores term order") {
  const Grammar a = parse_grammar_or_throw("type A;\ntype B;\nrule r: A, B -> A with 1;\n");
  const Grammar b = parse_grammar_or_throw("type A;\ntype B;\nrule r: B, A -> A with 1;\n");
  CHECK_FALSE(structurally_equal(a, b));
  CHECK(semantically_equal(a, b));
}

TEST_CASE("every corpus grammar round-trips") {
  for (const char* f : {"macrophage.dg", "decay.dg", "birth_death.dg", "abc.dg", "three_state.dg", "decay_reset.dg",
                        "fibonacci_graph.dg", "fibonacci_cells.dg"}) {
    const Grammar g = load_grammar(std::string(DG_CORPUS_DIR) + "/" + f);
    const std::string text = render_grammar(g);
    CHECK_MESSAGE(structurally_equal(parse_grammar_or_throw(text), g), f);
  }
}
