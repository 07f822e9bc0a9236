#include <doctest.h>

#include <cmath>

#include "dg/hybrid.hpp"
#include "dg/parser.hpp"

using namespace dg;

namespace {

struct Fixture {
  Grammar g;
  std::shared_ptr<const CompiledGrammar> cg;
  std::unique_ptr<HybridModel> model;
  explicit Fixture(const std::string& text)
      : g(parse_grammar_or_throw(text)), cg(compile(g)), model(std::make_unique<HybridModel>(cg)) {}
  PoolState p0() const { return initial_pool(g, cg->schema); }
};

double first_real(const std::vector<ContinuousTerm>& terms) { return terms.at(0).term.args.at(0).as_real(); }

}  // namespace

TEST_CASE("solving rules desugar into drift specs") {
  const Grammar g = parse_grammar_or_throw(
      "param a = 2;\ntype X(real, real);\n"
      "rule r: X(x, y) -> X(x, y) solving dx/dt = a - x, dy/dt = x * y;\n");
  const DriftSpec d = desugar_solving(g, g.rules[0]);
  REQUIRE(d.drift.size() == 2);
  CHECK(d.drift[0].slot == 0);
  CHECK(d.drift[1].slot == 1);
  CHECK(d.diffusion.empty());
  CHECK_FALSE(d.formal_rate.empty());

  const Grammar bad = parse_grammar_unchecked(
      "type X(real);\ntype Y;\nrule r: X(x), Y -> X(x), Y solving dx/dt = -x;\n").grammar.value();
  try {
    desugar_solving(bad, bad.rules[0]);
    FAIL("two-term solving rule accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MultiTermSolveRule);
  }
}

TEST_CASE("rk4 drift") {
  Fixture f("type X(real);\nrule r: X(x) -> X(x) solving dx/dt = -x;\n");
  std::vector<ContinuousTerm> terms{{GroundTerm{0, {Value(2.0)}}, 1}};
  integrate_drift(*f.model, terms, 0.0, 1e-3);
  CHECK(first_real(terms) == 2.0);
  integrate_drift(*f.model, terms, 1.0, 1e-3);
  CHECK(std::abs(first_real(terms) - 2.0 * std::exp(-1.0)) <= 1e-8);
}

TEST_CASE("linear relaxation reaches its fixed point") {
  Fixture f("param a = 2;\nparam b = 1;\ntype X(real);\nrule r: X(x) -> X(x) solving dx/dt = a - b * x;\n");
  std::vector<ContinuousTerm> terms{{GroundTerm{0, {Value(0.0)}}, 1}};
  integrate_drift(*f.model, terms, 20.0, 1e-2);
  CHECK(std::abs(first_real(terms) - 2.0) <= 1e-6);
}

TEST_CASE("pure diffusion variance grows as 2 D t") {
  Fixture f("type X(real);\nrule r: X(x) -> X(x) solving dx/dt = 0, diffusion(x, x) = 0.5;\n");
  CHECK(f.model->has_diffusion());
  std::vector<ContinuousTerm> terms{{GroundTerm{0, {Value(0.0)}}, 100000}};
  RngStream rng(8, 0);
  integrate_drift(*f.model, terms, 1.0, 1e-2, &rng);
  double s = 0.0, s2 = 0.0, n = 0.0;
  for (const auto& t : terms) {
    const double x = t.term.args[0].as_real();
    s += x * static_cast<double>(t.count);
    s2 += x * x * static_cast<double>(t.count);
    n += static_cast<double>(t.count);
  }
  CHECK(n == 100000.0);
  const double var = s2 / n - (s / n) * (s / n);
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("drift-only run has no events") {
  Fixture f("type X(real);\nrule r: X(x) -> X(x) solving dx/dt = -x;\ninit X(1);\n");
  RngStream rng(1, 0);
  HybridOptions opts;
  opts.grid = {0.0, 0.5, 1.0};
  const HybridTrace tr = simulate_hybrid(*f.model, f.p0(), 1.0, rng, opts);
  CHECK(tr.trace.events.empty());
  REQUIRE(tr.samples.size() == 3);
  CHECK(tr.samples[1].values[0] == doctest::Approx(std::exp(-0.5)).epsilon(1e-10));
  CHECK(tr.samples[2].values[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-10));
}

TEST_CASE("jump rates that read drifted values use thinning") {
  // Death at rate x while x relaxes from 1: survival to T is
  // exp(-(1 - e^{-T})).
  Fixture f("type X(real);\nrule relax: X(x) -> X(x) solving dx/dt = -x;\nrule die: X(x) -> with x;\ninit X(1);\n");
  CHECK(f.model->any_sensitive());
  const double T = 2.0;
  const HybridEnsemble ens = run_hybrid_ensemble(*f.model, f.p0(), T, 3, 10000, 1,
                                                 {parse_observable(f.g, "X")}, {T}, 1e-2, false);
  const double alive = ens.stats[0].mean.back();
  const double exact = std::exp(-(1.0 - std::exp(-T)));
  CHECK(std::abs(alive - exact) <= 3.0 * std::sqrt(exact * (1 - exact) / 10000.0));
}

TEST_CASE("constant jump rates keep the ssa draw sequence") {
  Fixture f(
      "type X(real);\ntype C;\nrule relax: X(x) -> X(x) solving dx/dt = -x;\n"
      "rule tick: X(x) -> X(x), C with 1;\ninit X(1);\n");
  CHECK_FALSE(f.model->any_sensitive());
  RngStream rng(4, 0);
  HybridOptions opts;
  opts.record_samples = false;
  const HybridTrace tr = simulate_hybrid(*f.model, f.p0(), 3.0, rng, opts);
  for (const auto& e : tr.trace.events) {
    // The kept X carries the relaxed value at the firing time.
    CHECK(e.consumed.at(0).args.at(0).as_real() == doctest::Approx(std::exp(-e.time)).epsilon(1e-9));
  }
}

TEST_CASE("hybrid ensembles are independent of workers") {
  const Grammar g = load_grammar(std::string(DG_CORPUS_DIR) + "/decay_reset.dg");
  auto cg = compile(g);
  HybridModel model(cg);
  CHECK(model.default_h() == 0.01);
  const auto grid = uniform_grid(2.0, 5);
  const auto a = run_hybrid_ensemble(model, initial_pool(g, cg->schema), 2.0, 6, 200, 1, {}, grid, 0.0, true);
  const auto b = run_hybrid_ensemble(model, initial_pool(g, cg->schema), 2.0, 6, 200, 3, {}, grid, 0.0, true);
  CHECK(continuous_table(a.continuous) == continuous_table(b.continuous));
  REQUIRE(a.traces.size() == b.traces.size());
  for (std::size_t i = 0; i < a.traces.size(); ++i)
    CHECK(hybrid_trace_to_jsonl(model, a.traces[i]) == hybrid_trace_to_jsonl(model, b.traces[i]));
}

TEST_CASE("thinning bias shrinks as h halves") {
  // Same streams at every h: each path's jump time converges pathwise.
  Fixture f("type X(real);\nrule relax: X(x) -> X(x) solving dx/dt = -x;\nrule die: X(x) -> with x + 1;\ninit X(1);\n");
  auto jump_time = [&](std::uint64_t rep, double h) {
    RngStream rng(12, rep);
    HybridOptions opts;
    opts.h = h;
    opts.record_samples = false;
    const HybridTrace tr = simulate_hybrid(*f.model, f.p0(), 50.0, rng, opts);
    return tr.trace.events.at(0).time;
  };
  const std::vector<double> hs = {0.04, 0.02, 0.01, 0.005};
  std::vector<double> dev(hs.size() - 1, 0.0);
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    const double ref = jump_time(rep, hs.back() / 8);
    for (std::size_t i = 0; i + 1 < hs.size(); ++i) dev[i] += std::abs(jump_time(rep, hs[i]) - ref);
  }
  for (std::size_t i = 0; i + 1 < dev.size(); ++i) {
    const double ratio = dev[i] / dev[i + 1];
    CHECK(ratio > 1.6);
    CHECK(ratio < 2.5);
  }
}
