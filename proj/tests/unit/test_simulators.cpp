#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "dg/dtmc.hpp"
#include "dg/parser.hpp"

using namespace dg;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("ssa trace replays to its final state") {
  const Grammar g = load_grammar(std::string(DG_CORPUS_DIR) + "/macrophage.dg");
  auto cg = compile(g);
  RngStream rng(9, 0);
  const EventTrace tr = simulate_ssa(*cg, initial_pool(g, cg->schema), 50.0, rng);
  CHECK(replay_trace(tr) == tr.final_state);
  for (std::size_t i = 1; i < tr.events.size(); ++i) CHECK(tr.events[i - 1].time <= tr.events[i].time);
}

TEST_CASE("pure decay holding times are exponential") {
  const Grammar g = parse_grammar_or_throw("type A;\nrule d: A -> with 2;\ninit A;\n");
  auto cg = compile(g);
  double sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    RngStream rng(1, static_cast<std::uint64_t>(i));
    const EventTrace tr = simulate_ssa(*cg, initial_pool(g, cg->schema), 1e9, rng);
    REQUIRE(tr.events.size() == 1);
    CHECK(tr.absorbed);
    sum += tr.events[0].time;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("grid points see the state after events at or before them") {
  const Grammar g = parse_grammar_or_throw("type A;\nrule d: A -> with 1;\ninit A * 5;\n");
  auto cg = compile(g);
  RngStream probe(4, 0);
  const EventTrace tr = simulate_ssa(*cg, initial_pool(g, cg->schema), 100.0, probe);
  REQUIRE(tr.events.size() == 5);
  const double t1 = tr.events[0].time;
  SsaOptions opts;
  opts.grid = {0.0, t1 * 0.999, t1, 100.0};
  std::vector<std::int64_t> seen(4, -1);
  opts.on_grid = [&](std::size_t i, const PoolState& p) { seen[i] = p.total(); };
  RngStream rng(4, 0);
  simulate_ssa(*cg, initial_pool(g, cg->schema), 100.0, rng, opts);
  CHECK(seen == std::vector<std::int64_t>{5, 5, 4, 0});
  SsaOptions beyond;
  beyond.grid = {101.0};
  beyond.on_grid = [](std::size_t, const PoolState&) {};
  RngStream r2(4, 0);
  CHECK(kind_of([&] { simulate_ssa(*cg, initial_pool(g, cg->schema), 100.0, r2, beyond); }) ==
        ErrorKind::GridBeyondEnd);
}

TEST_CASE("ssa refuses grammars with solving clauses") {
  const Grammar g = parse_grammar_or_throw("type X(real);\nrule r: X(x) -> X(x) solving dx/dt = -x;\ninit X(1);\n");
  auto cg = compile(g);
  RngStream rng(1, 0);
  CHECK(kind_of([&] { simulate_ssa(*cg, initial_pool(g, cg->schema), 1.0, rng); }) ==
        ErrorKind::SolveInStochasticGrammar);
}

TEST_CASE("ensembles do not depend on the worker count") {
  const Grammar g = load_grammar(std::string(DG_CORPUS_DIR) + "/abc.dg");
  auto cg = compile(g);
  const PoolState p0 = initial_pool(g, cg->schema);
  std::vector<Observable> obs{parse_observable(g, "A"), parse_observable(g, "c=C")};
  const auto grid = uniform_grid(2.0, 5);
  const auto one = run_ssa_ensemble(*cg, p0, 2.0, 7, 300, 1, obs, grid, true);
  const auto three = run_ssa_ensemble(*cg, p0, 2.0, 7, 300, 3, obs, grid, true);
  CHECK(stats_table(one.stats) == stats_table(three.stats));
  REQUIRE(one.traces.size() == three.traces.size());
  for (std::size_t i = 0; i < one.traces.size(); ++i)
    CHECK(trace_to_jsonl(*cg, one.traces[i]) == trace_to_jsonl(*cg, three.traces[i]));
  CHECK(one.stats[1].observable == "c");
  CHECK(one.stats[0].mean.front() == 4.0);
}

TEST_CASE("trace lines are json records") {
  const Grammar g = load_grammar(std::string(DG_CORPUS_DIR) + "/abc.dg");
  auto cg = compile(g);
  RngStream rng(2, 0);
  const EventTrace tr = simulate_ssa(*cg, initial_pool(g, cg->schema), 10.0, rng);
  std::istringstream in(trace_to_jsonl(*cg, tr));
  std::string line;
  std::size_t events = 0, lines = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    ++lines;
    if (j.contains("rule")) {
      ++events;
      CHECK(j.contains("t"));
      CHECK(j["consumed"].is_array());
    }
  }
  CHECK(events == tr.events.size());
  CHECK(lines == events + 2);
}

TEST_CASE("observables with wildcards") {
  const Grammar g = parse_grammar_or_throw("type P(int, int);\ninit P(1, 2) * 2, P(1, 3), P(2, 2);\n");
  const PoolState p = initial_pool(g);
  CHECK(parse_observable(g, "P(1,_)").eval(p) == 3);
  CHECK(parse_observable(g, "q=P(_,2)").eval(p) == 3);
  CHECK(parse_observable(g, "P").eval(p) == 4);
}

TEST_CASE("discrete sampler carries global weights") {
  // Every first step leaves S(0), whose total exit rate is 4.
  const Grammar g = load_grammar(std::string(DG_CORPUS_DIR) + "/three_state.dg");
  auto cg = compile(g);
  const DiscreteResult r = simulate_discrete_weighted(*cg, initial_pool(g, cg->schema), 1, 2000, 5, 2, true);
  CHECK(r.absorbed == 0);
  REQUIRE(r.trajectories.size() == 2000);
  for (const auto& t : r.trajectories) CHECK(t.log_weight == doctest::Approx(std::log(4.0)));
  double total = 0.0;
  for (const auto& [k, v] : r.weighted) total += v;
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("discrete sampler with every path absorbed") {
  const Grammar g = parse_grammar_or_throw("type A;\nrule d: A -> with 1;\ninit A;\n");
  auto cg = compile(g);
  CHECK(kind_of([&] { simulate_discrete_weighted(*cg, initial_pool(g, cg->schema), 2, 10, 1); }) ==
        ErrorKind::AllPathsAbsorbed);
}

TEST_CASE("distribution distances") {
  Distribution a, b;
  PoolState::Counts x{{GroundTerm{0, {}}, 1}}, y{{GroundTerm{0, {}}, 2}};
  a[x] = 0.25;
  a[y] = 0.75;
  b[x] = 0.5;
  b[y] = 0.5;
  CHECK(l1_distance(a, b) == doctest::Approx(0.5));
  CHECK(tv_distance(a, b) == doctest::Approx(0.25));
}
