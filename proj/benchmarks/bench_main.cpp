#include <benchmark/benchmark.h>

#include "dg/exact.hpp"
#include "dg/parser.hpp"

using namespace dg;

namespace {

const std::string kCorpus = DG_CORPUS_DIR;

void BM_SsaBirthDeath(benchmark::State& state) {
  const Grammar g = load_grammar(kCorpus + "/birth_death.dg");
  auto cg = compile(g);
  const PoolState p0 = initial_pool(g, cg->schema);
  std::uint64_t rep = 0;
  std::int64_t events = 0;
  for (auto _ : state) {
    RngStream rng(1, rep++);
    const EventTrace tr = simulate_ssa(*cg, p0, 100.0, rng);
    events += static_cast<std::int64_t>(tr.events.size());
  }
  state.counters["events/s"] = benchmark::Counter(static_cast<double>(events), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_SsaBirthDeath);

void BM_SsaMacrophage(benchmark::State& state) {
  const Grammar g = load_grammar(kCorpus + "/macrophage.dg");
  auto cg = compile(g);
  const PoolState p0 = initial_pool(g, cg->schema);
  std::uint64_t rep = 0;
  for (auto _ : state) {
    RngStream rng(2, rep++);
    benchmark::DoNotOptimize(simulate_ssa(*cg, p0, 20.0, rng).events.size());
  }
}
BENCHMARK(BM_SsaMacrophage);

// Propensity of a bimolecular rule over a pool with many distinct terms.
void BM_MatcherPropensity(benchmark::State& state) {
  const auto n = state.range(0);
  std::string text = "type A(int);\ntype B(int);\nrule bind: A(x), B(y) -> with exp(-abs(x - y));\ninit ";
  for (std::int64_t i = 0; i < n; ++i) text += (i ? ", " : "") + std::string("A(") + std::to_string(i) + "), B(" + std::to_string(2 * i) + ")";
  text += ";\n";
  const Grammar g = parse_grammar_or_throw(text);
  auto cg = compile(g);
  const PoolState p = initial_pool(g, cg->schema);
  for (auto _ : state) benchmark::DoNotOptimize(rule_propensity(*cg, 0, p));
  state.SetComplexityN(n);
}
BENCHMARK(BM_MatcherPropensity)->RangeMultiplier(4)->Range(4, 256)->Complexity();

void BM_Uniformization(benchmark::State& state) {
  const Grammar g = load_grammar(kCorpus + "/abc.dg");
  auto cg = compile(g);
  StateBounds b;
  b.cap = state.range(0);
  const StateSpace ss = enumerate_states(cg, b);
  const GeneratorSet gen = build_generator(ss);
  const Eigen::VectorXd p0 = ss.point_mass(initial_pool(g, cg->schema));
  for (auto _ : state) benchmark::DoNotOptimize(evolve_master(gen, p0, 2.0).sum());
  state.counters["states"] = static_cast<double>(ss.size());
}
BENCHMARK(BM_Uniformization)->Arg(8)->Arg(16)->Arg(32);

void BM_BuildGenerator(benchmark::State& state) {
  const Grammar g = load_grammar(kCorpus + "/abc.dg");
  auto cg = compile(g);
  StateBounds b;
  b.cap = state.range(0);
  const StateSpace ss = enumerate_states(cg, b);
  for (auto _ : state) benchmark::DoNotOptimize(build_generator(ss).h.nonZeros());
  state.counters["states"] = static_cast<double>(ss.size());
}
BENCHMARK(BM_BuildGenerator)->Arg(8)->Arg(16);

}  // namespace
BENCHMARK_MAIN();
