// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Tolerances and sizes are fixed here, not configurable.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "dg/cli.hpp"
#include "dg/exact.hpp"
#include "dg/hybrid.hpp"
#include "dg/parser.hpp"
#include "dg/reductions.hpp"
#include "oracles.hpp"

using namespace dg;
namespace fs = std::filesystem;

namespace {

const std::string kCorpus = DG_CORPUS_DIR;

struct Verdict {
  bool pass = true;
  std::string detail;
};

class Report {
 public:
  void fail(const std::string& why) {
    out_.pass = false;
    add(why);
  }
  void check(bool ok, const std::string& what) {
    if (!ok) fail(what);
  }
  void add(const std::string& s) { out_.detail += (out_.detail.empty() ? "" : "; ") + s; }
  Verdict take() { return out_; }

 private:
  Verdict out_;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::shared_ptr<const CompiledGrammar> load(const std::string& name, Grammar* g_out = nullptr) {
  Grammar g = load_grammar(kCorpus + "/" + name);
  if (g_out) *g_out = g;
  return compile(g);
}

// ---------------------------------------------------------------- checks

Verdict ladder_commutator() {
  Report r;
  double worst = 0.0;
  for (int n = 1; n <= 8; ++n) {
    const CommutatorReport c = commutator_q(n);
    worst = std::max(worst, c.residual);
    r.check(c.residual <= 1e-12, "residual " + fmt(c.residual) + " at n_max=" + std::to_string(n));
    r.check(c.degree <= n - 1, "degree " + std::to_string(c.degree) + " at n_max=" + std::to_string(n));
    for (int i = 0; i < n; ++i)
      r.check(std::abs(c.commutator(i, i) - 1.0) <= 1e-12, "diagonal entry " + std::to_string(i) + " != 1");
    if (n == 1) r.check(c.degree == 0 && c.q.size() == 1 && c.q[0] == -2.0, "Q != -2 at n_max=1");
  }
  r.add("max residual " + fmt(worst));
  return r.take();
}

struct RandomCase {
  std::string text;
  std::shared_ptr<const CompiledGrammar> cg;
  StateSpace ss;
};

std::vector<RandomCase> random_cases() {
  std::vector<RandomCase> out;
  std::mt19937_64 rng(20240611);
  while (out.size() < 50) {
    RandomCase c;
    c.text = dgtest::random_small_grammar(rng);
    c.cg = compile(parse_grammar_or_throw(c.text, "<random>"));
    c.ss = enumerate_states(c.cg);
    out.push_back(std::move(c));
  }
  return out;
}

Verdict probability_conservation(const std::vector<RandomCase>& cases) {
  Report r;
  double worst = 0.0;
  std::size_t states = 0;
  for (const auto& c : cases) {
    const GeneratorSet gen = build_generator(c.ss);
    states += c.ss.size();
    for (int k = 0; k < gen.h.outerSize(); ++k) {
      double sum = 0.0;
      for (SparseMatrix::InnerIterator it(gen.h, k); it; ++it) {
        sum += it.value();
        if (it.row() != it.col() && it.value() < 0.0) r.fail("negative off-diagonal in\n" + c.text);
      }
      worst = std::max(worst, std::abs(sum));
    }
  }
  r.check(worst <= 1e-12, "column sum " + fmt(worst));
  r.add("50 grammars, " + std::to_string(states) + " states, max |column sum| " + fmt(worst));
  return r.take();
}

Verdict matcher_operator(const std::vector<RandomCase>& cases) {
  Report r;
  double worst = 0.0;
  for (const auto& c : cases) {
    for (std::size_t ri = 0; ri < c.cg->rules.size(); ++ri) {
      const SparseMatrix o = build_rule_operator(c.ss, ri);
      for (std::size_t j = 0; j < c.ss.size(); ++j) {
        double col = 0.0;
        for (SparseMatrix::InnerIterator it(o, static_cast<Eigen::Index>(j)); it; ++it) col += it.value();
        const double prop = rule_propensity(*c.cg, ri, c.ss.state(j));
        worst = std::max(worst, std::abs(col - prop));
      }
    }
  }
  r.check(worst <= 1e-12, "max deviation " + fmt(worst));
  r.add("max |propensity - column sum| " + fmt(worst));
  return r.take();
}

Distribution empirical(const std::vector<PoolState>& finals) {
  Distribution d;
  for (const auto& p : finals) d[p.counts()] += 1.0 / static_cast<double>(finals.size());
  return d;
}

Verdict ssa_vs_master() {
  Report r;
  {
    Grammar g;
    auto cg = load("decay.dg", &g);
    const auto run = run_ssa_ensemble(*cg, initial_pool(g, cg->schema), 1.0, 11, 20000, 1, {}, {}, false);
    std::size_t extinct = 0;
    for (const auto& p : run.finals) extinct += p.empty();
    const double phat = static_cast<double>(extinct) / 20000.0;
    r.check(std::abs(phat - 0.632121) <= 0.012, "decay P(extinct) " + fmt(phat));
    r.add("decay P(extinct) " + fmt(phat));
  }
  {
    Grammar g;
    auto cg = load("birth_death.dg", &g);
    StateBounds b;
    b.cap = 12;
    const StateSpace ss = enumerate_states(cg, b);
    const GeneratorSet gen = build_generator(ss);
    const PoolState p0 = initial_pool(g, cg->schema);
    const Distribution exact = ss.to_distribution(evolve_master(gen, ss.point_mass(p0), 10.0));
    const auto run = run_ssa_ensemble(*cg, p0, 10.0, 12, 20000, 1, {}, {}, false);
    const double d = tv_distance(empirical(run.finals), exact);
    r.check(d <= 0.02, "birth-death TV " + fmt(d));
    r.add("birth-death TV " + fmt(d));
  }
  return r.take();
}

Verdict discrete_semantics() {
  Report r;
  Grammar g;
  auto cg = load("three_state.dg", &g);
  const StateSpace ss = enumerate_states(cg);
  const GeneratorSet gen = build_generator(ss);
  const PoolState p0 = initial_pool(g, cg->schema);
  const Distribution exact = ss.to_distribution(evolve_discrete_exact(gen, ss.point_mass(p0), 2));
  const DiscreteResult res = simulate_discrete_weighted(*cg, p0, 2, 50000, 13);
  const double tv = tv_distance(res.weighted, exact);
  const double l1 = l1_distance(res.embedded, exact);
  r.check(tv <= 0.02, "weighted TV " + fmt(tv));
  r.check(l1 > 0.05, "embedded L1 " + fmt(l1));
  r.add("weighted TV " + fmt(tv) + ", embedded L1 " + fmt(l1));
  return r.take();
}

Verdict small_time_limit() {
  Report r;
  Grammar g;
  auto cg = load("three_state.dg", &g);
  const StateSpace ss = enumerate_states(cg);
  const GeneratorSet gen = build_generator(ss);
  // The oracle chain is written down by hand from the grammar text.
  dgtest::Chain chain{{{0, 1, 3}, {1, 0, 0}, {0, 9, 0}}};
  std::vector<std::size_t> idx;
  for (int i = 0; i < 3; ++i) {
    PoolState p(cg->schema);
    p.add(GroundTerm{0, {Value(std::int64_t{i})}});
    idx.push_back(*ss.index_of(p));
  }
  auto to_chain = [&](const Eigen::VectorXd& v) {
    std::vector<double> out;
    for (std::size_t i : idx) out.push_back(v[static_cast<Eigen::Index>(i)]);
    return out;
  };
  const std::size_t s = 2;
  const auto discrete = to_chain(evolve_discrete_exact(gen, ss.point_mass(initial_pool(g, cg->schema)), s));
  const auto weights = dgtest::path_weight_distribution(chain, 0, s);
  r.check(dgtest::tv(discrete, weights) <= 1e-12, "discrete-exact differs from path weights");
  std::vector<double> errs;
  for (double t : {1e-2, 1e-3, 1e-4}) {
    const auto oracle = dgtest::path_sum_conditioned(chain, 0, t, s);
    const auto lib = to_chain(evolve_conditioned(gen, ss.point_mass(initial_pool(g, cg->schema)), t, s));
    r.check(dgtest::tv(oracle, lib) <= 1e-9, "conditioned evolution off the path sum at t=" + fmt(t));
    errs.push_back(dgtest::tv(oracle, discrete));
  }
  const double o1 = std::log10(errs[0] / errs[1]);
  const double o2 = std::log10(errs[1] / errs[2]);
  r.check(std::abs(o1 - 1.0) <= 0.1 && std::abs(o2 - 1.0) <= 0.1, "error not linear in t");
  r.add("TV " + fmt(errs[0]) + ", " + fmt(errs[1]) + ", " + fmt(errs[2]) + "; decade slopes " + fmt(o1) + ", " +
        fmt(o2));
  return r.take();
}

Verdict crn_reduction() {
  Report r;
  const ReactionNetwork net = parse_crn(read_file(kCorpus + "/abc.crn"));
  auto cg = compile(import_crn(net));
  dgtest::MassAction m;
  m.species = 3;
  m.reactions = {{{1, 1, 0}, {0, 0, 1}, 0.5}, {{2, 0, 0}, {0, 1, 0}, 0.25}};
  std::size_t compared = 0;
  for (std::int64_t cap : {1, 2, 3, 4}) {
    m.cap = cap;
    StateBounds b;
    b.cap = cap;
    const StateSpace ss = enumerate_states(cg, b);
    const Eigen::MatrixXd h(build_generator(ss).h);
    // Occupations in A, B, C order regardless of the slot order.
    std::vector<std::size_t> slot;
    for (const char* sp : {"A", "B", "C"}) slot.push_back(*ss.slot_of(GroundTerm{*cg->g().type_index(sp), {}}));
    std::vector<std::vector<std::int64_t>> states;
    for (std::size_t i = 0; i < ss.size(); ++i) {
      const auto occ = ss.occupation(i);
      states.push_back({occ[slot[0]], occ[slot[1]], occ[slot[2]]});
    }
    const auto ref = dgtest::mass_action_generator(m, states);
    for (std::size_t i = 0; i < ss.size(); ++i)
      for (std::size_t j = 0; j < ss.size(); ++j) {
        ++compared;
        if (h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) != ref[i][j]) {
          r.fail("entry (" + std::to_string(i) + "," + std::to_string(j) + ") at cap " + std::to_string(cap));
          return r.take();
        }
      }
  }
  r.add(std::to_string(compared) + " entries equal at caps 1-4");
  return r.take();
}

Verdict logic_programs() {
  Report r;
  std::mt19937_64 rng(777);
  for (int i = 0; i < 100; ++i) {
    const HornProgram prog = dgtest::random_horn(rng, 12);
    if (least_model(prog) != dgtest::naive_fixpoint(prog)) r.fail("least model differs on program " + std::to_string(i));
  }
  for (int i = 0; i < 20; ++i) {
    const HornProgram prog = dgtest::random_horn(rng, 12);
    const Grammar g = import_logic_program(prog);
    auto cg = compile(g);
    RngStream stream(static_cast<std::uint64_t>(i) + 1, 0);
    const EventTrace tr = simulate_ssa(*cg, initial_pool(g, cg->schema), 1e12, stream, {.record_events = false});
    std::set<std::string> atoms;
    for (const auto& [t, n] : tr.final_state.counts()) atoms.insert(g.types[t.type].name);
    if (!tr.absorbed || atoms != dgtest::naive_fixpoint(prog)) r.fail("absorbing pool differs on program " + std::to_string(i));
  }
  r.add("100 fixpoints, 20 absorbing pools");
  return r.take();
}

Verdict string_reduction() {
  Report r;
  std::vector<LSystem> systems{parse_lsystem(read_file(kCorpus + "/fibonacci.lsys"))};
  std::mt19937_64 rng(4242);
  std::size_t derivations = 0, null_checks = 0;
  for (std::size_t k = 0; derivations < 50; ++k) {
    if (k >= systems.size()) systems.push_back(dgtest::random_lsystem(rng));
    const LSystem& ls = systems[k];
    const Grammar g = lsystem_grammar(ls);
    auto cg = compile(g);
    std::string s = ls.axiom;
    for (int gen = 0; gen < 8 && derivations < 50; ++gen) {
      const std::string expect = lsystem_step(ls, s);
      if (expect.size() > 30 || s.empty()) break;
      PoolState p = encode_string(g, std::string(1, kHeadSymbol) + s, cg->schema);
      RngStream stream(k, static_cast<std::uint64_t>(gen));
      std::size_t steps = 0;
      bool single = true;
      while (auto st = step_ssa(*cg, p, stream)) {
        single = single && st->total == 1.0;
        apply_event_in_place(p, st->event);
        ++steps;
      }
      const std::string got = decode_string(g, p, std::string(1, kHeadSymbol));
      r.check(single, "more than one match in a step of " + ls.axiom);
      r.check(got == expect, "derived '" + got + "' expected '" + expect + "'");
      std::size_t deleted = 0;
      for (char c : s) deleted += ls.productions.count(c) && ls.productions.at(c).empty();
      if (deleted) ++null_checks;
      std::int64_t nulls = 0;
      const auto null_type = *g.type_index(kNullType);
      for (auto [it, end] = p.type_range(null_type); it != end; ++it) nulls += it->second;
      // One Null per deleted cell, plus the retired head when a cell remains.
      r.check(nulls == static_cast<std::int64_t>(deleted + (expect.empty() ? 0 : 1)), "Null count mismatch");
      ++derivations;
      s = expect;
    }
  }
  // A rule that only deletes a node must emit its Null marker.
  const Grammar del = translate_graph_grammar(
      parse_grammar_or_throw("type N(int) : fanout 1;\ngraph rule drop: x := N(v; [nil]) -> with 1;\ninit N(3);\n"));
  auto cg = compile(del);
  RngStream stream(1, 0);
  const EventTrace tr = simulate_ssa(*cg, initial_pool(del, cg->schema), 1e9, stream);
  const auto ntype = *del.type_index(kNullType);
  r.check(tr.events.size() == 1 && tr.final_state.copy_number(GroundTerm{ntype, {Value(std::int64_t{0})}}) == 1,
          "pure deletion did not leave Null(0)");
  r.add(std::to_string(derivations) + " derivations over " + std::to_string(systems.size()) + " L-systems, " +
        std::to_string(null_checks) + " with deletions");
  return r.take();
}

Verdict hybrid_ode() {
  Report r;
  const Grammar g = parse_grammar_or_throw("type X(real);\nrule relax: X(x) -> X(x) solving dx/dt = -x;\n");
  auto cg = compile(g);
  HybridModel model(cg);
  auto x1 = [&](double h) {
    std::vector<ContinuousTerm> terms{{GroundTerm{0, {Value(2.0)}}, 1}};
    integrate_drift(model, terms, 1.0, h);
    return terms[0].term.args[0].as_real();
  };
  const double exact = 2.0 * std::exp(-1.0);
  const double e3 = std::abs(x1(1e-3) - exact);
  r.check(e3 <= 1e-8, "RK4 error " + fmt(e3) + " at h=1e-3");
  // Least-squares slope of log error against log h.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const std::vector<double> hs = {1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
  for (double h : hs) {
    const double x = std::log10(h), y = std::log10(std::abs(x1(h) - exact));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(hs.size());
  const double order = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  r.check(std::abs(order - 4.0) <= 0.3, "order " + fmt(order));
  r.add("error " + fmt(e3) + " at h=1e-3, order " + fmt(order));

  // A grammar without solving clauses through the hybrid driver.
  {
    Grammar mg;
    auto dcg = load("macrophage.dg", &mg);
    HybridModel jump(dcg);
    bool same = true;
    for (std::uint64_t rep = 0; rep < 20; ++rep) {
      RngStream a(5, rep), b(5, rep);
      const PoolState p0 = initial_pool(mg, dcg->schema);
      const EventTrace ssa = simulate_ssa(*dcg, p0, 30.0, a);
      HybridTrace hyb = simulate_hybrid(jump, p0, 30.0, b);
      same = same && trace_to_jsonl(*dcg, ssa) == trace_to_jsonl(*dcg, hyb.trace);
    }
    r.check(same, "jump-only hybrid trace differs from SSA");
  }

  // Reset model against a plain fixed-step simulation: per step of length
  // dt the reset fires with probability 1 - e^{-dt}, otherwise x follows
  // the exact flow. The closed form (1 - e^{-2T})/2 + e^{-2T} is reported.
  {
    Grammar rg;
    auto rcg = load("decay_reset.dg", &rg);
    HybridModel reset(rcg);
    const double T = 4.0;
    const std::size_t reps = 20000;
    const HybridEnsemble ens =
        run_hybrid_ensemble(reset, initial_pool(rg, rcg->schema), T, 21, reps, 1, {}, {T}, 1e-2, false);
    const ContinuousStats& cs = ens.continuous.at(0);
    const double mean = cs.mean.back();
    const double var = cs.variance.back() / static_cast<double>(cs.samples.back());

    std::mt19937_64 gen(31337);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double dt = 1e-3;
    const auto steps = static_cast<std::size_t>(std::llround(T / dt));
    const double p_reset = -std::expm1(-dt), decay = std::exp(-dt);
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < reps; ++i) {
      double x = 1.0;
      for (std::size_t k = 0; k < steps; ++k) x = u(gen) < p_reset ? 1.0 : x * decay;
      s += x;
      s2 += x * x;
    }
    const double n = static_cast<double>(reps);
    const double omean = s / n;
    const double ovar = (s2 / n - omean * omean) / n;
    const double sigma = std::sqrt(var + ovar);
    const double closed = 0.5 * (1.0 - std::exp(-2.0 * T)) + std::exp(-2.0 * T);
    r.check(std::abs(mean - omean) <= 3.0 * sigma, "reset mean " + fmt(mean) + " vs oracle " + fmt(omean));
    r.add("reset mean " + fmt(mean) + " vs oracle " + fmt(omean) + " (sigma " + fmt(sigma) + ", closed form " +
          fmt(closed) + ")");
  }
  return r.take();
}

std::string cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (code != 0) throw std::runtime_error("dg " + args.front() + " failed: " + err.str());
  return out.str();
}

std::string slurp(const fs::path& p) { return read_file(p.string()); }

Verdict determinism_roundtrip() {
  Report r;
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(kCorpus)) {
    if (e.path().extension() != ".dg") continue;
    ++files;
    const Grammar g = load_grammar(e.path().string());
    const std::string text = render_grammar(g);
    const Grammar back = parse_grammar_or_throw(text, e.path().string());
    r.check(structurally_equal(g, back) && render_grammar(back) == text, "round trip fails on " + e.path().string());
  }
  const fs::path tmp = fs::temp_directory_path() / ("dg-accept-" + std::to_string(::getpid()));
  fs::create_directories(tmp);
  auto run_twice = [&](std::vector<std::string> args, const std::string& side, const std::string& flag = "--traces") {
    std::string outs[2], sides[2];
    for (int k = 0; k < 2; ++k) {
      auto a = args;
      const fs::path sp = tmp / (side + std::to_string(k));
      if (!side.empty()) {
        a.push_back(flag);
        a.push_back(sp.string());
      }
      outs[k] = cli(a);
      if (!side.empty()) sides[k] = slurp(sp);
    }
    r.check(outs[0] == outs[1] && sides[0] == sides[1], "nondeterministic: dg " + args.front() + " " + args[1]);
    return outs[0];
  };
  const std::string c = kCorpus + "/";
  const std::string one = run_twice({"simulate", c + "macrophage.dg", "--t-end", "5", "--replicates", "50", "--seed", "9"}, "trace");
  const std::string four = cli({"simulate", c + "macrophage.dg", "--t-end", "5", "--replicates", "50", "--seed", "9", "--jobs", "4"});
  r.check(one == four, "simulate output depends on --jobs");
  run_twice({"simulate", c + "decay_reset.dg", "--t-end", "2", "--replicates", "40", "--seed", "3", "--jobs", "3"}, "hyb");
  run_twice({"discrete", c + "abc.dg", "--steps", "2", "--replicates", "500", "--seed", "4", "--jobs", "2"}, "disc");
  run_twice({"exact", c + "abc.dg", "--t-end", "1", "--cap", "4"}, "matrix", "--matrix");
  fs::remove_all(tmp);
  r.add(std::to_string(files) + " corpus grammars round-trip; seeded runs byte-identical");
  return r.take();
}

}  // namespace

int main() {
  std::vector<RandomCase> cases;
  try {
    cases = random_cases();
  } catch (const std::exception& e) {
    std::cerr << "random grammar generation failed: " << e.what() << "\n";
  }
  struct Criterion {
    const char* name;
    double limit_s;  // 0: no runtime bound
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {"ladder-commutator", 1.0, ladder_commutator},
      {"probability-conservation", 10.0, [&] { return probability_conservation(cases); }},
      {"matcher-operator-equivalence", 0.0, [&] { return matcher_operator(cases); }},
      {"ssa-vs-master-equation", 60.0, ssa_vs_master},
      {"discrete-time-semantics", 60.0, discrete_semantics},
      {"small-time-limit", 0.0, small_time_limit},
      {"crn-reduction", 0.0, crn_reduction},
      {"logic-programs", 0.0, logic_programs},
      {"graph-string-reduction", 0.0, string_reduction},
      {"hybrid-ode", 120.0, hybrid_ode},
      {"determinism-roundtrip", 0.0, determinism_roundtrip},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict o;
    try {
      if (cases.size() < 50 && (c.name == std::string("probability-conservation") ||
                                c.name == std::string("matcher-operator-equivalence")))
        throw std::runtime_error("no random grammars");
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0.0 && secs > c.limit_s) {
      o.pass = false;
      o.detail += "; over the " + fmt(c.limit_s) + " s budget";
    }
    failed += !o.pass;
    std::printf("%s  %-30s %7.2f s  %s\n", o.pass ? "PASS" : "FAIL", c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
