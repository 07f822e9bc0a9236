#include "dg/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "dg/ctmc.hpp"
#include "dg/dtmc.hpp"
#include "dg/exact.hpp"
#include "dg/hybrid.hpp"
#include "dg/parser.hpp"
#include "dg/reductions.hpp"

#ifndef DG_DEFAULT_EXAMPLES
#define DG_DEFAULT_EXAMPLES ""
#endif

namespace dg {

namespace fs = std::filesystem;

std::string resolve_input(const std::string& path) {
  if (fs::exists(path)) return path;
  std::vector<std::string> roots;
  if (const char* env = std::getenv("DG_EXAMPLES"); env && *env) roots.emplace_back(env);
  if (*DG_DEFAULT_EXAMPLES) roots.emplace_back(DG_DEFAULT_EXAMPLES);
  for (const auto& root : roots) {
    const fs::path full = fs::path(root) / path;
    if (fs::exists(full)) return full.string();
    const fs::path base = fs::path(root) / fs::path(path).filename();
    if (fs::exists(base)) return base.string();
  }
  throw Error(ErrorKind::Io, "cannot open " + path, path);
}

namespace {

struct UserError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string file;
  std::uint64_t seed = 1;
  std::size_t replicates = 1000;
  std::size_t jobs = 1;
  double t_end = -1.0;
  long long steps = -1;
  long long cap = -1;
  std::size_t space_limit = 2'000'000;
  double h = 0.0;
  std::string out;
  std::vector<std::string> observables;
  std::size_t grid_points = 11;
  std::string traces;
  bool cleanup = false;
  std::string kind;
  int n_max = 1;
};

void emit(const Common& c, std::ostream& out, const std::string& text) {
  if (c.out.empty()) {
    out << text;
    return;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot write " + c.out, c.out);
  f << text;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot write " + path, path);
  f << text;
}

/// Loads a grammar; graph rules are translated to plain rules.
Grammar load_runnable(const std::string& file) {
  const std::string path = resolve_input(file);
  Grammar g = load_grammar(path);
  if (!g.graph_rules.empty()) g = translate_graph_grammar(g);
  return g;
}

std::vector<Observable> observables_for(const Grammar& g, const std::vector<std::string>& specs) {
  std::vector<Observable> obs;
  if (specs.empty()) {
    for (const auto& t : g.types) obs.push_back(parse_observable(g, t.name));
    return obs;
  }
  for (const auto& s : specs) obs.push_back(parse_observable(g, s));
  return obs;
}

int cmd_validate(const Common& c, std::ostream& out, std::ostream& err) {
  const std::string path = resolve_input(c.file);
  ParseResult r = parse_grammar(read_file(path), path);
  if (!r.ok()) {
    for (const auto& e : r.errors) err << e.str() << "\n";
    return 1;
  }
  const std::size_t rules = r.grammar->rules.size() + r.grammar->graph_rules.size();
  const std::size_t types = r.grammar->types.size();
  out << "ok: " << rules << (rules == 1 ? " rule, " : " rules, ") << types << (types == 1 ? " type" : " types")
      << "\n";
  return 0;
}

int cmd_simulate(const Common& c, std::ostream& out) {
  if (c.t_end < 0.0) throw UserError("simulate needs --t-end");
  if (c.replicates < 1) throw UserError("--replicates must be at least 1");
  Grammar g = load_runnable(c.file);
  auto cg = compile(g);
  const PoolState p0 = initial_pool(g, cg->schema);
  const auto obs = observables_for(g, c.observables);
  const auto grid = uniform_grid(c.t_end, c.grid_points);
  std::string text;
  std::string traces;
  if (cg->has_solve()) {
    HybridModel model(cg);
    HybridEnsemble ens = run_hybrid_ensemble(model, p0, c.t_end, c.seed, c.replicates, c.jobs, obs, grid, c.h,
                                             !c.traces.empty());
    text = stats_table(ens.stats) + continuous_table(ens.continuous);
    for (const auto& t : ens.traces) traces += hybrid_trace_to_jsonl(model, t);
  } else {
    EnsembleRun run = run_ssa_ensemble(*cg, p0, c.t_end, c.seed, c.replicates, c.jobs, obs, grid, !c.traces.empty());
    text = stats_table(run.stats);
    for (const auto& t : run.traces) traces += trace_to_jsonl(*cg, t);
  }
  if (!c.traces.empty()) write_file(c.traces, traces);
  emit(c, out, text);
  return 0;
}

int cmd_discrete(const Common& c, std::ostream& out) {
  if (c.steps < 0) throw UserError("discrete needs --steps");
  Grammar g = load_runnable(c.file);
  auto cg = compile(g);
  const PoolState p0 = initial_pool(g, cg->schema);
  DiscreteResult res = simulate_discrete_weighted(*cg, p0, static_cast<std::size_t>(c.steps), c.replicates, c.seed,
                                                  c.jobs, !c.traces.empty());
  std::ostringstream os;
  os << "# weighted (globally normalized) after " << c.steps << " firings, " << res.replicates << " replicates, "
     << res.absorbed << " absorbed early\n";
  os << distribution_table(g, res.weighted);
  os << "# embedded (unweighted jump chain)\n";
  os << distribution_table(g, res.embedded);
  if (!c.traces.empty()) {
    std::string traces;
    for (const auto& t : res.trajectories) traces += trajectory_to_jsonl(*cg, t);
    write_file(c.traces, traces);
  }
  emit(c, out, os.str());
  return 0;
}

int cmd_exact(const Common& c, std::ostream& out) {
  if ((c.t_end >= 0.0) == (c.steps >= 0)) throw UserError("exact needs exactly one of --t-end and --steps");
  Grammar g = load_runnable(c.file);
  auto cg = compile(g);
  StateBounds bounds;
  if (c.cap >= 0) bounds.cap = c.cap;
  bounds.limit = c.space_limit;
  StateSpace ss = enumerate_states(cg, bounds);
  GeneratorSet gen = build_generator(ss);
  const Eigen::VectorXd p0 = ss.point_mass(initial_pool(g, cg->schema));
  const Eigen::VectorXd p = c.t_end >= 0.0 ? evolve_master(gen, p0, c.t_end)
                                           : evolve_discrete_exact(gen, p0, static_cast<std::size_t>(c.steps));
  Distribution d;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) d[ss.state(static_cast<std::size_t>(i)).counts()] = p[i];
  if (!c.traces.empty()) write_file(c.traces, matrix_triplets(gen.h));
  emit(c, out, distribution_table(g, d));
  return 0;
}

int cmd_fixpoint(const Common& c, std::ostream& out) {
  const std::string path = resolve_input(c.file);
  const auto model = least_model(parse_horn(read_file(path), path));
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (const auto& a : model) {
    os << (first ? "" : ", ") << a;
    first = false;
  }
  os << "}\n";
  emit(c, out, os.str());
  return 0;
}

int cmd_translate(const Common& c, std::ostream& out) {
  const std::string path = resolve_input(c.file);
  const std::string text = read_file(path);
  Grammar g;
  if (c.kind == "crn") g = import_crn(parse_crn(text, path));
  else if (c.kind == "logic") g = import_logic_program(parse_horn(text, path));
  else if (c.kind == "graph") g = translate_graph_grammar(parse_grammar_or_throw(text, path), c.cleanup);
  else if (c.kind == "string") g = lsystem_grammar(parse_lsystem(text, path));
  else throw UserError("translate expects crn, logic, graph or string");
  require_valid(g);
  emit(c, out, render_grammar(g));
  return 0;
}

int cmd_commutator(const Common& c, std::ostream& out) {
  if (c.n_max < 1) throw UserError("--n-max must be at least 1");
  emit(c, out, commutator_table(commutator_q(c.n_max)));
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stochastic parameterized grammar toolkit"};
  app.set_help_flag("--help", "print help");
  app.require_subcommand(1);
  Common c;

  auto add_seed = [&](CLI::App* s) {
    s->add_option("--seed", c.seed, "random seed");
    s->add_option("--replicates", c.replicates, "number of trajectories")->check(CLI::PositiveNumber);
    s->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
  };
  auto add_out = [&](CLI::App* s) { s->add_option("--out", c.out, "output file (default stdout)"); };

  auto* validate = app.add_subcommand("validate", "parse and validate a grammar");
  validate->add_option("file", c.file)->required();

  auto* simulate = app.add_subcommand("simulate", "continuous-time ensemble (SSA or hybrid)");
  simulate->add_option("file", c.file)->required();
  add_seed(simulate);
  simulate->add_option("--t-end,--t", c.t_end, "end time")->required();
  simulate->add_option("--h", c.h, "integrator step");
  simulate->add_option("--observable", c.observables, "name=Type(args), _ for wildcards");
  simulate->add_option("--grid", c.grid_points, "number of equally spaced report times");
  simulate->add_option("--traces", c.traces, "write JSON-lines traces here");
  add_out(simulate);

  auto* discrete = app.add_subcommand("discrete", "weighted discrete-time sampler");
  discrete->add_option("file", c.file)->required();
  add_seed(discrete);
  discrete->add_option("--steps", c.steps, "number of firings")->required();
  discrete->add_option("--traces", c.traces, "write JSON-lines trajectories here");
  add_out(discrete);

  auto* exact = app.add_subcommand("exact", "enumerate states and evolve exactly");
  exact->add_option("file", c.file)->required();
  exact->add_option("--t-end,--t", c.t_end, "evolution time (master equation)");
  exact->add_option("--steps", c.steps, "number of firings (discrete semantics)");
  exact->add_option("--cap", c.cap, "copy cap for unbounded types");
  exact->add_option("--space-limit", c.space_limit, "maximum number of states");
  exact->add_option("--matrix", c.traces, "write the generator as coordinate triplets here");
  add_out(exact);

  auto* fixpoint = app.add_subcommand("fixpoint", "least model of a Horn program");
  fixpoint->add_option("file", c.file)->required();
  add_out(fixpoint);

  auto* translate = app.add_subcommand("translate", "convert crn|logic|graph|string input to grammar text");
  translate->add_option("kind", c.kind)->required()->check(CLI::IsMember({"crn", "logic", "graph", "string"}));
  translate->add_option("file", c.file)->required();
  translate->add_flag("--cleanup", c.cleanup, "graph: add dangling-pointer cleanup rules");
  add_out(translate);

  auto* commutator = app.add_subcommand("commutator", "ladder-operator commutator report");
  commutator->add_option("n_max,--n-max", c.n_max, "copy cap")->required();
  add_out(commutator);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*validate) return cmd_validate(c, out, err);
    if (*simulate) return cmd_simulate(c, out);
    if (*discrete) return cmd_discrete(c, out);
    if (*exact) return cmd_exact(c, out);
    if (*fixpoint) return cmd_fixpoint(c, out);
    if (*translate) return cmd_translate(c, out);
    if (*commutator) return cmd_commutator(c, out);
  } catch (const UserError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    err << "error: " << (c.file.empty() ? std::string() : c.file + ": ") << to_string(e.kind()) << ": " << e.what()
        << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 2;
  }
  err << "error: no command\n";
  return 1;
}

}  // namespace dg
