#include "dg/ctmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dg/parser.hpp"

namespace dg {

// --------------------------------------------------------- PropensityCache

PropensityCache::PropensityCache(const CompiledGrammar& cg, std::size_t refresh_interval)
    : cg_(cg), refresh_interval_(std::max<std::size_t>(refresh_interval, 1)) {}

void PropensityCache::reset(const PoolState& p) {
  per_rule_.assign(cg_.rules.size(), 0.0);
  dirty_.assign(cg_.rules.size(), 0);
  total_ = 0.0;
  for (std::size_t i = 0; i < cg_.rules.size(); ++i) {
    per_rule_[i] = rule_propensity(cg_, i, p);
    total_ += per_rule_[i];
  }
  since_refresh_ = 0;
}

void PropensityCache::update(const PoolState& p, const Event& e) {
  if (++since_refresh_ >= refresh_interval_) {
    reset(p);
    return;
  }
  std::fill(dirty_.begin(), dirty_.end(), 0);
  auto mark = [&](const GroundTerm& t) {
    for (std::size_t r : cg_.rules_by_type[t.type]) dirty_[r] = 1;
  };
  for (const auto& t : e.consumed) mark(t);
  for (const auto& t : e.produced) mark(t);
  total_ = 0.0;
  for (std::size_t i = 0; i < per_rule_.size(); ++i) {
    if (dirty_[i]) per_rule_[i] = rule_propensity(cg_, i, p);
    total_ += per_rule_[i];
  }
}

void PropensityCache::refresh(const PoolState& p, const std::vector<std::size_t>& rules) {
  for (std::size_t r : rules) per_rule_[r] = rule_propensity(cg_, r, p);
  total_ = 0.0;
  for (double v : per_rule_) total_ += v;
}

std::size_t PropensityCache::select(double& u) const {
  std::size_t last = per_rule_.size();
  for (std::size_t i = 0; i < per_rule_.size(); ++i) {
    if (!(per_rule_[i] > 0.0)) continue;
    last = i;
    if (u < per_rule_[i]) return i;
    u -= per_rule_[i];
  }
  // roundoff beyond the total lands in the last enabled rule
  u = per_rule_[last] * 0.5;
  return last;
}

// -------------------------------------------------------------------- SSA

namespace {

void require_jump_only(const CompiledGrammar& cg) {
  if (cg.has_solve())
    throw Error(ErrorKind::SolveInStochasticGrammar,
                "grammar has solving clauses; use the hybrid simulator",
                cg.g().rules[cg.solve_rules.front()].id);
}

}  // namespace

std::optional<SsaStep> step_ssa(const CompiledGrammar& cg, const PoolState& p, RngStream& rng) {
  require_jump_only(cg);
  PropensityCache cache(cg);
  cache.reset(p);
  if (!(cache.total() > 0.0)) return std::nullopt;
  SsaStep s;
  s.total = cache.total();
  s.dt = rng.exponential(s.total);
  double u = rng.uniform() * s.total;
  const std::size_t r = cache.select(u);
  s.event = fire_rule(cg, r, p, u, rng);
  return s;
}

EventTrace simulate_ssa(const CompiledGrammar& cg, const PoolState& p0, double t_end, RngStream& rng,
                        const SsaOptions& opts) {
  require_jump_only(cg);
  if (!opts.grid.empty() && opts.grid.back() > t_end)
    throw Error(ErrorKind::GridBeyondEnd, "time grid extends past t_end");
  EventTrace trace;
  trace.seed = rng.seed();
  trace.replicate = rng.stream();
  trace.end_time = t_end;
  trace.initial = p0;
  PoolState p = p0;
  PropensityCache cache(cg, opts.refresh_interval);
  cache.reset(p);
  std::size_t next_grid = 0;
  double t = 0.0;
  while (true) {
    if (!(cache.total() > 0.0)) {
      trace.absorbed = true;
      break;
    }
    const double dt = rng.exponential(cache.total());
    if (t + dt > t_end) break;
    t += dt;
    while (next_grid < opts.grid.size() && opts.grid[next_grid] < t) {
      if (opts.on_grid) opts.on_grid(next_grid, p);
      ++next_grid;
    }
    double u = rng.uniform() * cache.total();
    const std::size_t r = cache.select(u);
    Event e = fire_rule(cg, r, p, u, rng);
    e.time = t;
    e.step = static_cast<std::int64_t>(trace.events.size());
    apply_event_in_place(p, e);
    cache.update(p, e);
    if (opts.record_events) trace.events.push_back(std::move(e));
  }
  while (next_grid < opts.grid.size()) {
    if (opts.on_grid) opts.on_grid(next_grid, p);
    ++next_grid;
  }
  trace.final_state = p;
  return trace;
}

// ------------------------------------------------------------ observables

std::int64_t Observable::eval(const PoolState& p) const {
  std::int64_t total = 0;
  auto [b, e] = p.type_range(type);
  for (auto it = b; it != e; ++it) {
    bool ok = true;
    for (std::size_t i = 0; i < pattern.size() && ok; ++i)
      if (pattern[i]) ok = it->first.args[i] == *pattern[i];
    if (ok) total += it->second;
  }
  return total;
}

Observable parse_observable(const Grammar& g, const std::string& spec) {
  Observable obs;
  std::string body = spec;
  const auto eq = spec.find('=');
  if (eq != std::string::npos) {
    obs.name = spec.substr(0, eq);
    body = spec.substr(eq + 1);
  } else {
    obs.name = spec;
  }
  const auto open = body.find('(');
  const std::string type = body.substr(0, open);
  auto idx = g.type_index(type);
  if (!idx) throw Error(ErrorKind::UnknownIdentifier, "observable names unknown type '" + type + "'");
  obs.type = *idx;
  const TypeDecl& decl = g.types[*idx];
  obs.pattern.assign(decl.signature.size(), std::nullopt);
  if (open != std::string::npos) {
    // substitute wildcards with a placeholder the ground-term parser accepts
    std::string args = body.substr(open + 1, body.rfind(')') - open - 1);
    std::vector<std::string> parts;
    std::string cur;
    for (char c : args) {
      if (c == ',') {
        parts.push_back(cur);
        cur.clear();
      } else if (c != ' ') {
        cur += c;
      }
    }
    parts.push_back(cur);
    if (parts.size() != decl.signature.size())
      throw Error(ErrorKind::ArityMismatch, "observable " + obs.name + " has the wrong arity");
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (parts[i] == "_") continue;
      std::string probe = type + "(";
      for (std::size_t j = 0; j < parts.size(); ++j) {
        if (j) probe += ",";
        if (j == i) {
          probe += parts[j];
        } else {
          const Space& s = g.slot_space(decl, j);
          probe += s.kind == SpaceKind::Real ? "0" : s.render_value(s.finite() ? s.domain().front() : Value::integer(0));
        }
      }
      probe += ")";
      obs.pattern[i] = parse_ground_term(g, probe).args[i];
    }
  }
  return obs;
}

EnsembleStats ensemble_stats(const std::vector<EventTrace>& traces, const Observable& obs,
                             const std::vector<double>& grid) {
  EnsembleAccumulator acc({obs}, grid);
  for (const auto& tr : traces) {
    if (!grid.empty() && grid.back() > tr.end_time)
      throw Error(ErrorKind::GridBeyondEnd, "grid point " + std::to_string(grid.back()) + " is past t_end");
    PoolState p = tr.initial;
    std::size_t k = 0;
    for (const auto& e : tr.events) {
      while (k < grid.size() && grid[k] < e.time) acc.add(k++, p);
      apply_event_in_place(p, e);
    }
    while (k < grid.size()) acc.add(k++, p);
    acc.finish_replicate();
  }
  auto s = acc.stats();
  return s.front();
}

EnsembleAccumulator::EnsembleAccumulator(std::vector<Observable> obs, std::vector<double> grid)
    : obs_(std::move(obs)), grid_(std::move(grid)) {
  counts_.assign(obs_.size(), std::vector<std::map<std::int64_t, std::int64_t>>(grid_.size()));
}

void EnsembleAccumulator::add(std::size_t k, const PoolState& p) {
  for (std::size_t o = 0; o < obs_.size(); ++o) ++counts_[o][k][obs_[o].eval(p)];
}

void EnsembleAccumulator::merge(const EnsembleAccumulator& other) {
  for (std::size_t o = 0; o < obs_.size(); ++o)
    for (std::size_t k = 0; k < grid_.size(); ++k)
      for (const auto& [v, n] : other.counts_[o][k]) counts_[o][k][v] += n;
  replicates_ += other.replicates_;
}

std::vector<EnsembleStats> EnsembleAccumulator::stats() const {
  std::vector<EnsembleStats> out;
  for (std::size_t o = 0; o < obs_.size(); ++o) {
    EnsembleStats s;
    s.observable = obs_[o].name;
    s.grid = grid_;
    s.replicates = replicates_;
    for (std::size_t k = 0; k < grid_.size(); ++k) {
      std::int64_t n = 0;
      for (const auto& [v, c] : counts_[o][k]) n += c;
      std::map<std::int64_t, double> dist;
      double mean = 0.0, sq = 0.0;
      for (const auto& [v, c] : counts_[o][k]) {
        const double pr = static_cast<double>(c) / static_cast<double>(n);
        dist[v] = pr;
        mean += pr * static_cast<double>(v);
        sq += pr * static_cast<double>(v) * static_cast<double>(v);
      }
      s.distribution.push_back(std::move(dist));
      s.mean.push_back(mean);
      s.variance.push_back(std::max(0.0, sq - mean * mean));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<double> uniform_grid(double t_end, std::size_t points) {
  std::vector<double> g;
  if (points == 0) return g;
  if (points == 1) return {t_end};
  for (std::size_t i = 0; i < points; ++i)
    g.push_back(t_end * static_cast<double>(i) / static_cast<double>(points - 1));
  g.back() = t_end;
  return g;
}

EnsembleRun run_ssa_ensemble(const CompiledGrammar& cg, const PoolState& p0, double t_end, std::uint64_t seed,
                             std::size_t replicates, std::size_t jobs, const std::vector<Observable>& obs,
                             const std::vector<double>& grid, bool keep_traces) {
  require_jump_only(cg);
  jobs = std::max<std::size_t>(1, std::min(jobs, std::max<std::size_t>(replicates, 1)));
  std::vector<EnsembleAccumulator> accs(jobs, EnsembleAccumulator(obs, grid));
  EnsembleRun run;
  run.finals.resize(replicates);
  if (keep_traces) run.traces.resize(replicates);
  std::vector<std::exception_ptr> errors(jobs);

  auto worker = [&](std::size_t w) {
    try {
      for (std::size_t r = w; r < replicates; r += jobs) {
        RngStream rng(seed, r);
        SsaOptions opts;
        opts.record_events = keep_traces;
        opts.grid = grid;
        opts.on_grid = [&](std::size_t k, const PoolState& p) { accs[w].add(k, p); };
        EventTrace tr = simulate_ssa(cg, p0, t_end, rng, opts);
        accs[w].finish_replicate();
        run.finals[r] = tr.final_state;
        if (keep_traces) run.traces[r] = std::move(tr);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (jobs == 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < jobs; ++w) threads.emplace_back(worker, w);
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (std::size_t w = 1; w < jobs; ++w) accs[0].merge(accs[w]);
  run.stats = accs[0].stats();
  return run;
}

// ----------------------------------------------------------------- output

namespace {

nlohmann::json binding_value(const Space& s, const Value& v) {
  if (s.kind == SpaceKind::Enumeration && s.contains(v)) return s.values[static_cast<std::size_t>(v.as_integer())];
  if (v.is_real()) return v.as_real();
  return v.as_integer();
}

nlohmann::json pool_json(const Grammar& g, const PoolState& p) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [t, n] : p.counts()) arr.push_back(nlohmann::json::array({render_ground(g, t), n}));
  return arr;
}

}  // namespace

std::string trace_to_jsonl(const CompiledGrammar& cg, const EventTrace& trace) {
  const Grammar& g = cg.g();
  std::ostringstream os;
  nlohmann::ordered_json header;
  header["grammar"] = trace.grammar_id;
  header["seed"] = trace.seed;
  header["replicate"] = trace.replicate;
  header["end_time"] = trace.end_time;
  header["initial"] = pool_json(g, trace.initial);
  header["next_oid"] = trace.initial.next_oid();
  os << header.dump() << "\n";
  for (const auto& e : trace.events) {
    const CompiledRule& r = cg.rules.at(e.rule_index);
    nlohmann::ordered_json rec;
    rec["t"] = e.time;
    rec["rule"] = e.rule;
    nlohmann::ordered_json b = nlohmann::ordered_json::object();
    for (const auto& v : r.vars) {
      const Value* val = e.theta.find(v.name);
      if (val) b[v.name] = binding_value(*v.space, *val);
    }
    rec["bindings"] = b;
    nlohmann::json consumed = nlohmann::json::array(), produced = nlohmann::json::array();
    for (const auto& t : e.consumed) consumed.push_back(render_ground(g, t));
    for (const auto& t : e.produced) produced.push_back(render_ground(g, t));
    rec["consumed"] = consumed;
    rec["produced"] = produced;
    os << rec.dump() << "\n";
  }
  nlohmann::ordered_json footer;
  footer["end"] = true;
  footer["absorbed"] = trace.absorbed;
  footer["events"] = trace.events.size();
  footer["final"] = pool_json(g, trace.final_state);
  os << footer.dump() << "\n";
  return os.str();
}

PoolState replay_trace(const EventTrace& trace) {
  PoolState p = trace.initial;
  double last = -std::numeric_limits<double>::infinity();
  for (const auto& e : trace.events) {
    if (!(e.time > last) || e.time > trace.end_time)
      throw Error(ErrorKind::InvalidArgument, "trace events are not strictly increasing within [0, end_time]");
    last = e.time;
    apply_event_in_place(p, e);
  }
  return p;
}

std::string stats_table(const std::vector<EnsembleStats>& stats) {
  std::ostringstream os;
  os.precision(17);
  os << "time\tobservable\tmean\tvariance\treplicates\n";
  for (const auto& s : stats)
    for (std::size_t k = 0; k < s.grid.size(); ++k)
      os << s.grid[k] << "\t" << s.observable << "\t" << s.mean[k] << "\t" << s.variance[k] << "\t" << s.replicates
         << "\n";
  return os.str();
}

}  // namespace dg
