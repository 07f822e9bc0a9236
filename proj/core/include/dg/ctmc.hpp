#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dg/match.hpp"

namespace dg {

struct EventTrace {
  std::string grammar_id;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
  double end_time = 0.0;
  PoolState initial;
  std::vector<Event> events;
  PoolState final_state;
  bool absorbed = false;
};

struct SsaStep {
  double dt = 0.0;
  double total = 0.0;
  Event event;
};

/// Direct-method propensity bookkeeping shared by the jump simulators.
/// Rules whose types were touched by the last event are recomputed; every
/// `refresh_interval` events the whole table is rebuilt.
class PropensityCache {
 public:
  explicit PropensityCache(const CompiledGrammar& cg, std::size_t refresh_interval = 10000);
  void reset(const PoolState& p);
  void update(const PoolState& p, const Event& e);
  /// Recomputes the listed rules only.
  void refresh(const PoolState& p, const std::vector<std::size_t>& rules);
  double total() const { return total_; }
  const std::vector<double>& per_rule() const { return per_rule_; }
  /// Rule index holding cumulative position u in [0, total); u is rewritten
  /// to the offset inside that rule.
  std::size_t select(double& u) const;

 private:
  const CompiledGrammar& cg_;
  std::size_t refresh_interval_;
  std::size_t since_refresh_ = 0;
  std::vector<double> per_rule_;
  double total_ = 0.0;
  std::vector<char> dirty_;
};

/// One Gillespie step: exponential waiting time, then rule and match
/// selection, then output kernels. nullopt when absorbed (total rate 0).
std::optional<SsaStep> step_ssa(const CompiledGrammar& cg, const PoolState& p, RngStream& rng);

struct SsaOptions {
  bool record_events = true;
  /// Called with each grid index once simulated time has passed it.
  std::vector<double> grid;
  std::function<void(std::size_t, const PoolState&)> on_grid;
  std::size_t refresh_interval = 10000;
};

/// Runs to t_end or absorption. Throws SolveInStochasticGrammar on a
/// grammar with solving clauses.
EventTrace simulate_ssa(const CompiledGrammar& cg, const PoolState& p0, double t_end, RngStream& rng,
                        const SsaOptions& opts = {});

/// Counts pool terms matching a pattern; `_` slots are wildcards.
struct Observable {
  std::string name;
  std::uint32_t type = 0;
  std::vector<std::optional<Value>> pattern;
  std::int64_t eval(const PoolState& p) const;
};
/// Parses `name=Type(args|_)`; a bare `Type(...)` is its own name.
Observable parse_observable(const Grammar& g, const std::string& spec);

struct EnsembleStats {
  std::string observable;
  std::vector<double> grid;
  std::vector<std::map<std::int64_t, double>> distribution;
  std::vector<double> mean, variance;
  std::size_t replicates = 0;
};

/// Evaluates the observable on each trace's piecewise-constant path.
EnsembleStats ensemble_stats(const std::vector<EventTrace>& traces, const Observable& obs,
                             const std::vector<double>& grid);

/// Accumulates observable samples without keeping traces.
class EnsembleAccumulator {
 public:
  EnsembleAccumulator(std::vector<Observable> obs, std::vector<double> grid);
  void add(std::size_t grid_index, const PoolState& p);
  void finish_replicate() { ++replicates_; }
  void merge(const EnsembleAccumulator& other);
  std::vector<EnsembleStats> stats() const;
  const std::vector<double>& grid() const { return grid_; }

 private:
  std::vector<Observable> obs_;
  std::vector<double> grid_;
  std::vector<std::vector<std::map<std::int64_t, std::int64_t>>> counts_;  // obs x grid
  std::size_t replicates_ = 0;
};

struct EnsembleRun {
  std::vector<EventTrace> traces;  // only when requested, sorted by replicate
  std::vector<EnsembleStats> stats;
  std::vector<PoolState> finals;
};

/// Replicates r = 0..n-1 use RngStream(seed, r); `jobs` workers share the
/// replicate range and results are merged in replicate order.
EnsembleRun run_ssa_ensemble(const CompiledGrammar& cg, const PoolState& p0, double t_end, std::uint64_t seed,
                             std::size_t replicates, std::size_t jobs, const std::vector<Observable>& obs,
                             const std::vector<double>& grid, bool keep_traces);

/// JSON-lines trace: a header record then one record per event.
std::string trace_to_jsonl(const CompiledGrammar& cg, const EventTrace& trace);
/// Replays events from the initial state, checking time order and caps.
PoolState replay_trace(const EventTrace& trace);

std::string stats_table(const std::vector<EnsembleStats>& stats);

std::vector<double> uniform_grid(double t_end, std::size_t points);

}  // namespace dg
