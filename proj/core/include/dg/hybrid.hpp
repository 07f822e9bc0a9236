#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dg/ctmc.hpp"

namespace dg {

/// Continuous dynamics of one `solving` rule: the drift and diffusion
/// fields of the real slots of its single LHS term.
struct DriftSpec {
  std::size_t rule = 0;  // index into Grammar::rules
  std::string rule_id;
  CompiledTerm pattern;
  std::vector<CompiledVar> vars;
  struct Drift {
    std::size_t slot;
    ExprPtr rhs;
  };
  struct Diffusion {
    std::size_t slot_i, slot_j;
    ExprPtr value;
  };
  std::vector<Drift> drift;
  std::vector<Diffusion> diffusion;
  /// The formal `with` rate, kept as text: minus the divergence of
  /// drift times a delta, plus the diffusion term. Never evaluated.
  std::string formal_rate;
};

/// Throws MultiTermSolveRule unless the rule rewrites one term into the same
/// pattern.
DriftSpec desugar_solving(const Grammar& g, const Rule& r);

/// A distinct continuous term of the pool with its copy number.
struct ContinuousTerm {
  GroundTerm term;
  std::int64_t count = 1;
};

class HybridModel;

/// Advances every term matched by a drift spec over dt: classical RK4 with
/// equal substeps no longer than h, or Euler-Maruyama when any diffusion
/// applies (copies are split first so each gets its own noise). Throws
/// NonfiniteState on divergence.
void integrate_drift(const HybridModel& model, std::vector<ContinuousTerm>& terms, double dt, double h,
                     RngStream* rng = nullptr);

/// Drift specs compiled for evaluation in extended precision, plus the
/// jump rules whose propensity can change while the drift runs.
class HybridModel {
 public:
  explicit HybridModel(std::shared_ptr<const CompiledGrammar> cg);
  ~HybridModel();
  HybridModel(const HybridModel&) = delete;
  HybridModel& operator=(const HybridModel&) = delete;

  const CompiledGrammar& compiled() const { return *cg_; }
  const std::vector<DriftSpec>& specs() const { return specs_; }
  bool drifts(std::uint32_t type) const { return drifted_types_[type]; }
  bool sensitive(std::size_t jump_rule) const { return sensitive_[jump_rule]; }
  bool any_sensitive() const;
  bool has_diffusion() const;
  /// Grammar option `h`, default 1e-3.
  double default_h() const { return default_h_; }

  struct Impl;
  const Impl& impl() const { return *impl_; }

 private:
  std::shared_ptr<const CompiledGrammar> cg_;
  std::vector<DriftSpec> specs_;
  std::vector<bool> drifted_types_;
  std::vector<bool> sensitive_;
  double default_h_ = 1e-3;
  std::unique_ptr<Impl> impl_;
};

struct ContinuousSample {
  double t = 0.0;
  std::uint32_t type = 0;
  std::vector<double> values;  // full argument vector
  std::int64_t count = 1;
};

struct HybridTrace {
  EventTrace trace;
  std::vector<ContinuousSample> samples;
};

struct HybridOptions {
  double h = 0.0;  // 0: the model default
  bool record_events = true;
  bool record_samples = true;
  std::vector<double> grid;  // sample times; the pool at each is also passed to on_grid
  std::function<void(std::size_t, const PoolState&)> on_grid;
};

/// Jump events interleaved with drift integration. Jump rules whose rates
/// cannot see drifted values use the SSA draw sequence unchanged; otherwise
/// an exponential survival threshold is accumulated with the total
/// propensity refreshed at each substep.
HybridTrace simulate_hybrid(const HybridModel& model, const PoolState& p0, double t_end, RngStream& rng,
                            const HybridOptions& opts = {});

/// Mean and variance over replicates (and copies) of one real slot of a
/// type at each grid point.
struct ContinuousStats {
  std::string name;  // Type.slot
  std::vector<double> grid, mean, variance;
  std::vector<std::int64_t> samples;
};

struct HybridEnsemble {
  std::vector<EnsembleStats> stats;
  std::vector<ContinuousStats> continuous;
  std::vector<PoolState> finals;
  std::vector<HybridTrace> traces;  // only when requested
};

HybridEnsemble run_hybrid_ensemble(const HybridModel& model, const PoolState& p0, double t_end, std::uint64_t seed,
                                   std::size_t replicates, std::size_t jobs, const std::vector<Observable>& obs,
                                   const std::vector<double>& grid, double h, bool keep_traces);

std::string hybrid_trace_to_jsonl(const HybridModel& model, const HybridTrace& trace);
std::string continuous_table(const std::vector<ContinuousStats>& stats);

}  // namespace dg
