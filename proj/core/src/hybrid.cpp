#include "dg/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include <Eigen/Dense>
#include <json.hpp>

#include "dg/parser.hpp"

namespace dg {

namespace {

// Expression tree with variables resolved to slots, evaluated in long double.
struct LdNode {
  ExprOp op = ExprOp::Const;
  long double c = 0.0L;
  int var = -1;
  std::int64_t exponent = 0;
  std::vector<LdNode> kids;
};

LdNode compile_ld(const ExprPtr& e, const std::vector<CompiledVar>& vars, const std::string& rule) {
  LdNode n;
  n.op = e->op;
  switch (e->op) {
    case ExprOp::Const:
      n.c = e->value.exact() ? static_cast<long double>(e->value.num()) / static_cast<long double>(e->value.den())
                             : static_cast<long double>(e->value.to_double());
      return n;
    case ExprOp::Var:
      for (std::size_t i = 0; i < vars.size(); ++i)
        if (vars[i].name == e->name) n.var = static_cast<int>(i);
      if (n.var < 0) throw Error(ErrorKind::UnboundVariable, "drift mentions unbound variable " + e->name, rule);
      return n;
    case ExprOp::NormalPdf:
    case ExprOp::UniformPdf:
    case ExprOp::UniformPmf:
    case ExprOp::Sum:
      throw Error(ErrorKind::InvalidArgument, "densities and sums are not supported in drift expressions", rule);
    default:
      break;
  }
  n.exponent = e->exponent;
  for (const auto& a : e->args) n.kids.push_back(compile_ld(a, vars, rule));
  return n;
}

long double eval_ld(const LdNode& n, const long double* x) {
  switch (n.op) {
    case ExprOp::Const:
      return n.c;
    case ExprOp::Var:
      return x[n.var];
    case ExprOp::Neg:
      return -eval_ld(n.kids[0], x);
    case ExprOp::Add:
      return eval_ld(n.kids[0], x) + eval_ld(n.kids[1], x);
    case ExprOp::Sub:
      return eval_ld(n.kids[0], x) - eval_ld(n.kids[1], x);
    case ExprOp::Mul:
      return eval_ld(n.kids[0], x) * eval_ld(n.kids[1], x);
    case ExprOp::Div: {
      const long double d = eval_ld(n.kids[1], x);
      if (d == 0.0L) throw Error(ErrorKind::DivisionByZero, "division by zero in drift");
      return eval_ld(n.kids[0], x) / d;
    }
    case ExprOp::Pow: {
      const long double b = eval_ld(n.kids[0], x);
      long double r = 1.0L;
      const std::int64_t k = n.exponent < 0 ? -n.exponent : n.exponent;
      for (std::int64_t i = 0; i < k; ++i) r *= b;
      return n.exponent < 0 ? 1.0L / r : r;
    }
    case ExprOp::Exp:
      return std::exp(eval_ld(n.kids[0], x));
    case ExprOp::Abs:
      return std::fabs(eval_ld(n.kids[0], x));
    case ExprOp::Delta:
      return eval_ld(n.kids[0], x) == 0.0L ? 1.0L : 0.0L;
    case ExprOp::Lt:
      return eval_ld(n.kids[0], x) < eval_ld(n.kids[1], x) ? 1.0L : 0.0L;
    case ExprOp::Le:
      return eval_ld(n.kids[0], x) <= eval_ld(n.kids[1], x) ? 1.0L : 0.0L;
    case ExprOp::Gt:
      return eval_ld(n.kids[0], x) > eval_ld(n.kids[1], x) ? 1.0L : 0.0L;
    case ExprOp::Ge:
      return eval_ld(n.kids[0], x) >= eval_ld(n.kids[1], x) ? 1.0L : 0.0L;
    case ExprOp::Eq:
      return eval_ld(n.kids[0], x) == eval_ld(n.kids[1], x) ? 1.0L : 0.0L;
    case ExprOp::Ne:
      return eval_ld(n.kids[0], x) != eval_ld(n.kids[1], x) ? 1.0L : 0.0L;
    default:
      throw Error(ErrorKind::InvalidArgument, "unsupported drift operation");
  }
}

CompiledTerm compile_pattern(const Grammar& g, const TermPattern& t, std::vector<CompiledVar>& vars) {
  CompiledTerm out;
  out.type = *g.type_index(t.type);
  const TypeDecl& decl = g.types[out.type];
  for (std::size_t i = 0; i < t.args.size(); ++i) {
    SlotRef s;
    if (t.args[i].kind == Arg::Kind::Const) {
      s.is_const = true;
      s.value = t.args[i].value;
    } else {
      for (std::size_t k = 0; k < vars.size(); ++k)
        if (vars[k].name == t.args[i].var) s.var = static_cast<int>(k);
      if (s.var < 0) {
        vars.push_back(CompiledVar{t.args[i].var, &g.slot_space(decl, i), true, false});
        s.var = static_cast<int>(vars.size() - 1);
      }
    }
    out.slots.push_back(s);
  }
  return out;
}

std::size_t slot_of_var(const DriftSpec& s, const std::string& var, const std::string& rule) {
  for (std::size_t i = 0; i < s.pattern.slots.size(); ++i) {
    const SlotRef& r = s.pattern.slots[i];
    if (!r.is_const && s.vars[static_cast<std::size_t>(r.var)].name == var) return i;
  }
  throw Error(ErrorKind::UnboundVariable, "solving clause targets " + var + ", which is not on the LHS", rule);
}

}  // namespace

DriftSpec desugar_solving(const Grammar& g, const Rule& r) {
  if (r.clause != ClauseKind::Solving) throw Error(ErrorKind::InvalidArgument, "rule has no solving clause", r.id);
  if (r.lhs.size() != 1 || r.rhs.size() != 1 || !(r.lhs[0] == r.rhs[0]))
    throw Error(ErrorKind::MultiTermSolveRule, "solving rules must rewrite one term into itself", r.id);
  DriftSpec s;
  s.rule_id = r.id;
  for (std::size_t i = 0; i < g.rules.size(); ++i)
    if (&g.rules[i] == &r) s.rule = i;
  s.pattern = compile_pattern(g, r.lhs[0], s.vars);
  std::ostringstream formal;
  for (const auto& d : r.drift) {
    const std::size_t slot = slot_of_var(s, d.var, r.id);
    if (g.slot_space(g.types[s.pattern.type], slot).kind != SpaceKind::Real)
      throw Error(ErrorKind::SpaceMismatch, "drift target " + d.var + " is not real-valued", r.id);
    s.drift.push_back({slot, bind_params(g, d.rhs)});
    formal << " - d/d" << d.var << "[(" << render(d.rhs) << ") delta(" << d.var << "' - " << d.var << ")]";
  }
  for (const auto& d : r.diffusion) {
    s.diffusion.push_back({slot_of_var(s, d.var_i, r.id), slot_of_var(s, d.var_j, r.id), bind_params(g, d.value)});
    formal << " + d2/d" << d.var_i << "d" << d.var_j << "[(" << render(d.value) << ") delta(...)]";
  }
  s.formal_rate = formal.str();
  if (!s.formal_rate.empty()) s.formal_rate = s.formal_rate.substr(1);
  return s;
}

// ---------------------------------------------------------------- model

struct HybridModel::Impl {
  struct Spec {
    std::vector<std::pair<std::size_t, LdNode>> drift;
    std::vector<std::tuple<std::size_t, std::size_t, LdNode>> diffusion;
  };
  std::vector<Spec> specs;
  std::vector<std::vector<std::size_t>> specs_by_type;
  std::vector<std::size_t> sensitive_rules;
};

HybridModel::HybridModel(std::shared_ptr<const CompiledGrammar> cg) : cg_(std::move(cg)), impl_(new Impl) {
  const Grammar& g = cg_->g();
  drifted_types_.assign(g.types.size(), false);
  impl_->specs_by_type.resize(g.types.size());
  std::vector<std::set<std::size_t>> drifted_slots(g.types.size());
  for (std::size_t ri : cg_->solve_rules) {
    DriftSpec s = desugar_solving(g, g.rules[ri]);
    s.rule = ri;
    Impl::Spec c;
    for (const auto& d : s.drift) {
      c.drift.emplace_back(d.slot, compile_ld(d.rhs, s.vars, s.rule_id));
      drifted_slots[s.pattern.type].insert(d.slot);
    }
    for (const auto& d : s.diffusion)
      c.diffusion.emplace_back(d.slot_i, d.slot_j, compile_ld(d.value, s.vars, s.rule_id));
    drifted_types_[s.pattern.type] = true;
    impl_->specs_by_type[s.pattern.type].push_back(specs_.size());
    impl_->specs.push_back(std::move(c));
    specs_.push_back(std::move(s));
  }
  if (auto h = g.option("h")) default_h_ = h->to_double();
  if (!(default_h_ > 0.0)) throw Error(ErrorKind::InvalidArgument, "option h must be positive");

  // A jump rule sees drifted values when a drifted slot of one of its LHS
  // terms is a constant, or a variable that also occurs in another LHS slot,
  // the rate, or a kernel parameter. Capped drifted RHS types make
  // feasibility value-dependent too.
  for (const auto& r : cg_->rules) {
    std::set<std::string> rate_vars;
    collect_vars(r.factored.rest, rate_vars);
    collect_vars(r.factored.pure_rate, rate_vars);
    for (const auto& k : r.factored.kernel) {
      std::visit(
          [&](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, AssignKernel>) collect_vars(b.value, rate_vars);
            else if constexpr (std::is_same_v<T, NormalKernel>) {
              collect_vars(b.mean, rate_vars);
              collect_vars(b.sd, rate_vars);
            } else if constexpr (std::is_same_v<T, UniformKernel>) {
              collect_vars(b.lo, rate_vars);
              collect_vars(b.hi, rate_vars);
            } else {
              collect_vars(b.weight, rate_vars);
            }
          },
          k);
    }
    std::map<int, int> lhs_uses;
    for (const auto& t : r.lhs)
      for (const auto& s : t.slots)
        if (!s.is_const) ++lhs_uses[s.var];
    bool sens = false;
    for (const auto& t : r.lhs) {
      if (!drifted_types_[t.type]) continue;
      for (std::size_t slot : drifted_slots[t.type]) {
        const SlotRef& s = t.slots[slot];
        if (s.is_const || lhs_uses[s.var] > 1 || rate_vars.count(r.vars[static_cast<std::size_t>(s.var)].name))
          sens = true;
      }
    }
    for (const auto& t : r.rhs)
      if (drifted_types_[t.type] && g.types[t.type].max_copy) sens = true;
    sensitive_.push_back(sens);
    if (sens) impl_->sensitive_rules.push_back(r.index);
  }
}

HybridModel::~HybridModel() = default;

bool HybridModel::any_sensitive() const { return !impl_->sensitive_rules.empty(); }

bool HybridModel::has_diffusion() const {
  for (const auto& s : specs_)
    if (!s.diffusion.empty()) return true;
  return false;
}

// ------------------------------------------------------------ integration

namespace {

struct Bound {
  std::size_t spec;
  std::vector<long double> vars;
};

bool match_spec(const DriftSpec& s, const GroundTerm& t, std::vector<long double>& vars) {
  vars.assign(s.vars.size(), 0.0L);
  std::vector<bool> set(s.vars.size(), false);
  for (std::size_t i = 0; i < s.pattern.slots.size(); ++i) {
    const SlotRef& r = s.pattern.slots[i];
    if (r.is_const) {
      if (!(r.value == t.args[i])) return false;
      continue;
    }
    const long double v = static_cast<long double>(t.args[i].to_double());
    const auto k = static_cast<std::size_t>(r.var);
    if (set[k] && vars[k] != v) return false;
    vars[k] = v;
    set[k] = true;
  }
  return true;
}

}  // namespace

void integrate_drift(const HybridModel& model, std::vector<ContinuousTerm>& terms, double dt, double h,
                     RngStream* rng) {
  if (dt < 0.0) throw Error(ErrorKind::InvalidArgument, "negative drift interval");
  if (!(h > 0.0)) throw Error(ErrorKind::InvalidArgument, "integrator step must be positive");
  if (dt == 0.0 || terms.empty()) return;
  const auto& impl = model.impl();
  const auto& specs = model.specs();
  const auto n_sub = static_cast<std::size_t>(std::max(1.0, std::ceil(dt / h - 1e-9)));
  const long double step = static_cast<long double>(dt) / static_cast<long double>(n_sub);

  std::vector<ContinuousTerm> out;
  out.reserve(terms.size());
  for (auto& ct : terms) {
    const std::uint32_t type = ct.term.type;
    if (!model.drifts(type)) {
      out.push_back(ct);
      continue;
    }
    std::vector<Bound> bound;
    bool diffusive = false;
    for (std::size_t si : impl.specs_by_type[type]) {
      Bound b{si, {}};
      if (match_spec(specs[si], ct.term, b.vars)) {
        diffusive = diffusive || !impl.specs[si].diffusion.empty();
        bound.push_back(std::move(b));
      }
    }
    if (bound.empty()) {
      out.push_back(ct);
      continue;
    }
    std::vector<std::size_t> slots;  // integrated slots
    for (const auto& b : bound)
      for (const auto& d : impl.specs[b.spec].drift) slots.push_back(d.first);
    for (const auto& b : bound)
      for (const auto& d : impl.specs[b.spec].diffusion) {
        slots.push_back(std::get<0>(d));
        slots.push_back(std::get<1>(d));
      }
    std::sort(slots.begin(), slots.end());
    slots.erase(std::unique(slots.begin(), slots.end()), slots.end());
    const std::size_t m = slots.size();
    auto pos_of = [&](std::size_t slot) {
      return static_cast<std::size_t>(std::lower_bound(slots.begin(), slots.end(), slot) - slots.begin());
    };

    // Writes y into every bound spec's variable vector.
    auto load = [&](const std::vector<long double>& y) {
      for (auto& b : bound) {
        const DriftSpec& s = specs[b.spec];
        for (std::size_t k = 0; k < m; ++k) {
          const SlotRef& r = s.pattern.slots[slots[k]];
          if (!r.is_const) b.vars[static_cast<std::size_t>(r.var)] = y[k];
        }
      }
    };
    auto field = [&](const std::vector<long double>& y, std::vector<long double>& dy) {
      load(y);
      std::fill(dy.begin(), dy.end(), 0.0L);
      for (const auto& b : bound)
        for (const auto& [slot, prog] : impl.specs[b.spec].drift) dy[pos_of(slot)] += eval_ld(prog, b.vars.data());
    };

    std::vector<long double> y0(m);
    for (std::size_t k = 0; k < m; ++k) y0[k] = static_cast<long double>(ct.term.args[slots[k]].to_double());

    const std::int64_t copies = diffusive ? ct.count : 1;
    for (std::int64_t copy = 0; copy < copies; ++copy) {
      std::vector<long double> y = y0, k1(m), k2(m), k3(m), k4(m), tmp(m);
      if (!diffusive) {
        for (std::size_t s = 0; s < n_sub; ++s) {
          field(y, k1);
          for (std::size_t i = 0; i < m; ++i) tmp[i] = y[i] + 0.5L * step * k1[i];
          field(tmp, k2);
          for (std::size_t i = 0; i < m; ++i) tmp[i] = y[i] + 0.5L * step * k2[i];
          field(tmp, k3);
          for (std::size_t i = 0; i < m; ++i) tmp[i] = y[i] + step * k3[i];
          field(tmp, k4);
          for (std::size_t i = 0; i < m; ++i) y[i] += step / 6.0L * (k1[i] + 2.0L * k2[i] + 2.0L * k3[i] + k4[i]);
        }
      } else {
        if (!rng) throw Error(ErrorKind::InvalidArgument, "diffusion needs a random stream");
        const double sq = std::sqrt(static_cast<double>(step));
        Eigen::MatrixXd dmat(m, m);
        for (std::size_t s = 0; s < n_sub; ++s) {
          field(y, k1);
          dmat.setZero();
          for (const auto& b : bound)
            for (const auto& [si, sj, prog] : impl.specs[b.spec].diffusion) {
              const double v = static_cast<double>(eval_ld(prog, b.vars.data()));
              const auto i = static_cast<Eigen::Index>(pos_of(si)), j = static_cast<Eigen::Index>(pos_of(sj));
              dmat(i, j) += v;
              if (i != j) dmat(j, i) += v;
            }
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(2.0 * dmat);
          Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
          Eigen::MatrixXd bmat = es.eigenvectors() * ev.asDiagonal();
          Eigen::VectorXd xi(m);
          for (std::size_t i = 0; i < m; ++i) xi[static_cast<Eigen::Index>(i)] = rng->normal(0.0, 1.0);
          Eigen::VectorXd noise = bmat * xi * sq;
          for (std::size_t i = 0; i < m; ++i) y[i] += step * k1[i] + static_cast<long double>(noise[static_cast<Eigen::Index>(i)]);
        }
      }
      ContinuousTerm next = ct;
      next.count = diffusive ? 1 : ct.count;
      for (std::size_t k = 0; k < m; ++k) {
        const double v = static_cast<double>(y[k]);
        if (!std::isfinite(v))
          throw Error(ErrorKind::NonfiniteState, "continuous state diverged", specs[bound.front().spec].rule_id);
        next.term.args[slots[k]] = Value::real(v);
      }
      out.push_back(std::move(next));
    }
  }
  terms = std::move(out);
}

// -------------------------------------------------------------- simulation

namespace {

class HybridRun {
 public:
  HybridRun(const HybridModel& model, const PoolState& p0, double t_end, RngStream& rng, const HybridOptions& opts)
      : model_(model), cg_(model.compiled()), rng_(rng), opts_(opts), t_end_(t_end), p_(p0), cache_(cg_) {
    h_ = opts.h > 0.0 ? opts.h : model.default_h();
    out_.trace.seed = rng.seed();
    out_.trace.replicate = rng.stream();
    out_.trace.end_time = t_end;
    out_.trace.initial = p0;
    extract();
    cache_.reset(p_);
    for (std::size_t i = 0; i < cg_.rules.size(); ++i)
      if (model.sensitive(i)) sensitive_.push_back(i);
  }

  HybridTrace run() {
    if (!opts_.grid.empty() && opts_.grid.back() > t_end_)
      throw Error(ErrorKind::GridBeyondEnd, "time grid extends past t_end");
    if (sensitive_.empty()) run_direct();
    else run_thinned();
    advance(t_end_, true);
    out_.trace.final_state = p_;
    return std::move(out_);
  }

 private:
  void run_direct() {
    while (true) {
      const double total = cache_.total();
      if (!(total > 0.0)) {
        out_.trace.absorbed = true;
        return;
      }
      const double dt = rng_.exponential(total);
      if (t_ + dt > t_end_) return;
      const double t_ev = t_ + dt;
      advance(t_ev, false);
      fire(t_ev);
    }
  }

  void run_thinned() {
    while (true) {
      const double threshold = rng_.exponential(1.0);
      double acc = 0.0;
      bool fired = false;
      while (t_ < t_end_) {
        cache_.refresh(p_, sensitive_);
        const double total = cache_.total();
        if (!(total > 0.0) && ents_.empty()) {
          out_.trace.absorbed = true;
          return;
        }
        const double tau = std::min(h_, t_end_ - t_);
        if (total > 0.0 && acc + total * tau >= threshold) {
          const double t_ev = t_ + (threshold - acc) / total;
          advance(t_ev, false);
          cache_.refresh(p_, sensitive_);
          if (!(cache_.total() > 0.0)) break;  // propensity vanished at the crossing
          fire(t_ev);
          fired = true;
          break;
        }
        acc += total * tau;
        const double t_next = tau == t_end_ - t_ ? t_end_ : t_ + tau;
        advance(t_next, false);
      }
      if (!fired && t_ >= t_end_) return;
    }
  }

  void fire(double t_ev) {
    double u = rng_.uniform() * cache_.total();
    const std::size_t r = cache_.select(u);
    Event e = fire_rule(cg_, r, p_, u, rng_);
    e.time = t_ev;
    e.step = static_cast<std::int64_t>(events_);
    ++events_;
    apply_event_in_place(p_, e);
    cache_.update(p_, e);
    extract();
    if (opts_.record_events) out_.trace.events.push_back(std::move(e));
  }

  // Integrates to `target`, stopping at grid points on the way. Grid points
  // equal to the target are reported only when `inclusive`.
  void advance(double target, bool inclusive) {
    while (next_grid_ < opts_.grid.size() &&
           (opts_.grid[next_grid_] < target || (inclusive && opts_.grid[next_grid_] <= target))) {
      const double g = std::max(opts_.grid[next_grid_], t_);
      integrate_to(g);
      report(next_grid_);
      ++next_grid_;
    }
    integrate_to(target);
  }

  void integrate_to(double target) {
    if (target > t_ && !ents_.empty()) {
      integrate_drift(model_, ents_, target - t_, h_, &rng_);
      sync();
    }
    t_ = std::max(t_, target);
  }

  void report(std::size_t k) {
    if (opts_.on_grid) opts_.on_grid(k, p_);
    if (opts_.record_samples)
      for (const auto& e : ents_) {
        ContinuousSample s;
        s.t = opts_.grid[k];
        s.type = e.term.type;
        s.count = e.count;
        for (const auto& v : e.term.args) s.values.push_back(v.to_double());
        out_.samples.push_back(std::move(s));
      }
  }

  void extract() {
    ents_.clear();
    for (std::uint32_t ty = 0; ty < cg_.g().types.size(); ++ty) {
      if (!model_.drifts(ty)) continue;
      auto [b, e] = p_.type_range(ty);
      for (auto it = b; it != e; ++it) ents_.push_back({it->first, it->second});
    }
    synced_ = ents_;
  }

  void sync() {
    for (const auto& e : synced_) p_.remove(e.term, e.count);
    for (const auto& e : ents_) p_.add(e.term, e.count);
    // equal terms merge in the pool; keep the entity list aligned with it
    extract();
  }

  const HybridModel& model_;
  const CompiledGrammar& cg_;
  RngStream& rng_;
  const HybridOptions& opts_;
  double t_end_;
  double h_ = 1e-3;
  double t_ = 0.0;
  PoolState p_;
  PropensityCache cache_;
  std::vector<std::size_t> sensitive_;
  std::vector<ContinuousTerm> ents_, synced_;
  std::size_t next_grid_ = 0;
  std::size_t events_ = 0;
  HybridTrace out_;
};

}  // namespace

HybridTrace simulate_hybrid(const HybridModel& model, const PoolState& p0, double t_end, RngStream& rng,
                            const HybridOptions& opts) {
  HybridRun run(model, p0, t_end, rng, opts);
  return run.run();
}

// --------------------------------------------------------------- ensembles

HybridEnsemble run_hybrid_ensemble(const HybridModel& model, const PoolState& p0, double t_end, std::uint64_t seed,
                                   std::size_t replicates, std::size_t jobs, const std::vector<Observable>& obs,
                                   const std::vector<double>& grid, double h, bool keep_traces) {
  const Grammar& g = model.compiled().g();
  struct Channel {
    std::uint32_t type;
    std::size_t slot;
    std::string name;
  };
  std::vector<Channel> channels;
  for (std::uint32_t ty = 0; ty < g.types.size(); ++ty) {
    if (!model.drifts(ty)) continue;
    for (std::size_t s = 0; s < g.types[ty].signature.size(); ++s)
      if (g.slot_space(g.types[ty], s).kind == SpaceKind::Real)
        channels.push_back({ty, s, g.types[ty].name + "." + std::to_string(s)});
  }
  jobs = std::max<std::size_t>(1, std::min(jobs, std::max<std::size_t>(replicates, 1)));
  std::vector<EnsembleAccumulator> accs(jobs, EnsembleAccumulator(obs, grid));
  // per replicate, per channel, per grid point: sum, sum of squares, count
  struct Moments {
    double s = 0.0, s2 = 0.0;
    std::int64_t n = 0;
  };
  std::vector<std::vector<Moments>> moments(replicates, std::vector<Moments>(channels.size() * grid.size()));
  HybridEnsemble out;
  out.finals.resize(replicates);
  if (keep_traces) out.traces.resize(replicates);
  std::vector<std::exception_ptr> errors(jobs);
  auto worker = [&](std::size_t w) {
    try {
      for (std::size_t r = w; r < replicates; r += jobs) {
        RngStream rng(seed, r);
        HybridOptions opts;
        opts.h = h;
        opts.record_events = keep_traces;
        opts.record_samples = keep_traces;
        opts.grid = grid;
        opts.on_grid = [&](std::size_t k, const PoolState& p) {
          accs[w].add(k, p);
          for (std::size_t c = 0; c < channels.size(); ++c) {
            auto [b, e] = p.type_range(channels[c].type);
            Moments& m = moments[r][c * grid.size() + k];
            for (auto it = b; it != e; ++it) {
              const double v = it->first.args[channels[c].slot].to_double();
              m.s += v * static_cast<double>(it->second);
              m.s2 += v * v * static_cast<double>(it->second);
              m.n += it->second;
            }
          }
        };
        HybridTrace tr = simulate_hybrid(model, p0, t_end, rng, opts);
        accs[w].finish_replicate();
        out.finals[r] = tr.trace.final_state;
        if (keep_traces) out.traces[r] = std::move(tr);
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
  out.stats = accs[0].stats();
  for (std::size_t c = 0; c < channels.size(); ++c) {
    ContinuousStats cs;
    cs.name = channels[c].name;
    cs.grid = grid;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      Moments tot;
      for (std::size_t r = 0; r < replicates; ++r) {
        const Moments& m = moments[r][c * grid.size() + k];
        tot.s += m.s;
        tot.s2 += m.s2;
        tot.n += m.n;
      }
      const double n = static_cast<double>(tot.n);
      const double mean = tot.n ? tot.s / n : 0.0;
      cs.mean.push_back(mean);
      cs.variance.push_back(tot.n > 1 ? std::max(0.0, (tot.s2 - n * mean * mean) / (n - 1.0)) : 0.0);
      cs.samples.push_back(tot.n);
    }
    out.continuous.push_back(std::move(cs));
  }
  return out;
}

std::string hybrid_trace_to_jsonl(const HybridModel& model, const HybridTrace& trace) {
  std::string body = trace_to_jsonl(model.compiled(), trace.trace);
  // samples go between the events and the footer line
  body.pop_back();
  const auto cut = body.rfind('\n') + 1;
  std::string footer = body.substr(cut) + "\n";
  body.resize(cut);
  const Grammar& g = model.compiled().g();
  for (const auto& s : trace.samples) {
    nlohmann::ordered_json rec;
    rec["t"] = s.t;
    rec["sample"] = g.types[s.type].name;
    rec["count"] = s.count;
    rec["values"] = s.values;
    body += rec.dump() + "\n";
  }
  return body + footer;
}

std::string continuous_table(const std::vector<ContinuousStats>& stats) {
  std::ostringstream os;
  os.precision(17);
  os << "time\tchannel\tmean\tvariance\tsamples\n";
  for (const auto& s : stats)
    for (std::size_t k = 0; k < s.grid.size(); ++k)
      os << s.grid[k] << "\t" << s.name << "\t" << s.mean[k] << "\t" << s.variance[k] << "\t" << s.samples[k] << "\n";
  return os.str();
}

}  // namespace dg
