#include "dg/match.hpp"

#include <algorithm>

namespace dg {

namespace {

struct Matcher {
  const CompiledRule& r;
  const PoolState& p;
  const std::function<void(const GroupedMatch&)>& visit;
  GroupedMatch current;
  std::vector<bool> bound;
  std::vector<std::pair<const GroundTerm*, std::int64_t>> used;

  Matcher(const CompiledRule& rule, const PoolState& pool, const std::function<void(const GroupedMatch&)>& v)
      : r(rule), p(pool), visit(v) {
    current.values.resize(r.vars.size());
    current.slots.resize(r.lhs.size());
    bound.assign(r.vars.size(), false);
  }

  std::int64_t used_count(const GroundTerm* t) const {
    for (const auto& [term, n] : used)
      if (term == t) return n;
    return 0;
  }

  void take(const GroundTerm* t, std::int64_t count, std::size_t slot, double mult) {
    const std::int64_t u = used_count(t);
    const std::int64_t avail = count - u;
    if (avail <= 0) return;
    const CompiledTerm& pat = r.lhs[slot];
    std::vector<int> newly;
    bool ok = true;
    for (std::size_t j = 0; j < pat.slots.size() && ok; ++j) {
      const SlotRef& s = pat.slots[j];
      if (s.is_const) {
        ok = t->args[j] == s.value;
      } else if (bound[s.var]) {
        ok = t->args[j] == current.values[s.var];
      } else {
        bound[s.var] = true;
        current.values[s.var] = t->args[j];
        newly.push_back(s.var);
      }
    }
    if (ok) {
      bool found = false;
      for (auto& e : used)
        if (e.first == t) {
          ++e.second;
          found = true;
        }
      if (!found) used.emplace_back(t, 1);
      current.slots[slot] = t;
      run(slot + 1, mult * static_cast<double>(avail));
      for (std::size_t i = 0; i < used.size(); ++i)
        if (used[i].first == t) {
          if (--used[i].second == 0) used.erase(used.begin() + static_cast<std::ptrdiff_t>(i));
          break;
        }
    }
    for (int v : newly) bound[v] = false;
  }

  void run(std::size_t slot, double mult) {
    if (slot == r.lhs.size()) {
      current.multiplicity = mult;
      visit(current);
      return;
    }
    const CompiledTerm& pat = r.lhs[slot];
    GroundTerm key{pat.type, {}};
    for (const SlotRef& s : pat.slots) {
      if (s.is_const)
        key.args.push_back(s.value);
      else if (bound[s.var])
        key.args.push_back(current.values[s.var]);
      else
        break;
    }
    const auto& counts = p.counts();
    if (key.args.size() == pat.slots.size()) {
      auto it = counts.find(key);
      if (it != counts.end()) take(&it->first, it->second, slot, mult);
      return;
    }
    const std::size_t k = key.args.size();
    for (auto it = counts.lower_bound(key); it != counts.end(); ++it) {
      const GroundTerm& t = it->first;
      if (t.type != pat.type) break;
      if (!std::equal(key.args.begin(), key.args.end(), t.args.begin(), t.args.begin() + static_cast<std::ptrdiff_t>(k)))
        break;
      take(&t, it->second, slot, mult);
    }
  }
};

int var_index(const CompiledRule& r, const std::string& name) {
  for (std::size_t i = 0; i < r.vars.size(); ++i)
    if (r.vars[i].name == name) return static_cast<int>(i);
  return -1;
}

bool caps_allow(const CompiledRule& r, const PoolState& p, const GroupedMatch& m, const std::vector<Value>& values) {
  const auto& schema = *p.schema();
  std::vector<std::pair<GroundTerm, std::int64_t>> produced;
  for (const auto& term : r.rhs) {
    if (!schema.caps[term.type]) continue;
    GroundTerm t{term.type, {}};
    bool continuous = false;
    for (const auto& s : term.slots) {
      if (!s.is_const && r.vars[s.var].continuous_kernel) continuous = true;
      t.args.push_back(s.is_const ? s.value : values[s.var]);
    }
    if (continuous) continue;
    auto it = std::find_if(produced.begin(), produced.end(), [&](const auto& e) { return e.first == t; });
    if (it == produced.end())
      produced.emplace_back(std::move(t), 1);
    else
      ++it->second;
  }
  for (const auto& [t, n] : produced) {
    std::int64_t consumed = 0;
    for (const GroundTerm* s : m.slots)
      if (*s == t) ++consumed;
    if (p.copy_number(t) - consumed + n > *schema.caps[t.type]) return false;
  }
  return true;
}

}  // namespace

void for_each_grouped_match(const CompiledRule& r, const PoolState& p,
                            const std::function<void(const GroupedMatch&)>& visit) {
  Matcher m(r, p, visit);
  m.run(0, 1.0);
}

Substitution lhs_substitution(const CompiledRule& r, const std::vector<Value>& values) {
  Substitution theta;
  for (std::size_t i = 0; i < r.num_lhs_vars; ++i) theta.bind(r.vars[i].name, values[i]);
  return theta;
}

std::vector<Outcome> feasible_outcomes(const CompiledRule& r, const PoolState& p, const GroupedMatch& m) {
  std::vector<Outcome> out;
  std::vector<Value> values = m.values;
  Substitution theta = lhs_substitution(r, values);
  const FiniteSumKernel* finite = nullptr;
  for (const auto& k : r.factored.kernel) {
    if (const auto* a = std::get_if<AssignKernel>(&k)) {
      auto v = to_slot_value(eval_expr(a->value, theta), a->integral);
      const int idx = var_index(r, a->var);
      if (!v || !r.vars[idx].space->contains(*v)) return out;
      values[idx] = *v;
    } else if (const auto* f = std::get_if<FiniteSumKernel>(&k)) {
      finite = f;
    }
  }
  if (!finite) {
    if (!r.needs_feasibility || caps_allow(r, p, m, values)) out.push_back(Outcome{values, 1.0});
    return out;
  }
  for (auto& [ext, w] : finite_outcomes(*finite, theta)) {
    if (!(w > 0.0)) continue;
    for (const auto& [name, value] : ext) values[var_index(r, name)] = value;
    if (!r.needs_feasibility || caps_allow(r, p, m, values)) out.push_back(Outcome{values, w});
  }
  return out;
}

double match_rate(const CompiledRule& r, const PoolState& p, const GroupedMatch& m) {
  if (!(m.multiplicity > 0.0)) return 0.0;
  const double rest = eval_rate(r.factored.rest, lhs_substitution(r, m.values));
  if (rest == 0.0) return 0.0;
  double w = 0.0;
  if (!r.needs_feasibility && r.factored.kernel.empty()) {
    w = 1.0;
  } else {
    for (const auto& o : feasible_outcomes(r, p, m)) w += o.weight;
  }
  return m.multiplicity * rest * w;
}

std::vector<Match> enumerate_matches(const CompiledGrammar& cg, std::size_t rule_index, const PoolState& p) {
  const CompiledRule& r = cg.rules.at(rule_index);
  std::vector<Match> out;
  for_each_grouped_match(r, p, [&](const GroupedMatch& m) {
    const double single = match_rate(r, p, m) / m.multiplicity;
    if (!(single > 0.0)) return;
    // expand copy labels: slot k takes a label unused by earlier slots on the same term
    std::vector<std::int64_t> labels(m.slots.size(), 0);
    std::function<void(std::size_t)> expand = [&](std::size_t k) {
      if (k == m.slots.size()) {
        Match match;
        match.rule_index = rule_index;
        match.rule = r.id;
        for (std::size_t i = 0; i < m.slots.size(); ++i) match.slots.emplace_back(*m.slots[i], labels[i]);
        match.theta = lhs_substitution(r, m.values);
        match.pure_rate_value = single;
        out.push_back(std::move(match));
        return;
      }
      const std::int64_t n = p.copy_number(*m.slots[k]);
      for (std::int64_t c = 0; c < n; ++c) {
        bool taken = false;
        for (std::size_t i = 0; i < k; ++i) taken = taken || (m.slots[i] == m.slots[k] && labels[i] == c);
        if (taken) continue;
        labels[k] = c;
        expand(k + 1);
      }
    };
    expand(0);
  });
  return out;
}

double rule_propensity(const CompiledGrammar& cg, std::size_t rule_index, const PoolState& p) {
  const CompiledRule& r = cg.rules.at(rule_index);
  double total = 0.0;
  for_each_grouped_match(r, p, [&](const GroupedMatch& m) { total += match_rate(r, p, m); });
  return total;
}

PropensityTable total_propensity(const CompiledGrammar& cg, const PoolState& p) {
  PropensityTable t;
  t.per_rule.reserve(cg.rules.size());
  for (std::size_t i = 0; i < cg.rules.size(); ++i) {
    t.per_rule.push_back(rule_propensity(cg, i, p));
    t.total += t.per_rule.back();
  }
  return t;
}

std::vector<GroundTerm> instantiate(const std::vector<CompiledTerm>& terms, const std::vector<Value>& values) {
  std::vector<GroundTerm> out;
  out.reserve(terms.size());
  for (const auto& term : terms) {
    GroundTerm t{term.type, {}};
    t.args.reserve(term.slots.size());
    for (const auto& s : term.slots) t.args.push_back(s.is_const ? s.value : values[s.var]);
    out.push_back(std::move(t));
  }
  return out;
}

Event fire_rule(const CompiledGrammar& cg, std::size_t rule_index, const PoolState& p, double target,
                RngStream& rng) {
  const CompiledRule& r = cg.rules.at(rule_index);
  // pick the instantiation containing `target` in the cumulative rate order
  std::vector<const GroundTerm*> slots;
  std::vector<Value> chosen;
  double chosen_rest = 0.0, chosen_mult = 0.0, residual = 0.0;
  bool done = false;
  std::vector<const GroundTerm*> last_slots;
  std::vector<Value> last_values;
  double last_rest = 0.0, last_mult = 0.0;
  bool any = false;
  for_each_grouped_match(r, p, [&](const GroupedMatch& m) {
    if (done) return;
    const double rate = match_rate(r, p, m);
    if (!(rate > 0.0)) return;
    any = true;
    last_slots = m.slots;
    last_values = m.values;
    last_mult = m.multiplicity;
    last_rest = rate;
    if (target < rate) {
      slots = m.slots;
      chosen = m.values;
      chosen_mult = m.multiplicity;
      chosen_rest = rate;
      residual = std::max(target, 0.0);
      done = true;
      return;
    }
    target -= rate;
  });
  if (!done) {
    // roundoff pushed the target past the end; take the last positive match
    if (!any) throw Error(ErrorKind::InvalidArgument, "fire_rule on a rule with zero propensity", r.id);
    slots = last_slots;
    chosen = last_values;
    chosen_mult = last_mult;
    chosen_rest = last_rest;
    residual = last_rest * 0.5;
  }

  GroupedMatch m;
  m.slots = slots;
  m.values = chosen;
  m.multiplicity = chosen_mult;
  auto outcomes = feasible_outcomes(r, p, m);
  if (outcomes.empty()) throw Error(ErrorKind::InvalidArgument, "selected match has no feasible outcome", r.id);
  double wsum = 0.0;
  for (const auto& o : outcomes) wsum += o.weight;
  // residual lies in [0, chosen_rest); rescale onto the outcome weights
  double u = chosen_rest > 0.0 ? residual / chosen_rest * wsum : 0.0;
  std::size_t pick = outcomes.size() - 1;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (u < outcomes[i].weight) {
      pick = i;
      break;
    }
    u -= outcomes[i].weight;
  }
  std::vector<Value> values = std::move(outcomes[pick].values);

  Substitution theta = lhs_substitution(r, values);
  for (const auto& k : r.factored.kernel) {
    if (std::holds_alternative<NormalKernel>(k) || std::holds_alternative<UniformKernel>(k)) {
      const Value v = sample_continuous(k, theta, rng);
      values[var_index(r, kernel_var(k))] = v;
    }
  }

  Event e;
  e.rule_index = rule_index;
  e.rule = r.id;
  for (std::size_t i = 0; i < r.vars.size(); ++i) e.theta.bind(r.vars[i].name, values[i]);
  for (const GroundTerm* t : slots) e.consumed.push_back(*t);
  e.produced = instantiate(r.rhs, values);
  return e;
}

}  // namespace dg
