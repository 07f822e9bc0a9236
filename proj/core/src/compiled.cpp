#include "dg/compiled.hpp"

#include <algorithm>

namespace dg {

namespace {

int find_var(const std::vector<CompiledVar>& vars, const std::string& name) {
  for (std::size_t i = 0; i < vars.size(); ++i)
    if (vars[i].name == name) return static_cast<int>(i);
  return -1;
}

CompiledTerm compile_term(const Grammar& g, const TermPattern& t, std::vector<CompiledVar>& vars,
                          bool lhs) {
  CompiledTerm out;
  out.type = *g.type_index(t.type);
  const TypeDecl& decl = g.types[out.type];
  for (std::size_t i = 0; i < t.args.size(); ++i) {
    SlotRef s;
    if (t.args[i].kind == Arg::Kind::Const) {
      s.is_const = true;
      s.value = t.args[i].value;
    } else {
      s.var = find_var(vars, t.args[i].var);
      if (s.var < 0) {
        vars.push_back(CompiledVar{t.args[i].var, &g.slot_space(decl, i), lhs, false});
        s.var = static_cast<int>(vars.size() - 1);
      }
    }
    out.slots.push_back(s);
  }
  return out;
}

}  // namespace

std::shared_ptr<const CompiledGrammar> compile(const Grammar& source, std::int64_t total_guard) {
  require_valid(source);
  auto cg = std::make_shared<CompiledGrammar>();
  cg->grammar = std::make_shared<const Grammar>(source);
  const Grammar& g = *cg->grammar;
  cg->schema = PoolSchema::from(g, total_guard);
  cg->rules_by_type.resize(g.types.size());

  for (std::size_t ri = 0; ri < g.rules.size(); ++ri) {
    const Rule& rule = g.rules[ri];
    if (rule.clause == ClauseKind::Solving) {
      cg->solve_rules.push_back(ri);
      continue;
    }
    CompiledRule cr;
    cr.index = cg->rules.size();
    cr.id = rule.id;
    cr.source = &rule;
    for (const auto& t : rule.lhs) cr.lhs.push_back(compile_term(g, t, cr.vars, true));
    cr.num_lhs_vars = cr.vars.size();
    for (const auto& t : rule.rhs) cr.rhs.push_back(compile_term(g, t, cr.vars, false));

    Rule bound = desugar_clause(g, rule);
    bound.expr = bind_params(g, bound.expr);
    cr.rate = bound.expr;
    cr.factored = factor_rate(g, bound);
    for (const auto& k : cr.factored.kernel) {
      if (std::holds_alternative<NormalKernel>(k) || std::holds_alternative<UniformKernel>(k))
        cr.vars[find_var(cr.vars, kernel_var(k))].continuous_kernel = true;
      if (std::holds_alternative<AssignKernel>(k)) cr.needs_feasibility = true;
    }
    std::vector<std::uint32_t> touched;
    for (const auto& t : cr.lhs) touched.push_back(t.type);
    for (const auto& t : cr.rhs) {
      if (g.types[t.type].max_copy) {
        cr.needs_feasibility = true;
        touched.push_back(t.type);
      }
    }
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    cr.touched_types = touched;
    for (auto t : touched) cg->rules_by_type[t].push_back(cr.index);
    cg->rules.push_back(std::move(cr));
  }
  return cg;
}

}  // namespace dg
