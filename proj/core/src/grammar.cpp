#include "dg/grammar.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

namespace dg {

// ------------------------------------------------------------------ Space

std::size_t Space::size() const {
  switch (kind) {
    case SpaceKind::Enumeration: return values.size();
    case SpaceKind::BoundedInt: return static_cast<std::size_t>(hi - lo + 1);
    default: return 0;
  }
}

std::vector<Value> Space::domain() const {
  std::vector<Value> out;
  if (kind == SpaceKind::Enumeration) {
    for (std::size_t i = 0; i < values.size(); ++i) out.push_back(Value::integer(static_cast<std::int64_t>(i)));
  } else if (kind == SpaceKind::BoundedInt) {
    for (std::int64_t v = lo; v <= hi; ++v) out.push_back(Value::integer(v));
  }
  return out;
}

bool Space::contains(const Value& v) const {
  switch (kind) {
    case SpaceKind::Enumeration:
      return v.is_integer() && v.as_integer() >= 0 &&
             v.as_integer() < static_cast<std::int64_t>(values.size());
    case SpaceKind::BoundedInt:
      return v.is_integer() && v.as_integer() >= lo && v.as_integer() <= hi;
    case SpaceKind::Integer:
      return v.is_integer();
    case SpaceKind::Oid:
      return v.is_integer() && v.as_integer() >= kNilOid;
    case SpaceKind::Real:
      return v.is_real();
  }
  return false;
}

namespace {

std::string real_text(double d) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string Space::render_value(const Value& v) const {
  if (kind == SpaceKind::Enumeration && v.is_integer() && contains(v))
    return "'" + values[static_cast<std::size_t>(v.as_integer())] + "'";
  if (kind == SpaceKind::Oid && v.is_integer() && v.as_integer() == kNilOid) return "nil";
  if (v.is_real()) {
    return real_text(v.as_real());
  }
  return std::to_string(v.as_integer());
}

std::string Space::spelling() const {
  switch (kind) {
    case SpaceKind::Enumeration: {
      std::string s = "{";
      for (std::size_t i = 0; i < values.size(); ++i) s += (i ? ", '" : "'") + values[i] + "'";
      return s + "}";
    }
    case SpaceKind::BoundedInt:
      return "int[" + std::to_string(lo) + ".." + std::to_string(hi) + "]";
    case SpaceKind::Integer: return "int";
    case SpaceKind::Real: return "real";
    case SpaceKind::Oid: return "oid";
  }
  return "?";
}

Space Space::enumeration(std::string name, std::vector<std::string> values) {
  Space s;
  s.kind = SpaceKind::Enumeration;
  s.values = std::move(values);
  s.name = name.empty() ? s.spelling() : std::move(name);
  s.anonymous = s.name == s.spelling();
  return s;
}

Space Space::bounded(std::string name, std::int64_t lo, std::int64_t hi) {
  Space s;
  s.kind = SpaceKind::BoundedInt;
  s.lo = lo;
  s.hi = hi;
  s.name = name.empty() ? s.spelling() : std::move(name);
  s.anonymous = s.name == s.spelling();
  return s;
}

Space Space::integer() {
  Space s;
  s.kind = SpaceKind::Integer;
  s.name = "int";
  s.anonymous = true;
  return s;
}

Space Space::real() {
  Space s;
  s.kind = SpaceKind::Real;
  s.name = "real";
  s.anonymous = true;
  return s;
}

Space Space::oid() {
  Space s;
  s.kind = SpaceKind::Oid;
  s.name = "oid";
  s.anonymous = true;
  return s;
}

// ---------------------------------------------------------------- Grammar

const Space* Grammar::find_space(const std::string& name) const {
  static const Space kInt = Space::integer();
  static const Space kReal = Space::real();
  static const Space kOid = Space::oid();
  for (const auto& s : spaces)
    if (s.name == name) return &s;
  if (name == "int") return &kInt;
  if (name == "real") return &kReal;
  if (name == "oid") return &kOid;
  return nullptr;
}

std::string Grammar::intern_space(const Space& s) {
  if (s.kind == SpaceKind::Integer || s.kind == SpaceKind::Real || s.kind == SpaceKind::Oid)
    return s.spelling();
  for (const auto& existing : spaces) {
    if (existing.name == s.name) return existing.name;
  }
  spaces.push_back(s);
  return s.name;
}

const TypeDecl* Grammar::find_type(const std::string& name) const {
  for (const auto& t : types)
    if (t.name == name) return &t;
  return nullptr;
}

std::optional<std::uint32_t> Grammar::type_index(const std::string& name) const {
  for (std::size_t i = 0; i < types.size(); ++i)
    if (types[i].name == name) return static_cast<std::uint32_t>(i);
  return std::nullopt;
}

const Rule* Grammar::find_rule(const std::string& id) const {
  for (const auto& r : rules)
    if (r.id == id) return &r;
  return nullptr;
}

const NamedConstant* Grammar::find_param(const std::string& name) const {
  for (const auto& p : params)
    if (p.name == name) return &p;
  return nullptr;
}

std::optional<Number> Grammar::option(const std::string& name) const {
  for (const auto& o : options)
    if (o.name == name) return o.value;
  return std::nullopt;
}

bool Grammar::has_solve_clauses() const {
  return std::any_of(rules.begin(), rules.end(),
                     [](const Rule& r) { return r.clause == ClauseKind::Solving; });
}

const Space& Grammar::slot_space(const TypeDecl& t, std::size_t slot) const {
  const Space* s = find_space(t.signature.at(slot));
  if (!s) throw Error(ErrorKind::UnknownIdentifier, "unknown space '" + t.signature[slot] + "'", t.name);
  return *s;
}

// ------------------------------------------------------------- validation

std::string Diagnostic::str() const {
  std::string s = span.str() + ": ";
  if (!rule.empty()) s += "rule '" + rule + "': ";
  return s + std::string(to_string(kind)) + ": " + message;
}

std::string ValidationReport::str() const {
  std::string s;
  for (const auto& e : errors) s += e.str() + "\n";
  return s;
}

std::set<std::string> lhs_variables(const Rule& r) {
  std::set<std::string> out;
  for (const auto& t : r.lhs)
    for (const auto& a : t.args)
      if (a.kind == Arg::Kind::Var) out.insert(a.var);
  return out;
}

std::set<std::string> rhs_only_variables(const Rule& r) {
  const auto lhs = lhs_variables(r);
  std::set<std::string> out;
  for (const auto& t : r.rhs)
    for (const auto& a : t.args)
      if (a.kind == Arg::Kind::Var && !lhs.count(a.var)) out.insert(a.var);
  return out;
}

namespace {

// RHS-only variables in order of first appearance
std::vector<std::string> rhs_only_ordered(const Rule& r) {
  const auto lhs = lhs_variables(r);
  std::vector<std::string> out;
  for (const auto& t : r.rhs)
    for (const auto& a : t.args)
      if (a.kind == Arg::Kind::Var && !lhs.count(a.var) &&
          std::find(out.begin(), out.end(), a.var) == out.end())
        out.push_back(a.var);
  return out;
}

void check_terms(const Grammar& g, const Rule& r, const std::vector<TermPattern>& terms,
                 std::map<std::string, const Space*>& spaces) {
  for (const auto& t : terms) {
    const TypeDecl* decl = g.find_type(t.type);
    if (!decl) throw Error(ErrorKind::UnknownIdentifier, "unknown type '" + t.type + "'", r.id);
    if (decl->signature.size() != t.args.size())
      throw Error(ErrorKind::ArityMismatch,
                  t.type + " takes " + std::to_string(decl->signature.size()) + " argument(s), got " +
                      std::to_string(t.args.size()),
                  r.id);
    for (std::size_t i = 0; i < t.args.size(); ++i) {
      const Space& slot = g.slot_space(*decl, i);
      const Arg& a = t.args[i];
      if (a.kind == Arg::Kind::Const) {
        if (!slot.contains(a.value))
          throw Error(ErrorKind::InvalidConstant,
                      "constant " + slot.render_value(a.value) + " is not in space " + slot.name + " (" +
                          t.type + " slot " + std::to_string(i + 1) + ")",
                      r.id);
        continue;
      }
      if (g.find_param(a.var))
        throw Error(ErrorKind::DuplicateIdentifier,
                    "'" + a.var + "' is a param and cannot be a term variable", r.id);
      auto [it, fresh] = spaces.emplace(a.var, &slot);
      if (!fresh && it->second->name != slot.name)
        throw Error(ErrorKind::SpaceMismatch,
                    "variable '" + a.var + "' used in spaces " + it->second->name + " and " + slot.name,
                    r.id);
    }
  }
}

void check_expr_scope(const Grammar& g, const Rule& r, const ExprPtr& e,
                      const std::map<std::string, const Space*>& spaces) {
  for (const auto& v : free_vars(e))
    if (!spaces.count(v) && !g.find_param(v))
      throw Error(ErrorKind::UnboundVariable, "expression uses unbound name '" + v + "'", r.id);
}

void validate_rule(const Grammar& g, const Rule& r) {
  const auto spaces = rule_variable_spaces(g, r);
  if (r.clause == ClauseKind::Solving) {
    const auto lhs = lhs_variables(r);
    if (r.drift.empty()) throw Error(ErrorKind::InvalidArgument, "solving clause without equations", r.id);
    for (const auto& d : r.drift) {
      if (!lhs.count(d.var))
        throw Error(ErrorKind::UnboundVariable, "drift target '" + d.var + "' is not an LHS variable", r.id);
      if (spaces.at(d.var)->kind != SpaceKind::Real)
        throw Error(ErrorKind::SpaceMismatch, "drift target '" + d.var + "' is not real-valued", r.id);
      check_expr_scope(g, r, d.rhs, spaces);
    }
    for (const auto& d : r.diffusion) {
      for (const auto* v : {&d.var_i, &d.var_j})
        if (std::none_of(r.drift.begin(), r.drift.end(), [&](const DriftEquation& e) { return e.var == *v; }))
          throw Error(ErrorKind::UnboundVariable, "diffusion entry names '" + *v + "' without a drift", r.id);
      check_expr_scope(g, r, d.value, spaces);
    }
    if (!rhs_only_variables(r).empty())
      throw Error(ErrorKind::UnboundRhsVariable, "solving rules cannot introduce RHS variables", r.id);
    return;
  }
  if (!r.expr) throw Error(ErrorKind::InvalidArgument, "rule without clause expression", r.id);
  check_expr_scope(g, r, r.expr, spaces);
  if (r.clause == ClauseKind::With && expr::is_const(r.expr) && r.expr->value.sign() < 0)
    throw Error(ErrorKind::NegativeRate, "constant rate " + render(r.expr) + " is negative", r.id);
  factor_rate(g, desugar_clause(g, r));
}

void validate_graph_rule(const Grammar& g, const GraphRule& r) {
  auto check_side = [&](const std::vector<GraphTerm>& side, std::set<std::string>& labels) {
    for (const auto& t : side) {
      if (!labels.insert(t.label).second)
        throw Error(ErrorKind::DuplicateLabel, "label '" + t.label + "' used twice on one side", r.id);
      const TypeDecl* decl = g.find_type(t.type);
      if (!decl) throw Error(ErrorKind::UnknownIdentifier, "unknown type '" + t.type + "'", r.id);
      if (!decl->fanout)
        throw Error(ErrorKind::InvalidArgument, "type '" + t.type + "' is not a graph node type", r.id);
      if (decl->signature.size() != t.args.size())
        throw Error(ErrorKind::ArityMismatch, "arity mismatch for " + t.type, r.id);
      if (static_cast<int>(t.neighbors.size()) > *decl->fanout)
        throw Error(ErrorKind::FanoutExceeded,
                    t.type + " allows " + std::to_string(*decl->fanout) + " neighbor(s), got " +
                        std::to_string(t.neighbors.size()),
                    r.id);
    }
  };
  std::set<std::string> lhs_labels, rhs_labels;
  check_side(r.lhs, lhs_labels);
  for (const auto& k : r.kept) {
    if (!lhs_labels.count(k))
      throw Error(ErrorKind::UnknownIdentifier, "kept label '" + k + "' not on the LHS", r.id);
    if (!rhs_labels.insert(k).second)
      throw Error(ErrorKind::DuplicateLabel, "label '" + k + "' used twice on one side", r.id);
  }
  check_side(r.rhs, rhs_labels);
  if (!r.expr) throw Error(ErrorKind::InvalidArgument, "graph rule without clause", r.id);
}

}  // namespace

std::map<std::string, const Space*> rule_variable_spaces(const Grammar& g, const Rule& r) {
  std::map<std::string, const Space*> spaces;
  check_terms(g, r, r.lhs, spaces);
  check_terms(g, r, r.rhs, spaces);
  return spaces;
}

ValidationReport validate_grammar(const Grammar& g) {
  ValidationReport report;
  auto add = [&](ErrorKind k, std::string msg, std::string rule, SourceSpan span) {
    report.errors.push_back(Diagnostic{k, std::move(msg), std::move(rule), std::move(span)});
  };

  std::set<std::string> names;
  for (const auto& p : g.params)
    if (!names.insert(p.name).second)
      add(ErrorKind::DuplicateIdentifier, "duplicate param '" + p.name + "'", "", p.span);
  std::set<std::string> option_names;
  for (const auto& o : g.options)
    if (!option_names.insert(o.name).second)
      add(ErrorKind::DuplicateIdentifier, "duplicate option '" + o.name + "'", "", o.span);
  std::set<std::string> space_names;
  for (const auto& s : g.spaces) {
    if (!space_names.insert(s.name).second)
      add(ErrorKind::DuplicateIdentifier, "duplicate space '" + s.name + "'", "", {});
    if (s.kind == SpaceKind::Enumeration) {
      std::set<std::string> vals(s.values.begin(), s.values.end());
      if (s.values.empty() || vals.size() != s.values.size())
        add(ErrorKind::InvalidConstant, "enumeration " + s.name + " needs distinct values", "", {});
    }
    if (s.kind == SpaceKind::BoundedInt && s.lo > s.hi)
      add(ErrorKind::InvalidConstant, "empty integer range " + s.spelling(), "", {});
  }
  std::set<std::string> type_names;
  for (const auto& t : g.types) {
    if (!type_names.insert(t.name).second)
      add(ErrorKind::DuplicateIdentifier, "duplicate type '" + t.name + "'", "", t.span);
    for (const auto& s : t.signature)
      if (!g.find_space(s)) add(ErrorKind::UnknownIdentifier, "unknown space '" + s + "' in type " + t.name, "", t.span);
    if (t.max_copy && *t.max_copy < 1)
      add(ErrorKind::InvalidMaxCopy, "cap of " + t.name + " must be a positive integer", "", t.span);
    if (t.fanout && *t.fanout < 0)
      add(ErrorKind::InvalidArgument, "negative fanout for " + t.name, "", t.span);
  }
  if (!report.ok()) return report;

  std::set<std::string> rule_ids;
  for (const auto& r : g.rules) {
    if (!rule_ids.insert(r.id).second)
      add(ErrorKind::DuplicateIdentifier, "duplicate rule id '" + r.id + "'", r.id, r.span);
    try {
      validate_rule(g, r);
    } catch (const Error& e) {
      std::string msg = e.what();
      const std::string prefix = r.id + ": ";
      if (msg.rfind(prefix, 0) == 0) msg = msg.substr(prefix.size());
      add(e.kind(), msg, r.id, r.span);
    }
  }
  for (const auto& r : g.graph_rules) {
    if (!rule_ids.insert(r.id).second)
      add(ErrorKind::DuplicateIdentifier, "duplicate rule id '" + r.id + "'", r.id, r.span);
    try {
      validate_graph_rule(g, r);
    } catch (const Error& e) {
      std::string msg = e.what();
      const std::string prefix = r.id + ": ";
      if (msg.rfind(prefix, 0) == 0) msg = msg.substr(prefix.size());
      add(e.kind(), msg, r.id, r.span);
    }
  }

  for (const auto& init : g.initial) {
    const TypeDecl* decl = g.find_type(init.term.type);
    if (!decl) {
      add(ErrorKind::UnknownIdentifier, "unknown type '" + init.term.type + "' in init", "", init.term.span);
      continue;
    }
    if (decl->signature.size() != init.term.args.size()) {
      add(ErrorKind::ArityMismatch, "arity mismatch for " + init.term.type + " in init", "", init.term.span);
      continue;
    }
    for (std::size_t i = 0; i < init.term.args.size(); ++i) {
      const auto& a = init.term.args[i];
      if (a.kind != Arg::Kind::Const || !g.slot_space(*decl, i).contains(a.value))
        add(ErrorKind::InvalidConstant, "init terms take constants from their slot spaces", "",
            init.term.span);
    }
    if (init.count < 1) add(ErrorKind::InvalidConstant, "init count must be positive", "", init.term.span);
    if (decl->max_copy && init.count > *decl->max_copy)
      add(ErrorKind::CapExceeded, "init count exceeds the cap of " + decl->name, "", init.term.span);
  }
  return report;
}

void require_valid(const Grammar& g) {
  const auto report = validate_grammar(g);
  if (!report.ok()) {
    const auto& d = report.errors.front();
    throw Error(d.kind, d.span.str() + ": " + d.message, d.rule);
  }
}

// -------------------------------------------------------------- desugaring

Rule desugar_clause(const Grammar& g, const Rule& r) {
  if (r.clause != ClauseKind::SubjectTo) return r;
  const auto spaces = rule_variable_spaces(g, r);
  const auto rhs_only = rhs_only_variables(r);
  const ExprPtr& f = r.expr;

  std::vector<std::string> real_rhs, real_lhs;
  for (const auto& v : free_vars(f)) {
    auto it = spaces.find(v);
    if (it == spaces.end() || it->second->kind != SpaceKind::Real) continue;
    (rhs_only.count(v) ? real_rhs : real_lhs).push_back(v);
  }

  Rule out = r;
  out.clause = ClauseKind::With;
  if (real_rhs.empty() && real_lhs.empty()) {
    out.expr = expr::unary(ExprOp::Delta, f);
    return out;
  }
  if (real_rhs.size() == 1) {
    const std::string& y = real_rhs.front();
    auto sol = solve_linear(f, y);
    if (sol) {
      bool lhs_only = true;
      for (const auto& v : free_vars(*sol)) lhs_only = lhs_only && !rhs_only.count(v);
      if (lhs_only) {
        out.expr = expr::unary(ExprOp::Delta, expr::binary(ExprOp::Sub, expr::var(y), *sol));
        return out;
      }
    }
  }
  throw Error(ErrorKind::UnsolvableRealConstraint,
              "constraint " + render(f) + " is not solvable as an assignment of one RHS real variable",
              r.id);
}

// --------------------------------------------------------------- factoring

ExprPtr bind_params(const Grammar& g, const ExprPtr& e) {
  if (g.params.empty()) return e;
  std::map<std::string, ExprPtr> repl;
  for (const auto& p : g.params) repl.emplace(p.name, expr::constant(p.value));
  return substitute(e, repl);
}

FactoredRate factor_rate(const Grammar& g, const Rule& r) {
  if (r.clause == ClauseKind::Solving)
    throw Error(ErrorKind::InvalidArgument, "solving rules have no jump rate to factor", r.id);
  if (r.clause == ClauseKind::SubjectTo) return factor_rate(g, desugar_clause(g, r));

  const auto spaces = rule_variable_spaces(g, r);
  const auto lhs = lhs_variables(r);
  const auto order = rhs_only_ordered(r);
  const std::set<std::string> rhs_only(order.begin(), order.end());

  auto only_lhs = [&](const ExprPtr& e) {
    for (const auto& v : free_vars(e))
      if (rhs_only.count(v)) return false;
    return true;
  };

  std::vector<ExprPtr> pending = factors(r.expr);
  std::map<std::string, KernelBinding> kernels;

  // deterministic assignments from delta factors
  std::map<std::string, ExprPtr> assigned;
  std::vector<ExprPtr> after_assign;
  for (const auto& f : pending) {
    bool used = false;
    if (f->op == ExprOp::Delta && !only_lhs(f)) {
      for (const auto& v : order) {
        if (kernels.count(v) || !mentions(f->args[0], v)) continue;
        auto sol = solve_linear(f->args[0], v);
        if (!sol || !only_lhs(*sol)) continue;
        kernels.emplace(v, AssignKernel{v, *sol, spaces.at(v)->discrete()});
        assigned.emplace(v, *sol);
        used = true;
        break;
      }
    }
    if (!used) after_assign.push_back(f);
  }
  if (!assigned.empty())
    for (auto& f : after_assign) f = substitute(f, assigned);

  std::vector<ExprPtr> rest, weights;
  for (const auto& f : after_assign) {
    std::vector<std::string> open;
    for (const auto& v : free_vars(f))
      if (rhs_only.count(v) && !kernels.count(v)) open.push_back(v);
    if (open.empty()) {
      rest.push_back(f);
      continue;
    }
    const bool density = f->op == ExprOp::NormalPdf || f->op == ExprOp::UniformPdf;
    if (density && f->args[0]->op == ExprOp::Var && open.size() == 1 && open[0] == f->args[0]->name &&
        spaces.at(open[0])->kind == SpaceKind::Real && only_lhs(f->args[1]) && only_lhs(f->args[2])) {
      const std::string& y = open[0];
      if (f->op == ExprOp::NormalPdf)
        kernels.emplace(y, NormalKernel{y, f->args[1], f->args[2]});
      else
        kernels.emplace(y, UniformKernel{y, f->args[1], f->args[2]});
      continue;
    }
    for (const auto& v : open)
      if (!spaces.at(v)->finite())
        throw Error(ErrorKind::NonFactorable,
                    "factor " + render(f) + " couples RHS variable '" + v +
                        "' outside a recognized kernel form",
                    r.id);
    weights.push_back(f);
  }

  FiniteSumKernel finite;
  for (const auto& v : order) {
    if (kernels.count(v)) continue;
    const Space* s = spaces.at(v);
    if (!s->finite())
      throw Error(ErrorKind::UnboundRhsVariable,
                  "RHS variable '" + v + "' ranges over " + s->name + " and has no output kernel", r.id);
    finite.vars.push_back(FiniteVar{v, s->name, s->domain()});
  }

  FactoredRate out;
  out.rest = product(rest);
  out.pure_rate = out.rest;
  if (!finite.vars.empty()) {
    finite.weight = product(weights);
    ExprPtr total = finite.weight;
    for (auto it = finite.vars.rbegin(); it != finite.vars.rend(); ++it)
      total = expr::sum_over(it->var, it->space, it->domain, total);
    std::set<std::string> summed;
    for (const auto& fv : finite.vars) summed.insert(fv.var);
    bool closed = true;
    for (const auto& v : free_vars(finite.weight)) closed = closed && summed.count(v);
    if (closed) total = expr::constant(eval_expr(total, {}));
    out.pure_rate = expr::mul(out.rest, total);
  }

  // kernel bindings follow the order of first RHS appearance
  for (const auto& v : order) {
    auto it = kernels.find(v);
    if (it != kernels.end()) out.kernel.push_back(it->second);
  }
  if (!finite.vars.empty()) out.kernel.push_back(std::move(finite));
  return out;
}

ExprPtr recompose(const FactoredRate& f) {
  std::vector<ExprPtr> fs = factors(f.rest);
  for (const auto& b : f.kernel) {
    if (const auto* a = std::get_if<AssignKernel>(&b)) {
      fs.push_back(expr::unary(ExprOp::Delta, expr::binary(ExprOp::Sub, expr::var(a->var), a->value)));
    } else if (const auto* n = std::get_if<NormalKernel>(&b)) {
      fs.push_back(expr::call(ExprOp::NormalPdf, {expr::var(n->var), n->mean, n->sd}));
    } else if (const auto* u = std::get_if<UniformKernel>(&b)) {
      fs.push_back(expr::call(ExprOp::UniformPdf, {expr::var(u->var), u->lo, u->hi}));
    } else if (const auto* s = std::get_if<FiniteSumKernel>(&b)) {
      if (!expr::is_const(s->weight, 1)) {
        auto w = factors(s->weight);
        fs.insert(fs.end(), w.begin(), w.end());
      }
    }
  }
  return product(fs);
}

// ---------------------------------------------------------------- equality

namespace {

bool exprs_equal(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  return equal(a, b);
}

bool clauses_equal(const Rule& a, const Rule& b) {
  if (a.clause != b.clause || !exprs_equal(a.expr, b.expr)) return false;
  if (a.drift.size() != b.drift.size() || a.diffusion.size() != b.diffusion.size()) return false;
  for (std::size_t i = 0; i < a.drift.size(); ++i)
    if (a.drift[i].var != b.drift[i].var || !exprs_equal(a.drift[i].rhs, b.drift[i].rhs)) return false;
  for (std::size_t i = 0; i < a.diffusion.size(); ++i)
    if (a.diffusion[i].var_i != b.diffusion[i].var_i || a.diffusion[i].var_j != b.diffusion[i].var_j ||
        !exprs_equal(a.diffusion[i].value, b.diffusion[i].value))
      return false;
  return true;
}

bool same_multiset(std::vector<TermPattern> a, std::vector<TermPattern> b) {
  if (a.size() != b.size()) return false;
  for (const auto& t : a) {
    auto it = std::find(b.begin(), b.end(), t);
    if (it == b.end()) return false;
    b.erase(it);
  }
  return true;
}

bool graph_terms_equal(const GraphTerm& a, const GraphTerm& b) {
  return a.label == b.label && a.type == b.type && a.args == b.args && a.neighbors == b.neighbors;
}

bool types_equal(const Grammar& ga, const TypeDecl& a, const Grammar& gb, const TypeDecl& b) {
  if (a.name != b.name || a.max_copy != b.max_copy || a.fanout != b.fanout) return false;
  if (a.signature.size() != b.signature.size()) return false;
  for (std::size_t i = 0; i < a.signature.size(); ++i) {
    const Space* sa = ga.find_space(a.signature[i]);
    const Space* sb = gb.find_space(b.signature[i]);
    if (!sa || !sb) return false;
    if (sa->name != sb->name || sa->spelling() != sb->spelling()) return false;
  }
  return true;
}

bool constants_equal(const std::vector<NamedConstant>& a, const std::vector<NamedConstant>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].name != b[i].name || !(a[i].value == b[i].value)) return false;
  return true;
}

template <class RuleEq>
bool grammars_equal(const Grammar& a, const Grammar& b, RuleEq rule_eq) {
  if (!constants_equal(a.params, b.params) || !constants_equal(a.options, b.options)) return false;
  std::vector<const Space*> sa, sb;
  for (const auto& s : a.spaces)
    if (!s.anonymous) sa.push_back(&s);
  for (const auto& s : b.spaces)
    if (!s.anonymous) sb.push_back(&s);
  if (sa.size() != sb.size()) return false;
  for (std::size_t i = 0; i < sa.size(); ++i)
    if (sa[i]->name != sb[i]->name || sa[i]->spelling() != sb[i]->spelling()) return false;
  if (a.types.size() != b.types.size()) return false;
  for (std::size_t i = 0; i < a.types.size(); ++i)
    if (!types_equal(a, a.types[i], b, b.types[i])) return false;
  if (a.rules.size() != b.rules.size()) return false;
  for (std::size_t i = 0; i < a.rules.size(); ++i)
    if (!rule_eq(a.rules[i], b.rules[i])) return false;
  if (a.graph_rules.size() != b.graph_rules.size()) return false;
  for (std::size_t i = 0; i < a.graph_rules.size(); ++i) {
    const auto& x = a.graph_rules[i];
    const auto& y = b.graph_rules[i];
    if (x.id != y.id || x.kept != y.kept || x.clause != y.clause || !exprs_equal(x.expr, y.expr))
      return false;
    if (x.lhs.size() != y.lhs.size() || x.rhs.size() != y.rhs.size()) return false;
    for (std::size_t j = 0; j < x.lhs.size(); ++j)
      if (!graph_terms_equal(x.lhs[j], y.lhs[j])) return false;
    for (std::size_t j = 0; j < x.rhs.size(); ++j)
      if (!graph_terms_equal(x.rhs[j], y.rhs[j])) return false;
  }
  if (a.initial.size() != b.initial.size()) return false;
  for (std::size_t i = 0; i < a.initial.size(); ++i)
    if (!(a.initial[i].term == b.initial[i].term) || a.initial[i].count != b.initial[i].count) return false;
  return true;
}

}  // namespace

bool structurally_equal(const Rule& a, const Rule& b) {
  return a.id == b.id && a.lhs == b.lhs && a.rhs == b.rhs && clauses_equal(a, b);
}

bool semantically_equal(const Rule& a, const Rule& b) {
  return a.id == b.id && same_multiset(a.lhs, b.lhs) && same_multiset(a.rhs, b.rhs) && clauses_equal(a, b);
}

bool structurally_equal(const Grammar& a, const Grammar& b) {
  return grammars_equal(a, b, [](const Rule& x, const Rule& y) { return structurally_equal(x, y); });
}

bool semantically_equal(const Grammar& a, const Grammar& b) {
  return grammars_equal(a, b, [](const Rule& x, const Rule& y) { return semantically_equal(x, y); });
}

}  // namespace dg
