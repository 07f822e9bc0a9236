#include "dg/reductions.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <sstream>

#include "dg/parser.hpp"

namespace dg {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string strip_comment(const std::string& line, const std::string& markers) {
  const auto pos = line.find_first_of(markers);
  return pos == std::string::npos ? line : line.substr(0, pos);
}

bool is_identifier(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

Error syntax(const std::string& file, std::size_t line, const std::string& msg) {
  return Error(ErrorKind::Syntax, file + ":" + std::to_string(line) + ": " + msg, file);
}

void note_atom(std::vector<std::string>& atoms, const std::string& a) {
  if (std::find(atoms.begin(), atoms.end(), a) == atoms.end()) atoms.push_back(a);
}

TermPattern bare_term(const std::string& type) {
  TermPattern t;
  t.type = type;
  return t;
}

}  // namespace

// ------------------------------------------------------ reaction networks

ReactionNetwork parse_crn(const std::string& text, const std::string& file) {
  ReactionNetwork net;
  std::istringstream is(text);
  std::string raw;
  std::size_t lineno = 0;
  auto parse_side = [&](const std::string& side, std::size_t ln) {
    std::vector<std::pair<std::string, std::int64_t>> out;
    const std::string s = trim(side);
    if (s.empty() || s == "0") return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, '+')) {
      item = trim(item);
      std::size_t k = 0;
      while (k < item.size() && std::isdigit(static_cast<unsigned char>(item[k]))) ++k;
      const std::int64_t coef = k ? std::stoll(item.substr(0, k)) : 1;
      const std::string name = trim(item.substr(k));
      if (!is_identifier(name)) throw syntax(file, ln, "bad species '" + item + "'");
      if (coef < 1) throw syntax(file, ln, "stoichiometry must be positive");
      note_atom(net.species, name);
      auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == name; });
      if (it == out.end()) out.emplace_back(name, coef);
      else it->second += coef;
    }
    return out;
  };
  while (std::getline(is, raw)) {
    ++lineno;
    const std::string line = trim(strip_comment(raw, "#"));
    if (line.empty()) continue;
    const auto arrow = line.find("->");
    const auto colon = line.rfind(':');
    if (arrow == std::string::npos || colon == std::string::npos || colon < arrow)
      throw syntax(file, lineno, "expected 'inputs -> outputs : rate'");
    Reaction r;
    r.inputs = parse_side(line.substr(0, arrow), lineno);
    r.outputs = parse_side(line.substr(arrow + 2, colon - arrow - 2), lineno);
    const std::string rate = trim(line.substr(colon + 1));
    try {
      r.rate = Number::parse(rate);
    } catch (const std::exception&) {
      throw syntax(file, lineno, "bad rate constant '" + rate + "'");
    }
    if (r.rate.sign() < 0) throw syntax(file, lineno, "rate constants must be nonnegative");
    net.reactions.push_back(std::move(r));
  }
  return net;
}

Grammar import_crn(const ReactionNetwork& net) {
  Grammar g;
  for (const auto& s : net.species) {
    TypeDecl t;
    t.name = s;
    g.types.push_back(t);
  }
  for (std::size_t k = 0; k < net.reactions.size(); ++k) {
    const Reaction& r = net.reactions[k];
    Rule rule;
    rule.id = "r" + std::to_string(k + 1);
    for (const auto& [sp, m] : r.inputs)
      for (std::int64_t i = 0; i < m; ++i) rule.lhs.push_back(bare_term(sp));
    for (const auto& [sp, n] : r.outputs)
      for (std::int64_t i = 0; i < n; ++i) rule.rhs.push_back(bare_term(sp));
    rule.expr = expr::constant(r.rate);
    g.rules.push_back(std::move(rule));
  }
  return g;
}

std::vector<std::size_t> crn_index_map(const ReactionNetwork& net, std::size_t reaction) {
  std::vector<std::size_t> a;
  for (const auto& [sp, m] : net.reactions.at(reaction).inputs) {
    const auto idx = static_cast<std::size_t>(std::find(net.species.begin(), net.species.end(), sp) - net.species.begin());
    for (std::int64_t i = 0; i < m; ++i) a.push_back(idx);
  }
  return a;
}

// --------------------------------------------------------- logic programs

HornProgram parse_horn(const std::string& text, const std::string& file) {
  HornProgram prog;
  std::string stripped;
  std::istringstream is(text);
  std::string raw;
  std::vector<std::size_t> line_of;  // line number of each character
  std::size_t lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    const std::string line = strip_comment(raw, "%#");
    stripped += line + "\n";
    line_of.insert(line_of.end(), line.size() + 1, lineno);
  }
  std::size_t start = 0;
  while (true) {
    const auto dot = stripped.find('.', start);
    const std::string clause = trim(stripped.substr(start, dot == std::string::npos ? std::string::npos : dot - start));
    std::size_t ln = 1;
    for (std::size_t i = start; i < stripped.size(); ++i)
      if (!std::isspace(static_cast<unsigned char>(stripped[i]))) {
        ln = line_of[i];
        break;
      }
    if (dot == std::string::npos) {
      if (!clause.empty()) throw syntax(file, ln, "clause not terminated by '.'");
      break;
    }
    start = dot + 1;
    if (clause.empty()) throw syntax(file, ln, "empty clause");
    HornClause c;
    const auto neck = clause.find(":-");
    c.head = trim(clause.substr(0, neck));
    if (!is_identifier(c.head)) throw syntax(file, ln, "bad atom '" + c.head + "'");
    note_atom(prog.atoms, c.head);
    if (neck != std::string::npos) {
      std::stringstream ss(clause.substr(neck + 2));
      std::string atom;
      while (std::getline(ss, atom, ',')) {
        atom = trim(atom);
        if (!is_identifier(atom)) throw syntax(file, ln, "bad atom '" + atom + "'");
        note_atom(prog.atoms, atom);
        c.body.push_back(atom);
      }
    }
    prog.clauses.push_back(std::move(c));
  }
  return prog;
}

Grammar import_logic_program(const HornProgram& prog) {
  Grammar g;
  for (const auto& a : prog.atoms) {
    TypeDecl t;
    t.name = a;
    t.max_copy = 1;
    g.types.push_back(t);
  }
  for (std::size_t k = 0; k < prog.clauses.size(); ++k) {
    const HornClause& c = prog.clauses[k];
    std::vector<std::string> body;
    for (const auto& b : c.body) note_atom(body, b);
    if (std::find(body.begin(), body.end(), c.head) != body.end()) continue;
    Rule rule;
    rule.id = "c" + std::to_string(k + 1);
    for (const auto& b : body) rule.lhs.push_back(bare_term(b));
    rule.rhs.push_back(bare_term(c.head));
    for (const auto& b : body) rule.rhs.push_back(bare_term(b));
    rule.expr = expr::constant(1);
    g.rules.push_back(std::move(rule));
  }
  return g;
}

std::set<std::string> least_model(const HornProgram& prog) {
  std::map<std::string, std::vector<std::size_t>> watchers;
  std::vector<std::size_t> missing(prog.clauses.size());
  std::deque<std::string> agenda;
  std::set<std::string> model;
  for (std::size_t k = 0; k < prog.clauses.size(); ++k) {
    std::set<std::string> body(prog.clauses[k].body.begin(), prog.clauses[k].body.end());
    missing[k] = body.size();
    for (const auto& b : body) watchers[b].push_back(k);
    if (body.empty()) agenda.push_back(prog.clauses[k].head);
  }
  while (!agenda.empty()) {
    std::string a = agenda.front();
    agenda.pop_front();
    if (!model.insert(a).second) continue;
    for (std::size_t k : watchers[a])
      if (--missing[k] == 0) agenda.push_back(prog.clauses[k].head);
  }
  return model;
}

// ------------------------------------------------------- graph grammars

GraphRuleSets graph_rule_sets(const GraphRule& r) {
  GraphRuleSets s;
  std::set<std::string> kept(r.kept.begin(), r.kept.end());
  std::set<std::string> rhs_labels;
  for (const auto& t : r.rhs) rhs_labels.insert(t.label);
  std::set<std::string> consumed;
  for (std::size_t i = 0; i < r.lhs.size(); ++i) {
    if (kept.count(r.lhs[i].label)) {
      s.i1.push_back(i);
    } else {
      s.i2.push_back(i);
      consumed.insert(r.lhs[i].label);
      if (!rhs_labels.count(r.lhs[i].label)) s.i3.push_back(i);
    }
  }
  for (std::size_t j = 0; j < r.rhs.size(); ++j) (consumed.count(r.rhs[j].label) ? s.j1 : s.j2).push_back(j);
  return s;
}

std::string oid_var(const std::string& label) {
  std::string v = "oid_";
  for (char c : label) v += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return v;
}

namespace {

Arg oid_arg(const std::string& label) {
  if (label == "nil") return Arg::constant(Value::integer(kNilOid));
  return Arg::variable(oid_var(label));
}

TermPattern expand_graph_term(const Grammar& source, const GraphTerm& t) {
  const TypeDecl* decl = source.find_type(t.type);
  TermPattern out;
  out.type = t.type;
  out.span = t.span;
  out.args.push_back(Arg::variable(oid_var(t.label)));
  for (const auto& a : t.args) out.args.push_back(a);
  const int fanout = decl && decl->fanout ? *decl->fanout : 0;
  if (static_cast<int>(t.neighbors.size()) > fanout)
    throw Error(ErrorKind::FanoutExceeded, t.type + " allows " + std::to_string(fanout) + " neighbor(s)", t.label);
  for (int k = 0; k < fanout; ++k)
    out.args.push_back(k < static_cast<int>(t.neighbors.size()) ? oid_arg(t.neighbors[k])
                                                                : Arg::constant(Value::integer(kNilOid)));
  return out;
}

}  // namespace

Rule translate_graph_rule(const Grammar& source, const Grammar& translated, const GraphRule& r) {
  {
    std::set<std::string> seen;
    for (const auto& t : r.lhs)
      if (!seen.insert(t.label).second) throw Error(ErrorKind::DuplicateLabel, "label '" + t.label + "' repeats", r.id);
    seen.clear();
    for (const auto& k : r.kept)
      if (!seen.insert(k).second) throw Error(ErrorKind::DuplicateLabel, "label '" + k + "' repeats", r.id);
    for (const auto& t : r.rhs)
      if (!seen.insert(t.label).second) throw Error(ErrorKind::DuplicateLabel, "label '" + t.label + "' repeats", r.id);
  }
  const GraphRuleSets sets = graph_rule_sets(r);
  Rule out;
  out.id = r.id;
  out.span = r.span;
  for (const auto& t : r.lhs) out.lhs.push_back(expand_graph_term(source, t));
  TermPattern gen_in{kOidGenType, {Arg::variable("next_oid")}, {}};
  out.lhs.push_back(gen_in);

  for (std::size_t i : sets.i1) out.rhs.push_back(out.lhs[i]);
  for (const auto& t : r.rhs) out.rhs.push_back(expand_graph_term(source, t));
  for (std::size_t i : sets.i3)
    out.rhs.push_back(TermPattern{kNullType, {Arg::variable(oid_var(r.lhs[i].label))}, {}});
  const auto j_count = static_cast<std::int64_t>(sets.j1.size() + sets.j2.size());
  out.rhs.push_back(TermPattern{kOidGenType, {Arg::variable("next_oid_out")}, {}});

  // The source clause becomes a `with` rate before the OID deltas join it.
  Rule clause_only;
  clause_only.id = r.id;
  clause_only.lhs = out.lhs;
  clause_only.rhs = out.rhs;
  clause_only.clause = r.clause;
  clause_only.expr = r.expr;
  ExprPtr rate = r.clause == ClauseKind::With ? r.expr : desugar_clause(translated, clause_only).expr;

  using namespace expr;
  std::vector<ExprPtr> fs;
  for (auto& f : factors(rate))
    if (!is_const(f, 1)) fs.push_back(f);
  fs.push_back(call(ExprOp::Delta, {sub(var("next_oid_out"), add(var("next_oid"), constant(j_count)))}));
  for (std::size_t k = 0; k < sets.j2.size(); ++k) {
    const std::string& label = r.rhs[sets.j2[k]].label;
    ExprPtr target = k == 0 ? var("next_oid") : add(var("next_oid"), constant(static_cast<std::int64_t>(k)));
    fs.push_back(call(ExprOp::Delta, {sub(var(oid_var(label)), target)}));
  }
  out.clause = ClauseKind::With;
  out.expr = product(fs);
  return out;
}

Grammar translate_graph_grammar(const Grammar& g, bool cleanup) {
  require_valid(g);
  Grammar out;
  out.params = g.params;
  out.options = g.options;
  out.spaces = g.spaces;
  for (const auto& t : g.types) {
    if (t.name == kOidGenType || t.name == kNullType)
      throw Error(ErrorKind::DuplicateIdentifier, "type name " + t.name + " is reserved for graph translation", t.name);
    TypeDecl d = t;
    if (t.fanout) {
      d.signature.clear();
      d.signature.push_back("oid");
      for (const auto& s : t.signature) d.signature.push_back(s);
      for (int k = 0; k < *t.fanout; ++k) d.signature.push_back("oid");
      d.fanout.reset();
    }
    out.types.push_back(std::move(d));
  }
  TypeDecl gen;
  gen.name = kOidGenType;
  gen.signature = {"int"};
  gen.max_copy = 1;
  out.types.push_back(gen);
  TypeDecl null;
  null.name = kNullType;
  null.signature = {"oid"};
  out.types.push_back(null);

  out.rules = g.rules;
  for (const auto& r : g.graph_rules) out.rules.push_back(translate_graph_rule(g, out, r));

  if (cleanup) {
    for (const auto& t : g.types) {
      if (!t.fanout) continue;
      const std::size_t width = 1 + t.signature.size() + static_cast<std::size_t>(*t.fanout);
      for (int k = 0; k < *t.fanout; ++k) {
        Rule r;
        r.id = "cleanup_" + t.name + "_" + std::to_string(k + 1);
        TermPattern lhs{t.name, {}, {}};
        for (std::size_t i = 0; i < width; ++i) lhs.args.push_back(Arg::variable("v" + std::to_string(i)));
        TermPattern rhs = lhs;
        const std::size_t slot = 1 + t.signature.size() + static_cast<std::size_t>(k);
        rhs.args[slot] = Arg::constant(Value::integer(kNilOid));
        TermPattern marker{kNullType, {Arg::variable("v" + std::to_string(slot))}, {}};
        r.lhs = {lhs, marker};
        r.rhs = {rhs, marker};
        r.expr = expr::constant(1);
        out.rules.push_back(std::move(r));
      }
    }
  }

  std::int64_t next = 0;
  for (const auto& e : g.initial) {
    const TypeDecl* decl = g.find_type(e.term.type);
    if (decl && decl->fanout) {
      for (std::int64_t c = 0; c < e.count; ++c) {
        InitEntry ie;
        ie.term.type = e.term.type;
        ie.term.args.push_back(Arg::constant(Value::integer(next++)));
        for (const auto& a : e.term.args) ie.term.args.push_back(a);
        for (int k = 0; k < *decl->fanout; ++k) ie.term.args.push_back(Arg::constant(Value::integer(kNilOid)));
        out.initial.push_back(std::move(ie));
      }
    } else {
      out.initial.push_back(e);
    }
  }
  InitEntry gi;
  gi.term = TermPattern{kOidGenType, {Arg::constant(Value::integer(next))}, {}};
  out.initial.push_back(gi);
  require_valid(out);
  return out;
}

// ---------------------------------------------------------------- strings

namespace {

struct CellLayout {
  std::uint32_t cell;
  std::uint32_t gen;
  const Space* sym;
};

CellLayout cell_layout(const Grammar& g) {
  auto cell = g.type_index(kCellType);
  auto gen = g.type_index(kOidGenType);
  if (!cell || !gen) throw Error(ErrorKind::UnknownIdentifier, "string encoding needs Cell and OIDGen types");
  const TypeDecl& d = g.types[*cell];
  if (d.signature.size() != 3 || g.slot_space(d, 0).kind != SpaceKind::Oid ||
      g.slot_space(d, 1).kind != SpaceKind::Enumeration || g.slot_space(d, 2).kind != SpaceKind::Oid)
    throw Error(ErrorKind::ArityMismatch, "Cell must be Cell(oid, symbols, oid)");
  return {*cell, *gen, &g.slot_space(d, 1)};
}

std::int64_t symbol_index(const Space& sym, char c) {
  for (std::size_t i = 0; i < sym.values.size(); ++i)
    if (sym.values[i] == std::string(1, c)) return static_cast<std::int64_t>(i);
  throw Error(ErrorKind::InvalidConstant, std::string("symbol '") + c + "' is not in the alphabet");
}

}  // namespace

PoolState encode_string(const Grammar& g, const std::string& s, std::shared_ptr<const PoolSchema> schema) {
  const CellLayout L = cell_layout(g);
  PoolState p(schema ? schema : PoolSchema::from(g));
  const auto n = static_cast<std::int64_t>(s.size());
  for (std::int64_t i = 0; i < n; ++i) {
    GroundTerm t;
    t.type = L.cell;
    t.args = {Value::integer(i), Value::integer(symbol_index(*L.sym, s[static_cast<std::size_t>(i)])),
              Value::integer(i + 1 < n ? i + 1 : kNilOid)};
    p.add(t);
  }
  p.add(GroundTerm{L.gen, {Value::integer(n)}});
  return p;
}

std::string decode_string(const Grammar& g, const PoolState& p, const std::string& transparent) {
  const CellLayout L = cell_layout(g);
  std::map<std::int64_t, std::pair<std::int64_t, std::int64_t>> cells;  // oid -> (symbol, next)
  auto [b, e] = p.type_range(L.cell);
  for (auto it = b; it != e; ++it) {
    const std::int64_t oid = it->first.args[0].as_integer();
    if (it->second != 1 || !cells.emplace(oid, std::make_pair(it->first.args[1].as_integer(), it->first.args[2].as_integer())).second)
      throw Error(ErrorKind::MalformedChain, "OID " + std::to_string(oid) + " labels more than one cell");
  }
  if (cells.empty()) return "";
  std::map<std::int64_t, int> referenced;
  for (const auto& [oid, c] : cells) {
    if (c.second == kNilOid) continue;
    if (!cells.count(c.second))
      throw Error(ErrorKind::MalformedChain, "cell " + std::to_string(oid) + " points at missing OID " + std::to_string(c.second));
    if (++referenced[c.second] > 1)
      throw Error(ErrorKind::MalformedChain, "OID " + std::to_string(c.second) + " has two predecessors");
  }
  std::vector<std::int64_t> starts;
  for (const auto& [oid, c] : cells)
    if (!referenced.count(oid)) starts.push_back(oid);
  if (starts.size() != 1)
    throw Error(ErrorKind::MalformedChain, starts.empty() ? "cells form a cycle" : "cells form more than one chain");
  std::string out;
  std::size_t visited = 0;
  for (std::int64_t cur = starts.front(); cur != kNilOid; cur = cells[cur].second) {
    if (++visited > cells.size()) throw Error(ErrorKind::MalformedChain, "cells form a cycle");
    const std::string& sym = L.sym->values[static_cast<std::size_t>(cells[cur].first)];
    if (sym.size() == 1 && transparent.find(sym[0]) != std::string::npos) continue;
    out += sym;
  }
  if (visited != cells.size()) throw Error(ErrorKind::MalformedChain, "cells off the main chain form a cycle");
  return out;
}

LSystem parse_lsystem(const std::string& text, const std::string& file) {
  LSystem ls;
  std::istringstream is(text);
  std::string raw;
  std::size_t lineno = 0;
  bool have_axiom = false;
  auto add_symbols = [&](const std::string& s) {
    for (char c : s) {
      if (std::isspace(static_cast<unsigned char>(c))) continue;
      if (c == kHeadSymbol || c == '\'' || c == '\\')
        throw syntax(file, lineno, std::string("symbol '") + c + "' is reserved");
      if (ls.alphabet.find(c) == std::string::npos) ls.alphabet += c;
    }
  };
  auto squeeze = [](const std::string& s) {
    std::string o;
    for (char c : s)
      if (!std::isspace(static_cast<unsigned char>(c))) o += c;
    return o;
  };
  while (std::getline(is, raw)) {
    ++lineno;
    const std::string line = trim(strip_comment(raw, "#"));
    if (line.empty()) continue;
    if (line.rfind("axiom:", 0) == 0) {
      ls.axiom = squeeze(line.substr(6));
      add_symbols(ls.axiom);
      have_axiom = true;
    } else if (line.rfind("alphabet:", 0) == 0) {
      add_symbols(line.substr(9));
    } else {
      const auto arrow = line.find("->");
      if (arrow == std::string::npos) throw syntax(file, lineno, "expected 'X -> word'");
      const std::string lhs = squeeze(line.substr(0, arrow));
      if (lhs.size() != 1) throw syntax(file, lineno, "productions rewrite a single symbol");
      const std::string rhs = squeeze(line.substr(arrow + 2));
      add_symbols(lhs);
      add_symbols(rhs);
      if (!ls.productions.emplace(lhs[0], rhs).second)
        throw syntax(file, lineno, "second production for '" + lhs + "'");
    }
  }
  if (!have_axiom) throw syntax(file, lineno, "missing 'axiom:' line");
  return ls;
}

std::string lsystem_step(const LSystem& ls, const std::string& s) {
  std::string out;
  for (char c : s) {
    auto it = ls.productions.find(c);
    out += it == ls.productions.end() ? std::string(1, c) : it->second;
  }
  return out;
}

std::string lsystem_graph_source(const LSystem& ls) {
  auto q = [](char c) { return std::string("'") + c + "'"; };
  std::ostringstream os;
  os << "space Sym = {";
  for (std::size_t i = 0; i < ls.alphabet.size(); ++i) os << q(ls.alphabet[i]) << ", ";
  os << q(kHeadSymbol) << "};\n";
  os << "type Cell(Sym) : fanout 1;\n";
  for (char a : ls.alphabet) {
    auto it = ls.productions.find(a);
    const std::string w = it == ls.productions.end() ? std::string(1, a) : it->second;
    os << "graph rule step_";
    if (std::isalnum(static_cast<unsigned char>(a))) os << a;
    else os << static_cast<int>(static_cast<unsigned char>(a));
    os << ": h := Cell(" << q(kHeadSymbol)
       << "; [x]), x := Cell(" << q(a) << "; [y]) -> ";
    if (w.empty()) {
      os << "h := Cell(" << q(kHeadSymbol) << "; [y])";
    } else {
      // h carries w[0]; fresh cells f1.. carry the rest; x becomes the head.
      for (std::size_t i = 0; i < w.size(); ++i) {
        const std::string self = i == 0 ? "h" : "f" + std::to_string(i);
        const std::string next = i + 1 < w.size() ? "f" + std::to_string(i + 1) : "x";
        os << self << " := Cell(" << q(w[i]) << "; [" << next << "]), ";
      }
      os << "x := Cell(" << q(kHeadSymbol) << "; [y])";
    }
    os << " with 1;\n";
  }
  os << "graph rule retire: p := Cell(s; [h]), h := Cell(" << q(kHeadSymbol) << "; [nil]) -> p := Cell(s; [nil]) with 1;\n";
  return os.str();
}

Grammar lsystem_grammar(const LSystem& ls) {
  Grammar g = translate_graph_grammar(parse_grammar_or_throw(lsystem_graph_source(ls), "<lsystem>"));
  g.initial.clear();
  const PoolState p = encode_string(g, std::string(1, kHeadSymbol) + ls.axiom);
  for (const auto& [t, n] : p.counts()) {
    InitEntry e;
    e.term.type = g.types[t.type].name;
    for (const auto& v : t.args) e.term.args.push_back(Arg::constant(v));
    e.count = n;
    g.initial.push_back(std::move(e));
  }
  require_valid(g);
  return g;
}

}  // namespace dg
