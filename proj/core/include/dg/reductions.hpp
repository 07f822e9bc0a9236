#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "dg/grammar.hpp"
#include "dg/pool.hpp"

namespace dg {

// ------------------------------------------------------ reaction networks

struct Reaction {
  std::vector<std::pair<std::string, std::int64_t>> inputs;   // species, stoichiometry
  std::vector<std::pair<std::string, std::int64_t>> outputs;
  Number rate;
};

struct ReactionNetwork {
  std::vector<std::string> species;  // first-appearance order
  std::vector<Reaction> reactions;
};

/// One reaction per line: `2A + B -> C : 0.5`. Either side may be empty
/// or `0`. `#` starts a comment.
ReactionNetwork parse_crn(const std::string& text, const std::string& file = "<crn>");

/// Species become parameterless unbounded types; each reaction becomes a
/// rule whose LHS repeats a species once per unit of stoichiometry.
Grammar import_crn(const ReactionNetwork& net);

/// a(i): species index of the i-th LHS term of the reaction's rule.
std::vector<std::size_t> crn_index_map(const ReactionNetwork& net, std::size_t reaction);

// --------------------------------------------------------- logic programs

struct HornClause {
  std::string head;
  std::vector<std::string> body;  // empty for an axiom
};

struct HornProgram {
  std::vector<std::string> atoms;  // first-appearance order
  std::vector<HornClause> clauses;
};

/// `p.` axioms and `q :- p, r.` clauses; `%` or `#` start comments.
HornProgram parse_horn(const std::string& text, const std::string& file = "<lp>");

/// Each atom becomes a cap-1 type; p1,...,pn => q becomes the monotonic
/// rule p1,...,pn -> q,p1,...,pn with rate 1. Repeated body atoms collapse;
/// clauses whose head is in their own body can never fire and are dropped.
Grammar import_logic_program(const HornProgram& prog);

/// Least Herbrand model by counter-based forward chaining.
std::set<std::string> least_model(const HornProgram& prog);

// ------------------------------------------------------- graph grammars

struct GraphRuleSets {
  std::vector<std::size_t> i1, i2, i3;  // LHS indices: kept, consumed, consumed and not reused
  std::vector<std::size_t> j1, j2;      // RHS term indices: reused label, fresh label
};
GraphRuleSets graph_rule_sets(const GraphRule& r);

/// Name of the OID variable bound to a label.
std::string oid_var(const std::string& label);

inline constexpr const char* kOidGenType = "OIDGen";
inline constexpr const char* kNullType = "Null";

/// Rule form of a graph rule against a grammar whose node types have been
/// expanded to T(oid, params..., oid x fanout).
Rule translate_graph_rule(const Grammar& source, const Grammar& translated, const GraphRule& r);

/// Whole-grammar translation: node types expanded, OIDGen(int) cap 1 and
/// Null(oid) added, graph rules translated. Node-type init entries get
/// consecutive OIDs and nil neighbors; OIDGen starts after them. With
/// `cleanup`, one rule per node-type neighbor slot resets a pointer to a
/// Null-marked OID back to nil.
Grammar translate_graph_grammar(const Grammar& g, bool cleanup = false);

// ---------------------------------------------------------------- strings

inline constexpr const char* kCellType = "Cell";
inline constexpr char kHeadSymbol = '^';

/// Cell(i, s_i, i+1) chain with the last pointer nil, plus OIDGen(n).
/// Requires Cell(oid, Sym, oid) and OIDGen in the grammar.
PoolState encode_string(const Grammar& g, const std::string& s, std::shared_ptr<const PoolSchema> schema = nullptr);

/// Follows the chain from its unique unreferenced cell. Cells whose symbol
/// is in `transparent` are skipped in the output. Non-cell types are
/// ignored. Throws MalformedChain on cycles, forks and dangling pointers.
std::string decode_string(const Grammar& g, const PoolState& p, const std::string& transparent = "");

struct LSystem {
  std::string alphabet;                        // single-character symbols
  std::map<char, std::string> productions;     // missing symbols map to themselves
  std::string axiom;
};

/// `axiom: A` and `A -> AB` lines; `alphabet: AB` is optional.
LSystem parse_lsystem(const std::string& text, const std::string& file = "<lsys>");

/// Synchronous rewrite of every symbol.
std::string lsystem_step(const LSystem& ls, const std::string& s);

/// Graph grammar source for one derivation pass: a head marker walks the
/// chain rewriting each symbol as it passes, so exactly one match exists at
/// every step; the head retires at the end of the string.
std::string lsystem_graph_source(const LSystem& ls);
/// Translated grammar with the axiom (head first) as its init.
Grammar lsystem_grammar(const LSystem& ls);

}  // namespace dg
