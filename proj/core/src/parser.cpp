#include "dg/parser.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace dg {

std::string ParseError::str() const {
  std::string s = span.str() + ": " + message;
  if (!expected.empty()) {
    s += " (expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) s += (i ? ", " : "") + expected[i];
    s += ")";
  }
  return s;
}

namespace {

enum class Tok { Ident, Number, String, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::uint32_t line = 1, column = 1;
};

struct SyntaxFailure {
  ParseError error;
};

class Lexer {
 public:
  Lexer(std::string_view src, const std::string& file) : src_(src), file_(file) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      Token t;
      t.line = line_;
      t.column = col_;
      if (pos_ >= src_.size()) {
        t.kind = Tok::End;
        out.push_back(t);
        return out;
      }
      const char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t b = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
          advance();
        t.kind = Tok::Ident;
        t.text = std::string(src_.substr(b, pos_ - b));
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        std::size_t b = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
        if (pos_ + 1 < src_.size() && src_[pos_] == '.' &&
            std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
          advance();
          while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
          std::size_t look = pos_ + 1;
          if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
          if (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
            while (pos_ < look) advance();
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
          }
        }
        t.kind = Tok::Number;
        t.text = std::string(src_.substr(b, pos_ - b));
      } else if (c == '\'') {
        advance();
        std::size_t b = pos_;
        while (pos_ < src_.size() && src_[pos_] != '\'' && src_[pos_] != '\n') advance();
        if (pos_ >= src_.size() || src_[pos_] != '\'')
          throw SyntaxFailure{{span(t), "unterminated quoted constant", {"'"}}};
        t.kind = Tok::String;
        t.text = std::string(src_.substr(b, pos_ - b));
        advance();
      } else {
        static const char* two[] = {"->", ":=", "<=", ">=", "==", "!=", ".."};
        t.kind = Tok::Punct;
        for (const char* op : two) {
          if (src_.substr(pos_, 2) == op) {
            t.text = op;
            advance();
            advance();
            break;
          }
        }
        if (t.text.empty()) {
          if (std::string_view("(),;:[]{}+-*/^<>=").find(c) == std::string_view::npos)
            throw SyntaxFailure{{span(t), std::string("unexpected character '") + c + "'", {}}};
          t.text = std::string(1, c);
          advance();
        }
      }
      out.push_back(std::move(t));
    }
  }

 private:
  SourceSpan span(const Token& t) const { return SourceSpan{file_, t.line, t.column}; }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  std::string file_;
  std::size_t pos_ = 0;
  std::uint32_t line_ = 1, col_ = 1;
};

bool is_lower_ident(const std::string& s) { return !s.empty() && (std::islower(static_cast<unsigned char>(s[0])) || s[0] == '_'); }

class Parser {
 public:
  Parser(std::vector<Token> toks, std::string file) : toks_(std::move(toks)), file_(std::move(file)) {}

  Grammar grammar;
  std::vector<ParseError> errors;

  void parse_file() {
    while (peek().kind != Tok::End) {
      const std::size_t start = pos_;
      try {
        parse_decl();
      } catch (const SyntaxFailure& f) {
        errors.push_back(f.error);
        recover(start);
      } catch (const Error& e) {
        errors.push_back(ParseError{span(toks_[start]), e.what(), {}, e.kind()});
        recover(start);
      }
    }
  }

  ExprPtr parse_standalone_expr() {
    ExprPtr e = parse_expr();
    if (peek().kind != Tok::End) fail("unexpected trailing input", {"end of input"});
    return e;
  }

 private:
  const Token& peek(std::size_t k = 0) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool is_punct(const char* p, std::size_t k = 0) const {
    return peek(k).kind == Tok::Punct && peek(k).text == p;
  }
  bool is_word(const char* w, std::size_t k = 0) const {
    return peek(k).kind == Tok::Ident && peek(k).text == w;
  }
  SourceSpan span(const Token& t) const { return SourceSpan{file_, t.line, t.column}; }

  [[noreturn]] void fail(const std::string& msg, std::vector<std::string> expected) const {
    const Token& t = peek();
    std::string found = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
    throw SyntaxFailure{{span(t), msg + ", found " + found, std::move(expected)}};
  }
  void expect_punct(const char* p) {
    if (!is_punct(p)) fail(std::string("expected '") + p + "'", {std::string("'") + p + "'"});
    next();
  }
  void expect_word(const char* w) {
    if (!is_word(w)) fail(std::string("expected '") + w + "'", {std::string("'") + w + "'"});
    next();
  }
  std::string expect_ident(const char* what) {
    if (peek().kind != Tok::Ident) fail(std::string("expected ") + what, {what});
    return next().text;
  }

  void recover(std::size_t start) {
    if (pos_ == start) next();
    int depth = 0;
    while (peek().kind != Tok::End) {
      const Token& t = next();
      if (t.kind != Tok::Punct) continue;
      if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
      if (t.text == ")" || t.text == "]" || t.text == "}") --depth;
      if (t.text == ";" && depth <= 0) return;
    }
  }

  // ---------------------------------------------------------- decls

  void parse_decl() {
    const Token& t = peek();
    if (t.kind != Tok::Ident)
      fail("expected a declaration", {"param", "option", "space", "type", "rule", "graph", "init"});
    if (t.text == "param" || t.text == "option") return parse_constant_decl(t.text == "param");
    if (t.text == "space") return parse_space_decl();
    if (t.text == "type") return parse_type_decl();
    if (t.text == "rule") return parse_rule();
    if (t.text == "graph") return parse_graph_rule();
    if (t.text == "init") return parse_init();
    fail("expected a declaration", {"param", "option", "space", "type", "rule", "graph", "init"});
  }

  void parse_constant_decl(bool is_param) {
    next();
    const Token& name_tok = peek();
    NamedConstant c;
    c.name = expect_ident("name");
    c.span = span(name_tok);
    expect_punct("=");
    ExprPtr e = parse_expr();
    if (!free_vars(e).empty() && is_param) {
      // params may refer to earlier params
      e = bind_params(grammar, e);
    }
    if (!free_vars(e).empty()) fail("constant declarations need a constant value", {"number"});
    c.value = eval_expr(e, {});
    expect_punct(";");
    (is_param ? grammar.params : grammar.options).push_back(std::move(c));
  }

  std::string parse_space_ref() {
    if (is_punct("{")) {
      next();
      std::vector<std::string> values;
      while (true) {
        if (peek().kind != Tok::String) fail("expected a quoted value", {"'value'"});
        values.push_back(next().text);
        if (is_punct(",")) {
          next();
          continue;
        }
        break;
      }
      expect_punct("}");
      return grammar.intern_space(Space::enumeration("", std::move(values)));
    }
    if (is_word("int") && is_punct("[", 1)) {
      next();
      next();
      const std::int64_t lo = parse_signed_int();
      expect_punct("..");
      const std::int64_t hi = parse_signed_int();
      expect_punct("]");
      return grammar.intern_space(Space::bounded("", lo, hi));
    }
    const Token& t = peek();
    const std::string name = expect_ident("space");
    if (!grammar.find_space(name))
      throw SyntaxFailure{{span(t), "unknown space '" + name + "'", {}, ErrorKind::UnknownIdentifier}};
    return name;
  }

  std::int64_t parse_signed_int() {
    bool negative = false;
    if (is_punct("-")) {
      next();
      negative = true;
    }
    if (peek().kind != Tok::Number) fail("expected an integer", {"integer"});
    const Token& t = next();
    Number n = Number::parse(t.text);
    if (!n.is_integer()) throw SyntaxFailure{{span(t), "expected an integer", {"integer"}}};
    return negative ? -n.to_integer() : n.to_integer();
  }

  void parse_space_decl() {
    next();
    const Token& name_tok = peek();
    const std::string name = expect_ident("space name");
    expect_punct("=");
    Space s;
    if (is_punct("{") || (is_word("int") && is_punct("[", 1))) {
      const std::string ref = parse_space_ref();
      s = *grammar.find_space(ref);
    } else {
      const std::string ref = expect_ident("space");
      const Space* base = grammar.find_space(ref);
      if (!base)
        throw SyntaxFailure{{span(name_tok), "unknown space '" + ref + "'", {}, ErrorKind::UnknownIdentifier}};
      s = *base;
    }
    s.name = name;
    s.anonymous = false;
    expect_punct(";");
    for (const auto& existing : grammar.spaces)
      if (existing.name == name)
        throw SyntaxFailure{{span(name_tok), "duplicate space '" + name + "'", {}, ErrorKind::DuplicateIdentifier}};
    grammar.spaces.push_back(std::move(s));
  }

  void parse_type_decl() {
    next();
    TypeDecl t;
    t.span = span(peek());
    t.name = expect_ident("type name");
    if (is_punct("(")) {
      next();
      if (!is_punct(")")) {
        while (true) {
          t.signature.push_back(parse_space_ref());
          if (is_punct(",")) {
            next();
            continue;
          }
          break;
        }
      }
      expect_punct(")");
    }
    if (is_punct(":")) {
      next();
      while (true) {
        if (is_word("cap")) {
          next();
          if (peek().kind != Tok::Number) fail("expected a positive integer cap", {"integer"});
          const Token& n = next();
          Number v = Number::parse(n.text);
          if (!v.is_integer())
            throw SyntaxFailure{{span(n), "cap must be an integer", {}, ErrorKind::InvalidMaxCopy}};
          t.max_copy = v.to_integer();
        } else if (is_word("fanout")) {
          next();
          t.fanout = static_cast<int>(parse_signed_int());
        } else {
          fail("expected a type attribute", {"cap", "fanout"});
        }
        if (is_punct(",")) {
          next();
          continue;
        }
        break;
      }
    }
    expect_punct(";");
    grammar.types.push_back(std::move(t));
  }

  // ---------------------------------------------------------- terms

  const TypeDecl& require_type(const Token& tok) {
    const TypeDecl* decl = grammar.find_type(tok.text);
    if (!decl)
      throw SyntaxFailure{{span(tok), "unknown type '" + tok.text + "'", {}, ErrorKind::UnknownIdentifier}};
    return *decl;
  }

  Value resolve_constant(const Token& tok, const Space& slot, bool negative, bool is_nil) {
    auto bad = [&](const std::string& why) -> SyntaxFailure {
      return SyntaxFailure{{span(tok), why, {}, ErrorKind::InvalidConstant}};
    };
    if (is_nil) {
      if (slot.kind != SpaceKind::Oid) throw bad("nil is only valid in oid slots");
      return Value::integer(kNilOid);
    }
    if (tok.kind == Tok::String) {
      if (slot.kind != SpaceKind::Enumeration)
        throw bad("quoted constant '" + tok.text + "' in non-enumeration slot " + slot.name);
      for (std::size_t i = 0; i < slot.values.size(); ++i)
        if (slot.values[i] == tok.text) return Value::integer(static_cast<std::int64_t>(i));
      throw bad("'" + tok.text + "' is not a value of " + slot.name);
    }
    Number n = Number::parse(tok.text);
    if (negative) n = -n;
    if (slot.kind == SpaceKind::Real) return Value::real(n.to_double());
    if (slot.kind == SpaceKind::Enumeration) throw bad("enumeration slots take quoted constants");
    if (!n.is_integer()) throw bad("constant " + n.str() + " is not an integer");
    return Value::integer(n.to_integer());
  }

  Arg parse_arg(const TypeDecl& decl, std::size_t slot_index) {
    const Token& tok = peek();
    Arg a;
    a.span = span(tok);
    if (slot_index >= decl.signature.size()) {
      // arity is reported by validation; keep parsing the argument
      if (tok.kind == Tok::Ident && tok.text != "nil") {
        a = Arg::variable(next().text);
      } else {
        if (is_punct("-")) next();
        next();
        a = Arg::constant(Value::integer(0));
      }
      a.span = span(tok);
      return a;
    }
    const Space& slot = grammar.slot_space(decl, slot_index);
    if (tok.kind == Tok::Ident && tok.text != "nil") {
      if (!is_lower_ident(tok.text)) fail("variables are lowercase identifiers", {"variable"});
      a = Arg::variable(next().text);
    } else if (tok.kind == Tok::Ident) {
      next();
      a = Arg::constant(resolve_constant(tok, slot, false, true));
    } else if (is_punct("-")) {
      next();
      if (peek().kind != Tok::Number) fail("expected a number", {"number"});
      const Token& n = next();
      a = Arg::constant(resolve_constant(n, slot, true, false));
    } else if (tok.kind == Tok::Number || tok.kind == Tok::String) {
      next();
      a = Arg::constant(resolve_constant(tok, slot, false, false));
    } else {
      fail("expected a variable or constant", {"variable", "constant"});
    }
    a.span = span(tok);
    return a;
  }

  TermPattern parse_term() {
    const Token& tok = peek();
    if (tok.kind != Tok::Ident) fail("expected a term", {"type name"});
    next();
    const TypeDecl& decl = require_type(tok);
    TermPattern t;
    t.type = tok.text;
    t.span = span(tok);
    if (is_punct("(")) {
      next();
      if (!is_punct(")")) {
        while (true) {
          t.args.push_back(parse_arg(decl, t.args.size()));
          if (is_punct(",")) {
            next();
            continue;
          }
          break;
        }
      }
      expect_punct(")");
    }
    return t;
  }

  bool at_side_end() const {
    return is_punct("->") || is_punct(";") || is_word("with") || is_word("subject") ||
           is_word("solving") || peek().kind == Tok::End;
  }

  std::vector<TermPattern> parse_side() {
    std::vector<TermPattern> out;
    if (is_punct("{")) {
      next();
      expect_punct("}");
      return out;
    }
    if (at_side_end()) return out;
    while (true) {
      out.push_back(parse_term());
      if (is_punct(",")) {
        next();
        continue;
      }
      break;
    }
    return out;
  }

  // ---------------------------------------------------------- clauses

  template <class R>
  void parse_clause(R& r) {
    if (is_word("with")) {
      next();
      r.clause = ClauseKind::With;
      r.expr = parse_expr();
    } else if (is_word("subject")) {
      next();
      expect_word("to");
      r.clause = ClauseKind::SubjectTo;
      r.expr = parse_expr();
    } else if (is_word("solving")) {
      if constexpr (std::is_same_v<R, Rule>) {
        next();
        r.clause = ClauseKind::Solving;
        while (true) {
          if (is_word("diffusion") && is_punct("(", 1)) {
            next();
            next();
            DiffusionEntry d;
            d.var_i = expect_ident("variable");
            expect_punct(",");
            d.var_j = expect_ident("variable");
            expect_punct(")");
            expect_punct("=");
            d.value = parse_expr();
            r.diffusion.push_back(std::move(d));
          } else {
            const Token& t = peek();
            if (t.kind != Tok::Ident || t.text.size() < 2 || t.text[0] != 'd')
              fail("expected a drift equation", {"dx/dt"});
            next();
            expect_punct("/");
            expect_word("dt");
            expect_punct("=");
            r.drift.push_back(DriftEquation{t.text.substr(1), parse_expr()});
          }
          if (is_punct(",")) {
            next();
            continue;
          }
          break;
        }
      } else {
        fail("graph rules take 'with' or 'subject to'", {"with", "subject to"});
      }
    } else {
      r.clause = ClauseKind::With;
      r.expr = expr::constant(1);
    }
  }

  void parse_rule() {
    const Token& kw = next();
    Rule r;
    r.span = span(kw);
    r.id = expect_ident("rule id");
    expect_punct(":");
    r.lhs = parse_side();
    expect_punct("->");
    r.rhs = parse_side();
    parse_clause(r);
    expect_punct(";");
    grammar.rules.push_back(std::move(r));
  }

  GraphTerm parse_graph_term(std::string label, const Token& label_tok) {
    const Token& tok = peek();
    if (tok.kind != Tok::Ident) fail("expected a term", {"type name"});
    next();
    const TypeDecl& decl = require_type(tok);
    GraphTerm t;
    t.label = std::move(label);
    t.type = tok.text;
    t.span = span(label_tok);
    if (is_punct("(")) {
      next();
      if (!is_punct(")") && !is_punct(";")) {
        while (true) {
          t.args.push_back(parse_arg(decl, t.args.size()));
          if (is_punct(",")) {
            next();
            continue;
          }
          break;
        }
      }
      if (is_punct(";")) {
        next();
        expect_punct("[");
        if (!is_punct("]")) {
          while (true) {
            t.neighbors.push_back(expect_ident("neighbor label"));
            if (is_punct(",")) {
              next();
              continue;
            }
            break;
          }
        }
        expect_punct("]");
      }
      expect_punct(")");
    }
    return t;
  }

  void parse_graph_side(GraphRule& r, bool rhs) {
    if (is_punct("{")) {
      next();
      expect_punct("}");
      return;
    }
    if (at_side_end()) return;
    while (true) {
      const Token& label_tok = peek();
      std::string label = expect_ident("label");
      if (is_punct(":=")) {
        next();
        (rhs ? r.rhs : r.lhs).push_back(parse_graph_term(label, label_tok));
      } else if (rhs) {
        r.kept.push_back(label);
      } else {
        fail("LHS graph terms are written 'L := T(...)'", {"':='"});
      }
      if (is_punct(",")) {
        next();
        continue;
      }
      break;
    }
  }

  void parse_graph_rule() {
    const Token& kw = next();
    expect_word("rule");
    GraphRule r;
    r.span = span(kw);
    r.id = expect_ident("rule id");
    expect_punct(":");
    parse_graph_side(r, false);
    expect_punct("->");
    parse_graph_side(r, true);
    parse_clause(r);
    expect_punct(";");
    grammar.graph_rules.push_back(std::move(r));
  }

  void parse_init() {
    next();
    if (is_punct(";")) {
      next();
      return;
    }
    while (true) {
      InitEntry e;
      e.term = parse_term();
      for (const auto& a : e.term.args)
        if (a.kind != Arg::Kind::Const)
          throw SyntaxFailure{{a.span, "init terms take constants only", {"constant"}, ErrorKind::InvalidConstant}};
      if (is_punct("*")) {
        next();
        e.count = parse_signed_int();
      }
      grammar.initial.push_back(std::move(e));
      if (is_punct(",")) {
        next();
        continue;
      }
      break;
    }
    expect_punct(";");
  }

  // ---------------------------------------------------------- expressions

  ExprPtr parse_expr() {
    ExprPtr lhs = parse_add();
    static const std::pair<const char*, ExprOp> cmps[] = {{"<", ExprOp::Lt},  {"<=", ExprOp::Le},
                                                          {">", ExprOp::Gt},  {">=", ExprOp::Ge},
                                                          {"==", ExprOp::Eq}, {"!=", ExprOp::Ne}};
    for (const auto& [sym, op] : cmps) {
      if (is_punct(sym)) {
        next();
        return expr::binary(op, lhs, parse_add());
      }
    }
    return lhs;
  }

  ExprPtr parse_add() {
    ExprPtr lhs = parse_mul();
    while (is_punct("+") || is_punct("-")) {
      const bool plus = next().text == "+";
      lhs = expr::binary(plus ? ExprOp::Add : ExprOp::Sub, lhs, parse_mul());
    }
    return lhs;
  }

  ExprPtr parse_mul() {
    ExprPtr lhs = parse_unary();
    while (is_punct("*") || is_punct("/")) {
      const bool times = next().text == "*";
      ExprPtr rhs = parse_unary();
      if (!times && expr::is_const(lhs) && expr::is_const(rhs) && !rhs->value.is_zero() &&
          lhs->value.exact() && rhs->value.exact()) {
        Number q = lhs->value / rhs->value;
        if (q.exact()) {
          lhs = expr::constant(q);
          continue;
        }
      }
      lhs = expr::binary(times ? ExprOp::Mul : ExprOp::Div, lhs, rhs);
    }
    return lhs;
  }

  ExprPtr parse_unary() {
    if (is_punct("-")) {
      next();
      ExprPtr inner = parse_unary();
      if (expr::is_const(inner)) return expr::constant(-inner->value);
      return expr::unary(ExprOp::Neg, inner);
    }
    return parse_pow();
  }

  ExprPtr parse_pow() {
    ExprPtr base = parse_primary();
    if (is_punct("^")) {
      next();
      const std::int64_t exponent = parse_signed_int();
      return expr::power(base, exponent);
    }
    return base;
  }

  ExprPtr parse_primary() {
    const Token& t = peek();
    if (t.kind == Tok::Number) {
      next();
      return expr::constant(Number::parse(t.text));
    }
    if (is_punct("(")) {
      next();
      ExprPtr e = parse_expr();
      expect_punct(")");
      return e;
    }
    if (t.kind == Tok::String)
      throw SyntaxFailure{{span(t), "quoted constants are only allowed as term arguments", {}}};
    if (t.kind != Tok::Ident) fail("expected an expression", {"number", "variable", "("});
    next();
    if (!is_punct("(")) return expr::var(t.text);

    static const std::pair<const char*, ExprOp> unary_fns[] = {
        {"exp", ExprOp::Exp}, {"abs", ExprOp::Abs}, {"delta", ExprOp::Delta}};
    for (const auto& [name, op] : unary_fns) {
      if (t.text == name) {
        next();
        ExprPtr a = parse_expr();
        expect_punct(")");
        return expr::unary(op, a);
      }
    }
    static const std::pair<const char*, ExprOp> densities[] = {{"normal_pdf", ExprOp::NormalPdf},
                                                               {"uniform_pdf", ExprOp::UniformPdf},
                                                               {"uniform_pmf", ExprOp::UniformPmf}};
    for (const auto& [name, op] : densities) {
      if (t.text == name) {
        next();
        ExprPtr y = parse_expr();
        if (is_punct(";") || is_punct(","))
          next();
        else
          fail("expected ';' after the density argument", {"';'"});
        ExprPtr p1 = parse_expr();
        expect_punct(",");
        ExprPtr p2 = parse_expr();
        expect_punct(")");
        return expr::call(op, {y, p1, p2});
      }
    }
    if (t.text == "sum") {
      next();
      const std::string v = expect_ident("variable");
      expect_word("in");
      const std::string space = parse_space_ref();
      const Space* s = grammar.find_space(space);
      if (!s->finite())
        throw SyntaxFailure{{span(t), "sum ranges over a finite space", {}, ErrorKind::InfiniteSpace}};
      expect_punct(":");
      ExprPtr body = parse_expr();
      expect_punct(")");
      return expr::sum_over(v, space, s->domain(), body);
    }
    throw SyntaxFailure{{span(t), "unknown function '" + t.text + "'", {"exp", "abs", "delta", "normal_pdf",
                                                                        "uniform_pdf", "uniform_pmf", "sum"}}};
  }

  std::vector<Token> toks_;
  std::string file_;
  std::size_t pos_ = 0;
};

SourceSpan locate_rule(const Grammar& g, const std::string& id, const SourceSpan& fallback) {
  for (const auto& r : g.rules)
    if (r.id == id) return r.span;
  for (const auto& r : g.graph_rules)
    if (r.id == id) return r.span;
  return fallback;
}

}  // namespace

ParseResult parse_grammar_unchecked(std::string_view text, const std::string& file) {
  ParseResult result;
  std::vector<Token> toks;
  try {
    toks = Lexer(text, file).run();
  } catch (const SyntaxFailure& f) {
    result.errors.push_back(f.error);
    return result;
  }
  Parser p(std::move(toks), file);
  p.parse_file();
  if (!p.errors.empty()) {
    result.errors = std::move(p.errors);
    return result;
  }
  result.grammar = std::move(p.grammar);
  return result;
}

ParseResult parse_grammar(std::string_view text, const std::string& file) {
  ParseResult result = parse_grammar_unchecked(text, file);
  if (!result.ok()) return result;
  const auto report = validate_grammar(*result.grammar);
  if (report.ok()) return result;
  for (const auto& d : report.errors) {
    SourceSpan s = d.span;
    if (s.file.empty()) s.file = file;
    if (!d.rule.empty() && s.line == 1 && s.column == 1) s = locate_rule(*result.grammar, d.rule, s);
    std::string msg = d.rule.empty() ? d.message : "rule '" + d.rule + "': " + d.message;
    result.errors.push_back(ParseError{s, std::string(to_string(d.kind)) + ": " + msg, {}, d.kind});
  }
  result.grammar.reset();
  return result;
}

Grammar parse_grammar_or_throw(std::string_view text, const std::string& file) {
  ParseResult r = parse_grammar(text, file);
  if (!r.ok()) {
    const auto& e = r.errors.front();
    throw Error(e.kind, e.str());
  }
  return std::move(*r.grammar);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Grammar load_grammar(const std::string& path) { return parse_grammar_or_throw(read_file(path), path); }

ExprPtr parse_expr(std::string_view text) {
  std::vector<Token> toks;
  try {
    toks = Lexer(text, "").run();
    Parser p(std::move(toks), "");
    return p.parse_standalone_expr();
  } catch (const SyntaxFailure& f) {
    throw Error(ErrorKind::Syntax, f.error.str());
  }
}

// ------------------------------------------------------------------ render

namespace {

std::string render_args(const Grammar& g, const std::string& type, const std::vector<Arg>& args) {
  const TypeDecl* decl = g.find_type(type);
  std::string s;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) s += ", ";
    const Arg& a = args[i];
    if (a.kind == Arg::Kind::Var) {
      s += a.var;
    } else if (decl && i < decl->signature.size()) {
      s += g.slot_space(*decl, i).render_value(a.value);
    } else {
      s += a.value.is_integer() ? std::to_string(a.value.as_integer()) : std::to_string(a.value.as_real());
    }
  }
  return s;
}

std::string render_side(const Grammar& g, const std::vector<TermPattern>& side) {
  if (side.empty()) return "{}";
  std::string s;
  for (std::size_t i = 0; i < side.size(); ++i) s += (i ? ", " : "") + render_term(g, side[i]);
  return s;
}

std::string render_clause(ClauseKind k, const ExprPtr& e) {
  if (k == ClauseKind::SubjectTo) return " subject to " + render(e);
  return " with " + render(e);
}

std::string render_graph_term(const Grammar& g, const GraphTerm& t) {
  std::string s = t.label + " := " + t.type + "(" + render_args(g, t.type, t.args) + "; [";
  for (std::size_t i = 0; i < t.neighbors.size(); ++i) s += (i ? ", " : "") + t.neighbors[i];
  return s + "])";
}

}  // namespace

std::string render_term(const Grammar& g, const TermPattern& t) {
  if (t.args.empty()) return t.type;
  return t.type + "(" + render_args(g, t.type, t.args) + ")";
}

std::string render_ground(const Grammar& g, const GroundTerm& t) {
  const TypeDecl& decl = g.types.at(t.type);
  if (t.args.empty()) return decl.name;
  std::string s = decl.name + "(";
  for (std::size_t i = 0; i < t.args.size(); ++i)
    s += (i ? ", " : "") + g.slot_space(decl, i).render_value(t.args[i]);
  return s + ")";
}

std::string render_rule(const Grammar& g, const Rule& r) {
  std::string s = "rule " + r.id + ": " + render_side(g, r.lhs) + " -> " + render_side(g, r.rhs);
  if (r.clause == ClauseKind::Solving) {
    s += " solving ";
    bool first = true;
    for (const auto& d : r.drift) {
      s += (first ? "" : ", ") + std::string("d") + d.var + "/dt = " + render(d.rhs);
      first = false;
    }
    for (const auto& d : r.diffusion) {
      s += (first ? "" : ", ") + std::string("diffusion(") + d.var_i + ", " + d.var_j + ") = " + render(d.value);
      first = false;
    }
  } else {
    s += render_clause(r.clause, r.expr);
  }
  return s + ";";
}

std::string render_grammar(const Grammar& g) {
  std::ostringstream os;
  for (const auto& p : g.params) os << "param " << p.name << " = " << render(expr::constant(p.value)) << ";\n";
  for (const auto& o : g.options) os << "option " << o.name << " = " << render(expr::constant(o.value)) << ";\n";
  for (const auto& s : g.spaces)
    if (!s.anonymous) os << "space " << s.name << " = " << s.spelling() << ";\n";
  for (const auto& t : g.types) {
    os << "type " << t.name;
    if (!t.signature.empty()) {
      os << "(";
      for (std::size_t i = 0; i < t.signature.size(); ++i) os << (i ? ", " : "") << t.signature[i];
      os << ")";
    }
    std::vector<std::string> attrs;
    if (t.max_copy) attrs.push_back("cap " + std::to_string(*t.max_copy));
    if (t.fanout) attrs.push_back("fanout " + std::to_string(*t.fanout));
    for (std::size_t i = 0; i < attrs.size(); ++i) os << (i ? ", " : " : ") << attrs[i];
    os << ";\n";
  }
  for (const auto& r : g.rules) os << render_rule(g, r) << "\n";
  for (const auto& r : g.graph_rules) {
    os << "graph rule " << r.id << ": ";
    if (r.lhs.empty()) os << "{}";
    for (std::size_t i = 0; i < r.lhs.size(); ++i) os << (i ? ", " : "") << render_graph_term(g, r.lhs[i]);
    os << " -> ";
    std::vector<std::string> items(r.kept.begin(), r.kept.end());
    for (const auto& t : r.rhs) items.push_back(render_graph_term(g, t));
    if (items.empty()) os << "{}";
    for (std::size_t i = 0; i < items.size(); ++i) os << (i ? ", " : "") << items[i];
    os << render_clause(r.clause, r.expr) << ";\n";
  }
  if (!g.initial.empty()) {
    os << "init ";
    for (std::size_t i = 0; i < g.initial.size(); ++i) {
      os << (i ? ", " : "") << render_term(g, g.initial[i].term);
      if (g.initial[i].count != 1) os << " * " << g.initial[i].count;
    }
    os << ";\n";
  }
  return os.str();
}

}  // namespace dg
