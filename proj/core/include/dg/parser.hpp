#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dg/grammar.hpp"

namespace dg {

struct ParseError {
  SourceSpan span;
  std::string message;
  std::vector<std::string> expected;
  ErrorKind kind = ErrorKind::Syntax;
  std::string str() const;
};

struct ParseResult {
  std::optional<Grammar> grammar;
  std::vector<ParseError> errors;
  bool ok() const { return grammar.has_value(); }
};

/// Parses and validates `.dg` text. Validation failures come back as
/// errors located at the offending declaration.
ParseResult parse_grammar(std::string_view text, const std::string& file = "");
/// Parse without the validation pass.
ParseResult parse_grammar_unchecked(std::string_view text, const std::string& file = "");
/// Throws Error with the first diagnostic.
Grammar parse_grammar_or_throw(std::string_view text, const std::string& file = "");
Grammar load_grammar(const std::string& path);

/// Parses a stand-alone rate expression (no spaces for `sum`).
ExprPtr parse_expr(std::string_view text);

std::string render_grammar(const Grammar& g);
std::string render_rule(const Grammar& g, const Rule& r);
std::string render_term(const Grammar& g, const TermPattern& t);
std::string render_ground(const Grammar& g, const GroundTerm& t);

std::string read_file(const std::string& path);

}  // namespace dg
