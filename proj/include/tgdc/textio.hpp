// Text formats for rules, databases, CQs and schemas; JSON verdict output.
#pragma once

#include "tgdc/model.hpp"
#include "tgdc/verdict.hpp"

#include <map>
#include <string>

namespace tgdc {

struct SourceSpan {
  int line = 1;
  int column = 1;
  int length = 1;
};

enum class ParseErrorKind { Lex, Syntax, ArityMismatch, UnboundFrontier };
std::string parse_error_kind_name(ParseErrorKind k);

struct ParseError : Error {
  ParseError(SourceSpan s, ParseErrorKind k, const std::string& msg);
  SourceSpan span;
  ParseErrorKind kind;
  std::string message;
};

// Relation arities seen so far; shared by all files of one invocation so
// that arities are checked globally.
class ArityTable {
 public:
  // Records or checks an arity; throws ARITY_MISMATCH.
  void note(RelId rel, int arity, SourceSpan where);
  std::optional<int> arity(RelId rel) const;
  Schema schema() const;

 private:
  std::map<RelId, int> arity_;
};

RuleSet parse_rules(std::string_view text, ArityTable* arities = nullptr);
// `allow_nulls` accepts `_n<k>` tokens as nulls (for certificate replay).
Database parse_database(std::string_view text, ArityTable* arities = nullptr, bool allow_nulls = false);
// Accepts the pseudo-atom true(x), which binds x without adding an atom.
CQ parse_cq(std::string_view text, ArityTable* arities = nullptr);

// Comma-separated `Name/arity` list; arity may be omitted when `arities`
// knows it. Throws ParseError.
Schema parse_schema(std::string_view text, const ArityTable& arities);

std::string format_rule(const TGD& t);
std::string format_rules(const RuleSet& rules);
std::string format_database(const Instance& I);  // one fact per line, sorted by text
std::string format_cq(const CQ& q);
std::string format_schema(const Schema& s);

// Compact JSON with sorted keys.
std::string emit_verdict(const Verdict& v);

}  // namespace tgdc
