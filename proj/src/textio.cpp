#include "tgdc/textio.hpp"

#include <algorithm>
#include <cctype>

namespace tgdc {

std::string parse_error_kind_name(ParseErrorKind k) {
  switch (k) {
    case ParseErrorKind::Lex: return "LEX";
    case ParseErrorKind::Syntax: return "SYNTAX";
    case ParseErrorKind::ArityMismatch: return "ARITY_MISMATCH";
    default: return "UNBOUND_FRONTIER";
  }
}

ParseError::ParseError(SourceSpan s, ParseErrorKind k, const std::string& msg)
    : Error(std::to_string(s.line) + ":" + std::to_string(s.column) + ": " + parse_error_kind_name(k) + ": " + msg),
      span(s), kind(k), message(msg) {}

void ArityTable::note(RelId rel, int arity, SourceSpan where) {
  auto [it, fresh] = arity_.try_emplace(rel, arity);
  if (!fresh && it->second != arity)
    throw ParseError(where, ParseErrorKind::ArityMismatch,
                     "relation " + relation_name(rel) + " used with arity " + std::to_string(arity) +
                         " but earlier with arity " + std::to_string(it->second));
}

std::optional<int> ArityTable::arity(RelId rel) const {
  auto it = arity_.find(rel);
  if (it == arity_.end()) return std::nullopt;
  return it->second;
}

Schema ArityTable::schema() const {
  Schema s;
  for (auto [r, a] : arity_) s.add({r, a});
  return s;
}

namespace {

enum class Tok { Ident, LParen, RParen, Comma, Dot, Arrow, ColonDash, Slash, End };

struct Token {
  Tok kind;
  std::string text;
  SourceSpan span;
};

bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '\'' || c == '~'; }

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto adv = [&](size_t n) {
    for (size_t k = 0; k < n; ++k) {
      if (s[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < s.size()) {
    unsigned char c = s[i];
    if (c == '#') {
      while (i < s.size() && s[i] != '\n') adv(1);
      continue;
    }
    if (std::isspace(c)) {
      adv(1);
      continue;
    }
    SourceSpan sp{line, col, 1};
    auto single = [&](Tok k) {
      out.push_back({k, std::string(1, static_cast<char>(c)), sp});
      adv(1);
    };
    if (c == '(') single(Tok::LParen);
    else if (c == ')') single(Tok::RParen);
    else if (c == ',') single(Tok::Comma);
    else if (c == '.') single(Tok::Dot);
    else if (c == '/') single(Tok::Slash);
    else if (c == '-' && i + 1 < s.size() && s[i + 1] == '>') {
      sp.length = 2;
      out.push_back({Tok::Arrow, "->", sp});
      adv(2);
    } else if (c == ':' && i + 1 < s.size() && s[i + 1] == '-') {
      sp.length = 2;
      out.push_back({Tok::ColonDash, ":-", sp});
      adv(2);
    } else if (ident_char(c)) {
      size_t j = i;
      while (j < s.size() && ident_char(static_cast<unsigned char>(s[j]))) ++j;
      sp.length = static_cast<int>(j - i);
      out.push_back({Tok::Ident, std::string(s.substr(i, j - i)), sp});
      adv(j - i);
    } else {
      throw ParseError(sp, ParseErrorKind::Lex, std::string("unexpected character '") + static_cast<char>(c) + "'");
    }
  }
  out.push_back({Tok::End, "", SourceSpan{line, col, 1}});
  return out;
}

std::string describe(const Token& t) { return t.kind == Tok::End ? "end of input" : "'" + t.text + "'"; }

struct RawAtom {
  std::string rel;
  SourceSpan span;
  std::vector<Token> args;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : toks_(lex(text)) {}

  const Token& peek(size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  bool at(Tok k) const { return peek().kind == k; }
  const Token& take() { return toks_[std::min(pos_++, toks_.size() - 1)]; }
  const Token& expect(Tok k, const char* what) {
    if (!at(k)) throw ParseError(peek().span, ParseErrorKind::Syntax, std::string("expected ") + what + ", got " + describe(peek()));
    return take();
  }

  RawAtom atom() {
    const Token& name = expect(Tok::Ident, "relation name");
    RawAtom a{name.text, name.span, {}};
    expect(Tok::LParen, "'('");
    if (!at(Tok::RParen)) {
      a.args.push_back(expect(Tok::Ident, "term"));
      while (at(Tok::Comma)) {
        take();
        a.args.push_back(expect(Tok::Ident, "term"));
      }
    }
    expect(Tok::RParen, "')'");
    return a;
  }

  std::vector<RawAtom> atom_list() {
    std::vector<RawAtom> out{atom()};
    while (at(Tok::Comma)) {
      take();
      out.push_back(atom());
    }
    return out;
  }

 private:
  std::vector<Token> toks_;
  size_t pos_ = 0;
};

void check_arity(const RawAtom& a, ArityTable& tab, RelId rel) {
  if (a.args.empty()) throw ParseError(a.span, ParseErrorKind::Syntax, "nullary relation " + a.rel + " not supported");
  tab.note(rel, static_cast<int>(a.args.size()), a.span);
}

struct VarScope {
  std::map<std::string, int> ids;
  std::vector<std::string> names;
  int get(const std::string& n) {
    auto [it, fresh] = ids.try_emplace(n, static_cast<int>(names.size()));
    if (fresh) names.push_back(n);
    return it->second;
  }
  bool has(const std::string& n) const { return ids.count(n) > 0; }
};

bool reserved_variable(const std::string& s) { return s.size() == 1 && std::string_view("uvwxyz").find(s[0]) != std::string_view::npos; }

bool null_token(const std::string& s) {
  return s.size() > 2 && s[0] == '_' && s[1] == 'n' &&
         std::all_of(s.begin() + 2, s.end(), [](unsigned char c) { return std::isdigit(c); });
}

}  // namespace

RuleSet parse_rules(std::string_view text, ArityTable* arities) {
  ArityTable local;
  ArityTable& tab = arities ? *arities : local;
  Parser p(text);
  RuleSet out;
  while (!p.at(Tok::End)) {
    SourceSpan start = p.peek().span;
    std::vector<RawAtom> body;
    if (!p.at(Tok::Arrow)) body = p.atom_list();
    p.expect(Tok::Arrow, "'->'");
    VarScope scope;
    std::vector<Atom> b, h;
    for (const auto& ra : body) {
      Atom a;
      a.rel = relation(ra.rel);
      check_arity(ra, tab, a.rel);
      for (const auto& t : ra.args) a.args.push_back(scope.get(t.text));
      b.push_back(std::move(a));
    }
    std::set<std::string> declared;
    if (p.at(Tok::Ident) && p.peek().text == "exists" && p.peek(1).kind == Tok::Ident) {
      p.take();
      while (true) {
        const Token& v = p.expect(Tok::Ident, "variable");
        if (scope.has(v.text))
          throw ParseError(v.span, ParseErrorKind::Syntax, "existential variable " + v.text + " already bound");
        scope.get(v.text);
        declared.insert(v.text);
        if (!p.at(Tok::Comma)) break;
        p.take();
      }
      p.expect(Tok::Dot, "'.' after existential variables");
    }
    for (const auto& ra : p.atom_list()) {
      Atom a;
      a.rel = relation(ra.rel);
      check_arity(ra, tab, a.rel);
      for (const auto& t : ra.args) {
        if (!scope.has(t.text))
          throw ParseError(t.span, ParseErrorKind::UnboundFrontier,
                           "head variable " + t.text + " is neither in the body nor declared with exists");
        a.args.push_back(scope.get(t.text));
      }
      h.push_back(std::move(a));
    }
    p.expect(Tok::Dot, "'.' at end of rule");
    if (std::any_of(h.begin(), h.end(), [](const Atom& a) { return relation_name(a.rel) == "true"; }) ||
        std::any_of(b.begin(), b.end(), [](const Atom& a) { return relation_name(a.rel) == "true"; }))
      throw ParseError(start, ParseErrorKind::Syntax, "true(x) is not allowed in rules");
    TGD t = make_tgd(std::move(b), std::move(h), scope.names);
    for (const auto& d : declared) {
      int v = scope.ids.at(d);
      if (!std::binary_search(t.existentials.begin(), t.existentials.end(), v))
        throw ParseError(start, ParseErrorKind::Syntax, "existential variable " + d + " unused in head");
    }
    out.push_back(std::move(t));
  }
  return out;
}

Database parse_database(std::string_view text, ArityTable* arities, bool allow_nulls) {
  ArityTable local;
  ArityTable& tab = arities ? *arities : local;
  Parser p(text);
  std::vector<Fact> facts;
  while (!p.at(Tok::End)) {
    RawAtom ra = p.atom();
    p.expect(Tok::Dot, "'.' at end of fact");
    Fact f;
    f.rel = relation(ra.rel);
    check_arity(ra, tab, f.rel);
    for (const auto& t : ra.args) {
      if (reserved_variable(t.text))
        throw ParseError(t.span, ParseErrorKind::Syntax, "variable-like token " + t.text + " in a database");
      if (null_token(t.text)) {
        if (!allow_nulls) throw ParseError(t.span, ParseErrorKind::Syntax, "null " + t.text + " in a database");
        f.args.push_back(Term::null(static_cast<uint32_t>(std::stoul(t.text.substr(2)))));
      } else {
        f.args.push_back(constant(t.text));
      }
    }
    facts.push_back(std::move(f));
  }
  return Instance(std::move(facts));
}

CQ parse_cq(std::string_view text, ArityTable* arities) {
  ArityTable local;
  ArityTable& tab = arities ? *arities : local;
  Parser p(text);
  p.expect(Tok::Ident, "query name");
  p.expect(Tok::LParen, "'('");
  std::vector<Token> head;
  if (!p.at(Tok::RParen)) {
    head.push_back(p.expect(Tok::Ident, "answer variable"));
    while (p.at(Tok::Comma)) {
      p.take();
      head.push_back(p.expect(Tok::Ident, "answer variable"));
    }
  }
  p.expect(Tok::RParen, "')'");
  p.expect(Tok::ColonDash, "':-'");
  VarScope scope;
  CQ q;
  std::set<std::string> bound;
  for (const auto& ra : p.atom_list()) {
    if (ra.rel == "true") {
      if (ra.args.size() != 1) throw ParseError(ra.span, ParseErrorKind::Syntax, "true takes one variable");
      scope.get(ra.args[0].text);
      bound.insert(ra.args[0].text);
      continue;
    }
    Atom a;
    a.rel = relation(ra.rel);
    check_arity(ra, tab, a.rel);
    for (const auto& t : ra.args) {
      a.args.push_back(scope.get(t.text));
      bound.insert(t.text);
    }
    q.atoms.push_back(std::move(a));
  }
  p.expect(Tok::Dot, "'.' at end of query");
  if (!p.at(Tok::End)) throw ParseError(p.peek().span, ParseErrorKind::Syntax, "trailing input after query");
  for (const auto& t : head) {
    if (!bound.count(t.text))
      throw ParseError(t.span, ParseErrorKind::UnboundFrontier, "answer variable " + t.text + " does not occur in the body");
    q.answer.push_back(scope.get(t.text));
  }
  q.var_names = scope.names;
  return q;
}

Schema parse_schema(std::string_view text, const ArityTable& arities) {
  Parser p(text);
  Schema s;
  if (p.at(Tok::End)) return s;
  while (true) {
    const Token& name = p.expect(Tok::Ident, "relation name");
    RelId r = relation(name.text);
    std::optional<int> ar;
    if (p.at(Tok::Slash)) {
      p.take();
      const Token& n = p.expect(Tok::Ident, "arity");
      if (!std::all_of(n.text.begin(), n.text.end(), [](unsigned char c) { return std::isdigit(c); }) || n.text.size() > 6)
        throw ParseError(n.span, ParseErrorKind::Syntax, "arity must be a number");
      ar = std::stoi(n.text);
      if (*ar < 1) throw ParseError(n.span, ParseErrorKind::Syntax, "arity must be positive");
      if (auto known = arities.arity(r); known && *known != *ar)
        throw ParseError(name.span, ParseErrorKind::ArityMismatch, "relation " + name.text + " has arity " + std::to_string(*known));
    } else {
      ar = arities.arity(r);
      if (!ar) throw ParseError(name.span, ParseErrorKind::Syntax, "arity of " + name.text + " cannot be inferred");
    }
    s.add({r, *ar});
    if (p.at(Tok::End)) break;
    p.expect(Tok::Comma, "','");
  }
  return s;
}

namespace {

std::string format_atoms(const std::vector<Atom>& atoms, const std::vector<std::string>& names) {
  std::string s;
  for (size_t i = 0; i < atoms.size(); ++i) {
    if (i) s += ", ";
    s += relation_name(atoms[i].rel);
    s += '(';
    for (size_t j = 0; j < atoms[i].args.size(); ++j) {
      if (j) s += ',';
      s += names.at(atoms[i].args[j]);
    }
    s += ')';
  }
  return s;
}

}  // namespace

std::string format_rule(const TGD& t) {
  std::string s = format_atoms(t.body, t.var_names);
  s += t.body.empty() ? "-> " : " -> ";
  if (!t.existentials.empty()) {
    s += "exists ";
    for (size_t i = 0; i < t.existentials.size(); ++i) {
      if (i) s += ',';
      s += t.var_names.at(t.existentials[i]);
    }
    s += ". ";
  }
  s += format_atoms(t.head, t.var_names);
  s += '.';
  return s;
}

std::string format_rules(const RuleSet& rules) {
  std::string s;
  for (const auto& r : rules) {
    if (!r.label.empty()) s += "# " + r.label + "\n";
    s += format_rule(r) + "\n";
  }
  return s;
}

std::string format_database(const Instance& I) {
  std::vector<std::string> lines;
  for (const auto& f : I) lines.push_back(format_fact(f) + ".");
  std::sort(lines.begin(), lines.end());
  std::string s;
  for (const auto& l : lines) s += l + "\n";
  return s;
}

std::string format_cq(const CQ& q) {
  std::string s = "q(";
  for (size_t i = 0; i < q.answer.size(); ++i) {
    if (i) s += ',';
    s += q.var_names.at(q.answer[i]);
  }
  s += ") :- ";
  std::vector<Atom> atoms = q.atoms;
  std::string body = format_atoms(atoms, q.var_names);
  // Answer variables absent from every atom are bound by true(x).
  for (int a : q.answer) {
    bool used = std::any_of(q.atoms.begin(), q.atoms.end(),
                            [&](const Atom& at) { return std::find(at.args.begin(), at.args.end(), a) != at.args.end(); });
    if (!used) body = (body.empty() ? "" : body + ", ") + "true(" + q.var_names.at(a) + ")";
  }
  return s + body + ".";
}

std::string format_schema(const Schema& s) {
  std::vector<std::string> parts;
  for (auto r : s.symbols()) parts.push_back(relation_name(r.id) + "/" + std::to_string(r.arity));
  std::sort(parts.begin(), parts.end());
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) out += (i ? "," : "") + parts[i];
  return out;
}

std::string emit_verdict(const Verdict& v) { return verdict_json(v).dump(); }

}  // namespace tgdc
