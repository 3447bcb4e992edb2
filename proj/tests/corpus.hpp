// Random rule sets and databases shared by the unit tests and the
// acceptance binary, plus a naive model builder independent of the chase.
#pragma once

#include "tgdc/chase.hpp"
#include "tgdc/hom.hpp"
#include "tgdc/textio.hpp"
#include "tgdc/triviality.hpp"

#include <optional>

#include <random>
#include <sstream>

namespace tgdc::corpus {

struct Rel {
  std::string name;
  int arity;
};

inline std::string var(int i) {
  static const char* names[] = {"x", "y", "z", "u", "v", "w", "x1", "y1", "z1"};
  return names[i];
}

inline std::string atom_text(const Rel& r, const std::vector<int>& args) {
  std::string s = r.name + "(";
  for (size_t i = 0; i < args.size(); ++i) s += (i ? "," : "") + var(args[i]);
  return s + ")";
}

// Unary A<l> and binary R<l> per level l; stratified generators send
// level-l bodies to heads of higher levels so that every chase terminates.
inline std::vector<Rel> leveled_relations(int levels) {
  std::vector<Rel> out;
  for (int l = 0; l < levels; ++l) {
    out.push_back({"A" + std::to_string(l), 1});
    out.push_back({"R" + std::to_string(l), 2});
  }
  return out;
}

namespace detail {

inline int level_of(const std::vector<Rel>& rels, size_t i) { return static_cast<int>(i / 2) * (rels.size() > 2); }

inline const Rel& pick_rel(std::mt19937& rng, const std::vector<Rel>& rels, int lo_level, int hi_level) {
  std::vector<size_t> ok;
  for (size_t i = 0; i < rels.size(); ++i)
    if (level_of(rels, i) >= lo_level && level_of(rels, i) <= hi_level) ok.push_back(i);
  return rels[ok[std::uniform_int_distribution<size_t>(0, ok.size() - 1)(rng)]];
}

// Head atoms over `pool` vars and fresh existentials numbered from `base`.
inline std::string head_text(std::mt19937& rng, const std::vector<Rel>& rels, int lo, int hi,
                             const std::vector<int>& pool, int base, int atoms, int max_exist) {
  std::uniform_int_distribution<int> coin(0, 2);
  int exists = 0;
  std::vector<std::string> head;
  for (int h = 0; h < atoms; ++h) {
    const Rel& r = pick_rel(rng, rels, lo, hi);
    std::vector<int> args;
    for (int i = 0; i < r.arity; ++i) {
      int c = coin(rng);
      if (c == 0 && exists < max_exist)
        args.push_back(base + exists++);
      else if (c == 1 && exists > 0)
        args.push_back(base + std::uniform_int_distribution<int>(0, exists - 1)(rng));
      else
        args.push_back(pool[std::uniform_int_distribution<size_t>(0, pool.size() - 1)(rng)]);
    }
    head.push_back(atom_text(r, args));
  }
  std::string out;
  if (exists) {
    out += "exists ";
    for (int e = 0; e < exists; ++e) out += (e ? "," : "") + var(base + e);
    out += ". ";
  }
  for (size_t i = 0; i < head.size(); ++i) out += (i ? ", " : "") + head[i];
  return out;
}

}  // namespace detail

// Linear rules. With `stratified` (relations from leveled_relations), heads
// use strictly higher levels; otherwise any relation.
inline std::string random_linear_rules(std::mt19937& rng, const std::vector<Rel>& rels, int max_rules,
                                       bool stratified, int max_head_atoms = 2) {
  std::uniform_int_distribution<int> nrules(1, max_rules), nhead(1, max_head_atoms), coin(0, 2);
  int top = detail::level_of(rels, rels.size() - 1);
  std::string out;
  for (int made = 0, goal = nrules(rng); made < goal; ++made) {
    int lvl = stratified ? std::uniform_int_distribution<int>(0, std::max(0, top - 1))(rng) : 0;
    const Rel& b = stratified ? detail::pick_rel(rng, rels, lvl, lvl) : detail::pick_rel(rng, rels, 0, top);
    std::vector<int> body;
    int vars = 0;
    for (int i = 0; i < b.arity; ++i) {
      if (vars > 0 && coin(rng) == 0)
        body.push_back(std::uniform_int_distribution<int>(0, vars - 1)(rng));
      else
        body.push_back(vars++);
    }
    std::vector<int> pool;
    for (int v = 0; v < vars; ++v) pool.push_back(v);
    int lo = stratified ? lvl + 1 : 0, hi = stratified ? std::min(top, lvl + 1) : top;
    out += atom_text(b, body) + " -> " + detail::head_text(rng, rels, lo, hi, pool, vars, nhead(rng), 2) + ".\n";
  }
  return out;
}

// Stratified frontier-one rules (relations from leveled_relations); bodies
// are one atom or two atoms joined on a variable.
inline std::string random_frontier_one_rules(std::mt19937& rng, const std::vector<Rel>& rels, int max_rules) {
  std::uniform_int_distribution<int> nrules(1, max_rules), coin(0, 1), nhead(1, 2);
  int top = detail::level_of(rels, rels.size() - 1);
  std::string out;
  for (int made = 0, goal = nrules(rng); made < goal; ++made) {
    int lvl = std::uniform_int_distribution<int>(0, std::max(0, top - 1))(rng);
    const Rel& b1 = detail::pick_rel(rng, rels, lvl, lvl);
    std::vector<int> a1;
    int vars = 0;
    for (int i = 0; i < b1.arity; ++i) a1.push_back(vars++);
    std::string body = atom_text(b1, a1);
    if (coin(rng)) {
      const Rel& b2 = detail::pick_rel(rng, rels, 0, lvl);
      std::vector<int> a2;
      int join = std::uniform_int_distribution<int>(0, vars - 1)(rng);
      int at = std::uniform_int_distribution<int>(0, b2.arity - 1)(rng);
      for (int i = 0; i < b2.arity; ++i) a2.push_back(i == at ? join : vars++);
      body += ", " + atom_text(b2, a2);
    }
    int front = std::uniform_int_distribution<int>(0, vars - 1)(rng);
    out += body + " -> " + detail::head_text(rng, rels, lvl + 1, std::min(top, lvl + 1), {front}, vars, nhead(rng), 2) +
           ".\n";
  }
  return out;
}

inline Database random_database(std::mt19937& rng, const std::vector<Rel>& rels, int consts, int facts,
                                const std::string& prefix = "d") {
  std::ostringstream s;
  std::uniform_int_distribution<int> rel(0, static_cast<int>(rels.size()) - 1), c(0, consts - 1);
  for (int i = 0; i < facts; ++i) {
    const Rel& r = rels[rel(rng)];
    s << r.name << "(";
    for (int a = 0; a < r.arity; ++a) s << (a ? "," : "") << prefix << c(rng);
    s << ").\n";
  }
  return parse_database(s.str());
}

// A model of T containing D, built by naive saturation where every
// existential is sent to `pick(rule, var)` (a term of the current model or a
// fresh constant). Uses its own matcher, not the chase.
inline Instance naive_model(const Database& D, const RuleSet& T, const std::function<Term(size_t, int)>& pick,
                            size_t max_facts = 2000) {
  std::set<Fact> M(D.begin(), D.end());
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t ri = 0; ri < T.size(); ++ri) {
      const TGD& t = T[ri];
      Instance cur{std::vector<Fact>(M.begin(), M.end())};
      std::vector<Term> dom = cur.adom();
      std::vector<Term> a(t.num_vars());
      std::vector<char> is_body(t.num_vars(), 0);
      for (const auto& at : t.body)
        for (int v : at.args) is_body[v] = 1;
      std::vector<int> bvars;
      for (int v = 0; v < t.num_vars(); ++v)
        if (is_body[v]) bvars.push_back(v);
      std::function<void(size_t)> go = [&](size_t i) {
        if (i == bvars.size()) {
          for (const auto& at : t.body) {
            Fact f;
            f.rel = at.rel;
            for (int v : at.args) f.args.push_back(a[v]);
            if (!M.count(f)) return;
          }
          // Head satisfied with the frontier fixed?
          std::vector<Term> ext(t.num_vars());
          std::vector<char> head_var(t.num_vars(), 0);
          for (const auto& at : t.head)
            for (int v : at.args) head_var[v] = 1;
          std::vector<int> ex;
          for (int v = 0; v < t.num_vars(); ++v)
            if (head_var[v] && !is_body[v]) ex.push_back(v);
          std::vector<Term> mdom(M.size() ? Instance{std::vector<Fact>(M.begin(), M.end())}.adom() : std::vector<Term>{});
          std::function<bool(size_t)> sat = [&](size_t k) -> bool {
            if (k == ex.size()) {
              for (const auto& at : t.head) {
                Fact f;
                f.rel = at.rel;
                for (int v : at.args) f.args.push_back(is_body[v] ? a[v] : ext[v]);
                if (!M.count(f)) return false;
              }
              return true;
            }
            for (Term x : mdom) {
              ext[ex[k]] = x;
              if (sat(k + 1)) return true;
            }
            return false;
          };
          if (sat(0)) return;
          for (int v : ex) ext[v] = pick(ri, v);
          for (const auto& at : t.head) {
            Fact f;
            f.rel = at.rel;
            for (int v : at.args) f.args.push_back(is_body[v] ? a[v] : ext[v]);
            if (M.insert(f).second) changed = true;
          }
          return;
        }
        for (Term x : dom) {
          a[bvars[i]] = x;
          go(i + 1);
        }
      };
      if (bvars.empty()) {
        go(0);
      } else if (!dom.empty()) {
        go(0);
      }
      if (M.size() > max_facts) throw BudgetExceeded("naive model too large");
    }
  }
  return Instance(std::vector<Fact>(M.begin(), M.end()));
}

// Relations with arities 1..3 for unstratified linear corpora.
inline std::vector<Rel> mixed_relations() { return {{"A", 1}, {"B", 1}, {"R", 2}, {"S", 2}, {"T", 3}}; }

// Triviality by brute force: chase every singleton database to `depth` and
// look for a hom of the result into the database. A failing bounded chase
// certifies non-triviality; saturated chases that all map certify
// triviality; anything else is inconclusive.
inline std::optional<bool> brute_triviality(const RuleSet& T, const Schema& sd, const Schema& sq, int depth) {
  bool all_saturated = true;
  for (const auto& D : singleton_databases(sd)) {
    Budget b;
    b.max_depth = depth;
    b.max_facts = 20000;
    auto r = chase(D, T, b);
    HomOptions o;
    o.sigma = sq;
    o.db_preserving = true;
    if (!find_hom(r.instance(), D, o).found()) return false;
    if (!r.saturated) all_saturated = false;
  }
  if (all_saturated) return true;
  return std::nullopt;
}

}  // namespace tgdc::corpus
