#include "tgdc/conway.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "tgdc/textio.hpp"

namespace tgdc {

// ---------------------------------------------------------------- Conway functions

void ConwaySpec::validate() const {
  if (gamma < 1) throw InvalidSpec("gamma must be positive");
  if (static_cast<int>(alpha.size()) != gamma || static_cast<int>(beta.size()) != gamma)
    throw InvalidSpec("alpha and beta need gamma entries each");
  for (int k = 0; k < gamma; ++k) {
    if (alpha[k] < 1 || beta[k] < 1) throw InvalidSpec("alpha and beta entries must be positive");
    if (gamma % beta[k] != 0) throw InvalidSpec("beta_" + std::to_string(k) + " does not divide gamma");
    if ((k * alpha[k]) % beta[k] != 0) throw InvalidSpec("beta_" + std::to_string(k) + " does not divide k*alpha_k");
  }
  if (reduction) {
    auto f = [&](int64_t n) {
      int k = static_cast<int>(n % gamma);
      return n * alpha[k] / beta[k];
    };
    if (f(2) != 3 || f(1) != 1) throw InvalidSpec("reduction mode needs F(2)=3 and F(1)=1");
  }
}

json ConwaySpec::to_json() const {
  return {{"gamma", gamma}, {"alpha", alpha}, {"beta", beta}, {"reduction", reduction}};
}

int64_t conway_eval(const ConwaySpec& s, int64_t n) {
  s.validate();
  if (n < 1) throw InvalidSpec("Conway functions are defined on positive integers");
  const int k = static_cast<int>(n % s.gamma);
  __int128 v = static_cast<__int128>(n) * s.alpha[k];
  if (v % s.beta[k] != 0) throw InvalidSpec("inexact division");
  v /= s.beta[k];
  if (v > INT64_MAX) throw InvalidSpec("value overflows 64 bits");
  return static_cast<int64_t>(v);
}

Verdict conway_stops(const ConwaySpec& s, int64_t start, size_t max_steps, const Budget& b) {
  s.validate();
  std::vector<int64_t> traj{start};
  std::map<int64_t, size_t> seen{{start, 0}};
  for (size_t step = 0; step < max_steps; ++step) {
    if (traj.back() == 1)
      return Verdict::holds({{"kind", "trajectory"}, {"values", traj}, {"steps", traj.size() - 1}}, b);
    int64_t next;
    try {
      next = conway_eval(s, traj.back());
    } catch (const InvalidSpec&) {
      return Verdict::unknown({{"reason", "overflow"}, {"steps", step}}, b);
    }
    if (auto it = seen.find(next); it != seen.end() && next != 1) {
      std::vector<int64_t> cycle(traj.begin() + static_cast<long>(it->second), traj.end());
      return Verdict::fails({{"kind", "cycle"}, {"values", traj}, {"cycle", cycle}}, b);
    }
    seen.emplace(next, traj.size());
    traj.push_back(next);
  }
  if (traj.back() == 1) return Verdict::holds({{"kind", "trajectory"}, {"values", traj}, {"steps", traj.size() - 1}}, b);
  return Verdict::unknown({{"reason", "step budget"}, {"steps", max_steps}, {"last", traj.back()}}, b);
}

// ---------------------------------------------------------------- rivers

std::string RiverSpec::to_string() const {
  auto list = [](const std::vector<int>& v) {
    std::string s = "[";
    for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s + "]";
  };
  return "<" + list(p) + "," + list(t) + ">";
}

namespace {

// Interned segment constants, x<i>_<j> or y<i>_<j>; interning by name is the
// dominant cost when many rivers are built.
Term segment_constant(char tag, int i, int j) {
  thread_local std::map<std::tuple<char, int, int>, Term> cache;
  auto [it, fresh] = cache.try_emplace({tag, i, j});
  if (fresh) it->second = constant(std::string(1, tag) + std::to_string(i) + "_" + std::to_string(j));
  return it->second;
}

Term bridge_constant(int i) {
  thread_local std::vector<Term> cache;
  while (static_cast<int>(cache.size()) <= i) cache.push_back(constant("b" + std::to_string(cache.size())));
  return cache[i];
}

}  // namespace

Database river_build(const RiverSpec& k) {
  const int n = k.n();
  if (n == 0 || k.t.size() != k.p.size()) throw InvalidSpec("a river needs n >= 1 and |p| = |t|");
  for (int i = 0; i < n; ++i)
    if (k.p[i] < 1 || k.t[i] < 1) throw InvalidSpec("segment lengths must be positive");
  const RelId P = relation("Pyramus"), T = relation("Thisbe"), C = relation("Channel");
  const Term e1 = constant("e1"), e2 = constant("e2"), c = constant("c");
  std::vector<Term> bridge;
  for (int i = 0; i <= n; ++i) bridge.push_back(bridge_constant(i));
  std::vector<Fact> fs;
  size_t total = 3 * (n + 1) + 8;
  for (int i = 0; i < n; ++i) total += 3 * (k.p[i] + k.t[i]) - 4;
  fs.reserve(total);
  auto path = [&](RelId rel, char tag, int i, int len, Term eternity) {
    std::vector<Term> v{bridge[i - 1]};
    for (int j = 1; j < len; ++j) {
      Term a = segment_constant(tag, i, j);
      v.push_back(a);
      fs.push_back({rel, {a, eternity}});
      fs.push_back({C, {c, a}});
    }
    v.push_back(bridge[i]);
    for (int j = 1; j <= len; ++j) fs.push_back({rel, {v[j], v[j - 1]}});
  };
  for (int i = 1; i <= n; ++i) {
    path(P, 'x', i, k.p[i - 1], e2);
    path(T, 'y', i, k.t[i - 1], e1);
  }
  for (Term b : bridge) {
    fs.push_back({T, {b, e2}});
    fs.push_back({P, {b, e1}});
    fs.push_back({C, {c, b}});
  }
  for (Term e : {e1, e2}) {
    fs.push_back({P, {e, e}});
    fs.push_back({T, {e, e}});
    fs.push_back({C, {e, e}});
  }
  fs.push_back({relation("Encounter"), {bridge[n], bridge[n - 1]}});
  fs.push_back({relation("Mouth"), {bridge[0]}});
  return Instance(std::move(fs));
}

RiverCorrectness river_correctness(const RiverSpec& k, const ConwaySpec& s) {
  RiverCorrectness out;
  const int n = k.n();
  for (int m = 1; m < n; ++m)
    if (k.t[m - 1] != k.p[m]) {
      out.defect = m;
      break;
    }
  bool local = n >= 1 && k.p[0] == 2 && k.p[n - 1] == 1;
  for (int i = 0; local && i + 1 < n; ++i) local = conway_eval(s, k.p[i]) == k.t[i];
  out.locally_correct = local;
  out.correct = local && !out.defect;
  return out;
}

std::vector<RiverSpec> locally_correct_rivers(const ConwaySpec& s, int max_n, int max_val) {
  s.validate();
  std::vector<RiverSpec> out;
  for (int n = 2; n <= max_n; ++n) {
    // p = [2, inner..., 1] with n-2 inner values.
    std::vector<int> inner(n - 2, 1);
    while (true) {
      RiverSpec k;
      k.p.push_back(2);
      k.p.insert(k.p.end(), inner.begin(), inner.end());
      k.p.push_back(1);
      bool fits = true;
      for (int v : k.p) {
        int64_t f = conway_eval(s, v);
        if (f > INT32_MAX) fits = false;
        k.t.push_back(static_cast<int>(f));
      }
      if (fits) out.push_back(std::move(k));
      int i = n - 3;
      while (i >= 0 && inner[i] == max_val) inner[i--] = 1;
      if (i < 0) break;
      ++inner[i];
    }
  }
  return out;
}

bool observation1(const RiverSpec& k) {
  for (int m = 1; m < k.n(); ++m)
    if (k.t[m - 1] != k.p[m]) return true;
  return false;
}

// ---------------------------------------------------------------- myth rules

RuleSet myth_rules() {
  RuleSet r = parse_rules(
      "Encounter(p,t) -> exists p2,c,t2. M(p,p2,c,t2,t).\n"
      "M(p,p2,c,t2,t) -> exists p3,c2,t3. M(p2,p3,c2,t3,t2).\n"
      "M(p,p2,c,t2,t) -> Pyramus(p,p2), Thisbe(t,t2), Channel(c,p2), Channel(c,t2).\n");
  r[0].label = "myth_encounter";
  r[1].label = "myth_step";
  r[2].label = "myth_project";
  return r;
}

Schema myth_query_schema() {
  return Schema{{relation("Encounter"), 2},
                {relation("Pyramus"), 2},
                {relation("Thisbe"), 2},
                {relation("Channel"), 2},
                {relation("Mouth"), 1}};
}

ChainSpec myth_chain_spec() {
  ChainSpec s;
  s.prefix_vars = 2;
  s.prefix_atoms = {Atom{relation("Encounter"), {0, 1}}};
  s.entry = {0, 1};
  // p=0 t=1 c=2 p'=3 t'=4
  s.loop_vars = 5;
  s.loop_atoms = {Atom{relation("M"), {0, 3, 2, 4, 1}}, Atom{relation("Pyramus"), {0, 3}},
                  Atom{relation("Thisbe"), {1, 4}}, Atom{relation("Channel"), {2, 3}}, Atom{relation("Channel"), {2, 4}}};
  s.loop_in = {0, 1};
  s.loop_out = {3, 4};
  return s;
}

Verdict river_myth_hom(const RiverSpec& k, const Budget& b) {
  Database D = river_build(k);
  std::map<int, Term> pins{{0, bridge_constant(k.n())}, {1, bridge_constant(k.n() - 1)}};
  static const ChainSpec spec = myth_chain_spec();
  static const Schema sigma = myth_query_schema();
  return infinite_chain_hom(spec, D, sigma, pins, b);
}

// ---------------------------------------------------------------- generated rule families

namespace {

using Names = std::vector<std::string>;

Names seq(const std::string& prefix, int from, int to) {
  Names out;
  for (int i = from; i <= to; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

Names cat(std::initializer_list<Names> parts) {
  Names out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

std::string atom(const std::string& rel, const Names& args) {
  std::string s = rel + "(";
  for (size_t i = 0; i < args.size(); ++i) s += (i ? "," : "") + args[i];
  return s + ")";
}

std::string join(const Names& parts, const std::string& sep) {
  std::string s;
  for (size_t i = 0; i < parts.size(); ++i) s += (i ? sep : "") + parts[i];
  return s;
}

const Names kDagger = {"c", "e1", "e2"};

std::string wh(int i, int k) { return "WH_" + std::to_string(i) + "_" + std::to_string(k); }
std::string bh(int k) { return "BH_" + std::to_string(k); }

struct RecRule {
  std::string label;
  std::string body_rel;  // empty for the start rule
  Names body_args;
  std::string head_rel;
  Names head_args;
  Names exist;
};

int mod(int64_t a, int g) { return static_cast<int>(((a % g) + g) % g); }

std::vector<RecRule> rec_rules(const ConwaySpec& s, const ConwayOptions& o) {
  s.validate();
  std::vector<RecRule> out;
  const int g = s.gamma;
  out.push_back({"start", "", {}, "Start", cat({kDagger, {"b0", "x1", "y1", "y2", "b1"}}),
                 cat({kDagger, {"b0", "x1", "y1", "y2", "b1"}})});
  out.push_back({"start_bridge", "Start", cat({kDagger, {"b0", "x1", "y1", "y2", "b1"}}), "Bridge",
                 cat({kDagger, {"b1"}}), {}});
  for (int k = 0; k < g; ++k) {
    const int a = static_cast<int>(s.alpha[k]), b = static_cast<int>(s.beta[k]);
    auto xs = seq("x", 1, b), ys = seq("y", 1, a);
    out.push_back({"bridge_wh_" + std::to_string(k), "Bridge", cat({kDagger, {"b"}}), wh(mod(b, g), k),
                   cat({kDagger, {"b"}, xs, {"b"}, ys}), cat({xs, ys})});
  }
  for (int k = 0; k < g; ++k) {
    const int a = static_cast<int>(s.alpha[k]), b = static_cast<int>(s.beta[k]);
    const Names body = cat({kDagger, seq("x", 0, b), seq("y", 0, a)});
    const std::string xb = "x" + std::to_string(b), ya = "y" + std::to_string(a);
    for (int i = 0; i < g; ++i) {
      auto zs = seq("z", 1, b), us = seq("u", 1, a);
      out.push_back({"wh_" + std::to_string(i) + "_" + std::to_string(k), wh(i, k), body, wh(mod(i + b, g), k),
                     cat({kDagger, {xb}, zs, {ya}, us}), cat({zs, us})});
    }
    auto zs = seq("z", 1, b - 1), us = seq("u", 1, a - 1);
    out.push_back({"wh_bh_" + std::to_string(k), wh(mod(k - b, g), k), body, bh(k),
                   cat({kDagger, {xb}, zs, {"b"}, {ya}, us, {"b"}}), cat({zs, us, {"b"}})});
  }
  for (int k = 0; k < g; ++k) {
    const int a = static_cast<int>(s.alpha[k]), b = static_cast<int>(s.beta[k]);
    out.push_back({"bh_bridge_" + std::to_string(k), bh(k),
                   cat({kDagger, seq("x", 0, b - 1), {"b"}, seq("y", 0, a - 1), {"b"}}), "Bridge", cat({kDagger, {"b"}}),
                   {}});
  }
  if (o.direct_bridgehead)
    for (int k = 0; k < g; ++k) {
      const int a = static_cast<int>(s.alpha[k]), b = static_cast<int>(s.beta[k]);
      if (mod(b, g) != k) continue;
      auto zs = seq("z", 1, b - 1), us = seq("u", 1, a - 1);
      out.push_back({"bridge_bh_" + std::to_string(k), "Bridge", cat({kDagger, {"x0"}}), bh(k),
                     cat({kDagger, {"x0"}, zs, {"b"}, {"x0"}, us, {"b"}}), cat({zs, us, {"b"}})});
    }
  out.push_back({"bridge_end", "Bridge", cat({kDagger, {"b"}}), "End", cat({kDagger, {"b", "bp"}}), {"bp"}});
  return out;
}

// Query-schema facts produced from one Sigma_F atom, as atom texts.
Names projection(const ConwaySpec& s, const std::string& rel, const Names& args) {
  Names out;
  const std::string& c = args[0];
  const std::string& e1 = args[1];
  const std::string& e2 = args[2];
  auto path = [&](const std::string& r, const Names& v, const std::string& eternity, bool last_is_bridge) {
    // v[0] is the lower end; v[j] -> v[j-1] for j >= 1.
    for (size_t j = 1; j < v.size(); ++j) out.push_back(atom(r, {v[j], v[j - 1]}));
    for (size_t j = 1; j < v.size(); ++j)
      if (!(last_is_bridge && j + 1 == v.size())) out.push_back(atom(r, {v[j], eternity}));
    for (size_t j = 1; j < v.size(); ++j) out.push_back(atom("Channel", {c, v[j]}));
  };
  if (rel == "Start") {
    const auto &b0 = args[3], &x1 = args[4], &y1 = args[5], &y2 = args[6], &b1 = args[7];
    out = {atom("Mouth", {b0}),        atom("Pyramus", {x1, b0}), atom("Pyramus", {b1, x1}),
           atom("Pyramus", {x1, e2}),  atom("Thisbe", {y1, b0}),  atom("Thisbe", {y2, y1}),
           atom("Thisbe", {b1, y2}),   atom("Thisbe", {y1, e1}),  atom("Thisbe", {y2, e1}),
           atom("Channel", {c, x1}),   atom("Channel", {c, y1}),  atom("Channel", {c, y2}),
           atom("Channel", {c, b0}),   atom("Pyramus", {b0, e1}), atom("Thisbe", {b0, e2})};
    for (const auto& e : {e1, e2}) {
      out.push_back(atom("Channel", {e, e}));
      out.push_back(atom("Pyramus", {e, e}));
      out.push_back(atom("Thisbe", {e, e}));
    }
  } else if (rel == "Bridge") {
    out = {atom("Channel", {c, args[3]}), atom("Pyramus", {args[3], e1}), atom("Thisbe", {args[3], e2})};
  } else if (rel == "End") {
    const auto &b = args[3], &bp = args[4];
    out = {atom("Pyramus", {bp, b}),      atom("Thisbe", {bp, b}),       atom("Encounter", {bp, b}),
           atom("Channel", {c, bp}),      atom("Pyramus", {bp, e1}),     atom("Thisbe", {bp, e2})};
  } else {
    const bool head = rel.rfind("BH_", 0) == 0;
    const int k = std::stoi(rel.substr(rel.rfind('_') + 1));
    const int b = static_cast<int>(s.beta[k]);
    Names xs(args.begin() + 3, args.begin() + 3 + b + 1);
    Names ys(args.begin() + 3 + b + 1, args.end());
    path("Pyramus", xs, e2, head);
    path("Thisbe", ys, e1, head);
  }
  return out;
}

std::string rule_text(const RecRule& r) {
  std::string s = r.body_rel.empty() ? "" : atom(r.body_rel, r.body_args) + " ";
  s += "-> ";
  if (!r.exist.empty()) s += "exists " + join(r.exist, ",") + ". ";
  return s + atom(r.head_rel, r.head_args) + ".";
}

Names distinct(const Names& v) {
  Names out;
  for (const auto& x : v)
    if (std::find(out.begin(), out.end(), x) == out.end()) out.push_back(x);
  return out;
}

// One representative argument list per Sigma_F relation, for projection rules.
std::map<std::string, Names> sigma_f_args(const ConwaySpec& s, const ConwayOptions& o) {
  std::map<std::string, Names> out;
  for (const auto& r : rec_rules(s, o)) {
    if (!r.body_rel.empty()) out.emplace(r.body_rel, r.body_args);
  }
  // Relations only ever in heads (End) get their head argument list.
  for (const auto& r : rec_rules(s, o)) out.emplace(r.head_rel, r.head_args);
  return out;
}

}  // namespace

RuleSet gen_T_rec(const ConwaySpec& s, const ConwayOptions& o) {
  RuleSet out;
  for (const auto& r : rec_rules(s, o)) {
    RuleSet one = parse_rules(rule_text(r));
    one[0].label = r.label;
    out.push_back(std::move(one[0]));
  }
  return out;
}

RuleSet gen_T_proj(const ConwaySpec& s, const ConwayOptions& o) {
  RuleSet out;
  for (const auto& [rel, args] : sigma_f_args(s, o)) {
    RuleSet one = parse_rules(atom(rel, args) + " -> " + join(projection(s, rel, args), ", ") + ".");
    one[0].label = "proj_" + rel;
    out.push_back(std::move(one[0]));
  }
  return out;
}

RuleSet gen_T1(const ConwaySpec& s, const ConwayOptions& o) {
  if (!s.reduction) {
    ConwaySpec r = s;
    r.reduction = true;
    r.validate();
  }
  RuleSet out = gen_T_rec(s, o);
  RuleSet proj = gen_T_proj(s, o);
  out.insert(out.end(), proj.begin(), proj.end());
  return out;
}

GuardedT0 gen_guarded_T0(const ConwaySpec& s, const ConwayOptions& o) {
  {
    ConwaySpec r = s;
    r.reduction = true;
    r.validate();
  }
  GuardedT0 out;
  out.rules = myth_rules();
  RuleSet enc = parse_rules("End(c,e1,e2,b,bp), Pyramus(bp,b), Thisbe(bp,b) -> Encounter(bp,b).");
  enc[0].label = "end_encounter";
  out.rules.push_back(std::move(enc[0]));
  for (const auto& r : rec_rules(s, o)) {
    if (r.body_rel.empty()) continue;
    Names sargs = cat({distinct(r.body_args), r.exist});
    Names body = {atom("S_" + r.label, sargs), atom(r.body_rel, r.body_args)};
    for (const auto& a : projection(s, r.body_rel, r.body_args)) body.push_back(a);
    RuleSet one = parse_rules(join(body, ", ") + " -> " + atom(r.head_rel, r.head_args) + ".");
    one[0].label = "guarded_" + r.label;
    out.rules.push_back(std::move(one[0]));
    out.sigma_d.add({relation("S_" + r.label), static_cast<int>(sargs.size())});
  }
  for (const char* q : {"Pyramus", "Thisbe", "Channel"}) {
    out.sigma_d.add({relation(q), 2});
    out.sigma_q.add({relation(q), 2});
  }
  out.sigma_d.add({relation("Mouth"), 1});
  out.sigma_q.add({relation("Mouth"), 1});
  out.sigma_d.add({relation("Start"), 8});
  return out;
}

// ---------------------------------------------------------------- ancestor sets

namespace {

// Binds rule body atom variables against a fact; false on a clash.
bool match_atom(const Atom& a, std::span<const Term> args, std::vector<Term>& assign) {
  if (a.args.size() != args.size()) return false;
  for (size_t i = 0; i < args.size(); ++i) {
    Term& slot = assign[a.args[i]];
    if (slot.valid() && slot != args[i]) return false;
    slot = args[i];
  }
  return true;
}

}  // namespace

std::vector<AncestorSet> encounter_ancestor_sets(const ChaseResult& r, const RuleSet& T1) {
  const RelId enc = relation("Encounter");
  const Schema q = myth_query_schema();
  // Projection rules: one body atom, all head atoms in the query schema.
  std::map<RelId, std::vector<const TGD*>> proj;
  for (const auto& t : T1) {
    if (t.body.size() != 1 || !t.existentials.empty()) continue;
    bool all_q = std::all_of(t.head.begin(), t.head.end(), [&](const Atom& a) { return q.contains(a.rel); });
    if (all_q) proj[t.body[0].rel].push_back(&t);
  }
  std::vector<AncestorSet> out;
  for (uint32_t id : r.facts.by_rel(enc)) {
    if (r.rule[id] < 0) continue;
    auto ps = r.parents(id);
    if (ps.size() != 1) continue;
    AncestorSet a;
    a.encounter = id;
    a.end = ps[0];
    for (uint32_t cur = a.end;;) {
      a.ancestors.push_back(cur);
      if (r.rule[cur] < 0) break;
      auto pp = r.parents(cur);
      if (pp.empty()) break;
      cur = pp[0];
    }
    std::reverse(a.ancestors.begin(), a.ancestors.end());
    std::vector<Fact> fs;
    bool mat = true;
    for (uint32_t g : a.ancestors) {
      auto it = proj.find(r.facts.rel(g));
      if (it == proj.end()) continue;
      for (const TGD* t : it->second) {
        std::vector<Term> assign(t->num_vars());
        if (!match_atom(t->body[0], r.facts.args(g), assign)) continue;
        for (const auto& h : t->head) {
          Fact f;
          f.rel = h.rel;
          for (int v : h.args) f.args.push_back(assign[v]);
          if (!r.facts.contains(f)) mat = false;
          fs.push_back(std::move(f));
        }
      }
    }
    a.projections = Instance(std::move(fs));
    a.materialized = mat;
    out.push_back(std::move(a));
  }
  return out;
}

std::optional<RiverSpec> extract_river(const Instance& I) {
  const RelId P = relation("Pyramus"), T = relation("Thisbe"), C = relation("Channel"), M = relation("Mouth"),
              E = relation("Encounter");
  std::optional<Term> b0, bn, bn1;
  std::set<Term> eternities;
  for (const auto& f : I) {
    if (f.rel == M) b0 = f.args[0];
    if (f.rel == E) {
      bn = f.args[0];
      bn1 = f.args[1];
    }
    if (f.rel == C && f.args[0] == f.args[1]) eternities.insert(f.args[0]);
  }
  if (!b0 || !bn || eternities.size() != 2) return std::nullopt;
  std::optional<Term> e1;
  for (const auto& f : I)
    if (f.rel == P && f.args[0] == *b0 && eternities.count(f.args[1])) e1 = f.args[1];
  if (!e1) return std::nullopt;
  Term e2 = *eternities.begin() == *e1 ? *eternities.rbegin() : *eternities.begin();
  std::optional<Term> c;
  for (const auto& f : I)
    if (f.rel == C && !eternities.count(f.args[1])) c = f.args[0];
  if (!c) return std::nullopt;
  std::set<Term> bridges;
  for (const auto& f : I)
    if (f.rel == P && f.args[1] == *e1 && f.args[0] != *e1) bridges.insert(f.args[0]);
  // Worldly predecessors along a relation.
  std::map<Term, std::vector<Term>> pred_p, pred_t;
  for (const auto& f : I) {
    if (eternities.count(f.args[0]) || (f.args.size() > 1 && eternities.count(f.args[1]))) continue;
    if (f.rel == P) pred_p[f.args[1]].push_back(f.args[0]);
    if (f.rel == T) pred_t[f.args[1]].push_back(f.args[0]);
  }
  Mapping ren{{*e1, constant("e1")}, {e2, constant("e2")}, {*c, constant("c")}, {*b0, constant("b0")}};
  RiverSpec k;
  Term cur = *b0;
  const size_t limit = I.adom().size() + 1;
  auto walk = [&](std::map<Term, std::vector<Term>>& pred, char tag, int seg, int& len) -> std::optional<Term> {
    Term at = cur;
    len = 0;
    while (len <= static_cast<int>(limit)) {
      auto it = pred.find(at);
      if (it == pred.end() || it->second.size() != 1) return std::nullopt;
      at = it->second[0];
      ++len;
      if (bridges.count(at)) return at;
      auto [pos, fresh] = ren.emplace(at, constant(std::string(1, tag) + std::to_string(seg) + "_" + std::to_string(len)));
      if (!fresh) return std::nullopt;
    }
    return std::nullopt;
  };
  for (int seg = 1; seg <= static_cast<int>(limit); ++seg) {
    int lp = 0, lt = 0;
    auto up = walk(pred_p, 'x', seg, lp);
    auto ut = walk(pred_t, 'y', seg, lt);
    if (!up || !ut || *up != *ut) return std::nullopt;
    k.p.push_back(lp);
    k.t.push_back(lt);
    auto [pos, fresh] = ren.emplace(*up, constant("b" + std::to_string(seg)));
    if (!fresh) return std::nullopt;
    cur = *up;
    if (cur == *bn) break;
  }
  if (cur != *bn || k.p.empty()) return std::nullopt;
  (void)bn1;
  if (I.rename(ren) != river_build(k)) return std::nullopt;
  return k;
}

Database t0_witness_database(const ConwaySpec& s, const ChaseResult& r, const AncestorSet& a, const ConwayOptions& o) {
  const auto recs = rec_rules(s, o);
  const RuleSet rec = gen_T_rec(s, o);
  const RelId enc = relation("Encounter");
  std::vector<Fact> fs;
  for (const auto& f : a.projections)
    if (f.rel != enc) fs.push_back(f);
  for (uint32_t g : a.ancestors)
    if (r.facts.rel(g) == relation("Start")) fs.push_back(r.facts.fact(g));
  for (size_t i = 1; i < a.ancestors.size(); ++i) {
    const uint32_t parent = a.ancestors[i - 1], child = a.ancestors[i];
    const int ri = r.rule[child];
    if (ri < 0 || ri >= static_cast<int>(rec.size())) throw PreconditionError("ancestor not produced by a recursive rule");
    const TGD& t = rec[ri];
    std::vector<Term> assign(t.num_vars());
    if (!match_atom(t.body[0], r.facts.args(parent), assign) || !match_atom(t.head[0], r.facts.args(child), assign))
      throw ProvenanceMismatch("derivation step does not match its rule");
    Fact sf;
    sf.rel = relation("S_" + recs[ri].label);
    std::vector<int> order;
    for (int v : t.body[0].args)
      if (std::find(order.begin(), order.end(), v) == order.end()) order.push_back(v);
    for (const auto& name : recs[ri].exist)
      order.push_back(static_cast<int>(std::find(t.var_names.begin(), t.var_names.end(), name) - t.var_names.begin()));
    for (int v : order) sf.args.push_back(assign[v]);
    fs.push_back(std::move(sf));
  }
  Instance I(std::move(fs));
  Mapping ren;
  for (Term t : I.adom())
    if (t.is_null()) ren[t] = constant("w" + std::to_string(t.index()));
  return I.rename(ren);
}

}  // namespace tgdc
