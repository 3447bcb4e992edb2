#include "tgdc/triviality.hpp"

#include "tgdc/parallel.hpp"

#include <algorithm>
#include <deque>

namespace tgdc {

Term singleton_constant(int i) { return constant("c" + std::to_string(i + 1)); }

namespace {

// Restricted growth strings of length n, most blocks first.
void set_partitions(int n, std::vector<std::vector<int>>& out) {
  std::vector<int> a(n, 0);
  std::function<void(int, int)> rec = [&](int i, int mx) {
    if (i == n) {
      out.push_back(a);
      return;
    }
    for (int v = mx + 1; v >= 0; --v) {
      a[i] = v;
      rec(i + 1, std::max(mx, v));
    }
  };
  if (n == 0) return;
  a[0] = 0;
  rec(1, 0);
}

using Raw = boost::container::small_vector<int32_t, 4>;

FactShape canon(RelId rel, const Raw& raw) {
  FactShape s;
  s.rel = rel;
  std::map<int32_t, int32_t> ren;
  for (int32_t v : raw) {
    if (v < 0) {
      s.pattern.push_back(v);
    } else {
      auto [it, fresh] = ren.try_emplace(v, static_cast<int32_t>(ren.size()));
      s.pattern.push_back(it->second);
    }
  }
  return s;
}

PairShape canon_pair(RelId ra, const Raw& a, RelId rb, const Raw& b) {
  PairShape p;
  p.first.rel = ra;
  p.second.rel = rb;
  std::map<int32_t, int32_t> ren;
  auto map = [&](int32_t v) {
    if (v < 0) return v;
    auto [it, fresh] = ren.try_emplace(v, static_cast<int32_t>(ren.size()));
    return it->second;
  };
  for (int32_t v : a) p.first.pattern.push_back(map(v));
  for (int32_t v : b) p.second.pattern.push_back(map(v));
  return p;
}

PairShape canon_unordered(RelId ra, const Raw& a, RelId rb, const Raw& b) {
  return std::min(canon_pair(ra, a, rb, b), canon_pair(rb, b, ra, a));
}

bool share_null(const Raw& a, const Raw& b) {
  for (int32_t x : a)
    if (x >= 0 && std::find(b.begin(), b.end(), x) != b.end()) return true;
  return false;
}

int32_t next_id(const Raw& a, const Raw& b) {
  int32_t m = -1;
  for (int32_t x : a) m = std::max(m, x);
  for (int32_t x : b) m = std::max(m, x);
  return m + 1;
}

Raw raw_of(const FactShape& s) { return Raw(s.pattern.begin(), s.pattern.end()); }

}  // namespace

std::vector<Database> singleton_databases(const Schema& sigma_d) {
  std::vector<Database> out{Database{}};
  std::vector<RelationSymbol> rels = sigma_d.symbols();
  std::sort(rels.begin(), rels.end(), [](auto a, auto b) { return relation_name(a.id) < relation_name(b.id); });
  for (auto r : rels) {
    std::vector<std::vector<int>> parts;
    set_partitions(r.arity, parts);
    for (const auto& p : parts) {
      Fact f;
      f.rel = r.id;
      for (int block : p) f.args.push_back(singleton_constant(block));
      out.push_back(Database{f});
    }
  }
  return out;
}

FactShape canonical_shape(const Fact& f, const std::vector<Term>& db_consts) {
  Raw raw;
  for (Term t : f.args) {
    if (t.is_null()) {
      raw.push_back(static_cast<int32_t>(t.index()));
    } else {
      auto it = std::lower_bound(db_consts.begin(), db_consts.end(), t);
      if (it == db_consts.end() || *it != t) throw PreconditionError("constant " + term_name(t) + " not in the database");
      raw.push_back(-1 - static_cast<int32_t>(it - db_consts.begin()));
    }
  }
  return canon(f.rel, raw);
}

PairShape canonical_pair(const Fact& a, const Fact& b, const std::vector<Term>& db_consts) {
  auto to_raw = [&](const Fact& f) {
    Raw raw;
    for (Term t : f.args) {
      if (t.is_null()) {
        raw.push_back(static_cast<int32_t>(t.index()));
      } else {
        auto it = std::lower_bound(db_consts.begin(), db_consts.end(), t);
        if (it == db_consts.end() || *it != t) throw PreconditionError("constant " + term_name(t) + " not in the database");
        raw.push_back(-1 - static_cast<int32_t>(it - db_consts.begin()));
      }
    }
    return raw;
  };
  return canon_unordered(a.rel, to_raw(a), b.rel, to_raw(b));
}

// ---------------------------------------------------------------- closure

LinearShapeClosure::LinearShapeClosure(const Database& D, const RuleSet& T, size_t max_states, bool keep_unlinked)
    : D_(D), T_(T), max_states_(max_states) {
  if (!all_linear(T)) throw PreconditionError("the shape closure needs linear rules");
  const auto consts = D.adom();

  // Root groups: the database facts, then each unblocked empty-body rule.
  std::vector<std::vector<std::pair<RelId, Raw>>> groups;
  std::vector<std::pair<RelId, Raw>> g0;
  for (const auto& f : D) {
    FactShape s = canonical_shape(f, consts);
    g0.emplace_back(s.rel, raw_of(s));
  }
  groups.push_back(g0);
  FactIndex didx(D);
  for (const auto& t : T) {
    if (!t.body.empty()) continue;
    std::vector<JoinAtom> head;
    for (const auto& a : t.head) head.push_back({a.rel, a.args, 0, FactIndex::kNone});
    std::vector<Term> assign(t.num_vars());
    Join j(didx, head, assign);
    j.run([](const std::vector<Term>&, const std::vector<uint32_t>&) { return true; });
    if (j.stopped()) continue;
    std::vector<std::pair<RelId, Raw>> g;
    for (const auto& a : t.head) {
      Raw raw;
      for (int v : a.args)
        raw.push_back(static_cast<int32_t>(std::find(t.existentials.begin(), t.existentials.end(), v) - t.existentials.begin()));
      g.emplace_back(a.rel, raw);
    }
    groups.push_back(g);
  }

  // Single shapes per group.
  for (const auto& g : groups) {
    std::set<FactShape> seen;
    std::deque<FactShape> queue;
    for (const auto& [rel, raw] : g) {
      FactShape s = canon(rel, raw);
      if (seen.insert(s).second) queue.push_back(s);
    }
    while (!queue.empty()) {
      FactShape s = queue.front();
      queue.pop_front();
      if (singles_.insert(s).second) count_state();
      Raw raw = raw_of(s);
      int32_t base = next_id(raw, {});
      for (const auto& app : apps(s)) {
        for (const auto& [rel, args] : app.head) {
          Raw child;
          for (auto src : args) child.push_back(src.fresh ? base + src.idx : raw[src.idx]);
          FactShape c = canon(rel, child);
          if (seen.insert(c).second) queue.push_back(c);
        }
      }
    }
    group_singles_.push_back(std::move(seen));
  }

  // Pair states. `anc`: the first fact is a fixed ancestor of the second.
  std::set<std::pair<bool, PairShape>> seen;
  std::deque<std::pair<bool, PairShape>> queue;
  auto push = [&](bool anc, RelId ra, const Raw& a, RelId rb, const Raw& b) {
    if (a == b && ra == rb) return;
    bool linked = share_null(a, b);
    if (!linked && !keep_unlinked) return;
    PairShape key = anc ? canon_pair(ra, a, rb, b) : canon_unordered(ra, a, rb, b);
    if (seen.emplace(anc, key).second) {
      count_state();
      queue.emplace_back(anc, key);
      pairs_.insert(canon_unordered(ra, a, rb, b));
    }
  };
  // Children of fact `raw` (relation rel) with fresh nulls from `base`,
  // grouped per application.
  auto children = [&](RelId rel, const Raw& raw, int32_t base) {
    std::vector<std::vector<std::pair<RelId, Raw>>> out;
    for (const auto& app : apps(canon(rel, raw))) {
      std::vector<std::pair<RelId, Raw>> kids;
      for (const auto& [hrel, args] : app.head) {
        Raw child;
        for (auto src : args) child.push_back(src.fresh ? base + src.idx : raw[src.idx]);
        kids.emplace_back(hrel, child);
      }
      out.push_back(std::move(kids));
      base += app.fresh;
    }
    return out;
  };
  for (const auto& s : singles_) {
    Raw raw = raw_of(s);
    auto kids = children(s.rel, raw, next_id(raw, {}));
    for (size_t a = 0; a < kids.size(); ++a)
      for (size_t i = 0; i < kids[a].size(); ++i) {
        push(true, s.rel, raw, kids[a][i].first, kids[a][i].second);
        for (size_t j = i + 1; j < kids[a].size(); ++j)
          push(false, kids[a][i].first, kids[a][i].second, kids[a][j].first, kids[a][j].second);
        for (size_t b2 = a + 1; b2 < kids.size(); ++b2)
          for (const auto& k2 : kids[b2]) push(false, kids[a][i].first, kids[a][i].second, k2.first, k2.second);
      }
  }
  for (const auto& g : groups)
    for (size_t i = 0; i < g.size(); ++i)
      for (size_t j = i + 1; j < g.size(); ++j) push(false, g[i].first, g[i].second, g[j].first, g[j].second);

  while (!queue.empty()) {
    auto [anc, key] = queue.front();
    queue.pop_front();
    Raw a = raw_of(key.first), b = raw_of(key.second);
    int32_t base = next_id(a, b);
    for (const auto& app : children(key.second.rel, b, base))
      for (const auto& [rel, child] : app) push(anc, key.first.rel, a, rel, child);
    if (!anc)
      for (const auto& app : children(key.first.rel, a, base))
        for (const auto& [rel, child] : app) push(false, rel, child, key.second.rel, b);
  }
}

void LinearShapeClosure::count_state() {
  ++states_;
  if (max_states_ && states_ > max_states_)
    throw StateSpaceExceeded("shape closure exceeded " + std::to_string(max_states_) + " states");
}

const std::vector<LinearShapeClosure::App>& LinearShapeClosure::apps(const FactShape& s) {
  auto it = app_cache_.find(s);
  if (it != app_cache_.end()) return it->second;
  std::vector<App> out;
  const auto consts = D_.adom();
  Instance beta = instantiate(s);
  FactIndex local(beta.union_with(D_));
  for (size_t r = 0; r < T_.size(); ++r) {
    const TGD& t = T_[r];
    if (t.body.size() != 1) continue;
    const Atom& body = t.body[0];
    if (body.rel != s.rel || body.args.size() != s.pattern.size()) continue;
    std::vector<int> first_pos(t.num_vars(), -1);
    bool ok = true;
    for (size_t p = 0; p < body.args.size() && ok; ++p) {
      int v = body.args[p];
      if (first_pos[v] < 0) first_pos[v] = static_cast<int>(p);
      else if (s.pattern[first_pos[v]] != s.pattern[p]) ok = false;
    }
    if (!ok) continue;
    // Blocked when the head maps into {beta} + D with the frontier fixed.
    std::vector<JoinAtom> head;
    for (const auto& a : t.head) head.push_back({a.rel, a.args, 0, FactIndex::kNone});
    std::vector<Term> assign(t.num_vars());
    for (int v : t.frontier) assign[v] = beta.facts()[0].args[first_pos[v]];
    Join j(local, head, assign);
    j.run([](const std::vector<Term>&, const std::vector<uint32_t>&) { return true; });
    if (j.stopped()) continue;
    App app;
    app.rule = r;
    app.fresh = static_cast<int>(t.existentials.size());
    for (const auto& a : t.head) {
      std::vector<ArgSrc> args;
      for (int v : a.args) {
        auto e = std::find(t.existentials.begin(), t.existentials.end(), v);
        if (e != t.existentials.end()) args.push_back({true, static_cast<int>(e - t.existentials.begin())});
        else args.push_back({false, first_pos[v]});
      }
      app.head.emplace_back(a.rel, std::move(args));
    }
    out.push_back(std::move(app));
  }
  return app_cache_.emplace(s, std::move(out)).first->second;
}

Instance LinearShapeClosure::instantiate(const FactShape& s) const {
  const auto consts = D_.adom();
  Fact f;
  f.rel = s.rel;
  for (int32_t v : s.pattern) f.args.push_back(v < 0 ? consts.at(-1 - v) : Term::null(static_cast<uint32_t>(v)));
  return Instance{f};
}

Instance LinearShapeClosure::instantiate(const PairShape& p) const {
  return instantiate(p.first).union_with(instantiate(p.second));
}

// ---------------------------------------------------------------- queries

bool linear_entails_cluster(const Database& D, const RuleSet& T, const Instance& C, size_t max_states) {
  const auto consts = D.adom();
  for (Term t : C.adom())
    if (t.is_named() && !std::binary_search(consts.begin(), consts.end(), t)) return false;
  if (C.empty()) return true;
  if (C.size() == 1) {
    LinearShapeClosure cl(D, T, max_states);
    return cl.singles().count(canonical_shape(C.facts()[0], consts)) > 0;
  }
  if (C.size() != 2) throw PreconditionError("clusters have at most two facts");
  const Fact &a = C.facts()[0], &b = C.facts()[1];
  PairShape key = canonical_pair(a, b, consts);
  bool linked = false;
  for (Term t : a.args)
    if (t.is_null() && std::find(b.args.begin(), b.args.end(), t) != b.args.end()) linked = true;
  if (linked) {
    LinearShapeClosure cl(D, T, max_states);
    return cl.pairs().count(key) > 0;
  }
  LinearShapeClosure cl(D, T, max_states, true);
  if (cl.pairs().count(key)) return true;
  FactShape sa = canonical_shape(a, consts), sb = canonical_shape(b, consts);
  const auto& gs = cl.group_singles();
  for (size_t i = 0; i < gs.size(); ++i)
    for (size_t j = 0; j < gs.size(); ++j)
      if (i != j && gs[i].count(sa) && gs[j].count(sb)) return true;
  return false;
}

namespace {

struct DbOutcome {
  Outcome value = Outcome::Holds;
  json detail;
};

json cluster_cert(const Database& D, const Instance& C, const std::string& kind, const std::string& method) {
  return {{"database", facts_json(D)}, {"cluster", facts_json(C)}, {"kind", kind}, {"method", method}};
}

// A <=2-fact sigma_q cluster of I that does not map into D, if any.
std::optional<std::pair<Instance, std::string>> failing_cluster(const Instance& I, const Database& D, const Schema& sigma_q) {
  FactIndex didx(D);
  HomOptions opt;
  opt.sigma = sigma_q;
  opt.db_preserving = true;
  Instance Iq = I.restrict(sigma_q);
  for (const auto& f : Iq) {
    Instance C{f};
    if (!find_hom(C, didx, opt).found()) return std::make_pair(C, std::string("single"));
  }
  const auto& fs = Iq.facts();
  for (size_t i = 0; i < fs.size(); ++i)
    for (size_t j = i + 1; j < fs.size(); ++j) {
      bool linked = false;
      for (Term t : fs[i].args)
        if (t.is_null() && std::find(fs[j].args.begin(), fs[j].args.end(), t) != fs[j].args.end()) linked = true;
      if (!linked) continue;
      Instance C{fs[i], fs[j]};
      if (!find_hom(C, didx, opt).found()) return std::make_pair(C, std::string("pair"));
    }
  return std::nullopt;
}

DbOutcome decide_one(const Database& D, const RuleSet& T, const Schema& sigma_q, const Budget& b) {
  DbOutcome out;
  try {
    LinearShapeClosure cl(D, T, b.max_candidates);
    FactIndex didx(D);
    HomOptions opt;
    opt.sigma = sigma_q;
    opt.db_preserving = true;
    size_t clusters = 0;
    for (const auto& s : cl.singles()) {
      if (!sigma_q.contains(s.rel)) continue;
      ++clusters;
      Instance C = cl.instantiate(s);
      if (!find_hom(C, didx, opt).found()) return {Outcome::Fails, cluster_cert(D, C, "single", "shape_closure")};
    }
    for (const auto& p : cl.pairs()) {
      if (!sigma_q.contains(p.first.rel) || !sigma_q.contains(p.second.rel)) continue;
      ++clusters;
      Instance C = cl.instantiate(p);
      if (!find_hom(C, didx, opt).found()) return {Outcome::Fails, cluster_cert(D, C, "pair", "shape_closure")};
    }
    out.detail = {{"database", facts_json(D)}, {"clusters", clusters}, {"method", "shape_closure"}};
    return out;
  } catch (const StateSpaceExceeded&) {
  }
  ChaseResult r = chase(D, T, b);
  Instance I = r.instance();
  if (auto bad = failing_cluster(I, D, sigma_q)) return {Outcome::Fails, cluster_cert(D, bad->first, bad->second, "bounded_chase")};
  if (r.saturated) {
    out.detail = {{"database", facts_json(D)}, {"method", "saturated_chase"}};
    return out;
  }
  return {Outcome::Unknown, {{"database", facts_json(D)}, {"method", "bounded_chase"}, {"chase_facts", r.size()}}};
}

}  // namespace

Verdict check_triviality(const RuleSet& T, const Schema& sigma_d, const Schema& sigma_q, const Budget& b, bool parallel) {
  if (!all_linear(T)) throw PreconditionError("check_triviality needs linear rules");
  for (const auto& t : T) classify(t);
  // Intern everything the workers could name before going parallel.
  auto dbs = singleton_databases(sigma_d);
  std::vector<DbOutcome> results(dbs.size());
  for_each_index(dbs.size(), [&](size_t i) { results[i] = decide_one(dbs[i], T, sigma_q, b); }, parallel);
  for (const auto& r : results)
    if (r.value == Outcome::Fails) return Verdict::fails(r.detail, b);
  json per_db = json::array();
  bool unknown = false;
  for (const auto& r : results) {
    per_db.push_back(r.detail);
    if (r.value == Outcome::Unknown) unknown = true;
  }
  if (unknown) return Verdict::unknown({{"databases", per_db}}, b);
  return Verdict::holds({{"kind", "trivial"}, {"databases", per_db}}, b);
}

HardnessInstance build_hardness_instance(const Database& D, const RuleSet& T, RelId goal, const std::string& fresh_name) {
  RelId R = relation(fresh_name);
  Schema used = schema_of(T).merged(schema_of(D));
  if (used.contains(R)) throw SymbolClash("relation " + fresh_name + " already occurs in the input");
  if (auto ar = used.arity_of(goal); ar && *ar != 1) throw PreconditionError("goal relation must be unary");
  if (goal == R) throw SymbolClash("goal relation equals the fresh relation");
  HardnessInstance h;
  h.rules = T;
  if (!D.empty()) {
    auto dom = D.adom();
    std::vector<Atom> head;
    std::vector<std::string> names;
    for (size_t i = 0; i < dom.size(); ++i) names.push_back("x" + std::to_string(i));
    for (const auto& f : D) {
      Atom a;
      a.rel = f.rel;
      for (Term t : f.args) a.args.push_back(static_cast<int>(std::lower_bound(dom.begin(), dom.end(), t) - dom.begin()));
      head.push_back(std::move(a));
    }
    h.rules.push_back(make_tgd({}, std::move(head), std::move(names), "copy of the database"));
  }
  Atom g{goal, {0}};
  Atom r1{R, {1, 2}}, r2{R, {2, 3}};
  h.rules.push_back(make_tgd({g}, {r1, r2}, {"u", "x", "y", "z"}, "goal gadget"));
  h.sigma_d = Schema{{R, 2}};
  h.sigma_q = h.sigma_d;
  return h;
}

}  // namespace tgdc
