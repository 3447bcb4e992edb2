#include "tgdc/hom.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <optional>
#include <set>

namespace tgdc {

namespace {

struct Dsu {
  std::vector<int> p;
  explicit Dsu(size_t n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int x) {
    while (p[x] != x) x = p[x] = p[p[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a), b = find(b);
    if (a != b) p[std::max(a, b)] = std::min(a, b);
  }
};

json terms_json(const std::vector<Term>& ts) {
  json a = json::array();
  for (Term t : ts) a.push_back(term_name(t));
  return a;
}

}  // namespace

HomResult find_hom(const Instance& src, const Instance& dst, const HomOptions& opt) {
  FactIndex idx(dst);
  return find_hom(src, idx, opt);
}

HomResult find_hom(const Instance& src, const FactIndex& dst, const HomOptions& opt) {
  Instance facts = src.restrict(opt.sigma);
  std::vector<Term> terms = facts.adom();
  auto var = [&](Term t) { return static_cast<int>(std::lower_bound(terms.begin(), terms.end(), t) - terms.begin()); };
  const int nv = static_cast<int>(terms.size());
  std::vector<Term> assign(nv);
  HomResult res;
  for (int v = 0; v < nv; ++v) {
    Term t = terms[v];
    auto pin = opt.pins.find(t);
    if (opt.db_preserving && t.is_named()) {
      if (pin != opt.pins.end() && pin->second != t) return res;
      assign[v] = t;
    } else if (pin != opt.pins.end()) {
      assign[v] = pin->second;
    }
  }
  std::vector<JoinAtom> atoms;
  atoms.reserve(facts.size());
  for (const auto& f : facts) {
    JoinAtom a;
    a.rel = f.rel;
    for (Term t : f.args) a.vars.push_back(var(t));
    atoms.push_back(std::move(a));
  }
  // Atoms with every variable fixed are plain membership tests; the rest
  // split into independent components over the unfixed variables.
  Dsu dsu(nv);
  Args key;
  for (const auto& a : atoms) {
    int first = -1;
    bool all_fixed = true;
    for (int v : a.vars) {
      if (assign[v].valid()) continue;
      all_fixed = false;
      if (first < 0) first = v;
      else dsu.unite(first, v);
    }
    if (all_fixed) {
      key.clear();
      for (int v : a.vars) key.push_back(assign[v]);
      if (dst.find(a.rel, {key.data(), key.size()}) == FactIndex::kNone) return res;
    }
  }
  std::map<int, std::vector<JoinAtom>> comps;
  for (const auto& a : atoms) {
    for (int v : a.vars)
      if (!assign[v].valid()) {
        comps[dsu.find(v)].push_back(a);
        break;
      }
  }
  uint64_t used = 0;
  for (auto& [root, catoms] : comps) {
    uint64_t limit = opt.node_limit ? (opt.node_limit > used ? opt.node_limit - used : 1) : 0;
    Join j(dst, catoms, assign, limit);
    std::vector<std::pair<int, Term>> found;
    bool ok = j.run([&](const std::vector<Term>& a, const std::vector<uint32_t>&) {
      for (const auto& at : catoms)
        for (int v : at.vars) found.emplace_back(v, a[v]);
      return true;
    });
    used += j.nodes();
    if (!ok) {
      res.status = HomStatus::BudgetExceeded;
      return res;
    }
    if (!j.stopped()) return res;
    for (auto [v, t] : found) assign[v] = t;
  }
  res.status = HomStatus::Found;
  for (int v = 0; v < nv; ++v) res.mapping[terms[v]] = assign[v];
  for (auto [a, b] : opt.pins) res.mapping.emplace(a, b);
  return res;
}

bool verify_hom(const Instance& src, const Instance& dst, const Mapping& h, const HomOptions& opt) {
  for (auto [a, b] : opt.pins) {
    auto it = h.find(a);
    if (it == h.end() || it->second != b) return false;
  }
  if (opt.db_preserving)
    for (auto [a, b] : h)
      if (a.is_named() && a != b) return false;
  auto image = [&](Term t) -> std::optional<Term> {
    auto it = h.find(t);
    if (it != h.end()) return it->second;
    if (opt.db_preserving && t.is_named()) return t;
    return std::nullopt;
  };
  for (const auto& f : src) {
    if (!opt.sigma.contains(f.rel)) continue;
    Fact g;
    g.rel = f.rel;
    for (Term t : f.args) {
      auto im = image(t);
      if (!im) return false;
      g.args.push_back(*im);
    }
    if (!dst.contains(g)) return false;
  }
  return true;
}

// ESU enumeration.
void connected_subsets(const std::vector<std::vector<int>>& adj, int k,
                       const std::function<bool(const std::vector<int>&)>& fn) {
  const int n = static_cast<int>(adj.size());
  bool stop = false;
  std::vector<int> sub;
  std::vector<char> in_sub(n, 0), near(n, 0);
  std::function<void(std::vector<int>, int)> extend = [&](std::vector<int> ext, int root) {
    if (stop) return;
    if (static_cast<int>(sub.size()) == k) {
      std::vector<int> s = sub;
      std::sort(s.begin(), s.end());
      if (fn(s)) stop = true;
      return;
    }
    while (!ext.empty() && !stop) {
      int w = ext.front();
      ext.erase(ext.begin());
      std::vector<int> ext2 = ext;
      for (int u : adj[w])
        if (u > root && !in_sub[u] && !near[u] && std::find(ext2.begin(), ext2.end(), u) == ext2.end())
          ext2.push_back(u);
      // Vertices adjacent to the current subset are "near"; w's exclusive
      // neighbours are those not already near.
      std::vector<int> marked;
      for (int u : adj[w])
        if (!near[u]) {
          near[u] = 1;
          marked.push_back(u);
        }
      sub.push_back(w);
      in_sub[w] = 1;
      extend(ext2, root);
      in_sub[w] = 0;
      sub.pop_back();
      for (int u : marked) near[u] = 0;
    }
  };
  for (int v = 0; v < n && !stop; ++v) {
    sub = {v};
    in_sub[v] = 1;
    std::vector<int> marked;
    for (int u : adj[v])
      if (!near[u]) {
        near[u] = 1;
        marked.push_back(u);
      }
    near[v] = 1;
    std::vector<int> ext;
    for (int u : adj[v])
      if (u > v) ext.push_back(u);
    extend(ext, v);
    near[v] = 0;
    for (int u : marked) near[u] = 0;
    in_sub[v] = 0;
  }
}

Verdict hom_exists_n(const Instance& I1, const Instance& I2, const Schema& sigma, int n, const Budget& b) {
  json homs = json::array();
  if (n <= 0) return Verdict::holds({{"kind", "bounded_hom"}, {"n", n}, {"homs", homs}}, b);
  FactIndex dst(I2);
  HomOptions opt;
  opt.sigma = sigma;
  opt.db_preserving = true;
  size_t checked = 0;
  std::optional<Verdict> out;
  auto check = [&](const Instance& comp, const std::vector<Term>& dom) {
    if (b.max_candidates && ++checked > b.max_candidates) {
      out = Verdict::unknown({{"reason", "candidate cap"}, {"checked", checked - 1}}, b);
      return true;
    }
    if (!b.max_candidates) ++checked;
    Instance sub = comp.induced(dom);
    auto r = find_hom(sub, dst, opt);
    if (!r.found()) {
      out = Verdict::fails(
          {{"kind", "bounded_hom_violation"}, {"n", n}, {"domain", terms_json(dom)}, {"subinstance", facts_json(sub)}}, b);
      return true;
    }
    homs.push_back({{"domain", terms_json(dom)}, {"mapping", mapping_json(r.mapping)}});
    return false;
  };
  for (const auto& comp : connected_components(I1, sigma)) {
    auto dom = comp.adom();
    if (static_cast<int>(dom.size()) <= n) {
      if (check(comp, dom)) return *out;
      continue;
    }
    std::vector<std::vector<int>> adj(dom.size());
    auto pos = [&](Term t) { return static_cast<int>(std::lower_bound(dom.begin(), dom.end(), t) - dom.begin()); };
    for (const auto& f : comp)
      for (size_t i = 0; i < f.args.size(); ++i)
        for (size_t j = 0; j < f.args.size(); ++j)
          if (f.args[i] != f.args[j]) adj[pos(f.args[i])].push_back(pos(f.args[j]));
    for (auto& a : adj) {
      std::sort(a.begin(), a.end());
      a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    bool stopped = false;
    connected_subsets(adj, n, [&](const std::vector<int>& s) {
      std::vector<Term> d;
      for (int i : s) d.push_back(dom[i]);
      stopped = check(comp, d);
      return stopped;
    });
    if (stopped) return *out;
  }
  return Verdict::holds({{"kind", "bounded_hom"}, {"n", n}, {"homs", homs}}, b);
}

std::vector<std::vector<Term>> evaluate_cq(const CQ& q, const Instance& I) {
  std::set<std::vector<Term>> out;
  std::vector<char> in_atoms(q.num_vars(), 0);
  for (const auto& a : q.atoms)
    for (int v : a.args) in_atoms[v] = 1;
  auto adom = I.adom();
  auto emit_with_free = [&](std::vector<Term> tuple) {
    std::vector<size_t> free;
    for (size_t i = 0; i < q.answer.size(); ++i)
      if (!in_atoms[q.answer[i]]) free.push_back(i);
    if (free.empty()) {
      out.insert(tuple);
      return;
    }
    if (adom.empty()) return;
    std::vector<size_t> ctr(free.size(), 0);
    while (true) {
      for (size_t k = 0; k < free.size(); ++k) tuple[free[k]] = adom[ctr[k]];
      // Repeated free answer variable must take one value.
      bool ok = true;
      for (size_t a = 0; a < q.answer.size() && ok; ++a)
        for (size_t c = a + 1; c < q.answer.size(); ++c)
          if (q.answer[a] == q.answer[c] && tuple[a] != tuple[c]) ok = false;
      if (ok) out.insert(tuple);
      size_t k = 0;
      while (k < free.size() && ++ctr[k] == adom.size()) ctr[k++] = 0;
      if (k == free.size()) break;
    }
  };
  if (q.atoms.empty()) {
    emit_with_free(std::vector<Term>(q.answer.size()));
    return {out.begin(), out.end()};
  }
  FactIndex idx(I);
  std::vector<JoinAtom> atoms;
  for (const auto& a : q.atoms) atoms.push_back({a.rel, a.args, 0, FactIndex::kNone});
  std::vector<Term> assign(q.num_vars());
  Join j(idx, atoms, assign);
  j.run([&](const std::vector<Term>& a, const std::vector<uint32_t>&) {
    std::vector<Term> tuple;
    for (int v : q.answer) tuple.push_back(a[v]);
    emit_with_free(tuple);
    return false;
  });
  return {out.begin(), out.end()};
}

namespace {

constexpr size_t kModelInlineLimit = 5000;

json model_json(const Instance& M) {
  json j{{"model_facts", M.size()}};
  if (M.size() <= kModelInlineLimit) j["model"] = facts_json(M);
  return j;
}

bool matches(const Instance& Iq, const Instance& M, const Mapping& pins) {
  HomOptions opt;
  opt.pins = pins;
  opt.db_preserving = true;
  return find_hom(Iq, M, opt).found();
}

struct CountermodelSearch {
  const RuleSet& T;
  const Instance& Iq;
  const Mapping& pins;
  size_t cap;
  size_t nodes = 0;
  int fresh_limit = 0;
  uint32_t next_null = 0;
  bool aborted = false;

  // First rule application whose head is unsatisfied, or nullopt.
  std::optional<std::pair<size_t, std::vector<Term>>> violation(const Instance& M) {
    FactIndex idx(M);
    for (size_t r = 0; r < T.size(); ++r) {
      const TGD& t = T[r];
      std::vector<JoinAtom> body, head;
      for (const auto& a : t.body) body.push_back({a.rel, a.args, 0, FactIndex::kNone});
      for (const auto& a : t.head) head.push_back({a.rel, a.args, 0, FactIndex::kNone});
      std::optional<std::vector<Term>> bad;
      auto test = [&](const std::vector<Term>& a) {
        std::vector<Term> h(t.num_vars());
        for (int v : t.frontier) h[v] = a[v];
        Join hj(idx, head, h);
        hj.run([](const std::vector<Term>&, const std::vector<uint32_t>&) { return true; });
        if (!hj.stopped()) {
          std::vector<Term> fr(t.num_vars());
          for (int v : t.frontier) fr[v] = a[v];
          bad = fr;
          return true;
        }
        return false;
      };
      std::vector<Term> assign(t.num_vars());
      if (body.empty()) {
        test(assign);
      } else {
        Join bj(idx, body, assign);
        bj.run([&](const std::vector<Term>& a, const std::vector<uint32_t>&) { return test(a); });
      }
      if (bad) return std::make_pair(r, *bad);
    }
    return std::nullopt;
  }

  std::optional<Instance> dfs(const Instance& M, int fresh_used) {
    if (++nodes > cap) {
      aborted = true;
      return std::nullopt;
    }
    if (matches(Iq, M, pins)) return std::nullopt;
    auto v = violation(M);
    if (!v) return M;
    const TGD& t = T[v->first];
    std::vector<Term> assign = v->second;
    auto dom = M.adom();
    return branch(M, t, assign, 0, dom, fresh_used);
  }

  std::optional<Instance> branch(const Instance& M, const TGD& t, std::vector<Term>& assign, size_t k,
                                 const std::vector<Term>& dom, int fresh_used) {
    if (aborted) return std::nullopt;
    if (k == t.existentials.size()) {
      std::vector<Fact> facts(M.begin(), M.end());
      for (const auto& a : t.head) {
        Fact f;
        f.rel = a.rel;
        for (int x : a.args) f.args.push_back(assign[x]);
        facts.push_back(std::move(f));
      }
      return dfs(Instance(std::move(facts)), fresh_used);
    }
    int v = t.existentials[k];
    for (Term c : dom) {
      assign[v] = c;
      if (auto r = branch(M, t, assign, k + 1, dom, fresh_used)) return r;
      if (aborted) return std::nullopt;
    }
    if (fresh_used < fresh_limit) {
      assign[v] = Term::null(next_null + static_cast<uint32_t>(fresh_used));
      std::vector<Term> dom2 = dom;
      dom2.insert(std::upper_bound(dom2.begin(), dom2.end(), assign[v]), assign[v]);
      if (auto r = branch(M, t, assign, k + 1, dom2, fresh_used + 1)) return r;
    }
    assign[v] = Term();
    return std::nullopt;
  }
};

}  // namespace

std::optional<Instance> find_countermodel(const Instance& D, const RuleSet& T, const Instance& Iq, const Mapping& pins,
                                          size_t node_cap) {
  CountermodelSearch s{T, Iq, pins, node_cap};
  s.next_null = D.max_null_index_plus_one();
  for (int limit = 0; limit <= 12; ++limit) {
    s.fresh_limit = limit;
    auto m = s.dfs(D, 0);
    if (m) return m;
    if (s.aborted) return std::nullopt;
  }
  return std::nullopt;
}

Verdict instance_entailed_in(const ChaseResult& r, const Instance& D, const RuleSet& T, const Instance& Iq,
                             const Mapping& pins, const Budget& b) {
  HomOptions opt;
  opt.pins = pins;
  opt.db_preserving = true;
  auto h = find_hom(Iq, r.facts, opt);
  if (h.found()) return Verdict::holds({{"kind", "match"}, {"homomorphism", mapping_json(h.mapping)}, {"chase_rounds", r.rounds}}, b);
  if (r.saturated) {
    json c = model_json(r.instance());
    c["kind"] = "saturated_chase";
    return Verdict::fails(c, b);
  }
  if (b.model_size > 0) {
    if (auto m = find_countermodel(D, T, Iq, pins, b.model_size)) {
      json c = model_json(*m);
      c["kind"] = "countermodel";
      return Verdict::fails(c, b);
    }
  }
  return Verdict::unknown({{"chase_facts", r.size()}, {"chase_rounds", r.rounds}, {"saturated", false}}, b);
}

Verdict instance_entailed(const Instance& D, const RuleSet& T, const Instance& Iq, const Mapping& pins, const Budget& b) {
  return instance_entailed_in(chase(D, T, b), D, T, Iq, pins, b);
}

Verdict cq_entailed(const Instance& D, const RuleSet& T, const CQ& q, const std::vector<Term>& tuple, const Budget& b) {
  if (tuple.size() != q.answer.size()) throw PreconditionError("answer tuple has the wrong length");
  Instance Iq = canonical_database(q);
  Mapping pins;
  for (size_t i = 0; i < tuple.size(); ++i) {
    Term v = Term::null(static_cast<uint32_t>(q.answer[i]));
    auto [it, fresh] = pins.emplace(v, tuple[i]);
    if (!fresh && it->second != tuple[i]) {
      return Verdict::fails({{"kind", "inconsistent_tuple"}}, b);
    }
  }
  Verdict v = instance_entailed(D, T, Iq, pins, b);
  if (v.value == Outcome::Holds) {
    // Report the match per query variable.
    json named = json::object();
    for (auto& [k, val] : v.certificate["homomorphism"].items()) {
      uint32_t idx = static_cast<uint32_t>(std::stoul(k.substr(2)));
      named[q.var_names.at(idx)] = val;
    }
    v.certificate["homomorphism"] = named;
  }
  return v;
}

Verdict infinite_chain_hom(const ChainSpec& spec, const Instance& J, const Schema& sigma, const std::map<int, Term>& pins,
                           const Budget& b) {
  if (spec.loop_atoms.empty() || spec.loop_in.size() != spec.entry.size() || spec.loop_out.size() != spec.entry.size() ||
      spec.loop_vars <= 0)
    throw SpecNotPeriodic("chain spec lacks a well-formed loop declaration");
  FactIndex idx;
  idx.reserve(J.size(), 2 * J.size());
  for (const auto& f : J)
    if (sigma.contains(f.rel)) idx.insert_new(f.rel, {f.args.data(), f.args.size()});
  std::optional<std::vector<Term>> adom;
  auto keep = [&](const std::vector<Atom>& atoms) {
    std::vector<JoinAtom> out;
    for (const auto& a : atoms)
      if (sigma.contains(a.rel)) out.push_back({a.rel, a.args, 0, FactIndex::kNone});
    return out;
  };
  auto prefix = keep(spec.prefix_atoms);
  auto loop = keep(spec.loop_atoms);

  // Enumerates assignments of `atoms` extended by all values of the
  // requested unconstrained variables; calls fn with each.
  auto occurs = [](const std::vector<JoinAtom>& atoms, int vars) {
    std::vector<char> in(vars, 0);
    for (const auto& a : atoms)
      for (int v : a.vars) in[v] = 1;
    return in;
  };
  const auto prefix_occurs = occurs(prefix, spec.prefix_vars);
  const auto loop_occurs = occurs(loop, spec.loop_vars);

  // `assign` is restored before returning.
  auto enumerate = [&](const std::vector<JoinAtom>& atoms, const std::vector<char>& in_atoms,
                       std::vector<Term>& assign, const std::vector<int>& wanted, auto&& fn) {
    auto expand = [&](const std::vector<Term>& a) {
      boost::container::small_vector<int, 4> free;
      for (int v : wanted)
        if (!in_atoms[v] && !a[v].valid() && std::find(free.begin(), free.end(), v) == free.end()) free.push_back(v);
      if (free.empty()) {
        fn(a);
        return;
      }
      std::vector<Term> x = a;
      std::function<void(size_t)> rec = [&](size_t k) {
        if (k == free.size()) {
          fn(x);
          return;
        }
        if (!adom) adom = J.adom();
        for (Term t : *adom) {
          x[free[k]] = t;
          rec(k + 1);
        }
        x[free[k]] = Term();
      };
      rec(0);
    };
    if (atoms.empty()) {
      expand(assign);
      return;
    }
    Join j(idx, atoms, assign);
    j.run([&](const std::vector<Term>& a, const std::vector<uint32_t>&) {
      expand(a);
      return false;
    });
  };

  std::map<std::vector<Term>, int> ids;
  std::vector<std::vector<Term>> states;
  std::vector<std::vector<int>> succ;
  std::map<std::vector<Term>, std::vector<Term>> prefix_witness;
  auto intern = [&](const std::vector<Term>& s) {
    auto [it, fresh] = ids.try_emplace(s, static_cast<int>(states.size()));
    if (fresh) {
      states.push_back(s);
      succ.emplace_back();
    }
    return it->second;
  };

  std::vector<Term> passign(spec.prefix_vars);
  for (auto [v, t] : pins) {
    if (v < 0 || v >= spec.prefix_vars) throw PreconditionError("pin outside the prefix variables");
    passign[v] = t;
  }
  std::set<int> initial;
  enumerate(prefix, prefix_occurs, passign, spec.entry, [&](const std::vector<Term>& a) {
    std::vector<Term> s;
    for (int v : spec.entry) s.push_back(a[v]);
    int id = intern(s);
    initial.insert(id);
    prefix_witness.try_emplace(s, a);
  });

  std::deque<int> queue(initial.begin(), initial.end());
  std::vector<char> expanded;
  std::vector<Term> la(spec.loop_vars), t(spec.loop_out.size());
  while (!queue.empty()) {
    int s = queue.front();
    queue.pop_front();
    if (static_cast<int>(expanded.size()) <= s) expanded.resize(s + 1, 0);
    if (expanded[s]) continue;
    expanded[s] = 1;
    if (b.max_candidates && states.size() > b.max_candidates)
      return Verdict::unknown({{"reason", "state cap"}, {"states", states.size()}}, b);
    std::fill(la.begin(), la.end(), Term());
    bool consistent = true;
    for (size_t k = 0; k < spec.loop_in.size(); ++k) {
      Term& slot = la[spec.loop_in[k]];
      if (slot.valid() && slot != states[s][k]) consistent = false;
      slot = states[s][k];
    }
    if (!consistent) continue;
    std::vector<int> out;
    enumerate(loop, loop_occurs, la, spec.loop_out, [&](const std::vector<Term>& a) {
      for (size_t k = 0; k < spec.loop_out.size(); ++k) t[k] = a[spec.loop_out[k]];
      out.push_back(intern(t));
    });
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    succ[s] = std::move(out);
    for (int u : succ[s]) queue.push_back(u);
  }

  // Greatest fixpoint: drop states without a surviving successor.
  const int n = static_cast<int>(states.size());
  std::vector<std::vector<int>> pred(n);
  std::vector<int> outdeg(n, 0);
  for (int s = 0; s < n; ++s) {
    outdeg[s] = static_cast<int>(succ[s].size());
    for (int t : succ[s]) pred[t].push_back(s);
  }
  std::vector<char> alive(n, 1);
  std::deque<int> dead;
  for (int s = 0; s < n; ++s)
    if (outdeg[s] == 0) dead.push_back(s);
  while (!dead.empty()) {
    int s = dead.front();
    dead.pop_front();
    if (!alive[s]) continue;
    alive[s] = 0;
    for (int p : pred[s])
      if (alive[p] && --outdeg[p] == 0) dead.push_back(p);
  }

  std::optional<int> start;
  for (int s : initial)
    if (alive[s]) {
      start = s;
      break;
    }
  if (!start) return Verdict::fails({{"kind", "no_infinite_run"}, {"states", n}, {"initial_states", initial.size()}}, b);

  std::vector<int> path{*start};
  std::map<int, size_t> seen{{*start, 0}};
  while (true) {
    int cur = path.back();
    int nxt = -1;
    for (int t : succ[cur])
      if (alive[t]) {
        nxt = t;
        break;
      }
    if (auto it = seen.find(nxt); it != seen.end()) {
      json p = json::array();
      for (int s : path) p.push_back(terms_json(states[s]));
      json pre = json::object();
      const auto& w = prefix_witness.at(states[*start]);
      for (int v = 0; v < spec.prefix_vars; ++v)
        if (w[v].valid()) pre["v" + std::to_string(v)] = term_name(w[v]);
      return Verdict::holds({{"kind", "lasso"}, {"prefix", pre}, {"path", p}, {"cycle_start", it->second}, {"states", n}}, b);
    }
    seen[nxt] = path.size();
    path.push_back(nxt);
  }
}

}  // namespace tgdc
