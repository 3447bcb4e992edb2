#include "tgdc/frontier_one.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

#include "tgdc/parallel.hpp"
#include "tgdc/triviality.hpp"

namespace tgdc {

MalformedTree::MalformedTree(const std::string& n, const std::string& c, const std::string& msg)
    : Error("node " + n + ": " + c + ": " + msg), node(n), condition(c) {}

// ---------------------------------------------------------------- CQ keys

namespace {

std::string encode(const CQ& q, const std::vector<int>& rank, const std::vector<Atom>& atoms) {
  std::vector<std::string> parts;
  parts.reserve(atoms.size());
  for (const auto& a : atoms) {
    std::string s = relation_name(a.rel) + "(";
    for (size_t i = 0; i < a.args.size(); ++i) {
      if (i) s += ',';
      s += 'v' + std::to_string(rank[a.args[i]]);
    }
    parts.push_back(s + ")");
  }
  std::sort(parts.begin(), parts.end());
  parts.erase(std::unique(parts.begin(), parts.end()), parts.end());
  std::string out = "q(";
  for (size_t i = 0; i < q.answer.size(); ++i) {
    if (i) out += ',';
    out += 'v' + std::to_string(rank[q.answer[i]]);
  }
  out += ") :- ";
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ", ";
    out += parts[i];
  }
  return out + ".";
}

}  // namespace

std::string cq_key(const CQ& q, size_t perm_cap, bool* exact) {
  if (exact) *exact = true;
  const int nv = q.num_vars();
  std::vector<char> used(nv, 0);
  for (const auto& a : q.atoms)
    for (int v : a.args) used[v] = 1;
  for (int v : q.answer) used[v] = 1;

  // Colour refinement seeded by answer position and occurrences.
  std::vector<std::string> color(nv);
  for (int v = 0; v < nv; ++v) {
    auto it = std::find(q.answer.begin(), q.answer.end(), v);
    color[v] = it == q.answer.end() ? "e" : "a" + std::to_string(it - q.answer.begin());
  }
  for (int round = 0; round < 3; ++round) {
    std::vector<std::vector<std::string>> occ(nv);
    for (const auto& a : q.atoms) {
      std::string ctx = relation_name(a.rel) + "[";
      for (int w : a.args) ctx += color[w] + ";";
      ctx += "]";
      for (size_t p = 0; p < a.args.size(); ++p) occ[a.args[p]].push_back(std::to_string(p) + "@" + ctx);
    }
    std::vector<std::string> next(nv);
    for (int v = 0; v < nv; ++v) {
      std::sort(occ[v].begin(), occ[v].end());
      next[v] = color[v] + "{";
      for (const auto& s : occ[v]) next[v] += s + "|";
      next[v] += "}";
    }
    // Compress to ranks so colours stay short.
    std::vector<std::string> sorted = next;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    for (int v = 0; v < nv; ++v)
      color[v] = "c" + std::to_string(std::lower_bound(sorted.begin(), sorted.end(), next[v]) - sorted.begin());
  }

  std::vector<int> order;
  for (int v = 0; v < nv; ++v)
    if (used[v]) order.push_back(v);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return color[a] < color[b]; });
  std::vector<std::pair<size_t, size_t>> groups;
  for (size_t i = 0; i < order.size();) {
    size_t j = i;
    while (j < order.size() && color[order[j]] == color[order[i]]) ++j;
    groups.emplace_back(i, j);
    i = j;
  }
  size_t perms = 1;
  bool capped = false;
  for (auto [i, j] : groups)
    for (size_t f = 2; f <= j - i; ++f) {
      perms *= f;
      if (perms > perm_cap) capped = true;
    }
  if (capped && exact) *exact = false;

  std::vector<int> rank(nv, 0);
  std::string best;
  bool have = false;
  auto leaf = [&] {
    for (size_t i = 0; i < order.size(); ++i) rank[order[i]] = static_cast<int>(i);
    std::string s = encode(q, rank, q.atoms);
    if (!have || s < best) {
      best = std::move(s);
      have = true;
    }
  };
  if (capped) {
    leaf();
    return best;
  }
  std::function<void(size_t)> rec = [&](size_t g) {
    if (g == groups.size()) {
      leaf();
      return;
    }
    auto [i, j] = groups[g];
    std::sort(order.begin() + i, order.begin() + j);
    do {
      rec(g + 1);
    } while (std::next_permutation(order.begin() + i, order.begin() + j));
  };
  rec(0);
  return best;
}

bool cq_isomorphic(const CQ& a, const CQ& b) {
  bool ea = true, eb = true;
  if (cq_key(a, 40320, &ea) == cq_key(b, 40320, &eb)) return true;
  if (ea && eb) return false;
  // Fall back to mutual homomorphisms that are bijective on variables.
  Instance da = canonical_database(a), db = canonical_database(b);
  if (da.size() != db.size() || da.adom().size() != db.adom().size() || a.arity() != b.arity()) return false;
  HomOptions opt;
  for (size_t i = 0; i < a.answer.size(); ++i)
    opt.pins[Term::null(static_cast<uint32_t>(a.answer[i]))] = Term::null(static_cast<uint32_t>(b.answer[i]));
  auto h = find_hom(da, db, opt);
  if (!h.found()) return false;
  std::set<Term> image;
  for (auto& [k, v] : h.mapping) image.insert(v);
  return image.size() == h.mapping.size() && da.rename(h.mapping) == db;
}

// ---------------------------------------------------------------- bodyCQ

namespace {

// Restricted growth strings of length n, calling fn(blocks, rgs).
void for_each_partition(int n, const std::function<bool(const std::vector<int>&, int)>& fn) {
  std::vector<int> rgs(n, 0);
  std::function<bool(int, int)> rec = [&](int i, int blocks) -> bool {
    if (i == n) return fn(rgs, blocks);
    for (int b = 0; b <= blocks; ++b) {
      rgs[i] = b;
      if (rec(i + 1, std::max(blocks, b + 1))) return true;
    }
    return false;
  };
  rec(0, 0);
}

}  // namespace

BodyCQSet body_cqs(const RuleSet& T, size_t cap) {
  std::map<std::string, CQ> seen;
  CQ tq = CQ::true_query();
  seen.emplace(cq_key(tq), tq);
  BodyCQSet out;
  size_t work = 0;
  auto over = [&] { return cap && (seen.size() > cap || work > 16 * cap); };
  for (const auto& rule : T) {
    const size_t m = rule.body.size();
    if (m == 0) continue;
    if (m > 16) {
      out.partial = true;
      continue;
    }
    for (uint32_t mask = 1; mask < (1u << m) && !out.partial; ++mask) {
      std::vector<const Atom*> atoms;
      std::vector<int> vars;
      for (size_t i = 0; i < m; ++i)
        if (mask & (1u << i)) {
          atoms.push_back(&rule.body[i]);
          vars.insert(vars.end(), rule.body[i].args.begin(), rule.body[i].args.end());
        }
      std::sort(vars.begin(), vars.end());
      vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
      for_each_partition(static_cast<int>(vars.size()), [&](const std::vector<int>& rgs, int blocks) {
        CQ base;
        for (int i = 0; i < blocks; ++i) base.var_names.push_back("x" + std::to_string(i));
        for (const Atom* a : atoms) {
          Atom na;
          na.rel = a->rel;
          for (int v : a->args) na.args.push_back(rgs[std::lower_bound(vars.begin(), vars.end(), v) - vars.begin()]);
          if (std::find(base.atoms.begin(), base.atoms.end(), na) == base.atoms.end()) base.atoms.push_back(na);
        }
        for (int ans = -1; ans < blocks; ++ans) {
          ++work;
          CQ q = base;
          if (ans >= 0) q.answer = {ans};
          std::string k = cq_key(q);
          seen.emplace(std::move(k), std::move(q));
        }
        if (over()) {
          out.partial = true;
          return true;
        }
        return false;
      });
    }
  }
  for (auto& [k, q] : seen) out.queries.push_back(std::move(q));
  return out;
}

// ---------------------------------------------------------------- types

TType TType::of(std::vector<CQ> members) {
  members.push_back(CQ::true_query());
  std::map<std::string, CQ> by_key;
  for (auto& q : members) by_key.emplace(cq_key(q), std::move(q));
  TType t;
  for (auto& [k, q] : by_key) {
    t.keys.push_back(k);
    t.members.push_back(std::move(q));
  }
  return t;
}

json TType::to_json() const {
  json m = json::array();
  for (const auto& q : members) m.push_back(format_cq(q));
  json j = {{"members", m}, {"depth", depth}, {"partial", partial}};
  j["status"] = status == TypeStatus::SaturatedExact ? "saturated_exact" : "observed";
  return j;
}

TType observed_type_in(const ChaseResult& r, const BodyCQSet& cqs, Term c, int depth) {
  std::vector<CQ> members;
  for (const auto& q : cqs.queries) {
    if (q.is_true_query() || q.arity() > 1) continue;
    HomOptions opt;
    if (q.arity() == 1) opt.pins[Term::null(static_cast<uint32_t>(q.answer[0]))] = c;
    if (find_hom(canonical_database(q), r.facts, opt).found()) members.push_back(q);
  }
  TType t = TType::of(std::move(members));
  t.status = r.saturated ? TypeStatus::SaturatedExact : TypeStatus::Observed;
  t.depth = depth;
  t.partial = cqs.partial;
  return t;
}

TType observed_type(const Database& D, const RuleSet& T, Term c, const Budget& b) {
  auto dom = D.adom();
  if (!std::binary_search(dom.begin(), dom.end(), c))
    throw ConstantNotFound("constant " + term_name(c) + " does not occur in the database");
  return observed_type_in(chase(D, T, b), body_cqs(T, 20000), c, b.max_depth);
}

Instance type_database(const TType& t, Term c, uint32_t& next_null) {
  Instance out;
  for (const auto& q : t.members) {
    if (q.atoms.empty()) continue;
    Instance part = canonical_database(q, next_null);
    if (q.arity() == 1) part = part.rename({{Term::null(next_null + static_cast<uint32_t>(q.answer[0])), c}});
    next_null += static_cast<uint32_t>(q.num_vars());
    out = out.union_with(part);
  }
  return out;
}

// ---------------------------------------------------------------- unraveling

Unraveling unravel(const Database& D, int k, int depth, size_t max_bags) {
  if (k < 1) throw PreconditionError("unraveling width must be at least 1");
  Unraveling u;
  const auto dom = D.adom();
  const int m = static_cast<int>(dom.size());
  // Nonempty subsets of adom with at most k elements, by size then lexicographically.
  std::vector<std::vector<int>> sets;
  for (int size = 1; size <= std::min(k, m); ++size) {
    std::vector<int> idx(size);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
      sets.push_back(idx);
      int i = size - 1;
      while (i >= 0 && idx[i] == m - size + i) --i;
      if (i < 0) break;
      ++idx[i];
      for (int j = i + 1; j < size; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  std::vector<std::vector<int>> containing(m);
  for (int s = 0; s < static_cast<int>(sets.size()); ++s)
    for (int e : sets[s]) containing[e].push_back(s);

  uint64_t counter = 0;
  std::vector<Fact> facts;
  struct Node {
    int set;
    std::vector<Term> copy;  // parallel to sets[set]
    int depth;
  };
  std::vector<Node> nodes;
  auto make = [&](int s, int parent, int shared_orig, Term shared_copy, int d) {
    if (max_bags && nodes.size() >= max_bags) throw BudgetExceeded("unraveling exceeds " + std::to_string(max_bags) + " bags");
    Node n{s, {}, d};
    for (int e : sets[s]) {
      Term t;
      if (e == shared_orig) {
        t = shared_copy;
      } else {
        t = constant(term_name(dom[e]) + "~" + std::to_string(++counter));
        u.back_map[t] = dom[e];
      }
      n.copy.push_back(t);
    }
    std::vector<Term> sub;
    for (int e : sets[s]) sub.push_back(dom[e]);
    std::map<Term, Term> ren;
    for (size_t i = 0; i < sub.size(); ++i) ren[sub[i]] = n.copy[i];
    for (const auto& f : D.induced(sub).rename(ren)) facts.push_back(f);
    u.bags.push_back(n.copy);
    u.parent.push_back(parent);
    nodes.push_back(std::move(n));
  };
  for (int s = 0; s < static_cast<int>(sets.size()); ++s) make(s, -1, -1, Term(), 1);
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].depth >= depth) continue;
    const int s = nodes[i].set;
    for (size_t j = 0; j < sets[s].size(); ++j) {
      const int e = sets[s][j];
      const Term shared = nodes[i].copy[j];
      const int d = nodes[i].depth + 1;
      for (int s2 : containing[e]) make(s2, static_cast<int>(i), e, shared, d);
    }
  }
  u.db = Instance(std::move(facts));
  if (!verify_hom(u.db, D, u.back_map)) throw Error("uncopying map is not a homomorphism");
  return u;
}

// ---------------------------------------------------------------- head fragments

namespace {

struct UnionFind {
  std::vector<int> p;
  explicit UnionFind(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int x) { return p[x] == x ? x : p[x] = find(p[x]); }
  void unite(int a, int b) { p[find(a)] = find(b); }
};

}  // namespace

std::vector<HeadFragment> head_fragments(const RuleSet& T2, const Schema& sigma) {
  std::vector<HeadFragment> out;
  for (size_t r = 0; r < T2.size(); ++r) {
    const TGD& t = T2[r];
    const int nv = t.num_vars();
    UnionFind sig(nv), full(nv);
    for (const auto& a : t.head)
      for (size_t i = 1; i < a.args.size(); ++i) {
        full.unite(a.args[0], a.args[i]);
        if (sigma.contains(a.rel)) sig.unite(a.args[0], a.args[i]);
      }
    std::map<int, std::vector<const Atom*>> comps;
    for (const auto& a : t.head)
      if (sigma.contains(a.rel) && !a.args.empty()) comps[sig.find(a.args[0])].push_back(&a);
    // Order components by their smallest variable.
    std::vector<std::pair<int, std::vector<const Atom*>>> ordered;
    for (auto& [root, atoms] : comps) {
      int mn = nv;
      for (const Atom* a : atoms)
        for (int v : a->args) mn = std::min(mn, v);
      ordered.emplace_back(mn, std::move(atoms));
    }
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [mn, atoms] : ordered) {
      std::set<int> vars;
      for (const Atom* a : atoms) vars.insert(a->args.begin(), a->args.end());
      bool has_frontier = false, linked = false;
      for (int f : t.frontier) {
        if (vars.count(f)) has_frontier = true;
        for (int v : vars)
          if (full.find(v) == full.find(f)) linked = true;
      }
      if (has_frontier) continue;
      std::vector<Fact> fs;
      for (const Atom* a : atoms) {
        Fact f;
        f.rel = a->rel;
        for (int v : a->args) f.args.push_back(Term::null(static_cast<uint32_t>(v)));
        fs.push_back(std::move(f));
      }
      out.push_back({r, Instance(std::move(fs)), !linked});
    }
  }
  return out;
}

// ---------------------------------------------------------------- labeled databases

Instance LabeledDatabase::expanded() const {
  uint32_t next = base.max_null_index_plus_one();
  Instance out = base;
  for (Term c : base.adom()) {
    auto it = mu.find(c);
    if (it == mu.end()) throw PreconditionError("no label for " + term_name(c));
    out = out.union_with(type_database(it->second, c, next));
  }
  return out;
}

std::pair<Instance, Mapping> LabeledDatabase::as_query() const {
  auto dom = base.adom();
  Mapping ren;
  for (size_t i = 0; i < dom.size(); ++i) ren[dom[i]] = Term::null(static_cast<uint32_t>(i));
  LabeledDatabase q;
  q.base = base.rename(ren);
  for (auto& [c, t] : mu)
    if (ren.count(c)) q.mu.emplace(ren[c], t);
  return {q.expanded(), ren};
}

// ---------------------------------------------------------------- instance trees

std::vector<Term> LabeledInstanceTree::bag_adom(size_t v) const {
  auto d = bags[v].adom();
  d.insert(d.end(), extra_constants[v].begin(), extra_constants[v].end());
  std::sort(d.begin(), d.end());
  d.erase(std::unique(d.begin(), d.end()), d.end());
  return d;
}

TType parse_type(const json& members, ArityTable* arities) {
  if (!members.is_array()) throw MalformedTree("-", "labels", "a type must be an array of CQ strings");
  std::vector<CQ> qs;
  for (const auto& m : members) {
    if (!m.is_string()) throw MalformedTree("-", "labels", "type members must be strings");
    CQ q = parse_cq(m.get<std::string>(), arities);
    if (q.arity() > 1) throw MalformedTree("-", "labels", "type members must be unary or Boolean");
    qs.push_back(std::move(q));
  }
  return TType::of(std::move(qs));
}

LabeledInstanceTree parse_tree(const json& j, ArityTable* arities) {
  ArityTable local;
  ArityTable& tab = arities ? *arities : local;
  LabeledInstanceTree t;
  if (!j.is_object() || !j.contains("nodes")) throw MalformedTree("-", "pseudo_tree", "missing nodes");
  std::map<std::string, int> index;
  for (const auto& n : j.at("nodes")) {
    std::string name = n.at("name").get<std::string>();
    if (index.count(name)) throw MalformedTree(name, "pseudo_tree", "duplicate node name");
    index[name] = static_cast<int>(t.names.size());
    t.names.push_back(name);
    std::string text;
    if (n.contains("facts"))
      for (const auto& f : n.at("facts")) {
        std::string s = f.get<std::string>();
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
        if (s.empty() || s.back() != '.') s += '.';
        text += s + "\n";
      }
    t.bags.push_back(parse_database(text, &tab));
    std::vector<Term> extra;
    if (n.contains("constants"))
      for (const auto& c : n.at("constants")) extra.push_back(constant(c.get<std::string>()));
    std::sort(extra.begin(), extra.end());
    t.extra_constants.push_back(std::move(extra));
  }
  if (j.contains("edges"))
    for (const auto& e : j.at("edges")) {
      auto from = e.at(0).get<std::string>(), to = e.at(1).get<std::string>();
      for (const auto& x : {from, to})
        if (!index.count(x)) throw MalformedTree(x, "pseudo_tree", "edge mentions an unknown node");
      t.edges.emplace_back(index[from], index[to]);
    }
  if (j.contains("mu"))
    for (auto& [c, members] : j.at("mu").items()) t.mu[constant(c)] = parse_type(members, &tab);
  return t;
}

void check_instance_tree(const LabeledInstanceTree& t) {
  const int n = static_cast<int>(t.names.size());
  if (n == 0) throw MalformedTree("-", "pseudo_tree", "the tree has no nodes");
  std::vector<int> parent(n, -1);
  std::vector<std::vector<int>> und(n);
  for (auto [u, v] : t.edges) {
    if (u == v) throw MalformedTree(t.names[v], "pseudo_tree", "self loop");
    if (parent[v] != -1) throw MalformedTree(t.names[v], "pseudo_tree", "more than one incoming edge");
    parent[v] = u;
    und[u].push_back(v);
    und[v].push_back(u);
  }
  std::vector<char> seen(n, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  while (!q.empty()) {
    int x = q.front();
    q.pop();
    for (int y : und[x])
      if (!seen[y]) {
        seen[y] = 1;
        q.push(y);
      }
  }
  for (int v = 0; v < n; ++v)
    if (!seen[v]) throw MalformedTree(t.names[v], "pseudo_tree", "not connected to " + t.names[0]);
  if (static_cast<int>(t.edges.size()) != n - 1) {
    // Connected with in-degree <= 1 and too many edges: some node is on a cycle.
    int v = 0;
    for (int s = 0; s < n; ++s) v = parent[v] == -1 ? v : parent[v];
    throw MalformedTree(t.names[v], "pseudo_tree", "directed cycle");
  }

  std::vector<std::vector<Term>> adom(n);
  for (int v = 0; v < n; ++v) adom[v] = t.bag_adom(v);
  std::map<Term, std::vector<int>> where;
  for (int v = 0; v < n; ++v)
    for (Term c : adom[v]) where[c].push_back(v);
  for (auto& [c, nodes] : where) {
    auto in = [&](int x) { return x >= 0 && std::binary_search(nodes.begin(), nodes.end(), x); };
    std::vector<int> tops;
    for (int v : nodes)
      if (!in(parent[v])) tops.push_back(v);
    if (tops.size() != 1)
      throw MalformedTree(t.names[tops.back()], "constant_subtree",
                          "the nodes containing " + term_name(c) + " are not connected");
    for (int v : nodes)
      if (v != tops[0] && parent[v] != tops[0])
        throw MalformedTree(t.names[v], "constant_subtree",
                            "the nodes containing " + term_name(c) + " form a tree of depth above one");
  }
  for (auto [u, v] : t.edges) {
    std::vector<Term> shared;
    std::set_intersection(adom[u].begin(), adom[u].end(), adom[v].begin(), adom[v].end(), std::back_inserter(shared));
    if (shared.size() > 1)
      throw MalformedTree(t.names[v], "bag_overlap",
                          "shares " + std::to_string(shared.size()) + " constants with " + t.names[u]);
  }
  for (int v = 0; v < n; ++v)
    for (Term c : adom[v])
      if (!t.mu.count(c)) throw MalformedTree(t.names[v], "labels", "no type for " + term_name(c));
}

namespace {

json terms_json(const std::vector<Term>& ts) {
  json a = json::array();
  for (Term t : ts) a.push_back(term_name(t));
  return a;
}

std::string head_key(const TGD& rule, const Schema& sigma) {
  CQ h;
  h.var_names = rule.var_names;
  for (const auto& a : rule.head)
    if (sigma.contains(a.rel)) h.atoms.push_back(a);
  return cq_key(h);
}

}  // namespace

Verdict validate_proper_tree(const LabeledInstanceTree& t, const TType& t_hat, const RuleSet& T1, const Schema& sigma,
                             const Budget& b) {
  check_instance_tree(t);
  const int n = static_cast<int>(t.names.size());
  std::vector<int> parent(n, -1);
  for (auto [u, v] : t.edges) parent[v] = u;
  std::set<std::string> heads;
  for (const auto& rule : T1) heads.insert(head_key(rule, sigma));

  const Term hat = constant("c_hat");
  uint32_t next = 0;
  const Instance hat_db = type_database(t_hat, hat, next);

  json checked = json::array();
  json undecided = json::array();
  auto fail = [&](const std::string& node, const std::string& cond, json detail) {
    json c = {{"kind", "improper_tree"}, {"node", node}, {"condition", cond}};
    c["detail"] = std::move(detail);
    return Verdict::fails(c, b);
  };
  auto labels_of = [&](int v) {
    LabeledDatabase A;
    A.base = t.bags[v];
    for (Term c : t.bag_adom(v)) A.mu.emplace(c, t.mu.at(c));
    return A;
  };

  for (int v = 0; v < n; ++v) {
    const auto dom = t.bag_adom(v);
    if (t.bags[v].empty()) {
      bool ok = parent[v] == -1 && dom.size() == 1 && t.mu.at(dom[0]).same_members(t_hat);
      if (!ok) {
        std::string why = parent[v] != -1   ? "a bag without facts must be the root"
                          : dom.size() != 1 ? "a bag without facts must hold exactly one constant"
                                            : "the label of the root constant differs from the target type";
        return fail(t.names[v], "root_type", why);
      }
      checked.push_back({{"node", t.names[v]}, {"condition", "root_type"}});
      continue;
    }
    CQ shape = cq_from_instance(t.bags[v]);
    if (!heads.count(cq_key(shape)))
      return fail(t.names[v], "head_shape", "the bag is not isomorphic to the head of any rule");
    auto [Iq, ren] = labels_of(v).as_query();
    Verdict e = instance_entailed(hat_db, T1, Iq, {}, b);
    if (e.value == Outcome::Fails) return fail(t.names[v], "head_entailed", e.certificate);
    if (e.value == Outcome::Unknown)
      undecided.push_back({{"node", t.names[v]}, {"condition", "head_entailed"}});
    else
      checked.push_back({{"node", t.names[v]}, {"condition", "head_entailed"}, {"match", e.certificate}});
  }
  for (auto [u, v] : t.edges) {
    auto du = t.bag_adom(u), dv = t.bag_adom(v);
    std::vector<Term> shared;
    std::set_intersection(du.begin(), du.end(), dv.begin(), dv.end(), std::back_inserter(shared));
    if (shared.empty()) continue;
    const Term c = shared[0];
    uint32_t nn = 0;
    Instance Dc = type_database(t.mu.at(c), hat, nn);
    auto [Iq, ren] = labels_of(v).as_query();
    Mapping pins{{ren.at(c), hat}};
    Verdict e = instance_entailed(Dc, T1, Iq, pins, b);
    const std::string edge = t.names[u] + "->" + t.names[v];
    if (e.value == Outcome::Fails) {
      json d = e.certificate;
      d["edge"] = edge;
      d["constant"] = term_name(c);
      return fail(t.names[v], "edge_entailed", d);
    }
    if (e.value == Outcome::Unknown)
      undecided.push_back({{"node", t.names[v]}, {"edge", edge}, {"condition", "edge_entailed"}});
    else
      checked.push_back({{"node", t.names[v]}, {"edge", edge}, {"condition", "edge_entailed"}});
  }
  if (!undecided.empty()) return Verdict::unknown({{"undecided", undecided}, {"checked", checked.size()}}, b);
  return Verdict::holds({{"kind", "proper_tree"}, {"conditions", checked}}, b);
}

// ---------------------------------------------------------------- candidate databases

std::vector<Database> candidate_databases(const Schema& sigma_d, int size) {
  std::vector<Database> out;
  out.emplace_back();
  if (size <= 0 || sigma_d.empty()) return out;
  std::vector<Term> consts;
  for (int i = 0; i < size; ++i) consts.push_back(singleton_constant(i));
  auto rels = sigma_d.symbols();
  std::sort(rels.begin(), rels.end(),
            [](const RelationSymbol& a, const RelationSymbol& b) { return relation_name(a.id) < relation_name(b.id); });
  std::vector<Fact> all;
  for (const auto& r : rels) {
    std::vector<int> idx(r.arity, 0);
    while (true) {
      Fact f;
      f.rel = r.id;
      for (int i : idx) f.args.push_back(consts[i]);
      all.push_back(std::move(f));
      int p = r.arity - 1;
      while (p >= 0 && idx[p] == size - 1) idx[p--] = 0;
      if (p < 0) break;
      ++idx[p];
    }
  }
  std::set<std::string> keys;
  for (int count = 1; count <= size && count <= static_cast<int>(all.size()); ++count) {
    std::vector<int> pick(count);
    std::iota(pick.begin(), pick.end(), 0);
    const int m = static_cast<int>(all.size());
    while (true) {
      std::vector<Fact> fs;
      for (int i : pick) fs.push_back(all[i]);
      Instance D(std::move(fs));
      if (keys.insert(cq_key(cq_from_instance(D))).second) {
        // Rename constants to c1, c2, ... in first-occurrence order.
        Mapping ren;
        for (const auto& f : D)
          for (Term t : f.args)
            if (!ren.count(t)) ren.emplace(t, consts[ren.size()]);
        out.push_back(D.rename(ren));
      }
      int i = count - 1;
      while (i >= 0 && pick[i] == m - count + i) --i;
      if (i < 0) break;
      ++pick[i];
      for (int j = i + 1; j < count; ++j) pick[j] = pick[j - 1] + 1;
    }
  }
  return out;
}

// ---------------------------------------------------------------- conservativity

namespace {

struct Candidates {
  std::vector<Database> dbs;
  size_t raw = 0;
  size_t unraveled = 0;
};

Candidates make_candidates(const RuleSet& T1, const Schema& sigma_d, const Budget& b) {
  Candidates c;
  c.dbs = candidate_databases(sigma_d, b.db_size);
  c.raw = c.dbs.size();
  if (sigma_d.empty()) return c;
  std::set<std::string> keys;
  for (const auto& D : c.dbs) keys.insert(cq_key(cq_from_instance(D)));
  const int k = std::max(1, body_width(T1));
  const size_t raw = c.dbs.size();
  for (size_t i = 0; i < raw; ++i) {
    if (c.dbs[i].empty()) continue;
    try {
      auto u = unravel(c.dbs[i], k, 2, 256);
      if (keys.insert(cq_key(cq_from_instance(u.db))).second) {
        c.dbs.push_back(u.db);
        ++c.unraveled;
      }
    } catch (const BudgetExceeded&) {
    }
  }
  return c;
}

// A CQ counterexample: sub is a subinstance of chase_T2(D); the query keeps
// `answer` as answer variables and turns every other term into a variable.
std::optional<json> refute(const ChaseResult& r1, const Database& D, const RuleSet& T1, const Instance& sub,
                           const std::vector<Term>& answer, const Budget& b, const char* source) {
  CQ q = cq_from_instance(sub, answer);
  Instance Iq = canonical_database(q);
  Mapping pins;
  for (size_t i = 0; i < answer.size(); ++i) pins[Term::null(static_cast<uint32_t>(q.answer[i]))] = answer[i];
  Verdict v = instance_entailed_in(r1, D, T1, Iq, pins, b);
  if (v.value != Outcome::Fails) return std::nullopt;
  json c = {{"kind", "cq_counterexample"}, {"source", source}, {"database", facts_json(D)}, {"query", format_cq(q)},
            {"tuple", terms_json(answer)}, {"t2_witness", facts_json(sub)}};
  c["t1_refutation"] = v.certificate;
  return c;
}

std::vector<Term> named_of(const Instance& I) {
  std::vector<Term> out;
  for (Term t : I.adom())
    if (t.is_named()) out.push_back(t);
  return out;
}

// Connected sigma_q subinstances of J with up to n terms; Boolean, then
// unary, then full versions. Returns a counterexample or nullopt; sets
// `capped` when the enumeration cap was hit.
std::optional<json> falsify(const ChaseResult& r1, const Database& D, const RuleSet& T1, const Instance& J,
                            const Budget& b, bool& capped) {
  const auto dom = J.adom();
  std::vector<std::vector<int>> adj(dom.size());
  auto pos = [&](Term t) { return static_cast<int>(std::lower_bound(dom.begin(), dom.end(), t) - dom.begin()); };
  for (const auto& f : J)
    for (Term x : f.args)
      for (Term y : f.args)
        if (x != y) adj[pos(x)].push_back(pos(y));
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  const size_t cap = b.max_candidates ? b.max_candidates : 20000;
  size_t seen = 0;
  std::optional<json> found;
  for (int size = 1; size <= b.hom_n && !found && !capped; ++size) {
    connected_subsets(adj, size, [&](const std::vector<int>& s) {
      if (++seen > cap) {
        capped = true;
        return true;
      }
      std::vector<Term> d;
      for (int i : s) d.push_back(dom[i]);
      Instance sub = J.induced(d);
      if (sub.empty()) return false;
      auto named = named_of(sub);
      if ((found = refute(r1, D, T1, sub, {}, b, "connected_subinstance"))) return true;
      for (Term c : named)
        if ((found = refute(r1, D, T1, sub, {c}, b, "connected_subinstance"))) return true;
      if (named.size() > 1 && (found = refute(r1, D, T1, sub, named, b, "connected_subinstance"))) return true;
      return false;
    });
  }
  return found;
}

struct DbResult {
  std::optional<json> fails;
  bool both_saturated = false;
  bool capped = false;
  json evidence;
};

Schema effective_sigma_d(const Schema& sigma_d, const RuleSet& T1, const RuleSet& T2) {
  if (!sigma_d.is_universal()) return sigma_d;
  return schema_of(T1).merged(schema_of(T2));
}

json warnings_for(const RuleSet& T1, const RuleSet& T2) {
  json w = json::array();
  if (!all_frontier_one(T1) || !all_frontier_one(T2))
    w.push_back("rules are not all frontier-one; unravelings use the body width of T1 without guarantee");
  return w;
}

template <class PerDb>
Verdict run_candidates(const RuleSet& T1, const RuleSet& T2, const Schema& sigma_d_in, const Budget& b, bool parallel,
                       PerDb&& per_db) {
  const Schema sigma_d = effective_sigma_d(sigma_d_in, T1, T2);
  Candidates cands = make_candidates(T1, sigma_d, b);
  std::vector<DbResult> res(cands.dbs.size());
  size_t hit = first_index(
      cands.dbs.size(),
      [&](size_t i) {
        res[i] = per_db(cands.dbs[i]);
        return res[i].fails.has_value();
      },
      parallel);
  if (hit < cands.dbs.size()) return Verdict::fails(*res[hit].fails, b);
  size_t saturated = 0;
  bool capped = false;
  json evidence = json::array();
  for (const auto& r : res) {
    saturated += r.both_saturated;
    capped = capped || r.capped;
    if (r.evidence.is_array())
      for (const auto& e : r.evidence)
        if (evidence.size() < 8) evidence.push_back(e);
  }
  json report = {{"databases", cands.raw}, {"unravelings", cands.unraveled}, {"both_saturated", saturated},
                 {"falsifier_capped", capped}, {"evidence", evidence}, {"warnings", warnings_for(T1, T2)}};
  return Verdict::unknown(report, b);
}

}  // namespace

Verdict check_hom_conservative(const RuleSet& T1, const RuleSet& T2, const Schema& sigma_d, const Schema& sigma_q,
                               const Budget& b, bool parallel) {
  if (sigma_d.empty()) {
    Database D;
    auto r1 = chase(D, T1, b), r2 = chase(D, T2, b);
    HomOptions opt;
    opt.sigma = sigma_q;
    opt.db_preserving = true;
    auto h = find_hom(r2.instance(), r1.facts, opt);
    if (r1.saturated && r2.saturated) {
      if (h.found()) return Verdict::holds({{"kind", "single_database"}, {"homomorphism", mapping_json(h.mapping)}}, b);
    }
  }
  return run_candidates(T1, T2, sigma_d, b, parallel, [&](const Database& D) {
    DbResult out;
    auto r1 = chase(D, T1, b), r2 = chase(D, T2, b);
    out.both_saturated = r1.saturated && r2.saturated;
    Instance J2 = r2.instance().restrict(sigma_q);
    HomOptions opt;
    opt.sigma = sigma_q;
    opt.db_preserving = true;
    for (const auto& comp : connected_components(J2, sigma_q)) {
      if (find_hom(comp, r1.facts, opt).found()) continue;
      if (r1.saturated) {
        out.fails = json{{"kind", "no_hom_into_saturated_chase"},
                         {"database", facts_json(D)},
                         {"component", facts_json(comp)},
                         {"t1_chase_facts", r1.size()}};
        return out;
      }
      if (b.model_size > 0)
        if (auto c = refute(r1, D, T1, comp, named_of(comp), b, "chase_component")) {
          out.fails = c;
          return out;
        }
    }
    return out;
  });
}

std::vector<ComponentEvidence> null_component_evidence(const Database& D, const RuleSet& T1, const RuleSet& T2,
                                                       const Schema& sigma_q, const Budget& b) {
  auto r1 = chase(D, T1, b), r2 = chase(D, T2, b);
  BodyCQSet cqs = body_cqs(T1, 20000);
  std::vector<ComponentEvidence> out;
  std::map<Term, Instance> type_chase;
  for (Term c : D.adom()) {
    TType t = observed_type_in(r1, cqs, c, b.max_depth);
    uint32_t nn = 0;
    type_chase[c] = chase(type_database(t, c, nn), T1, b).instance();
  }
  for (const auto& comp : connected_components(r2.instance().restrict(sigma_q), sigma_q)) {
    auto dom = comp.adom();
    if (std::any_of(dom.begin(), dom.end(), [](Term t) { return t.is_named(); })) continue;
    ComponentEvidence ev;
    ev.component = comp;
    ev.maps_into_t1 = instance_entailed_in(r1, D, T1, comp, {}, b).value;
    for (auto& [c, J] : type_chase) {
      int best = 0;
      for (int n = 1; n <= b.hom_n; ++n) {
        if (hom_exists_n(comp, J, sigma_q, n, b).value != Outcome::Holds) break;
        best = n;
      }
      ev.max_n[c] = best;
    }
    out.push_back(std::move(ev));
  }
  return out;
}

Verdict check_cq_conservative(const RuleSet& T1, const RuleSet& T2, const Schema& sigma_d, const Schema& sigma_q,
                              const Budget& b, bool parallel) {
  if (sigma_d.empty()) {
    Database D;
    auto r1 = chase(D, T1, b), r2 = chase(D, T2, b);
    if (r1.saturated && r2.saturated) {
      HomOptions opt;
      opt.sigma = sigma_q;
      opt.db_preserving = true;
      auto h = find_hom(r2.instance(), r1.facts, opt);
      if (h.found()) return Verdict::holds({{"kind", "single_database"}, {"homomorphism", mapping_json(h.mapping)}}, b);
    }
  }
  return run_candidates(T1, T2, sigma_d, b, parallel, [&](const Database& D) {
    DbResult out;
    auto r1 = chase(D, T1, b), r2 = chase(D, T2, b);
    out.both_saturated = r1.saturated && r2.saturated;
    const bool can_refute = r1.saturated || b.model_size > 0;
    Instance J2 = r2.instance().restrict(sigma_q);
    if (can_refute) {
      if ((out.fails = falsify(r1, D, T1, J2, b, out.capped))) return out;
      // Components touching the database, as whole queries.
      auto con = chase_con(r2, sigma_q, D);
      for (const auto& comp : connected_components(con.instance, sigma_q))
        if ((out.fails = refute(r1, D, T1, comp, named_of(comp), b, "connected_component"))) return out;
    }
    out.evidence = json::array();
    HomOptions opt;
    opt.sigma = sigma_q;
    for (const auto& comp : connected_components(J2, sigma_q)) {
      auto dom = comp.adom();
      if (std::any_of(dom.begin(), dom.end(), [](Term t) { return t.is_named(); })) continue;
      if (find_hom(comp, r1.facts, opt).found()) continue;
      json e = {{"database", facts_json(D)}, {"null_component_size", comp.size()}};
      out.evidence.push_back(e);
    }
    return out;
  });
}

}  // namespace tgdc
