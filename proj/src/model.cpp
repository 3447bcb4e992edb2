#include "tgdc/model.hpp"

#include <algorithm>
#include <mutex>
#include <numeric>
#include <shared_mutex>
#include <unordered_map>

namespace tgdc {

namespace {

class Interner {
 public:
  uint32_t intern(std::string_view s) {
    {
      std::shared_lock lk(mu_);
      auto it = ids_.find(std::string(s));
      if (it != ids_.end()) return it->second;
    }
    std::unique_lock lk(mu_);
    auto [it, fresh] = ids_.try_emplace(std::string(s), static_cast<uint32_t>(names_.size()));
    if (fresh) names_.emplace_back(s);
    return it->second;
  }
  std::string name(uint32_t id) const {
    std::shared_lock lk(mu_);
    return id < names_.size() ? names_[id] : std::string("?") + std::to_string(id);
  }

 private:
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, uint32_t> ids_;
  std::vector<std::string> names_;
};

Interner& constants() {
  static Interner in;
  return in;
}
Interner& relations() {
  static Interner in;
  return in;
}

struct UnionFind {
  std::vector<size_t> p;
  explicit UnionFind(size_t n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  size_t find(size_t x) {
    while (p[x] != x) x = p[x] = p[p[x]];
    return x;
  }
  void unite(size_t a, size_t b) {
    a = find(a), b = find(b);
    if (a != b) p[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

Term constant(std::string_view name) { return Term::named(constants().intern(name)); }

std::string term_name(Term t) {
  if (!t.valid()) return "?";
  if (t.is_null()) return "_n" + std::to_string(t.index());
  return constants().name(t.index());
}

RelId relation(std::string_view name) { return relations().intern(name); }
std::string relation_name(RelId id) { return relations().name(id); }

// ---------------------------------------------------------------- Schema

Schema::Schema(std::initializer_list<RelationSymbol> rels) {
  for (auto r : rels) add(r);
}

Schema Schema::universal() {
  Schema s;
  s.all_ = true;
  return s;
}

void Schema::add(RelationSymbol r) {
  auto it = std::lower_bound(rels_.begin(), rels_.end(), r.id,
                             [](const RelationSymbol& a, RelId id) { return a.id < id; });
  if (it != rels_.end() && it->id == r.id) return;
  rels_.insert(it, r);
}

bool Schema::contains(RelId id) const {
  if (all_) return true;
  return arity_of(id).has_value();
}

std::optional<int> Schema::arity_of(RelId id) const {
  auto it = std::lower_bound(rels_.begin(), rels_.end(), id,
                             [](const RelationSymbol& a, RelId x) { return a.id < x; });
  if (it != rels_.end() && it->id == id) return it->arity;
  return std::nullopt;
}

Schema Schema::without(RelId id) const {
  Schema s = *this;
  std::erase_if(s.rels_, [&](const RelationSymbol& r) { return r.id == id; });
  return s;
}

Schema Schema::merged(const Schema& other) const {
  Schema s = *this;
  s.all_ = all_ || other.all_;
  for (auto r : other.rels_) s.add(r);
  return s;
}

// ---------------------------------------------------------------- Fact

bool Fact::operator==(const Fact& o) const {
  return rel == o.rel && args.size() == o.args.size() && std::equal(args.begin(), args.end(), o.args.begin());
}

std::strong_ordering Fact::operator<=>(const Fact& o) const {
  if (auto c = rel <=> o.rel; c != 0) return c;
  if (auto c = args.size() <=> o.args.size(); c != 0) return c;
  for (size_t i = 0; i < args.size(); ++i)
    if (auto c = args[i] <=> o.args[i]; c != 0) return c;
  return std::strong_ordering::equal;
}

size_t FactHash::operator()(const Fact& f) const noexcept {
  uint64_t h = 0x9e3779b97f4a7c15ull ^ f.rel;
  for (Term t : f.args) {
    h ^= t.raw() + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h *= 0xff51afd7ed558ccdull;
  }
  return static_cast<size_t>(h ^ (h >> 31));
}

Fact make_fact(std::string_view rel, std::initializer_list<std::string_view> consts) {
  Fact f;
  f.rel = relation(rel);
  for (auto c : consts) f.args.push_back(constant(c));
  return f;
}

// ---------------------------------------------------------------- Instance

Instance::Instance(std::vector<Fact> facts) {
  // Sort a permutation so each fact is moved once.
  std::vector<uint32_t> order(facts.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) { return facts[a] < facts[b]; });
  facts_.reserve(facts.size());
  for (uint32_t i : order)
    if (facts_.empty() || !(facts_.back() == facts[i])) facts_.push_back(std::move(facts[i]));
}

Instance::Instance(std::initializer_list<Fact> facts) : Instance(std::vector<Fact>(facts)) {}

bool Instance::contains(const Fact& f) const { return std::binary_search(facts_.begin(), facts_.end(), f); }

std::vector<Term> Instance::adom() const {
  std::vector<Term> out;
  for (const auto& f : facts_) out.insert(out.end(), f.args.begin(), f.args.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool Instance::is_database() const {
  for (const auto& f : facts_)
    for (Term t : f.args)
      if (t.is_null()) return false;
  return true;
}

uint32_t Instance::max_null_index_plus_one() const {
  uint32_t m = 0;
  for (const auto& f : facts_)
    for (Term t : f.args)
      if (t.is_null()) m = std::max(m, t.index() + 1);
  return m;
}

Instance Instance::restrict(const Schema& sigma) const {
  if (sigma.is_universal()) return *this;
  Instance out;
  for (const auto& f : facts_)
    if (sigma.contains(f.rel)) out.facts_.push_back(f);
  return out;
}

Instance Instance::union_with(const Instance& other) const {
  Instance out;
  out.facts_.reserve(facts_.size() + other.facts_.size());
  std::set_union(facts_.begin(), facts_.end(), other.facts_.begin(), other.facts_.end(),
                 std::back_inserter(out.facts_));
  return out;
}

Instance Instance::induced(const std::vector<Term>& sorted_consts) const {
  Instance out;
  for (const auto& f : facts_) {
    bool ok = std::all_of(f.args.begin(), f.args.end(),
                          [&](Term t) { return std::binary_search(sorted_consts.begin(), sorted_consts.end(), t); });
    if (ok) out.facts_.push_back(f);
  }
  return out;
}

Instance Instance::rename(const std::map<Term, Term>& m) const {
  std::vector<Fact> out;
  out.reserve(facts_.size());
  for (const auto& f : facts_) {
    Fact g = f;
    for (Term& t : g.args)
      if (auto it = m.find(t); it != m.end()) t = it->second;
    out.push_back(std::move(g));
  }
  return Instance(std::move(out));
}

bool Instance::subset_of(const Instance& other) const {
  return std::includes(other.facts_.begin(), other.facts_.end(), facts_.begin(), facts_.end());
}

Instance restrict(const Instance& I, const Schema& sigma) { return I.restrict(sigma); }

std::vector<Instance> connected_components(const Instance& I, const Schema& sigma) {
  Instance R = I.restrict(sigma);
  auto dom = R.adom();
  auto pos = [&](Term t) { return static_cast<size_t>(std::lower_bound(dom.begin(), dom.end(), t) - dom.begin()); };
  UnionFind uf(dom.size());
  for (const auto& f : R)
    for (size_t i = 1; i < f.args.size(); ++i) uf.unite(pos(f.args[0]), pos(f.args[i]));
  std::map<size_t, std::vector<Fact>> groups;  // keyed by the smallest constant of the component
  for (const auto& f : R) groups[uf.find(pos(f.args[0]))].push_back(f);
  std::vector<Instance> out;
  for (auto& [root, facts] : groups) out.emplace_back(std::move(facts));
  return out;
}

bool is_connected(const Instance& I) { return connected_components(I, Schema::universal()).size() <= 1; }

void for_each_induced_subinstance(const Instance& I, int n, size_t cap,
                                  const std::function<void(const InducedSub&)>& fn) {
  auto dom = I.adom();
  const int m = static_cast<int>(dom.size());
  size_t count = 0;
  for (int size = 1; size <= std::min(n, m); ++size) {
    std::vector<int> idx(size);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
      if (cap && ++count > cap) throw BudgetExceeded("induced subinstance enumeration exceeded cap");
      InducedSub sub;
      for (int i : idx) sub.domain.push_back(dom[i]);
      sub.instance = I.induced(sub.domain);
      fn(sub);
      int k = size - 1;
      while (k >= 0 && idx[k] == m - size + k) --k;
      if (k < 0) break;
      ++idx[k];
      for (int j = k + 1; j < size; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
}

std::vector<InducedSub> induced_subinstances(const Instance& I, int n, size_t cap) {
  std::vector<InducedSub> out;
  for_each_induced_subinstance(I, n, cap, [&](const InducedSub& s) { out.push_back(s); });
  return out;
}

// ---------------------------------------------------------------- CQ

CQ CQ::true_query() {
  CQ q;
  q.answer = {0};
  q.var_names = {"x"};
  return q;
}

Instance canonical_database(const CQ& q, uint32_t base) {
  std::vector<Fact> facts;
  for (const auto& a : q.atoms) {
    Fact f;
    f.rel = a.rel;
    for (int v : a.args) f.args.push_back(Term::null(base + static_cast<uint32_t>(v)));
    facts.push_back(std::move(f));
  }
  return Instance(std::move(facts));
}

CQ cq_from_instance(const Instance& I, const std::vector<Term>& answer) {
  auto dom = I.adom();
  for (Term t : answer)
    if (!std::binary_search(dom.begin(), dom.end(), t)) {
      dom.insert(std::lower_bound(dom.begin(), dom.end(), t), t);
    }
  auto var = [&](Term t) { return static_cast<int>(std::lower_bound(dom.begin(), dom.end(), t) - dom.begin()); };
  CQ q;
  for (size_t i = 0; i < dom.size(); ++i) q.var_names.push_back("v" + std::to_string(i));
  for (Term t : answer) q.answer.push_back(var(t));
  for (const auto& f : I) {
    Atom a;
    a.rel = f.rel;
    for (Term t : f.args) a.args.push_back(var(t));
    q.atoms.push_back(std::move(a));
  }
  return q;
}

// ---------------------------------------------------------------- TGD

std::vector<int> TGD::body_vars() const {
  std::vector<int> out;
  for (const auto& a : body) out.insert(out.end(), a.args.begin(), a.args.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {
std::vector<int> vars_of(const std::vector<Atom>& atoms) {
  std::vector<int> out;
  for (const auto& a : atoms) out.insert(out.end(), a.args.begin(), a.args.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}
}  // namespace

TGD make_tgd(std::vector<Atom> body, std::vector<Atom> head, std::vector<std::string> var_names, std::string label) {
  TGD t;
  t.body = std::move(body);
  t.head = std::move(head);
  t.var_names = std::move(var_names);
  t.label = std::move(label);
  auto bv = vars_of(t.body), hv = vars_of(t.head);
  std::set_intersection(bv.begin(), bv.end(), hv.begin(), hv.end(), std::back_inserter(t.frontier));
  std::set_difference(hv.begin(), hv.end(), bv.begin(), bv.end(), std::back_inserter(t.existentials));
  return t;
}

RuleFlags classify(const TGD& t) {
  if (t.head.empty()) throw MalformedRule("rule has an empty head");
  auto bv = vars_of(t.body), hv = vars_of(t.head);
  for (int v : bv)
    if (v < 0 || v >= t.num_vars()) throw MalformedRule("variable index out of range");
  for (int v : hv)
    if (v < 0 || v >= t.num_vars()) throw MalformedRule("variable index out of range");
  for (int v : t.frontier) {
    bool in_body = std::binary_search(bv.begin(), bv.end(), v);
    bool in_head = std::binary_search(hv.begin(), hv.end(), v);
    if (!in_body || !in_head)
      throw MalformedRule("frontier variable " + t.var_names.at(v) + " does not occur in both body and head");
  }
  for (int v : t.existentials)
    if (std::binary_search(bv.begin(), bv.end(), v)) throw MalformedRule("existential variable occurs in body");
  RuleFlags f;
  f.linear = t.body.size() <= 1;
  f.guarded = t.body.empty() || std::any_of(t.body.begin(), t.body.end(), [&](const Atom& a) {
                return std::all_of(bv.begin(), bv.end(), [&](int v) {
                  return std::find(a.args.begin(), a.args.end(), v) != a.args.end();
                });
              });
  f.frontier_one = t.frontier.size() == 1;
  return f;
}

Schema schema_of(const RuleSet& rules) {
  Schema s;
  for (const auto& r : rules) {
    for (const auto& a : r.body) s.add({a.rel, static_cast<int>(a.args.size())});
    for (const auto& a : r.head) s.add({a.rel, static_cast<int>(a.args.size())});
  }
  return s;
}

Schema schema_of(const Instance& I) {
  Schema s;
  for (const auto& f : I) s.add({f.rel, static_cast<int>(f.args.size())});
  return s;
}

bool all_linear(const RuleSet& rules) {
  return std::all_of(rules.begin(), rules.end(), [](const TGD& t) { return t.body.size() <= 1; });
}

bool all_frontier_one(const RuleSet& rules) {
  return std::all_of(rules.begin(), rules.end(), [](const TGD& t) { return t.frontier.size() == 1; });
}

int body_width(const RuleSet& rules) {
  int k = 0;
  for (const auto& r : rules) k = std::max(k, static_cast<int>(r.body_vars().size()));
  return k;
}

}  // namespace tgdc
