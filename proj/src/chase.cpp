#include "tgdc/chase.hpp"

#include "tgdc/textio.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

namespace tgdc {

namespace {

struct PreparedRule {
  const TGD* t = nullptr;
  std::vector<JoinAtom> body;
  std::vector<JoinAtom> head;
  bool datalog = false;
};

PreparedRule prepare(const TGD& t) {
  PreparedRule p;
  p.t = &t;
  for (const auto& a : t.body) p.body.push_back({a.rel, a.args, 0, FactIndex::kNone});
  for (const auto& a : t.head) p.head.push_back({a.rel, a.args, 0, FactIndex::kNone});
  p.datalog = t.existentials.empty();
  return p;
}

// Head satisfied under the frontier binding in `assign` (other vars unbound).
bool head_satisfied(const PreparedRule& p, const FactIndex& idx, std::vector<Term>& assign) {
  if (p.datalog) {
    Args key;
    for (const auto& a : p.head) {
      key.clear();
      for (int v : a.vars) key.push_back(assign[v]);
      if (idx.find(a.rel, {key.data(), key.size()}) == FactIndex::kNone) return false;
    }
    return true;
  }
  Join j(idx, p.head, assign);
  j.run([](const std::vector<Term>&, const std::vector<uint32_t>&) { return true; });
  return j.stopped();
}

// Triggers found in one round, deduplicated by (rule, frontier tuple).
class TriggerSet {
 public:
  struct Trig {
    uint32_t rule;
    uint32_t off;  // frontier tuple in pool_
    uint32_t len;
    uint32_t boff;  // body ids in bpool_
    uint32_t blen;
  };

  TriggerSet() : set_(16, Hash{this}, Eq{this}) {}

  void add(uint32_t rule, const std::vector<Term>& assign, const std::vector<int>& frontier,
           const std::vector<uint32_t>& body) {
    Trig t{rule, static_cast<uint32_t>(pool_.size()), static_cast<uint32_t>(frontier.size()),
           static_cast<uint32_t>(bpool_.size()), static_cast<uint32_t>(body.size())};
    for (int v : frontier) pool_.push_back(assign[v]);
    bpool_.insert(bpool_.end(), body.begin(), body.end());
    trigs_.push_back(t);
    auto [it, fresh] = set_.insert(static_cast<uint32_t>(trigs_.size() - 1));
    if (!fresh) {
      Trig& old = trigs_[*it];
      if (std::lexicographical_compare(body.begin(), body.end(), bpool_.begin() + old.boff,
                                       bpool_.begin() + old.boff + old.blen)) {
        old.boff = t.boff;
        old.blen = t.blen;
      }
      trigs_.pop_back();
      pool_.resize(t.off);
    }
  }

  // Trigger indices sorted by (rule, frontier tuple).
  std::vector<uint32_t> ordered() const {
    std::vector<uint32_t> ord(trigs_.size());
    std::iota(ord.begin(), ord.end(), 0u);
    std::sort(ord.begin(), ord.end(), [&](uint32_t a, uint32_t b) {
      const Trig &x = trigs_[a], &y = trigs_[b];
      if (x.rule != y.rule) return x.rule < y.rule;
      return std::lexicographical_compare(pool_.begin() + x.off, pool_.begin() + x.off + x.len, pool_.begin() + y.off,
                                          pool_.begin() + y.off + y.len);
    });
    return ord;
  }

  const Trig& operator[](uint32_t i) const { return trigs_[i]; }
  std::span<const Term> tuple(const Trig& t) const { return {pool_.data() + t.off, t.len}; }
  std::span<const uint32_t> body(const Trig& t) const { return {bpool_.data() + t.boff, t.blen}; }
  size_t size() const { return trigs_.size(); }

 private:
  struct Hash {
    const TriggerSet* s;
    size_t operator()(uint32_t i) const {
      const Trig& t = s->trigs_[i];
      uint64_t h = t.rule * 0x9e3779b97f4a7c15ull;
      for (uint32_t k = 0; k < t.len; ++k) {
        h ^= s->pool_[t.off + k].raw() + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        h *= 0xff51afd7ed558ccdull;
      }
      return static_cast<size_t>(h ^ (h >> 29));
    }
  };
  struct Eq {
    const TriggerSet* s;
    bool operator()(uint32_t a, uint32_t b) const {
      const Trig &x = s->trigs_[a], &y = s->trigs_[b];
      return x.rule == y.rule && x.len == y.len &&
             std::equal(s->pool_.begin() + x.off, s->pool_.begin() + x.off + x.len, s->pool_.begin() + y.off);
    }
  };

  std::vector<Trig> trigs_;
  std::vector<Term> pool_;
  std::vector<uint32_t> bpool_;
  std::unordered_set<uint32_t, Hash, Eq> set_;
};

// Collects every trigger whose body match uses at least one fact in
// [delta_lo, delta_hi) and no fact at or beyond delta_hi.
void collect(std::vector<PreparedRule>& rules, const FactIndex& idx, uint32_t delta_lo, uint32_t delta_hi,
             bool first_round, TriggerSet& out) {
  std::vector<uint32_t> body;
  for (uint32_t r = 0; r < rules.size(); ++r) {
    PreparedRule& p = rules[r];
    const TGD& t = *p.t;
    std::vector<Term> assign(t.num_vars());
    if (p.body.empty()) {
      if (first_round) out.add(r, assign, t.frontier, body);
      continue;
    }
    for (size_t j = 0; j < p.body.size(); ++j) {
      for (size_t i = 0; i < p.body.size(); ++i) {
        p.body[i].lo = 0;
        p.body[i].hi = i < j ? delta_lo : delta_hi;
      }
      p.body[j].lo = delta_lo;
      p.body[j].hi = delta_hi;
      if (delta_lo == delta_hi) continue;
      std::fill(assign.begin(), assign.end(), Term());
      Join join(idx, p.body, assign);
      join.run([&](const std::vector<Term>& a, const std::vector<uint32_t>& ids) {
        out.add(r, a, t.frontier, ids);
        return false;
      });
    }
  }
}

}  // namespace

Instance ChaseResult::up_to_level(uint32_t lvl) const {
  std::vector<Fact> out;
  for (uint32_t id = 0; id < facts.size(); ++id)
    if (level[id] <= lvl) out.push_back(facts.fact(id));
  return Instance(std::move(out));
}

Term ChaseResult::src_const(Term t) const {
  if (t.is_null() && t.index() >= null_base && t.index() - null_base < null_src.size())
    return null_src[t.index() - null_base];
  return t;
}

ChaseResult chase(const Instance& D, const RuleSet& T, const Budget& b) {
  ChaseResult r;
  r.linear_mode = all_linear(T);
  r.frontier_one_mode = all_frontier_one(T);
  for (const auto& f : D) {
    uint32_t id = r.facts.add(f).first;
    r.level.push_back(0);
    r.rule.push_back(-1);
    r.src_fact.push_back(id);
  }
  r.input_size = r.facts.size();
  r.body_begin.assign(r.input_size + 1, 0);
  r.null_base = D.max_null_index_plus_one();
  uint32_t next_null = r.null_base;

  std::vector<PreparedRule> rules;
  rules.reserve(T.size());
  for (const auto& t : T) rules.push_back(prepare(t));

  uint32_t delta_lo = 0, delta_hi = r.facts.size();
  std::vector<Term> assign;
  Args key;
  for (int round = 1;; ++round) {
    TriggerSet trigs;
    collect(rules, r.facts, delta_lo, delta_hi, round == 1, trigs);
    auto order = trigs.ordered();
    if (round > b.max_depth) {
      // Budget reached: saturated iff nothing is applicable any more.
      bool any = false;
      for (uint32_t ti : order) {
        const auto& tr = trigs[ti];
        const PreparedRule& p = rules[tr.rule];
        assign.assign(p.t->num_vars(), Term());
        auto tup = trigs.tuple(tr);
        for (size_t k = 0; k < tup.size(); ++k) assign[p.t->frontier[k]] = tup[k];
        if (!head_satisfied(p, r.facts, assign)) {
          any = true;
          break;
        }
      }
      r.saturated = !any;
      break;
    }
    uint64_t fired = 0;
    bool stop = false;
    for (uint32_t ti : order) {
      const auto& tr = trigs[ti];
      const PreparedRule& p = rules[tr.rule];
      const TGD& t = *p.t;
      assign.assign(t.num_vars(), Term());
      auto tup = trigs.tuple(tr);
      for (size_t k = 0; k < tup.size(); ++k) assign[t.frontier[k]] = tup[k];
      if (head_satisfied(p, r.facts, assign)) continue;
      if (r.facts.size() + t.head.size() > b.max_facts) {
        r.truncated_by_facts = true;
        stop = true;
        break;
      }
      Term src;
      if (r.frontier_one_mode && !t.frontier.empty()) src = r.src_const(assign[t.frontier[0]]);
      for (int v : t.existentials) {
        assign[v] = Term::null(next_null++);
        r.null_src.push_back(src);
      }
      auto body = trigs.body(tr);
      uint32_t src_fact = body.empty() ? ChaseResult::kNone : r.src_fact[body[0]];
      for (const auto& a : p.head) {
        key.clear();
        for (int v : a.vars) key.push_back(assign[v]);
        auto [id, fresh] = r.facts.add(a.rel, {key.data(), key.size()});
        if (!fresh) continue;
        r.level.push_back(static_cast<uint32_t>(round));
        r.rule.push_back(static_cast<int32_t>(tr.rule));
        r.body_ids.insert(r.body_ids.end(), body.begin(), body.end());
        r.body_begin.push_back(static_cast<uint32_t>(r.body_ids.size()));
        r.src_fact.push_back(src_fact);
      }
      ++fired;
    }
    r.steps += fired;
    if (stop) break;
    if (fired == 0) {
      r.saturated = true;
      break;
    }
    r.rounds = round;
    delta_lo = delta_hi;
    delta_hi = r.facts.size();
  }
  if (!r.frontier_one_mode) r.null_src.clear();
  return r;
}

bool applicable(const TGD& t, const Instance& I, std::span<const Term> frontier_tuple) {
  if (frontier_tuple.size() != t.frontier.size()) throw PreconditionError("frontier tuple has the wrong length");
  FactIndex idx(I);
  PreparedRule p = prepare(t);
  std::vector<Term> assign(t.num_vars());
  for (size_t k = 0; k < frontier_tuple.size(); ++k) assign[t.frontier[k]] = frontier_tuple[k];
  bool matched = p.body.empty();
  if (!matched) {
    Join j(idx, p.body, assign);
    j.run([](const std::vector<Term>&, const std::vector<uint32_t>&) { return true; });
    matched = j.stopped();
  }
  if (!matched) return false;
  std::vector<Term> h(t.num_vars());
  for (size_t k = 0; k < frontier_tuple.size(); ++k) h[t.frontier[k]] = frontier_tuple[k];
  return !head_satisfied(p, idx, h);
}

bool is_model(const Instance& I, const RuleSet& T) {
  FactIndex idx(I);
  for (const auto& t : T) {
    PreparedRule p = prepare(t);
    std::vector<Term> assign(t.num_vars());
    bool violated = false;
    auto check = [&](const std::vector<Term>& a) {
      std::vector<Term> h(t.num_vars());
      for (int v : t.frontier) h[v] = a[v];
      if (!head_satisfied(p, idx, h)) violated = true;
      return violated;
    };
    if (p.body.empty()) {
      check(assign);
    } else {
      Join j(idx, p.body, assign);
      j.run([&](const std::vector<Term>& a, const std::vector<uint32_t>&) { return check(a); });
    }
    if (violated) return false;
  }
  return true;
}

Instance chase_below(const ChaseResult& r, Term c) {
  if (!r.frontier_one_mode) throw NotFrontierOne("chase_below needs a chase of a frontier-one rule set");
  std::vector<Fact> out;
  for (uint32_t id = 0; id < r.facts.size(); ++id) {
    auto a = r.facts.args(id);
    if (std::all_of(a.begin(), a.end(), [&](Term t) { return r.src_const(t) == c; })) out.push_back(r.facts.fact(id));
  }
  return Instance(std::move(out));
}

Instance chase_below_fact(const ChaseResult& r, const Fact& alpha) {
  if (!r.linear_mode) throw ProvenanceMismatch("chase_below_fact needs a chase of a linear rule set");
  uint32_t aid = r.facts.find(alpha);
  if (aid == ChaseResult::kNone || aid >= r.input_size)
    throw PreconditionError("fact " + format_fact(alpha) + " is not an input fact");
  std::vector<Fact> out;
  for (uint32_t id = 0; id < r.facts.size(); ++id)
    if (r.src_fact[id] == aid) out.push_back(r.facts.fact(id));
  return Instance(std::move(out));
}

ConResult chase_con(const ChaseResult& r, const Schema& sigma, const Instance& D) {
  auto dom = D.adom();
  std::vector<Fact> out;
  for (const auto& comp : connected_components(r.instance(), sigma)) {
    auto cd = comp.adom();
    bool touches = std::any_of(cd.begin(), cd.end(), [&](Term t) { return std::binary_search(dom.begin(), dom.end(), t); });
    if (touches) out.insert(out.end(), comp.begin(), comp.end());
  }
  return {Instance(std::move(out)), !r.saturated};
}

std::string format_leveled(const ChaseResult& r) {
  uint32_t max_level = 0;
  for (uint32_t l : r.level) max_level = std::max(max_level, l);
  std::vector<std::vector<std::string>> by_level(max_level + 1);
  for (uint32_t id = 0; id < r.facts.size(); ++id) by_level[r.level[id]].push_back(format_fact(r.facts.fact(id)) + ".");
  std::string s;
  for (uint32_t l = 0; l <= max_level; ++l) {
    std::sort(by_level[l].begin(), by_level[l].end());
    s += "# level " + std::to_string(l) + "\n";
    for (const auto& line : by_level[l]) s += line + "\n";
  }
  return s;
}

}  // namespace tgdc
