// Append-only fact store with hash membership and per-position indexes, and
// a backtracking conjunctive join over it.
#pragma once

#include "tgdc/model.hpp"

#include <algorithm>
#include <span>
#include <utility>

namespace tgdc {

class FactIndex {
 public:
  static constexpr uint32_t kNone = 0xffffffffu;

  FactIndex() = default;
  explicit FactIndex(const Instance& I) {
    size_t terms = 0;
    for (const auto& f : I) terms += f.args.size();
    reserve(I.size(), terms);
    for (const auto& f : I) insert_new(f.rel, {f.args.data(), f.args.size()});
  }

  // Sizes storage and hash tables for that many facts and argument slots.
  void reserve(size_t facts, size_t terms);

  uint32_t size() const { return static_cast<uint32_t>(rel_.size()); }
  RelId rel(uint32_t id) const { return rel_[id]; }
  std::span<const Term> args(uint32_t id) const {
    return {terms_.data() + off_[id], terms_.data() + off_[id + 1]};
  }
  Fact fact(uint32_t id) const {
    auto a = args(id);
    return Fact(rel_[id], Args(a.begin(), a.end()));
  }

  uint32_t find(RelId r, std::span<const Term> a) const;
  uint32_t find(const Fact& f) const { return find(f.rel, {f.args.data(), f.args.size()}); }
  bool contains(const Fact& f) const { return find(f) != kNone; }

  // Returns (id, inserted).
  std::pair<uint32_t, bool> add(RelId r, std::span<const Term> a);
  std::pair<uint32_t, bool> add(const Fact& f) { return add(f.rel, {f.args.data(), f.args.size()}); }
  // Appends a fact the caller knows is absent; returns its id.
  uint32_t insert_new(RelId r, std::span<const Term> a);

  // Fact ids of relation r in ascending order.
  std::span<const uint32_t> by_rel(RelId r) const {
    if (r >= rel_lists_.size()) return {};
    return rel_lists_[r];
  }

  // Facts of relation r with term t at position pos, newest first:
  // walk with `first` then `next(id, pos)` until kNone.
  struct PosHead {
    uint32_t first = kNone;
    uint32_t count = 0;
  };
  PosHead lookup(RelId r, uint32_t pos, Term t) const;
  uint32_t next(uint32_t id, uint32_t pos) const { return next_[off_[id] + pos]; }

  Instance instance() const;
  Instance instance_upto(uint32_t hi) const;

 private:
  static uint64_t mix(uint64_t h);
  uint64_t fact_hash(RelId r, std::span<const Term> a) const;
  void grow_facts();
  void grow_pos();
  uint32_t pos_slot(RelId r, uint32_t pos, Term t, uint64_t h) const;

  std::vector<RelId> rel_;
  std::vector<uint32_t> off_{0};
  std::vector<Term> terms_;
  std::vector<uint32_t> next_;  // parallel to terms_
  std::vector<uint32_t> hash_;  // low bits of fact hash, per fact
  std::vector<uint32_t> slots_;  // open addressing over fact ids
  std::vector<std::vector<uint32_t>> rel_lists_;

  struct PosKey {
    RelId rel;
    uint32_t pos;
    Term term;
  };
  std::vector<PosKey> pos_keys_;
  std::vector<PosHead> pos_heads_;
  std::vector<uint32_t> pos_slots_;
};

// One atom of a join. Matches only fact ids in [lo, hi).
struct JoinAtom {
  RelId rel = 0;
  VarList vars;
  uint32_t lo = 0;
  uint32_t hi = FactIndex::kNone;
};

// Backtracking join. `assign` holds the current binding per variable
// (invalid Term = unbound); on each full match `emit(assign, matched_ids)`
// is called and returns true to stop the search. Returns false when the
// node budget ran out before the search finished.
class Join {
 public:
  Join(const FactIndex& idx, std::span<const JoinAtom> atoms, std::vector<Term>& assign, uint64_t node_limit = 0)
      : idx_(idx), atoms_(atoms), assign_(assign), limit_(node_limit), used_(atoms.size(), 0),
        matched_(atoms.size(), FactIndex::kNone) {}

  template <class Emit>
  bool run(Emit&& emit) {
    stopped_ = false;
    exhausted_ = false;
    solve(0, emit);
    return !exhausted_;
  }
  bool stopped() const { return stopped_; }
  uint64_t nodes() const { return nodes_; }

 private:
  struct Choice {
    size_t atom = 0;
    int mode = 0;  // 0 = probe, 1 = positional list, 2 = relation list
    uint32_t pos = 0;
    uint64_t cost = 0;
  };

  Choice choose() const {
    Choice best;
    bool have = false;
    for (size_t i = 0; i < atoms_.size(); ++i) {
      if (used_[i]) continue;
      const JoinAtom& a = atoms_[i];
      Choice c;
      c.atom = i;
      bool all_bound = true;
      uint64_t cost = ~0ull;
      for (uint32_t p = 0; p < a.vars.size(); ++p) {
        Term t = assign_[a.vars[p]];
        if (!t.valid()) {
          all_bound = false;
          continue;
        }
        auto h = idx_.lookup(a.rel, p, t);
        if (h.count < cost) {
          cost = h.count;
          c.pos = p;
        }
      }
      if (all_bound) {
        c.mode = 0;
        c.cost = 0;
      } else if (cost != ~0ull) {
        c.mode = 1;
        c.cost = cost;
      } else {
        c.mode = 2;
        auto lst = idx_.by_rel(a.rel);
        auto b = std::lower_bound(lst.begin(), lst.end(), a.lo);
        auto e = a.hi == FactIndex::kNone ? lst.end() : std::lower_bound(b, lst.end(), a.hi);
        c.cost = static_cast<uint64_t>(e - b);
      }
      if (!have || c.cost < best.cost) {
        best = c;
        have = true;
        if (c.cost == 0) break;
      }
    }
    return best;
  }

  // Binds the unbound vars of atom `a` against fact `id`, recording them in
  // `bound`; false on mismatch (caller still unbinds `bound`).
  bool bind(const JoinAtom& a, uint32_t id, VarList& bound) {
    auto args = idx_.args(id);
    if (args.size() != a.vars.size()) return false;
    for (size_t p = 0; p < args.size(); ++p) {
      Term& slot = assign_[a.vars[p]];
      if (!slot.valid()) {
        slot = args[p];
        bound.push_back(a.vars[p]);
      } else if (slot != args[p]) {
        return false;
      }
    }
    return true;
  }

  template <class Emit>
  void try_fact(size_t ai, uint32_t id, size_t depth, Emit& emit) {
    const JoinAtom& a = atoms_[ai];
    if (id < a.lo || id >= a.hi) return;
    VarList bound;
    if (bind(a, id, bound)) {
      used_[ai] = 1;
      matched_[ai] = id;
      solve(depth + 1, emit);
      used_[ai] = 0;
    }
    for (int v : bound) assign_[v] = Term();
  }

  template <class Emit>
  void solve(size_t depth, Emit& emit) {
    if (stopped_ || exhausted_) return;
    if (limit_ && ++nodes_ > limit_) {
      exhausted_ = true;
      return;
    }
    if (depth == atoms_.size()) {
      if (emit(static_cast<const std::vector<Term>&>(assign_), static_cast<const std::vector<uint32_t>&>(matched_)))
        stopped_ = true;
      return;
    }
    Choice c = choose();
    const JoinAtom& a = atoms_[c.atom];
    if (c.mode == 0) {
      Args key;
      for (int v : a.vars) key.push_back(assign_[v]);
      uint32_t id = idx_.find(a.rel, {key.data(), key.size()});
      if (id != FactIndex::kNone) try_fact(c.atom, id, depth, emit);
    } else if (c.mode == 1) {
      // Collect ascending so that enumeration order is by fact id.
      boost::container::small_vector<uint32_t, 16> ids;
      Term t = assign_[a.vars[c.pos]];
      for (uint32_t id = idx_.lookup(a.rel, c.pos, t).first; id != FactIndex::kNone; id = idx_.next(id, c.pos)) {
        if (id < a.lo) break;
        if (id < a.hi) ids.push_back(id);
      }
      for (auto it = ids.rbegin(); it != ids.rend() && !stopped_ && !exhausted_; ++it)
        try_fact(c.atom, *it, depth, emit);
    } else {
      auto lst = idx_.by_rel(a.rel);
      auto b = std::lower_bound(lst.begin(), lst.end(), a.lo);
      for (auto it = b; it != lst.end() && *it < a.hi && !stopped_ && !exhausted_; ++it)
        try_fact(c.atom, *it, depth, emit);
    }
  }

  const FactIndex& idx_;
  std::span<const JoinAtom> atoms_;
  std::vector<Term>& assign_;
  uint64_t limit_;
  uint64_t nodes_ = 0;
  boost::container::small_vector<char, 8> used_;
  std::vector<uint32_t> matched_;
  bool stopped_ = false;
  bool exhausted_ = false;
};

}  // namespace tgdc
