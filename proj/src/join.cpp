#include "tgdc/join.hpp"

namespace tgdc {

uint64_t FactIndex::mix(uint64_t h) {
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdull;
  h ^= h >> 33;
  h *= 0xc4ceb9fe1a85ec53ull;
  h ^= h >> 33;
  return h;
}

uint64_t FactIndex::fact_hash(RelId r, std::span<const Term> a) const {
  uint64_t h = mix(r + 0x9e3779b97f4a7c15ull);
  for (Term t : a) h = mix(h ^ (t.raw() + 0x9e3779b97f4a7c15ull + (h << 6)));
  return h;
}

uint32_t FactIndex::find(RelId r, std::span<const Term> a) const {
  if (slots_.empty()) return kNone;
  uint64_t h = fact_hash(r, a);
  uint32_t h32 = static_cast<uint32_t>(h);
  size_t mask = slots_.size() - 1;
  for (size_t s = h & mask;; s = (s + 1) & mask) {
    uint32_t id = slots_[s];
    if (id == kNone) return kNone;
    if (hash_[id] == h32 && rel_[id] == r) {
      auto b = args(id);
      if (b.size() == a.size() && std::equal(b.begin(), b.end(), a.begin())) return id;
    }
  }
}

void FactIndex::reserve(size_t facts, size_t terms) {
  rel_.reserve(facts);
  off_.reserve(facts + 1);
  hash_.reserve(facts);
  terms_.reserve(terms);
  next_.reserve(terms);
  pos_keys_.reserve(terms);
  pos_heads_.reserve(terms);
  if (size() == 0 && pos_keys_.empty()) {
    size_t cap = 64;
    while (cap < 2 * (facts + 1)) cap *= 2;
    if (cap > slots_.size()) slots_.assign(cap, kNone);
    cap = 128;
    while (cap < 2 * (terms + 1)) cap *= 2;
    if (cap > pos_slots_.size()) pos_slots_.assign(cap, kNone);
  }
}

void FactIndex::grow_facts() {
  size_t cap = slots_.empty() ? 64 : slots_.size() * 2;
  slots_.assign(cap, kNone);
  size_t mask = cap - 1;
  for (uint32_t id = 0; id < size(); ++id) {
    size_t s = fact_hash(rel_[id], args(id)) & mask;
    while (slots_[s] != kNone) s = (s + 1) & mask;
    slots_[s] = id;
  }
}

uint32_t FactIndex::pos_slot(RelId r, uint32_t pos, Term t, uint64_t h) const {
  size_t mask = pos_slots_.size() - 1;
  for (size_t s = h & mask;; s = (s + 1) & mask) {
    uint32_t e = pos_slots_[s];
    if (e == kNone) return static_cast<uint32_t>(s);
    const PosKey& k = pos_keys_[e];
    if (k.rel == r && k.pos == pos && k.term == t) return static_cast<uint32_t>(s);
  }
}

static uint64_t pos_hash(RelId r, uint32_t pos, Term t) {
  uint64_t h = (static_cast<uint64_t>(r) << 40) ^ (static_cast<uint64_t>(pos) << 32) ^ t.raw();
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdull;
  h ^= h >> 33;
  return h;
}

void FactIndex::grow_pos() {
  size_t cap = pos_slots_.empty() ? 128 : pos_slots_.size() * 2;
  pos_slots_.assign(cap, kNone);
  for (uint32_t e = 0; e < pos_keys_.size(); ++e) {
    const PosKey& k = pos_keys_[e];
    pos_slots_[pos_slot(k.rel, k.pos, k.term, pos_hash(k.rel, k.pos, k.term))] = e;
  }
}

FactIndex::PosHead FactIndex::lookup(RelId r, uint32_t pos, Term t) const {
  if (pos_slots_.empty()) return {};
  uint32_t e = pos_slots_[pos_slot(r, pos, t, pos_hash(r, pos, t))];
  return e == kNone ? PosHead{} : pos_heads_[e];
}

std::pair<uint32_t, bool> FactIndex::add(RelId r, std::span<const Term> a) {
  if (uint32_t id = find(r, a); id != kNone) return {id, false};
  return {insert_new(r, a), true};
}

uint32_t FactIndex::insert_new(RelId r, std::span<const Term> a) {
  uint32_t id = size();
  uint64_t h = fact_hash(r, a);
  rel_.push_back(r);
  terms_.insert(terms_.end(), a.begin(), a.end());
  off_.push_back(static_cast<uint32_t>(terms_.size()));
  hash_.push_back(static_cast<uint32_t>(h));
  if ((size() + 1) * 2 > slots_.size()) {
    grow_facts();
  } else {
    size_t mask = slots_.size() - 1;
    size_t s = h & mask;
    while (slots_[s] != kNone) s = (s + 1) & mask;
    slots_[s] = id;
  }
  if (r >= rel_lists_.size()) rel_lists_.resize(r + 1);
  rel_lists_[r].push_back(id);
  for (uint32_t p = 0; p < a.size(); ++p) {
    if ((pos_keys_.size() + 1) * 2 > pos_slots_.size()) grow_pos();
    uint32_t s = pos_slot(r, p, a[p], pos_hash(r, p, a[p]));
    uint32_t e = pos_slots_[s];
    if (e == kNone) {
      e = static_cast<uint32_t>(pos_keys_.size());
      pos_keys_.push_back({r, p, a[p]});
      pos_heads_.push_back({});
      pos_slots_[s] = e;
    }
    next_.push_back(pos_heads_[e].first);
    pos_heads_[e].first = id;
    ++pos_heads_[e].count;
  }
  return id;
}

Instance FactIndex::instance_upto(uint32_t hi) const {
  std::vector<Fact> facts;
  facts.reserve(std::min(hi, size()));
  for (uint32_t id = 0; id < std::min(hi, size()); ++id) facts.push_back(fact(id));
  return Instance(std::move(facts));
}

Instance FactIndex::instance() const { return instance_upto(size()); }

}  // namespace tgdc
