// Fair restricted chase with levels and provenance.
#pragma once

#include "tgdc/join.hpp"
#include "tgdc/verdict.hpp"

#include <span>

namespace tgdc {

struct NotFrontierOne : Error { using Error::Error; };
struct ProvenanceMismatch : Error { using Error::Error; };

struct ChaseResult {
  static constexpr uint32_t kNone = FactIndex::kNone;

  FactIndex facts;                  // creation order; ids [0, input_size) are the input
  uint32_t input_size = 0;
  std::vector<uint32_t> level;      // per fact, 0 for input facts
  std::vector<int32_t> rule;        // producing rule index, -1 for input facts
  std::vector<uint32_t> body_begin;  // per fact + 1, offsets into body_ids
  std::vector<uint32_t> body_ids;   // trigger body fact ids
  std::vector<uint32_t> src_fact;   // linear mode: input fact the fact descends from (kNone for empty-body roots)
  uint32_t null_base = 0;           // first fresh null index
  std::vector<Term> null_src;       // frontier-one mode: src of fresh null null_base + i
  bool linear_mode = false;
  bool frontier_one_mode = false;
  bool saturated = false;
  bool truncated_by_facts = false;
  int rounds = 0;                   // rounds that fired at least one trigger
  uint64_t steps = 0;               // fired triggers

  size_t size() const { return facts.size(); }
  Instance instance() const { return facts.instance(); }
  Instance up_to_level(uint32_t lvl) const;
  std::span<const uint32_t> parents(uint32_t id) const {
    return {body_ids.data() + body_begin[id], body_ids.data() + body_begin[id + 1]};
  }
  // Frontier-one provenance: the input term a term descends from.
  Term src_const(Term t) const;
};

ChaseResult chase(const Instance& D, const RuleSet& T, const Budget& b);

// Restricted applicability at a frontier tuple (ordered as t.frontier).
bool applicable(const TGD& t, const Instance& I, std::span<const Term> frontier_tuple);

// True iff no rule is applicable anywhere in I.
bool is_model(const Instance& I, const RuleSet& T);

// Facts whose terms all have src c (throws NotFrontierOne).
Instance chase_below(const ChaseResult& r, Term c);
// Facts descending from input fact alpha (throws ProvenanceMismatch).
Instance chase_below_fact(const ChaseResult& r, const Fact& alpha);

struct ConResult {
  Instance instance;
  bool approximate = false;
};
// Union of the maximal sigma-connected components that touch adom(D).
ConResult chase_con(const ChaseResult& r, const Schema& sigma, const Instance& D);

// Leveled dump in database syntax with `# level k` banners.
std::string format_leveled(const ChaseResult& r);

}  // namespace tgdc
