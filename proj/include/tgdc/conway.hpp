// Conway functions, rivers, the myth rules and the generated rule families
// of the undecidability construction, with correctness oracles.
#pragma once

#include "tgdc/hom.hpp"

namespace tgdc {

struct InvalidSpec : Error { using Error::Error; };

struct ConwaySpec {
  int gamma = 1;
  std::vector<int64_t> alpha;
  std::vector<int64_t> beta;
  bool reduction = false;  // also require F(2)=3 and F(1)=1

  void validate() const;  // throws InvalidSpec
  json to_json() const;
};

int64_t conway_eval(const ConwaySpec& s, int64_t n);
// HOLDS with the trajectory when 1 is reached within max_steps, FAILS with
// the cycle when a value repeats first, else UNKNOWN.
Verdict conway_stops(const ConwaySpec& s, int64_t start, size_t max_steps, const Budget& b = {});

struct RiverSpec {
  std::vector<int> p;
  std::vector<int> t;
  int n() const { return static_cast<int>(p.size()); }
  std::string to_string() const;  // <[p1,..],[t1,..]>
  bool operator==(const RiverSpec&) const = default;
};

// Constants b0..bn, x<i>_<j> and y<i>_<j> on the segment from b<i> down to
// b<i-1> (j counted from b<i-1>), eternities e1, e2 and channel c.
Database river_build(const RiverSpec& k);

struct RiverCorrectness {
  bool locally_correct = false;
  bool correct = false;
  std::optional<int> defect;  // least m with t_m != p_{m+1}
};
RiverCorrectness river_correctness(const RiverSpec& k, const ConwaySpec& s);

// p1=2, pn=1, t_i=F(p_i) for every i, inner p_i in [1, max_val]; by length
// then lexicographically.
std::vector<RiverSpec> locally_correct_rivers(const ConwaySpec& s, int max_n, int max_val);

bool observation1(const RiverSpec& k);

RuleSet myth_rules();
Schema myth_query_schema();  // Encounter, Pyramus, Thisbe, Channel, Mouth
// The myth chase of a single Encounter fact as prefix plus periodic loop.
ChainSpec myth_chain_spec();
// Whether the myth chase of River_k maps into River_k (database-preserving,
// over the query schema), decided on the periodic representation.
Verdict river_myth_hom(const RiverSpec& k, const Budget& b = {});

struct ConwayOptions {
  // Adds Bridge -> BH_k for every k with beta_k = k (mod gamma), so that
  // segments made of a single bridgehead block exist.
  bool direct_bridgehead = false;
};

RuleSet gen_T_rec(const ConwaySpec& s, const ConwayOptions& o = {});
RuleSet gen_T_proj(const ConwaySpec& s, const ConwayOptions& o = {});
RuleSet gen_T1(const ConwaySpec& s, const ConwayOptions& o = {});  // T_rec rules first

struct GuardedT0 {
  RuleSet rules;
  Schema sigma_d;
  Schema sigma_q;
};
GuardedT0 gen_guarded_T0(const ConwaySpec& s, const ConwayOptions& o = {});

// An Encounter fact of a chase of gen_T1 from the empty database, with the
// Sigma_F facts it descends from and their projections.
struct AncestorSet {
  uint32_t encounter = 0;
  uint32_t end = 0;
  std::vector<uint32_t> ancestors;  // from Start to the End fact
  Instance projections;             // query-schema facts, Encounter included
  bool materialized = false;        // every projection is in the chase
};
std::vector<AncestorSet> encounter_ancestor_sets(const ChaseResult& r, const RuleSet& T1);

// The river a set of projections spells out, if it is isomorphic to one.
std::optional<RiverSpec> extract_river(const Instance& projections);

// Witness database for T0: the projections minus Encounter, the Start fact
// and one S_R fact per derivation step. Nulls become constants w<k>.
Database t0_witness_database(const ConwaySpec& s, const ChaseResult& r, const AncestorSet& a,
                             const ConwayOptions& o = {});

}  // namespace tgdc
