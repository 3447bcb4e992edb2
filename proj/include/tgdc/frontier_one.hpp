// Frontier-one machinery: body CQs and types, unraveling, head fragments,
// labeled databases, proper labeled instance trees, and bounded
// conservativity checkers.
#pragma once

#include "tgdc/hom.hpp"
#include "tgdc/textio.hpp"

namespace tgdc {

struct ConstantNotFound : Error { using Error::Error; };
struct MalformedTree : Error {
  MalformedTree(const std::string& node, const std::string& condition, const std::string& msg);
  std::string node;
  std::string condition;
};

// Canonical text of a CQ up to variable renaming (the answer variable keeps
// its role). `exact` is cleared when the permutation cap was hit.
std::string cq_key(const CQ& q, size_t perm_cap = 40320, bool* exact = nullptr);
bool cq_isomorphic(const CQ& a, const CQ& b);

struct BodyCQSet {
  std::vector<CQ> queries;  // sorted by key, includes true(x)
  bool partial = false;
};
BodyCQSet body_cqs(const RuleSet& T, size_t cap = 0);

enum class TypeStatus { Observed, SaturatedExact };

struct TType {
  std::vector<CQ> members;        // sorted by key, always contains true(x)
  std::vector<std::string> keys;  // parallel to members
  TypeStatus status = TypeStatus::Observed;
  int depth = 0;
  bool partial = false;

  static TType of(std::vector<CQ> members);
  bool same_members(const TType& o) const { return keys == o.keys; }
  json to_json() const;
};

TType observed_type(const Database& D, const RuleSet& T, Term c, const Budget& b);
TType observed_type_in(const ChaseResult& r, const BodyCQSet& cqs, Term c, int depth);

// The type viewed as a database with its free variable replaced by c;
// other variables become nulls numbered from next_null (advanced).
Instance type_database(const TType& t, Term c, uint32_t& next_null);

struct Unraveling {
  Database db;
  Mapping back_map;                      // copy -> original
  std::vector<std::vector<Term>> bags;   // copies per sequence
  std::vector<int> parent;               // bag index of the prefix, -1 at the top
};
// k-unraveling truncated to sequences of at most `depth` sets. Copies are
// named `<orig>~<n>`. Throws BudgetExceeded beyond `max_bags` (0 = no cap).
Unraveling unravel(const Database& D, int k, int depth, size_t max_bags = 0);

struct HeadFragment {
  size_t rule = 0;
  Instance fragment;           // over nulls
  bool frontier_free = false;  // also disconnected from the frontier in the full head
};
std::vector<HeadFragment> head_fragments(const RuleSet& T2, const Schema& sigma);

struct LabeledDatabase {
  Instance base;
  std::map<Term, TType> mu;

  // D_A: base plus one glued copy of mu(c) per constant c.
  Instance expanded() const;
  // D_A with every term renamed to a null, for use as q_A; the map sends
  // base terms to their nulls.
  std::pair<Instance, Mapping> as_query() const;
};

struct LabeledInstanceTree {
  std::vector<std::string> names;
  std::vector<Instance> bags;
  std::vector<std::vector<Term>> extra_constants;  // bag constants without facts, e.g. true(c0)
  std::vector<std::pair<int, int>> edges;
  std::map<Term, TType> mu;

  std::vector<Term> bag_adom(size_t v) const;
};

// JSON form: {"nodes":[{"name":..,"facts":["R(a,b)"],"constants":[..]}],
// "edges":[[from,to]], "mu":{"a":["q(x) :- B(x)."]}}. Throws ParseError or
// MalformedTree.
LabeledInstanceTree parse_tree(const json& j, ArityTable* arities = nullptr);
TType parse_type(const json& members, ArityTable* arities = nullptr);

// Structural checks; throws MalformedTree naming the node and condition.
void check_instance_tree(const LabeledInstanceTree& t);

Verdict validate_proper_tree(const LabeledInstanceTree& t, const TType& t_hat, const RuleSet& T1, const Schema& sigma,
                             const Budget& b);

// Candidate sigma_d databases with at most `size` facts over at most
// `size` constants, one per isomorphism class, smallest first.
std::vector<Database> candidate_databases(const Schema& sigma_d, int size);

Verdict check_hom_conservative(const RuleSet& T1, const RuleSet& T2, const Schema& sigma_d, const Schema& sigma_q,
                               const Budget& b, bool parallel = true);
Verdict check_cq_conservative(const RuleSet& T1, const RuleSet& T2, const Schema& sigma_d, const Schema& sigma_q,
                              const Budget& b, bool parallel = true);

// Evidence for the null components of chase_T2(D) that do not map into
// chase_T1(D): the largest n <= b.hom_n with I ->^n chase_T1(type of c).
struct ComponentEvidence {
  Instance component;
  Outcome maps_into_t1 = Outcome::Unknown;
  std::map<Term, int> max_n;  // per database constant
};
std::vector<ComponentEvidence> null_component_evidence(const Database& D, const RuleSet& T1, const RuleSet& T2,
                                                       const Schema& sigma_q, const Budget& b);

}  // namespace tgdc
