// Triviality of linear rule sets via singleton databases and clusters of
// at most two facts, decided on an abstraction of the linear chase.
#pragma once

#include "tgdc/hom.hpp"

namespace tgdc {

struct StateSpaceExceeded : Error { using Error::Error; };
struct SymbolClash : Error { using Error::Error; };

// Named constants c1, c2, ... used by singleton databases.
Term singleton_constant(int i);  // i >= 0 gives c<i+1>

// The empty database, then one database {R(c..)} per relation of sigma_d
// (by name) and per set partition of its positions (most blocks first).
std::vector<Database> singleton_databases(const Schema& sigma_d);

// Facts of the chase below one database, abstracted up to renaming of
// nulls. Shapes encode database constants as -1-i (constant c<i+1>) and
// nulls as 0, 1, ... in first-occurrence order.
struct FactShape {
  RelId rel = 0;
  boost::container::small_vector<int32_t, 4> pattern;
  bool operator==(const FactShape& o) const { return rel == o.rel && pattern == o.pattern; }
  bool operator<(const FactShape& o) const {
    if (rel != o.rel) return rel < o.rel;
    return std::lexicographical_compare(pattern.begin(), pattern.end(), o.pattern.begin(), o.pattern.end());
  }
};

// Two facts, nulls numbered jointly in first-occurrence order.
struct PairShape {
  FactShape first;
  FactShape second;
  bool operator==(const PairShape& o) const { return first == o.first && second == o.second; }
  bool operator<(const PairShape& o) const {
    if (!(first == o.first)) return first < o.first;
    return second < o.second;
  }
};

// Reachable shapes of the parent-checked linear chase of a database with at
// most one fact. A trigger at fact b is blocked iff its head maps into
// {b} union D with the frontier fixed (empty-body rules: into D). This
// chase contains a restricted chase and is homomorphically equivalent to it.
class LinearShapeClosure {
 public:
  // `keep_unlinked` also tracks pairs of facts that share no null.
  LinearShapeClosure(const Database& D, const RuleSet& T, size_t max_states = 0, bool keep_unlinked = false);

  const std::set<FactShape>& singles() const { return singles_; }
  // Pairs sharing at least one null (and, with keep_unlinked, all pairs of
  // distinct facts within one root group).
  const std::set<PairShape>& pairs() const { return pairs_; }
  // Singles per root group (group 0 is the database fact).
  const std::vector<std::set<FactShape>>& group_singles() const { return group_singles_; }

  Instance instantiate(const FactShape& s) const;
  Instance instantiate(const PairShape& p) const;

 private:
  struct ArgSrc {
    bool fresh;
    int idx;  // position in the parent fact, or existential number
  };
  struct App {
    size_t rule;
    std::vector<std::pair<RelId, std::vector<ArgSrc>>> head;
    int fresh = 0;
  };
  const std::vector<App>& apps(const FactShape& s);
  void count_state();

  const Database& D_;
  const RuleSet& T_;
  size_t max_states_;
  size_t states_ = 0;
  std::map<FactShape, std::vector<App>> app_cache_;
  std::set<FactShape> singles_;
  std::set<PairShape> pairs_;
  std::vector<std::set<FactShape>> group_singles_;
};

FactShape canonical_shape(const Fact& f, const std::vector<Term>& db_consts);
PairShape canonical_pair(const Fact& a, const Fact& b, const std::vector<Term>& db_consts);

// Whether C (connected, at most two facts) occurs in the parent-checked
// chase of D up to an injective renaming of its nulls to nulls.
bool linear_entails_cluster(const Database& D, const RuleSet& T, const Instance& C, size_t max_states = 0);

Verdict check_triviality(const RuleSet& T, const Schema& sigma_d, const Schema& sigma_q, const Budget& b,
                         bool parallel = true);

struct HardnessInstance {
  RuleSet rules;
  Schema sigma_d;
  Schema sigma_q;
};
// T' = T + {-> q_D, goal(u) -> exists x,y,z. R(x,y),R(y,z)} with R fresh.
HardnessInstance build_hardness_instance(const Database& D, const RuleSet& T, RelId goal,
                                         const std::string& fresh_name = "R");

}  // namespace tgdc
