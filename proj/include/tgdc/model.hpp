// Relational vocabulary: constants, relations, facts, instances, CQs, TGDs.
#pragma once

#include <boost/container/small_vector.hpp>

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tgdc {

// ---------------------------------------------------------------- errors

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MalformedRule : Error { using Error::Error; };
struct BudgetExceeded : Error { using Error::Error; };
struct PreconditionError : Error { using Error::Error; };

// ---------------------------------------------------------------- terms

// A constant. Named constants and nulls live in disjoint index spaces;
// the raw encoding gives the total order (named first, then by index).
class Term {
 public:
  static constexpr uint32_t kNullBit = 0x80000000u;
  static constexpr uint32_t kInvalid = 0xffffffffu;

  constexpr Term() = default;
  static constexpr Term named(uint32_t index) { return Term(index); }
  static constexpr Term null(uint32_t index) { return Term(index | kNullBit); }
  static constexpr Term from_raw(uint32_t raw) { return Term(raw); }

  constexpr bool valid() const { return raw_ != kInvalid; }
  constexpr bool is_null() const { return valid() && (raw_ & kNullBit) != 0; }
  constexpr bool is_named() const { return valid() && (raw_ & kNullBit) == 0; }
  constexpr uint32_t index() const { return raw_ & ~kNullBit; }
  constexpr uint32_t raw() const { return raw_; }

  constexpr auto operator<=>(const Term&) const = default;

 private:
  explicit constexpr Term(uint32_t raw) : raw_(raw) {}
  uint32_t raw_ = kInvalid;
};

// Process-wide interners. Thread-safe, but ids depend on first-use order,
// so parallel regions must not create new names.
Term constant(std::string_view name);
std::string term_name(Term t);  // nulls print as _n<k>

using RelId = uint32_t;
RelId relation(std::string_view name);
std::string relation_name(RelId id);

struct RelationSymbol {
  RelId id = 0;
  int arity = 0;
  auto operator<=>(const RelationSymbol&) const = default;
};

// A set of relation symbols. `universal()` contains everything.
class Schema {
 public:
  Schema() = default;
  Schema(std::initializer_list<RelationSymbol> rels);
  static Schema universal();

  void add(RelationSymbol r);
  bool contains(RelId id) const;
  bool is_universal() const { return all_; }
  bool empty() const { return !all_ && rels_.empty(); }
  const std::vector<RelationSymbol>& symbols() const { return rels_; }
  std::optional<int> arity_of(RelId id) const;
  Schema without(RelId id) const;
  Schema merged(const Schema& other) const;
  bool operator==(const Schema&) const = default;

 private:
  std::vector<RelationSymbol> rels_;  // sorted by id
  bool all_ = false;
};

// ---------------------------------------------------------------- facts

using Args = boost::container::small_vector<Term, 4>;

struct Fact {
  RelId rel = 0;
  Args args;

  Fact() = default;
  Fact(RelId r, Args a) : rel(r), args(std::move(a)) {}
  Fact(RelId r, std::initializer_list<Term> a) : rel(r), args(a) {}

  size_t arity() const { return args.size(); }
  bool operator==(const Fact& o) const;
  std::strong_ordering operator<=>(const Fact& o) const;
};

struct FactHash {
  size_t operator()(const Fact& f) const noexcept;
};

// Convenience for tests and generators: Fact from names.
Fact make_fact(std::string_view rel, std::initializer_list<std::string_view> consts);

// ---------------------------------------------------------------- instances

// Finite set of facts (an immutable value). A database is an instance
// whose constants are all named.
class Instance {
 public:
  Instance() = default;
  explicit Instance(std::vector<Fact> facts);
  Instance(std::initializer_list<Fact> facts);

  const std::vector<Fact>& facts() const { return facts_; }
  size_t size() const { return facts_.size(); }
  bool empty() const { return facts_.empty(); }
  bool contains(const Fact& f) const;
  std::vector<Term> adom() const;  // sorted
  bool is_database() const;
  uint32_t max_null_index_plus_one() const;

  Instance restrict(const Schema& sigma) const;
  Instance union_with(const Instance& other) const;
  Instance induced(const std::vector<Term>& sorted_consts) const;
  Instance rename(const std::map<Term, Term>& m) const;  // unmapped terms kept
  bool subset_of(const Instance& other) const;

  auto begin() const { return facts_.begin(); }
  auto end() const { return facts_.end(); }
  bool operator==(const Instance&) const = default;

 private:
  std::vector<Fact> facts_;  // sorted, unique
};
using Database = Instance;

Instance restrict(const Instance& I, const Schema& sigma);

// Maximal Gaifman-connected components of I restricted to sigma.
std::vector<Instance> connected_components(const Instance& I, const Schema& sigma);
bool is_connected(const Instance& I);

// Restriction of I to a nonempty constant subset.
struct InducedSub {
  std::vector<Term> domain;  // sorted
  Instance instance;
};

// Every restriction of I to a nonempty constant subset of size <= n, each
// subset once, by increasing size then lexicographically. Throws
// BudgetExceeded when more than `cap` subsets would be produced (0 = no cap).
void for_each_induced_subinstance(const Instance& I, int n, size_t cap,
                                  const std::function<void(const InducedSub&)>& fn);
std::vector<InducedSub> induced_subinstances(const Instance& I, int n, size_t cap = 0);

// ---------------------------------------------------------------- CQs and TGDs

using VarList = boost::container::small_vector<int, 4>;

struct Atom {
  RelId rel = 0;
  VarList args;  // variable indices
  bool operator==(const Atom&) const = default;
};

struct CQ {
  std::vector<int> answer;
  std::vector<Atom> atoms;
  std::vector<std::string> var_names;

  int num_vars() const { return static_cast<int>(var_names.size()); }
  int arity() const { return static_cast<int>(answer.size()); }
  bool is_boolean() const { return answer.empty(); }
  // The distinguished true(x): one answer variable, no atoms.
  bool is_true_query() const { return answer.size() == 1 && atoms.empty(); }
  static CQ true_query();
};

// Canonical database: variable i becomes null(base + i).
Instance canonical_database(const CQ& q, uint32_t base = 0);
// CQ whose variables are the terms of I; `answer` terms become answer vars.
CQ cq_from_instance(const Instance& I, const std::vector<Term>& answer = {});

struct RuleFlags {
  bool linear = false;
  bool guarded = false;
  bool frontier_one = false;
};

struct TGD {
  std::vector<Atom> body;
  std::vector<Atom> head;
  std::vector<std::string> var_names;
  std::vector<int> frontier;      // sorted
  std::vector<int> existentials;  // sorted
  std::string label;

  int num_vars() const { return static_cast<int>(var_names.size()); }
  std::vector<int> body_vars() const;
};

// Builds a TGD; frontier = body vars that occur in the head, existentials =
// head vars absent from the body.
TGD make_tgd(std::vector<Atom> body, std::vector<Atom> head, std::vector<std::string> var_names,
             std::string label = {});
RuleFlags classify(const TGD& t);  // throws MalformedRule

using RuleSet = std::vector<TGD>;
Schema schema_of(const RuleSet& rules);
Schema schema_of(const Instance& I);
bool all_linear(const RuleSet& rules);
bool all_frontier_one(const RuleSet& rules);
int body_width(const RuleSet& rules);  // max number of body variables

}  // namespace tgdc
