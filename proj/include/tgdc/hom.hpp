// Homomorphism search, bounded homomorphisms, CQ evaluation and entailment.
#pragma once

#include "tgdc/chase.hpp"
#include "tgdc/verdict.hpp"

namespace tgdc {

struct SpecNotPeriodic : Error { using Error::Error; };

using Mapping = std::map<Term, Term>;

enum class HomStatus { Found, None, BudgetExceeded };

struct HomResult {
  HomStatus status = HomStatus::None;
  Mapping mapping;  // defined on the terms of the source's sigma-facts and on pins
  bool found() const { return status == HomStatus::Found; }
};

struct HomOptions {
  Schema sigma = Schema::universal();
  Mapping pins;
  bool db_preserving = false;  // named constants map to themselves
  uint64_t node_limit = 0;     // 0 = unbounded
};

HomResult find_hom(const Instance& src, const Instance& dst, const HomOptions& opt = {});
HomResult find_hom(const Instance& src, const FactIndex& dst, const HomOptions& opt = {});

// Independent check of a claimed homomorphism.
bool verify_hom(const Instance& src, const Instance& dst, const Mapping& h, const HomOptions& opt = {});

// Connected vertex subsets of size exactly k, each once, given sorted
// adjacency lists. `fn` returns true to stop.
void connected_subsets(const std::vector<std::vector<int>>& adj, int k,
                       const std::function<bool(const std::vector<int>&)>& fn);

// I1 ->^n_sigma I2 with database-preserving homomorphisms.
// HOLDS certificate lists one homomorphism per maximal checked subset;
// FAILS certificate is the offending induced subinstance.
Verdict hom_exists_n(const Instance& I1, const Instance& I2, const Schema& sigma, int n, const Budget& b);

// All answer tuples, sorted.
std::vector<std::vector<Term>> evaluate_cq(const CQ& q, const Instance& I);

// D,T |= Iq where nulls of Iq are existential, named constants fixed, and
// `pins` fix further terms. HOLDS from a match in the budgeted chase;
// FAILS from a saturated chase or, when b.model_size > 0, from a finite
// countermodel; otherwise UNKNOWN.
Verdict instance_entailed(const Instance& D, const RuleSet& T, const Instance& Iq, const Mapping& pins,
                          const Budget& b);
// Same, reusing a chase of D with T computed under the same budget.
Verdict instance_entailed_in(const ChaseResult& r, const Instance& D, const RuleSet& T, const Instance& Iq,
                             const Mapping& pins, const Budget& b);

Verdict cq_entailed(const Instance& D, const RuleSet& T, const CQ& q, const std::vector<Term>& tuple,
                    const Budget& b);

// Bounded search for a finite model M of T with D subset of M and no match
// of Iq (under pins). Returns the model or nullopt.
std::optional<Instance> find_countermodel(const Instance& D, const RuleSet& T, const Instance& Iq,
                                          const Mapping& pins, size_t node_cap);

// An infinite instance: a prefix followed by infinitely many copies of a
// loop segment, copy i+1's `loop_in` variables identified with copy i's
// `loop_out` variables and the first copy's with the prefix's `entry`.
struct ChainSpec {
  int prefix_vars = 0;
  std::vector<Atom> prefix_atoms;
  std::vector<int> entry;
  int loop_vars = 0;
  std::vector<Atom> loop_atoms;
  std::vector<int> loop_in;
  std::vector<int> loop_out;
};

// Exact existence of a sigma-homomorphism from the chain into J.
// `pins` maps prefix variables to terms of J.
Verdict infinite_chain_hom(const ChainSpec& spec, const Instance& J, const Schema& sigma,
                           const std::map<int, Term>& pins, const Budget& b = {});

}  // namespace tgdc
