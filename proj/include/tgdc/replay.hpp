// Independent replay of printed certificates. Every check here uses only
// the chase and homomorphism search, never the deciders that produced the
// certificate.
#pragma once

#include "tgdc/hom.hpp"

namespace tgdc {

struct ReplayResult {
  bool applicable = true;  // false when the verdict carries no certificate
  bool verified = false;
  bool complete = true;    // false when the replay only re-checks bounded evidence
  std::string kind;
  json checks = json::array();

  json to_json() const;
  int exit_code() const { return !applicable ? 2 : verified ? 0 : 1; }
};

Budget budget_from_json(const json& j);  // inverse of Budget::to_json
Term term_from_text(const std::string& s);
Instance facts_from_json(const json& arr);
Mapping mapping_from_json(const json& obj);

// Plain homomorphism check with a replayable certificate: HOLDS with the
// mapping ("homomorphism"), FAILS after an exhaustive search.
Verdict check_hom(const Instance& src, const Instance& dst, const HomOptions& opt, const Budget& b);

ReplayResult replay_hom(const json& verdict, const Instance& src, const Instance& dst, const HomOptions& opt);
ReplayResult replay_bounded_hom(const json& verdict, const Instance& I1, const Instance& I2, const Schema& sigma);
ReplayResult replay_entailment(const json& verdict, const Instance& D, const RuleSet& T, const Instance& Iq,
                               const Mapping& pins);
ReplayResult replay_cq_entailment(const json& verdict, const Instance& D, const RuleSet& T, const CQ& q,
                                  const std::vector<Term>& tuple);
// `max_depth` bounds the deepening chase used to re-find a cluster.
ReplayResult replay_triviality(const json& verdict, const RuleSet& T, const Schema& sigma_d, const Schema& sigma_q,
                               int max_depth = 64);
ReplayResult replay_conservativity(const json& verdict, const RuleSet& T1, const RuleSet& T2, const Schema& sigma_d,
                                   const Schema& sigma_q);

}  // namespace tgdc
