// Budgets and three-valued verdicts with JSON certificates.
#pragma once

#include "tgdc/model.hpp"

#include <json.hpp>

namespace tgdc {

using json = nlohmann::json;

struct Budget {
  int max_depth = 6;             // chase rounds
  size_t max_facts = 200000;     // chase size cap
  size_t max_candidates = 0;     // enumeration / state cap, 0 = unbounded
  int db_size = 2;               // candidate database size (facts and constants)
  int hom_n = 4;                 // n for bounded homomorphisms
  size_t model_size = 0;         // finite countermodel search nodes, 0 = off

  json to_json() const;
};

enum class Outcome { Holds, Fails, Unknown };

std::string outcome_name(Outcome o);  // "holds" | "fails" | "unknown"
int exit_code(Outcome o);             // 0 | 1 | 2

struct Verdict {
  Outcome value = Outcome::Unknown;
  json certificate;  // null when absent
  json report;       // searched-space summary, null when absent
  Budget budget;

  static Verdict holds(json cert, const Budget& b) { return {Outcome::Holds, std::move(cert), nullptr, b}; }
  static Verdict fails(json cert, const Budget& b) { return {Outcome::Fails, std::move(cert), nullptr, b}; }
  static Verdict unknown(json report, const Budget& b) { return {Outcome::Unknown, nullptr, std::move(report), b}; }
};

// Text of a fact, e.g. "R(a,_n3)".
std::string format_fact(const Fact& f);
// Facts as a JSON array of strings sorted by text.
json facts_json(const Instance& I);
// Mapping as a JSON object keyed by source term text.
json mapping_json(const std::map<Term, Term>& h);

// {"verdict":..,"certificate":..,"budget":..[,"report":..]} with sorted keys.
json verdict_json(const Verdict& v);

}  // namespace tgdc
