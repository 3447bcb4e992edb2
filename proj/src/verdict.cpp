#include "tgdc/verdict.hpp"

#include <algorithm>

namespace tgdc {

json Budget::to_json() const {
  return json{{"depth", max_depth},   {"facts", max_facts}, {"candidates", max_candidates},
              {"db_size", db_size},   {"hom_n", hom_n},     {"model_size", model_size}};
}

std::string outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Holds: return "holds";
    case Outcome::Fails: return "fails";
    default: return "unknown";
  }
}

int exit_code(Outcome o) {
  switch (o) {
    case Outcome::Holds: return 0;
    case Outcome::Fails: return 1;
    default: return 2;
  }
}

std::string format_fact(const Fact& f) {
  std::string s = relation_name(f.rel);
  s += '(';
  for (size_t i = 0; i < f.args.size(); ++i) {
    if (i) s += ',';
    s += term_name(f.args[i]);
  }
  s += ')';
  return s;
}

json facts_json(const Instance& I) {
  std::vector<std::string> out;
  out.reserve(I.size());
  for (const auto& f : I) out.push_back(format_fact(f));
  std::sort(out.begin(), out.end());
  return out;
}

json mapping_json(const std::map<Term, Term>& h) {
  json o = json::object();
  for (auto [a, b] : h) o[term_name(a)] = term_name(b);
  return o;
}

json verdict_json(const Verdict& v) {
  json j{{"verdict", outcome_name(v.value)}, {"certificate", v.certificate}, {"budget", v.budget.to_json()}};
  if (!v.report.is_null()) j["report"] = v.report;
  return j;
}

}  // namespace tgdc
