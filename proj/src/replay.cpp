#include "tgdc/replay.hpp"

#include "tgdc/textio.hpp"

#include <algorithm>

namespace tgdc {

json ReplayResult::to_json() const {
  return {{"applicable", applicable}, {"verified", verified}, {"complete", complete}, {"kind", kind},
          {"checks", checks}};
}

Budget budget_from_json(const json& j) {
  Budget b;
  if (!j.is_object()) return b;
  b.max_depth = j.value("depth", b.max_depth);
  b.max_facts = j.value("facts", b.max_facts);
  b.max_candidates = j.value("candidates", b.max_candidates);
  b.db_size = j.value("db_size", b.db_size);
  b.hom_n = j.value("hom_n", b.hom_n);
  b.model_size = j.value("model_size", b.model_size);
  return b;
}

Term term_from_text(const std::string& s) {
  if (s.size() > 2 && s[0] == '_' && s[1] == 'n' &&
      std::all_of(s.begin() + 2, s.end(), [](unsigned char c) { return std::isdigit(c); }))
    return Term::null(static_cast<uint32_t>(std::stoul(s.substr(2))));
  return constant(s);
}

Instance facts_from_json(const json& arr) {
  std::vector<Fact> out;
  for (const auto& e : arr) {
    std::string s = e.get<std::string>();
    auto open = s.find('(');
    if (open == std::string::npos || s.back() != ')') throw PreconditionError("malformed fact in certificate: " + s);
    Fact f;
    f.rel = relation(s.substr(0, open));
    std::string inner = s.substr(open + 1, s.size() - open - 2);
    size_t start = 0;
    while (start <= inner.size()) {
      size_t comma = inner.find(',', start);
      if (comma == std::string::npos) comma = inner.size();
      f.args.push_back(term_from_text(inner.substr(start, comma - start)));
      start = comma + 1;
    }
    out.push_back(std::move(f));
  }
  return Instance(std::move(out));
}

Mapping mapping_from_json(const json& obj) {
  Mapping m;
  for (auto& [k, v] : obj.items()) m[term_from_text(k)] = term_from_text(v.get<std::string>());
  return m;
}

Verdict check_hom(const Instance& src, const Instance& dst, const HomOptions& opt, const Budget& b) {
  auto h = find_hom(src, dst, opt);
  if (h.found()) return Verdict::holds({{"kind", "homomorphism"}, {"homomorphism", mapping_json(h.mapping)}}, b);
  if (h.status == HomStatus::BudgetExceeded) return Verdict::unknown({{"reason", "node limit"}}, b);
  return Verdict::fails({{"kind", "no_homomorphism"}, {"search", "exhaustive"}}, b);
}

namespace {

struct Checker {
  ReplayResult& r;
  void operator()(const std::string& what, bool ok) {
    r.checks.push_back({{"check", what}, {"ok", ok}});
    if (!ok) r.verified = false;
  }
};

ReplayResult start(const json& verdict) {
  ReplayResult r;
  const json& c = verdict.contains("certificate") ? verdict["certificate"] : json();
  if (!c.is_object()) {
    r.applicable = false;
    return r;
  }
  r.kind = c.value("kind", std::string());
  r.verified = true;
  return r;
}

bool pins_fit(const Mapping& pins, const Mapping& h) {
  for (auto [k, v] : pins) {
    auto it = h.find(k);
    if (it == h.end() || it->second != v) return false;
  }
  return true;
}

HomOptions dbp(const Schema& sigma, Mapping pins = {}) {
  HomOptions o;
  o.sigma = sigma;
  o.db_preserving = true;
  o.pins = std::move(pins);
  return o;
}

// Facts over sigma_q made of one fact or two facts sharing a null that do
// not map into D.
bool has_failing_cluster(const Instance& I, const Database& D, const Schema& sigma_q) {
  Instance Iq = I.restrict(sigma_q);
  FactIndex didx(D);
  for (const auto& f : Iq)
    if (!find_hom(Instance{f}, didx, dbp(sigma_q)).found()) return true;
  const auto& fs = Iq.facts();
  for (size_t i = 0; i < fs.size(); ++i)
    for (size_t j = i + 1; j < fs.size(); ++j) {
      bool linked = false;
      for (Term t : fs[i].args)
        if (t.is_null() && std::find(fs[j].args.begin(), fs[j].args.end(), t) != fs[j].args.end()) linked = true;
      if (linked && !find_hom(Instance{fs[i], fs[j]}, didx, dbp(sigma_q)).found()) return true;
    }
  return false;
}

bool within(const Instance& I, const Schema& s) { return s.is_universal() || I.restrict(s).size() == I.size(); }

}  // namespace

ReplayResult replay_hom(const json& verdict, const Instance& src, const Instance& dst, const HomOptions& opt) {
  ReplayResult r = start(verdict);
  if (!r.applicable) return r;
  Checker check{r};
  const json& c = verdict["certificate"];
  if (r.kind == "homomorphism") {
    check("mapping is a homomorphism", verify_hom(src, dst, mapping_from_json(c["homomorphism"]), opt));
  } else if (r.kind == "no_homomorphism") {
    HomOptions o = opt;
    o.node_limit = 0;
    check("exhaustive search finds none", !find_hom(src, dst, o).found());
  } else {
    check("known certificate kind", false);
  }
  return r;
}

ReplayResult replay_bounded_hom(const json& verdict, const Instance& I1, const Instance& I2, const Schema& sigma) {
  ReplayResult r = start(verdict);
  if (!r.applicable) return r;
  Checker check{r};
  const json& c = verdict["certificate"];
  int n = c.value("n", 0);
  Instance I1s = I1.restrict(sigma);
  auto domain_of = [](const json& arr) {
    std::vector<Term> d;
    for (const auto& e : arr) d.push_back(term_from_text(e.get<std::string>()));
    std::sort(d.begin(), d.end());
    return d;
  };
  if (r.kind == "bounded_hom_violation") {
    auto dom = domain_of(c["domain"]);
    Instance sub = I1s.induced(dom);
    check("domain within bound", static_cast<int>(dom.size()) <= n);
    check("subinstance is induced by the domain", facts_json(sub) == c["subinstance"]);
    check("no homomorphism of the subinstance", !find_hom(sub, I2, dbp(sigma)).found());
    return r;
  }
  if (r.kind != "bounded_hom") {
    check("known certificate kind", false);
    return r;
  }
  // Every maximal checked domain must carry a valid homomorphism, and the
  // listed domains must be exactly the ones the bound requires.
  std::set<std::vector<Term>> listed;
  bool all_valid = true;
  for (const auto& e : c["homs"]) {
    auto dom = domain_of(e["domain"]);
    listed.insert(dom);
    if (!verify_hom(I1s.induced(dom), I2, mapping_from_json(e["mapping"]), dbp(sigma))) all_valid = false;
  }
  check("every listed homomorphism is valid", all_valid);
  std::set<std::vector<Term>> required;
  if (n > 0) {
    for (const auto& comp : connected_components(I1, sigma)) {
      auto dom = comp.adom();
      if (static_cast<int>(dom.size()) <= n) {
        required.insert(dom);
        continue;
      }
      std::vector<std::vector<int>> adj(dom.size());
      auto pos = [&](Term t) { return static_cast<int>(std::lower_bound(dom.begin(), dom.end(), t) - dom.begin()); };
      for (const auto& f : comp)
        for (Term a : f.args)
          for (Term b : f.args)
            if (a != b) adj[pos(a)].push_back(pos(b));
      for (auto& a : adj) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
      }
      connected_subsets(adj, n, [&](const std::vector<int>& s) {
        std::vector<Term> d;
        for (int i : s) d.push_back(dom[i]);
        required.insert(d);
        return false;
      });
    }
  }
  check("listed domains cover every connected domain of size n", required == listed);
  return r;
}

ReplayResult replay_entailment(const json& verdict, const Instance& D, const RuleSet& T, const Instance& Iq,
                               const Mapping& pins) {
  ReplayResult r = start(verdict);
  if (!r.applicable) return r;
  Checker check{r};
  const json& c = verdict["certificate"];
  Budget b = budget_from_json(verdict.value("budget", json()));
  if (r.kind == "match") {
    ChaseResult ch = chase(D, T, b);
    Mapping h = mapping_from_json(c["homomorphism"]);
    check("mapping respects the pins", pins_fit(pins, h));
    check("mapping embeds the query in the chase", verify_hom(Iq, ch.instance(), h, dbp(Schema::universal(), pins)));
  } else if (r.kind == "saturated_chase") {
    ChaseResult ch = chase(D, T, b);
    Instance I = ch.instance();
    check("chase saturates within the budget", ch.saturated);
    check("chase result is a model", is_model(I, T));
    check("database contained in the model", D.subset_of(I));
    if (c.contains("model")) check("model matches the certificate", facts_json(I) == c["model"]);
    check("query has no match in the model", !find_hom(Iq, ch.facts, dbp(Schema::universal(), pins)).found());
  } else if (r.kind == "countermodel") {
    if (!c.contains("model")) {
      check("model inlined in the certificate", false);
      return r;
    }
    Instance M = facts_from_json(c["model"]);
    check("database contained in the model", D.subset_of(M));
    check("no rule applicable in the model", is_model(M, T));
    check("query has no match in the model", !find_hom(Iq, M, dbp(Schema::universal(), pins)).found());
  } else {
    check("known certificate kind", false);
  }
  return r;
}

ReplayResult replay_cq_entailment(const json& verdict, const Instance& D, const RuleSet& T, const CQ& q,
                                  const std::vector<Term>& tuple) {
  Instance Iq = canonical_database(q);
  Mapping pins;
  bool consistent = tuple.size() == q.answer.size();
  for (size_t i = 0; consistent && i < tuple.size(); ++i) {
    auto [it, fresh] = pins.emplace(Term::null(static_cast<uint32_t>(q.answer[i])), tuple[i]);
    if (!fresh && it->second != tuple[i]) consistent = false;
  }
  const json& c = verdict.contains("certificate") ? verdict["certificate"] : json();
  if (c.is_object() && c.value("kind", std::string()) == "inconsistent_tuple") {
    ReplayResult r = start(verdict);
    Checker{r}("tuple repeats an answer variable with different constants", !consistent);
    return r;
  }
  if (c.is_object() && c.value("kind", std::string()) == "match") {
    // Keys are query variable names; translate back to canonical nulls.
    json v = verdict;
    json h = json::object();
    for (int i = 0; i < q.num_vars(); ++i)
      if (c["homomorphism"].contains(q.var_names[i]))
        h[term_name(Term::null(static_cast<uint32_t>(i)))] = c["homomorphism"][q.var_names[i]];
    v["certificate"]["homomorphism"] = h;
    return replay_entailment(v, D, T, Iq, pins);
  }
  return replay_entailment(verdict, D, T, Iq, pins);
}

ReplayResult replay_triviality(const json& verdict, const RuleSet& T, const Schema& sigma_d, const Schema& sigma_q,
                               int max_depth) {
  ReplayResult r = start(verdict);
  if (!r.applicable) return r;
  Checker check{r};
  const json& c = verdict["certificate"];
  Budget b = budget_from_json(verdict.value("budget", json()));
  if (r.kind == "trivial") {
    // Only the bounded part can be re-derived by chasing.
    r.complete = false;
    bool clean = true, dbs_ok = true;
    for (const auto& e : c["databases"]) {
      Database D = facts_from_json(e["database"]);
      if (!within(D, sigma_d)) dbs_ok = false;
      if (has_failing_cluster(chase(D, T, b).instance(), D, sigma_q)) clean = false;
    }
    check("databases over the data schema", dbs_ok);
    check("bounded chases have no failing cluster", clean);
    return r;
  }
  if (r.kind != "single" && r.kind != "pair") {
    check("known certificate kind", false);
    return r;
  }
  Database D = facts_from_json(c["database"]);
  Instance C = facts_from_json(c["cluster"]);
  check("database over the data schema", D.is_database() && within(D, sigma_d));
  check("cluster over the query schema", within(C, sigma_q));
  check("cluster does not map into the database", !find_hom(C, D, dbp(sigma_q)).found());
  bool found = false;
  Budget rb = b;
  for (int d = std::max(1, b.max_depth); d <= max_depth; d *= 2) {
    rb.max_depth = d;
    ChaseResult ch = chase(D, T, rb);
    if (find_hom(C, ch.facts, dbp(sigma_q)).found()) {
      found = true;
      break;
    }
    if (ch.saturated || ch.truncated_by_facts) break;
  }
  check("cluster maps into the chase", found);
  return r;
}

ReplayResult replay_conservativity(const json& verdict, const RuleSet& T1, const RuleSet& T2, const Schema& sigma_d,
                                   const Schema& sigma_q) {
  ReplayResult r = start(verdict);
  if (!r.applicable) return r;
  Checker check{r};
  const json& c = verdict["certificate"];
  Budget b = budget_from_json(verdict.value("budget", json()));
  if (r.kind == "single_database") {
    Database D;
    auto r1 = chase(D, T1, b), r2 = chase(D, T2, b);
    check("data schema is empty", sigma_d.empty());
    check("both chases saturate", r1.saturated && r2.saturated);
    check("mapping sends the second chase into the first",
          verify_hom(r2.instance(), r1.instance(), mapping_from_json(c["homomorphism"]), dbp(sigma_q)));
    return r;
  }
  if (r.kind != "no_hom_into_saturated_chase" && r.kind != "cq_counterexample") {
    check("known certificate kind", false);
    return r;
  }
  Database D = facts_from_json(c["database"]);
  check("database over the data schema", D.is_database() && within(D, sigma_d));
  auto r1 = chase(D, T1, b), r2 = chase(D, T2, b);
  if (r.kind == "no_hom_into_saturated_chase") {
    Instance comp = facts_from_json(c["component"]);
    check("first chase saturates", r1.saturated);
    check("component occurs in the second chase", comp.subset_of(r2.instance()));
    check("component over the query schema", within(comp, sigma_q));
    check("no homomorphism into the first chase", !find_hom(comp, r1.facts, dbp(sigma_q)).found());
    return r;
  }
  Instance witness = facts_from_json(c["t2_witness"]);
  CQ q;
  try {
    q = parse_cq(c["query"].get<std::string>());
  } catch (const Error&) {
    check("query parses", false);
    return r;
  }
  std::vector<Term> tuple;
  for (const auto& e : c["tuple"]) tuple.push_back(term_from_text(e.get<std::string>()));
  Instance Iq = canonical_database(q);
  Mapping pins;
  for (size_t i = 0; i < tuple.size() && i < q.answer.size(); ++i)
    pins[Term::null(static_cast<uint32_t>(q.answer[i]))] = tuple[i];
  bool schema_ok = true;
  for (const auto& a : q.atoms)
    if (!sigma_q.contains(a.rel)) schema_ok = false;
  check("query over the query schema", schema_ok && tuple.size() == q.answer.size());
  check("witness occurs in the second chase", witness.subset_of(r2.instance()));
  check("query matches the witness at the tuple", find_hom(Iq, witness, dbp(Schema::universal(), pins)).found());
  json sub = {{"certificate", c["t1_refutation"]}, {"budget", verdict.value("budget", json())}};
  ReplayResult inner = replay_entailment(sub, D, T1, Iq, pins);
  for (const auto& e : inner.checks) r.checks.push_back({{"check", "first rule set: " + e["check"].get<std::string>()}, {"ok", e["ok"]}});
  check("first rule set does not entail the query", inner.applicable && inner.verified);
  return r;
}

}  // namespace tgdc
