#include "corpus.hpp"
#include "test_util.hpp"

#include "tgdc/frontier_one.hpp"
#include "tgdc/replay.hpp"

#include <gtest/gtest.h>

using namespace tgdc;
using namespace tgdc::testing;

namespace {

const char* kT1 = "A(x) -> exists y. S(x,y), B(y).\nB(x) -> exists y. R(x,y), B(y).\n";
const char* kT2 = "A(x) -> exists y. S(x,y), B(y).\nB(x) -> exists y. R(y,x), B(y).\n";

json as_json(const Verdict& v) { return json::parse(emit_verdict(v)); }
Schema sch(std::string_view facts) { return schema_of(db(facts)); }

HomOptions dbp() {
  HomOptions o;
  o.db_preserving = true;
  return o;
}

}  // namespace

TEST(ReplayHelpers, TermsFactsAndBudgets) {
  EXPECT_TRUE(term_from_text("_n4").is_null());
  EXPECT_EQ(term_from_text("_n4").index(), 4u);
  EXPECT_TRUE(term_from_text("c1").is_named());
  EXPECT_EQ(facts_from_json(json::array({"R(a,_n0)", "A(a)"})), inst("R(a,_n0). A(a)."));
  Budget b;
  b.max_depth = 9;
  b.hom_n = 3;
  b.model_size = 12;
  Budget back = budget_from_json(b.to_json());
  EXPECT_EQ(back.max_depth, 9);
  EXPECT_EQ(back.hom_n, 3);
  EXPECT_EQ(back.model_size, 12u);
  auto m = mapping_from_json(json{{"_n0", "a"}});
  EXPECT_EQ(m.at(N(0)), C("a"));
}

TEST(ReplayHom, GenuineAndTampered) {
  Instance src = inst("R(_n0,_n1). A(_n1).");
  Instance dst = db("R(a,b). A(b). R(b,a).");
  auto v = as_json(check_hom(src, dst, dbp(), Budget()));
  ASSERT_EQ(v["verdict"], "holds");
  EXPECT_TRUE(replay_hom(v, src, dst, dbp()).verified);
  json bad = v;
  bad["certificate"]["homomorphism"]["_n1"] = "a";
  EXPECT_FALSE(replay_hom(bad, src, dst, dbp()).verified);

  auto f = as_json(check_hom(src, db("R(a,b). A(a)."), dbp(), Budget()));
  ASSERT_EQ(f["verdict"], "fails");
  EXPECT_TRUE(replay_hom(f, src, db("R(a,b). A(a)."), dbp()).verified);
  // A FAILS claim on a target that does admit a homomorphism is rejected.
  EXPECT_FALSE(replay_hom(f, src, dst, dbp()).verified);
}

TEST(ReplayBoundedHom, GenuineAndTampered) {
  Database D = db("A(c).");
  Instance I2 = chase(D, rules(kT2), depth(6)).instance();
  Instance I1 = chase(D, rules(kT1), depth(8)).instance();
  Schema R = sch("R(a,b).");
  auto v = as_json(hom_exists_n(I2, I1, R, 3, depth(6)));
  ASSERT_EQ(v["verdict"], "holds");
  EXPECT_TRUE(replay_bounded_hom(v, I2, I1, R).verified);
  // Against a target without R facts the listed homs no longer check.
  EXPECT_FALSE(replay_bounded_hom(v, I2, D, R).verified);

  auto w = as_json(hom_exists_n(db("R(c,d)."), db("R(c,c)."), Schema::universal(), 2, Budget()));
  ASSERT_EQ(w["verdict"], "fails");
  EXPECT_TRUE(replay_bounded_hom(w, db("R(c,d)."), db("R(c,c)."), Schema::universal()).verified);
  EXPECT_FALSE(replay_bounded_hom(w, db("R(c,d)."), db("R(c,d)."), Schema::universal()).verified);
}

TEST(ReplayEntailment, MatchSaturatedAndCountermodel) {
  RuleSet T = rules(kT1);
  CQ q = parse_cq("q(x) :- S(x,y), B(y).");
  auto m = as_json(cq_entailed(db("A(c)."), T, q, {C("c")}, depth(2)));
  ASSERT_EQ(m["verdict"], "holds");
  EXPECT_TRUE(replay_cq_entailment(m, db("A(c)."), T, q, {C("c")}).verified);
  EXPECT_FALSE(replay_cq_entailment(m, db("A(d)."), T, q, {C("c")}).verified);

  RuleSet loop = rules("R(x,y) -> exists z. R(x,z).");
  CQ self = parse_cq("q() :- R(x,x).");
  auto s = as_json(cq_entailed(db("R(c,cc)."), loop, self, {}, depth(5)));
  ASSERT_EQ(s["certificate"]["kind"], "saturated_chase");
  EXPECT_TRUE(replay_cq_entailment(s, db("R(c,cc)."), loop, self, {}).verified);
  EXPECT_FALSE(replay_cq_entailment(s, db("R(c,c)."), loop, self, {}).verified);

  Budget b = depth(4);
  b.model_size = 5000;
  CQ cq = parse_cq("q(x) :- R(x,x).");
  auto c = as_json(cq_entailed(db("A(c)."), T, cq, {C("c")}, b));
  ASSERT_EQ(c["certificate"]["kind"], "countermodel");
  EXPECT_TRUE(replay_cq_entailment(c, db("A(c)."), T, cq, {C("c")}).verified);
  json bad = c;
  bad["certificate"]["model"].push_back("R(c,c)");
  EXPECT_FALSE(replay_cq_entailment(bad, db("A(c)."), T, cq, {C("c")}).verified);
}

TEST(ReplayEntailment, UnknownIsNotApplicable) {
  auto u = as_json(cq_entailed(db("A(c)."), rules(kT1), parse_cq("q() :- R(x,x)."), {}, depth(3)));
  ASSERT_EQ(u["verdict"], "unknown");
  auto r = replay_cq_entailment(u, db("A(c)."), rules(kT1), parse_cq("q() :- R(x,x)."), {});
  EXPECT_FALSE(r.applicable);
  EXPECT_EQ(r.exit_code(), 2);
}

TEST(ReplayTriviality, ClusterAndTrivial) {
  Schema R = sch("R(a,b).");
  RuleSet fwd = rules("R(x,y) -> exists z. R(y,z).");
  auto f = as_json(check_triviality(fwd, R, R, Budget()));
  ASSERT_EQ(f["verdict"], "fails");
  EXPECT_TRUE(replay_triviality(f, fwd, R, R).verified);
  // The same cluster is not derivable under a rule set that never fires.
  RuleSet same = rules("R(x,y) -> exists z. R(x,z).");
  EXPECT_FALSE(replay_triviality(f, same, R, R).verified);
  json forged = f;
  forged["certificate"]["cluster"] = json::array({"R(c1,c2)"});
  EXPECT_FALSE(replay_triviality(forged, fwd, R, R).verified);

  auto h = as_json(check_triviality(same, R, R, Budget()));
  ASSERT_EQ(h["verdict"], "holds");
  auto rh = replay_triviality(h, same, R, R);
  EXPECT_TRUE(rh.verified);
  EXPECT_FALSE(rh.complete);
  EXPECT_FALSE(replay_triviality(h, fwd, R, R).verified);
}

TEST(ReplayTriviality, RandomFailuresReplay) {
  std::mt19937 rng(71);
  auto rels = corpus::mixed_relations();
  Schema sd = sch("R(a,b). A(a).");
  int seen = 0;
  for (int i = 0; i < 60; ++i) {
    RuleSet T = rules(corpus::random_linear_rules(rng, rels, 4, false));
    auto v = as_json(check_triviality(T, sd, Schema::universal(), Budget()));
    if (v["verdict"] != "fails") continue;
    ++seen;
    EXPECT_TRUE(replay_triviality(v, T, sd, Schema::universal()).verified) << format_rules(T) << v.dump();
  }
  EXPECT_GT(seen, 10);
}

TEST(ReplayConservativity, AllCertificateKinds) {
  auto T1 = rules("A(x) -> exists y. S(x,y).");
  auto T2 = rules("A(x) -> exists y. S(x,y).\nA(x) -> exists y. R(x,y).");
  Schema A = sch("A(a)."), R = sch("R(a,b).");
  auto h = as_json(check_hom_conservative(T1, T2, A, R, Budget()));
  ASSERT_EQ(h["certificate"]["kind"], "no_hom_into_saturated_chase");
  EXPECT_TRUE(replay_conservativity(h, T1, T2, A, R).verified);
  EXPECT_FALSE(replay_conservativity(h, T2, T2, A, R).verified);

  auto c = as_json(check_cq_conservative(RuleSet{}, rules("A(x) -> exists y. R(x,y)."), A, R, Budget()));
  ASSERT_EQ(c["certificate"]["kind"], "cq_counterexample");
  EXPECT_TRUE(replay_conservativity(c, RuleSet{}, rules("A(x) -> exists y. R(x,y)."), A, R).verified);
  json forged = c;
  forged["certificate"]["query"] = "q() :- A(x).";
  EXPECT_FALSE(replay_conservativity(forged, RuleSet{}, rules("A(x) -> exists y. R(x,y)."), A, R).verified);

  auto s = rules("A(x) -> exists y. R(x,y).");
  auto one = as_json(check_hom_conservative(s, s, Schema(), R, Budget()));
  ASSERT_EQ(one["certificate"]["kind"], "single_database");
  EXPECT_TRUE(replay_conservativity(one, s, s, Schema(), R).verified);

  auto u = as_json(check_hom_conservative(rules(kT1), rules(kT2), A, R, Budget()));
  EXPECT_FALSE(replay_conservativity(u, rules(kT1), rules(kT2), A, R).applicable);
}
