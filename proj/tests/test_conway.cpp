#include "test_util.hpp"

#include "tgdc/conway.hpp"

#include <gtest/gtest.h>

using namespace tgdc;
using namespace tgdc::testing;

namespace {

ConwaySpec spec(int gamma, std::vector<int64_t> a, std::vector<int64_t> b, bool reduction = false) {
  ConwaySpec s;
  s.gamma = gamma;
  s.alpha = std::move(a);
  s.beta = std::move(b);
  s.reduction = reduction;
  return s;
}

// F(2)=3, F(3)=1, F(1)=1: the river <[2,3,1],[3,1,1]> is correct.
ConwaySpec stopping_spec() { return spec(6, {1, 1, 3, 1, 1, 1}, {1, 1, 2, 3, 1, 1}, true); }

// F(2)=3, F(1)=1 with gamma=2.
ConwaySpec small_spec() { return spec(2, {3, 2}, {2, 2}, true); }

size_t count_rel(const Instance& I, const char* name) {
  size_t n = 0;
  for (const auto& f : I) n += relation_name(f.rel) == name;
  return n;
}

}  // namespace

TEST(ConwayEval, Examples) {
  auto halve = spec(2, {1, 1}, {2, 1});
  EXPECT_EQ(conway_eval(halve, 2), 1);
  EXPECT_EQ(conway_eval(halve, 3), 3);
  auto id = spec(2, {1, 1}, {1, 1});
  for (int n = 1; n < 20; ++n) EXPECT_EQ(conway_eval(id, n), n);
  EXPECT_EQ(conway_eval(small_spec(), 2), 3);
  EXPECT_EQ(conway_eval(small_spec(), 1), 1);
}

TEST(ConwayEval, DivisibilityIsValidated) {
  EXPECT_THROW(conway_eval(spec(2, {1, 1}, {3, 1}), 2), InvalidSpec);
  EXPECT_THROW(conway_eval(spec(2, {1, 1}, {1, 2}), 2), InvalidSpec);
  EXPECT_THROW(conway_eval(spec(2, {1}, {1}), 2), InvalidSpec);
  EXPECT_THROW(spec(2, {1, 1}, {1, 1}, true).validate(), InvalidSpec);
  EXPECT_NO_THROW(stopping_spec().validate());
}

TEST(ConwayEval, PositiveOnALargeRange) {
  for (const auto& s : {stopping_spec(), small_spec(), spec(4, {1, 2, 3, 4}, {2, 1, 2, 4})}) {
    s.validate();
    for (int64_t n = 1; n <= 10000; ++n) EXPECT_GE(conway_eval(s, n), 1);
  }
}

TEST(ConwayStops, Examples) {
  auto h = conway_stops(spec(2, {1, 1}, {2, 1}), 2, 10);
  ASSERT_EQ(h.value, Outcome::Holds);
  EXPECT_EQ(h.certificate["steps"], 1);
  auto f = conway_stops(spec(2, {1, 1}, {1, 1}), 2, 10);
  ASSERT_EQ(f.value, Outcome::Fails);
  EXPECT_EQ(f.certificate["cycle"], json::array({2}));
  // Doubling never repeats and never reaches 1.
  auto d = conway_stops(spec(1, {2}, {1}), 2, 50);
  EXPECT_EQ(d.value, Outcome::Unknown);
  auto s = conway_stops(stopping_spec(), 2, 10);
  ASSERT_EQ(s.value, Outcome::Holds);
  EXPECT_EQ(s.certificate["values"], json::array({2, 3, 1}));
}

TEST(RiverBuild, SingleSegment) {
  Database D = river_build(RiverSpec{{1}, {1}});
  std::set<std::string> consts;
  for (Term t : D.adom()) consts.insert(term_name(t));
  EXPECT_EQ(consts, (std::set<std::string>{"b0", "b1", "c", "e1", "e2"}));
  for (const char* f : {"Pyramus(b1,b0)", "Thisbe(b1,b0)", "Encounter(b1,b0)", "Mouth(b0)", "Channel(c,b0)",
                        "Channel(c,b1)", "Thisbe(b0,e2)", "Pyramus(b0,e1)", "Thisbe(b1,e2)", "Pyramus(b1,e1)",
                        "Pyramus(e1,e1)", "Thisbe(e1,e1)", "Channel(e1,e1)", "Pyramus(e2,e2)", "Thisbe(e2,e2)",
                        "Channel(e2,e2)"})
    EXPECT_TRUE(D.contains(db(std::string(f) + ".").facts()[0])) << f;
  EXPECT_EQ(D.size(), 16u);
  EXPECT_THROW(river_build(RiverSpec{{}, {}}), InvalidSpec);
}

TEST(RiverBuild, FourSegmentRiverShape) {
  RiverSpec k{{4, 7, 7, 1}, {7, 4, 6, 2}};
  Database D = river_build(k);
  int inner = 0;
  for (int i = 0; i < 4; ++i) inner += k.p[i] - 1 + k.t[i] - 1;
  EXPECT_EQ(D.adom().size(), 5u + 3u + static_cast<size_t>(inner));
  // Every worldly constant has a Channel fact from c.
  std::set<Term> channeled;
  for (const auto& f : D)
    if (relation_name(f.rel) == "Channel" && f.args[0] == C("c")) channeled.insert(f.args[1]);
  for (Term t : D.adom())
    if (t != C("c") && t != C("e1") && t != C("e2")) EXPECT_TRUE(channeled.count(t)) << term_name(t);
  // Path edges, inner constants to e2, bridges to e1, eternity loops.
  EXPECT_EQ(count_rel(D, "Pyramus"), 19u + 15u + 5u + 2u);
}

TEST(RiverBuild, ExtractRiverRoundTrips) {
  for (const RiverSpec& k : {RiverSpec{{1}, {1}}, RiverSpec{{2, 3, 1}, {3, 1, 1}}, RiverSpec{{4, 7, 7, 1}, {7, 4, 6, 2}}}) {
    auto back = extract_river(river_build(k));
    ASSERT_TRUE(back.has_value()) << k.to_string();
    EXPECT_EQ(*back, k);
  }
  EXPECT_FALSE(extract_river(db("Mouth(b0).")).has_value());
}

TEST(RiverCorrectness, Examples) {
  auto fig = river_correctness(RiverSpec{{4, 7, 7, 1}, {7, 4, 6, 2}}, small_spec());
  EXPECT_FALSE(fig.locally_correct);
  ASSERT_TRUE(fig.defect.has_value());
  EXPECT_EQ(*fig.defect, 2);
  auto ok = river_correctness(RiverSpec{{2, 3, 1}, {3, 1, 1}}, stopping_spec());
  EXPECT_TRUE(ok.locally_correct);
  EXPECT_TRUE(ok.correct);
  EXPECT_FALSE(ok.defect.has_value());
}

TEST(LocallyCorrectRivers, SmallSpecEnumeration) {
  auto s = small_spec();
  auto ks = locally_correct_rivers(s, 3, 4);
  // n=2: [2,1]; n=3: [2,v,1] for v in 1..4.
  ASSERT_EQ(ks.size(), 5u);
  EXPECT_EQ(ks[0], (RiverSpec{{2, 1}, {3, 1}}));
  for (const auto& k : ks) {
    EXPECT_TRUE(river_correctness(k, s).locally_correct) << k.to_string();
    EXPECT_EQ(k.p.front(), 2);
    EXPECT_EQ(k.p.back(), 1);
  }
  size_t correct = 0;
  for (const auto& k : ks) correct += river_correctness(k, s).correct;
  // [2,3,1],[3,?,1] is correct iff F(3)=1, which fails for this spec.
  EXPECT_EQ(correct, 0u);
  auto e = locally_correct_rivers(stopping_spec(), 3, 4);
  bool has = false;
  for (const auto& k : e) has = has || k == RiverSpec{{2, 3, 1}, {3, 1, 1}};
  EXPECT_TRUE(has);
}

TEST(RiverPredicate, Examples) {
  EXPECT_TRUE(observation1(RiverSpec{{4, 7, 7, 1}, {7, 4, 6, 2}}));
  EXPECT_FALSE(observation1(RiverSpec{{2, 3}, {3, 1}}));
  EXPECT_FALSE(observation1(RiverSpec{{5}, {2}}));
}

TEST(RiverPredicate, AgreesWithTheMythChainOnSmallRivers) {
  int checked = 0;
  for (int n = 1; n <= 3; ++n) {
    std::vector<int> v(2 * n, 1);
    while (true) {
      RiverSpec k;
      k.p.assign(v.begin(), v.begin() + n);
      k.t.assign(v.begin() + n, v.end());
      EXPECT_EQ(river_myth_hom(k).value == Outcome::Holds, observation1(k)) << k.to_string();
      ++checked;
      int i = 2 * n - 1;
      while (i >= 0 && v[i] == 3) v[i--] = 1;
      if (i < 0) break;
      ++v[i];
    }
  }
  EXPECT_EQ(checked, 9 + 81 + 729);
}

TEST(MythRules, ThreeLinearRules) {
  auto T = myth_rules();
  ASSERT_EQ(T.size(), 3u);
  for (const auto& t : T) EXPECT_TRUE(classify(t).linear);
  EXPECT_EQ(format_rule(T[2]), format_rule(parse_rules(
                                   "M(p,p2,c,t2,t) -> Pyramus(p,p2), Thisbe(t,t2), Channel(c,p2), Channel(c,t2).")[0]));
  EXPECT_EQ(myth_query_schema().symbols().size(), 5u);
}

TEST(MythRules, ChainSpecMatchesTheMaterializedChase) {
  auto r = chase(db("Encounter(a,b)."), myth_rules(), depth(9));
  Instance I = r.instance().restrict(myth_query_schema());
  // One Encounter, then per M-step two edges and two Channel facts.
  EXPECT_EQ(count_rel(I, "Pyramus"), count_rel(I, "Thisbe"));
  EXPECT_EQ(count_rel(I, "Channel"), 2 * count_rel(I, "Pyramus"));
  EXPECT_GE(count_rel(I, "Pyramus"), 3u);
}

TEST(GeneratedRules, WorkhorseArities) {
  auto s = small_spec();
  RuleSet T1 = gen_T1(s);
  std::map<std::string, int> ar;
  for (const auto& sym : schema_of(T1).symbols()) ar[relation_name(sym.id)] = sym.arity;
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) {
      std::string name = "WH_" + std::to_string(i) + "_" + std::to_string(k);
      ASSERT_TRUE(ar.count(name)) << name;
      EXPECT_EQ(ar[name], s.alpha[k] + s.beta[k] + 5) << name;
    }
  for (int k = 0; k < 2; ++k) {
    std::string name = "BH_" + std::to_string(k);
    if (ar.count(name)) EXPECT_EQ(ar[name], s.alpha[k] + s.beta[k] + 5) << name;
  }
  EXPECT_GE(T1.size(), gen_T_rec(s).size() + gen_T_proj(s).size());
}

TEST(GeneratedRules, RoundTripThroughText) {
  for (const auto& s : {small_spec(), stopping_spec()}) {
    for (const RuleSet& T : {gen_T_rec(s), gen_T_proj(s), gen_T1(s), gen_guarded_T0(s).rules, myth_rules()}) {
      RuleSet back = parse_rules(format_rules(T));
      ASSERT_EQ(back.size(), T.size());
      for (size_t i = 0; i < T.size(); ++i) EXPECT_EQ(format_rule(back[i]), format_rule(T[i]));
    }
  }
  EXPECT_THROW(gen_T1(spec(2, {1, 1}, {1, 1})), InvalidSpec);
}

TEST(GeneratedRules, GuardedT0) {
  for (const auto& s : {small_spec(), stopping_spec()}) {
    ConwayOptions o;
    o.direct_bridgehead = true;
    auto g = gen_guarded_T0(s, o);
    for (const auto& t : g.rules) EXPECT_TRUE(classify(t).guarded) << format_rule(t);
    EXPECT_FALSE(g.sigma_d.contains(relation("Encounter")));
    EXPECT_TRUE(g.sigma_d.contains(relation("Start")));
    EXPECT_TRUE(g.sigma_q.contains(relation("Mouth")));
    for (const auto& sym : g.sigma_q.symbols()) EXPECT_TRUE(g.sigma_d.contains(sym.id));
  }
}

TEST(AncestorSets, MaterializedSetsSpellLocallyCorrectRivers) {
  auto s = small_spec();
  RuleSet T1 = gen_T1(s);
  auto r = chase(Database(), T1, depth(30, 400000));
  auto sets = encounter_ancestor_sets(r, T1);
  size_t materialized = 0;
  for (const auto& a : sets) {
    if (!a.materialized) continue;
    ++materialized;
    auto k = extract_river(a.projections);
    ASSERT_TRUE(k.has_value()) << format_database(a.projections);
    EXPECT_TRUE(river_correctness(*k, s).locally_correct) << k->to_string();
  }
  EXPECT_GE(materialized, 1u);
}

TEST(GuardedT0, WitnessDatabaseReproducesTheEncounter) {
  auto s = stopping_spec();
  ConwayOptions o;
  o.direct_bridgehead = true;
  RuleSet T1 = gen_T1(s, o);
  auto r = chase(Database(), T1, depth(40, 400000));
  const RiverSpec want{{2, 3, 1}, {3, 1, 1}};
  const AncestorSet* hit = nullptr;
  auto sets = encounter_ancestor_sets(r, T1);
  for (const auto& a : sets)
    if (a.materialized && extract_river(a.projections) == want) hit = &a;
  ASSERT_NE(hit, nullptr);

  Database W = t0_witness_database(s, r, *hit, o);
  EXPECT_EQ(count_rel(W, "Encounter"), 0u);
  auto g = gen_guarded_T0(s, o);
  EXPECT_TRUE(W.restrict(g.sigma_d) == W);
  auto r0 = chase(W, g.rules, depth(12));
  Instance encounters;
  for (const auto& f : r0.instance())
    if (relation_name(f.rel) == "Encounter") encounters = encounters.union_with(Instance{f});
  ASSERT_EQ(encounters.size(), 1u);
  // The river is correct, so the myth chain from its Encounter has no image.
  const Fact& e = encounters.facts()[0];
  auto v = infinite_chain_hom(myth_chain_spec(), W, g.sigma_q, {{0, e.args[0]}, {1, e.args[1]}});
  EXPECT_EQ(v.value, Outcome::Fails);
  EXPECT_EQ(river_myth_hom(want).value, Outcome::Fails);
}
