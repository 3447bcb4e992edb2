#include "corpus.hpp"
#include "test_util.hpp"

#include "tgdc/frontier_one.hpp"

#include <gtest/gtest.h>

using namespace tgdc;
using namespace tgdc::testing;

namespace {

const char* kT1 = "A(x) -> exists y. S(x,y), B(y).\nB(x) -> exists y. R(x,y), B(y).\n";
const char* kT2 = "A(x) -> exists y. S(x,y), B(y).\nB(x) -> exists y. R(y,x), B(y).\n";

bool isomorphic(const Instance& a, const Instance& b) {
  return a.size() == b.size() && brute_hom(a, b) && brute_hom(b, a);
}

}  // namespace

TEST(Applicable, RestrictedCondition) {
  auto T = rules("A(x) -> exists y. S(x,y).");
  Term c = C("c");
  EXPECT_FALSE(applicable(T[0], db("A(c). S(c,d)."), std::vector<Term>{c}));
  EXPECT_TRUE(applicable(T[0], db("A(c)."), std::vector<Term>{c}));
}

TEST(Applicable, EncounterRule) {
  auto T = rules("Encounter(p,t) -> exists pp,c,tt. M(p,pp,c,tt,t).");
  EXPECT_TRUE(applicable(T[0], db("Encounter(b1,b0)."), std::vector<Term>{C("b1"), C("b0")}));
}

TEST(Chase, ForwardChainDepthThree) {
  auto r = chase(db("A(c)."), rules(kT1), depth(3));
  Instance expected = inst("A(c). S(c,_n0). B(_n0). R(_n0,_n1). B(_n1). R(_n1,_n2). B(_n2).");
  EXPECT_TRUE(isomorphic(r.instance(), expected));
  EXPECT_EQ(r.size(), 7u);
  EXPECT_FALSE(r.saturated);
}

TEST(Chase, SatisfyingInstanceIsUntouched) {
  Database D = db("A(c). S(c,d). B(d). R(d,d).");
  auto r = chase(D, rules(kT1), depth(10));
  EXPECT_EQ(r.instance(), D);
  EXPECT_TRUE(r.saturated);
  EXPECT_EQ(r.steps, 0u);
}

TEST(Chase, HeadAlreadyMapsSoNothingFires) {
  auto r = chase(db("R(c,cc)."), rules("R(x,y) -> exists z. R(x,z)."), depth(5));
  EXPECT_TRUE(r.saturated);
  EXPECT_EQ(r.size(), 1u);
}

TEST(Chase, EmptyBodyRuleFiresOnEmptyDatabase) {
  auto r = chase(Database(), rules("-> exists x. P(x)."), depth(5));
  EXPECT_TRUE(r.saturated);
  EXPECT_EQ(r.size(), 1u);
}

TEST(Chase, LevelsAreMonotoneAlongDerivations) {
  auto r = chase(db("A(c)."), rules(kT2), depth(6));
  for (uint32_t id = 0; id < r.size(); ++id) {
    if (id < r.input_size) {
      EXPECT_EQ(r.level[id], 0u);
      continue;
    }
    for (uint32_t p : r.parents(id)) EXPECT_LT(r.level[p], r.level[id]);
  }
}

TEST(Chase, DeeperBudgetsExtendShallowerOnes) {
  auto T = rules(kT2);
  Instance prev;
  for (int d = 0; d <= 6; ++d) {
    Instance cur = chase(db("A(c)."), T, depth(d)).instance();
    EXPECT_TRUE(prev.subset_of(cur));
    prev = cur;
  }
}

TEST(Chase, FactCapStopsWithoutSaturating) {
  auto r = chase(db("A(c)."), rules(kT1), depth(1000, 20));
  EXPECT_FALSE(r.saturated);
  EXPECT_LE(r.size(), 22u);
}

TEST(Chase, SaturatedResultsAreModels) {
  std::mt19937 rng(21);
  auto rels = corpus::leveled_relations(4);
  std::vector<corpus::Rel> base(rels.begin(), rels.begin() + 4);
  for (int i = 0; i < 40; ++i) {
    RuleSet T = rules(corpus::random_linear_rules(rng, rels, 4, true));
    Database D = corpus::random_database(rng, base, 3, 4);
    auto r = chase(D, T, depth(20));
    ASSERT_TRUE(r.saturated);
    EXPECT_TRUE(is_model(r.instance(), T));
    // Idempotence.
    auto again = chase(r.instance(), T, depth(5));
    EXPECT_EQ(again.size(), r.size());
  }
}

TEST(Chase, Deterministic) {
  auto a = chase(db("A(c). B(d)."), rules(kT2), depth(5));
  auto b = chase(db("A(c). B(d)."), rules(kT2), depth(5));
  EXPECT_EQ(format_leveled(a), format_leveled(b));
}

TEST(Chase, LeveledDumpHasBanners) {
  auto r = chase(db("A(c)."), rules(kT1), depth(2));
  std::string s = format_leveled(r);
  EXPECT_NE(s.find("# level 0\nA(c).\n"), std::string::npos);
  EXPECT_NE(s.find("# level 2\n"), std::string::npos);
  EXPECT_EQ(s.find("# level 3"), std::string::npos);
}

TEST(ChaseBelow, TowerRootedAtTheConstant) {
  auto r = chase(db("A(c). A(d)."), rules(kT2), depth(3));
  Instance bc = chase_below(r, C("c"));
  Instance bd = chase_below(r, C("d"));
  EXPECT_TRUE(bc.contains(Fact(relation("A"), {C("c")})));
  EXPECT_FALSE(bc.empty());
  EXPECT_EQ(bc.size(), bd.size());
  for (Term t : bc.adom())
    if (t.is_null()) {
      auto dom = bd.adom();
      EXPECT_EQ(std::find(dom.begin(), dom.end(), t), dom.end());
    }
  EXPECT_EQ(bc.union_with(bd).size(), r.size());
}

TEST(ChaseBelow, ConstantWithoutRulesKeepsItsUnaryFacts) {
  auto r = chase(db("A(c). Z(e). Y(e,c)."), rules(kT1), depth(2));
  Instance be = chase_below(r, C("e"));
  EXPECT_EQ(be, db("Z(e)."));
}

TEST(ChaseBelow, RejectsNonFrontierOneRules) {
  auto r = chase(db("R(a,b)."), rules("R(x,y) -> exists z. S(x,y,z)."), depth(2));
  EXPECT_THROW(chase_below(r, C("a")), NotFrontierOne);
}

TEST(ChaseCon, ExtensionChainIsExcluded) {
  Database D = db("A(c).");
  auto r = chase(D, rules(kT2), depth(4));
  Schema R{{relation("R"), 2}};
  auto con = chase_con(r, R, D);
  EXPECT_TRUE(con.instance.empty());
  EXPECT_TRUE(con.approximate);
  auto all = chase_con(r, schema_of(r.instance()), D);
  EXPECT_EQ(all.instance, r.instance());
}

TEST(ChaseCon, OnlyTouchedComponent) {
  Database D = db("A(c). Z(e).");
  auto r = chase(D, rules("A(x) -> exists y. R(x,y)."), depth(3));
  Schema s{{relation("R"), 2}, {relation("A"), 1}, {relation("Z"), 1}};
  auto con = chase_con(r, s, D);
  EXPECT_TRUE(r.saturated);
  EXPECT_FALSE(con.approximate);
  EXPECT_EQ(con.instance.size(), 3u);
}

TEST(ChaseUniversality, ChaseMapsIntoNaiveModels) {
  std::mt19937 rng(99);
  auto rels = corpus::leveled_relations(4);
  std::vector<corpus::Rel> base(rels.begin(), rels.begin() + 4);
  Term star = C("star");
  for (int i = 0; i < 20; ++i) {
    RuleSet T = rules(corpus::random_linear_rules(rng, rels, 4, true));
    Database D = corpus::random_database(rng, base, 3, 4);
    auto r = chase(D, T, depth(30));
    ASSERT_TRUE(r.saturated);
    Instance J = corpus::naive_model(D, T, [&](size_t, int) { return star; });
    ASSERT_TRUE(is_model(J, T));
    HomOptions o;
    o.db_preserving = true;
    EXPECT_TRUE(find_hom(r.instance(), J, o).found());
  }
}

TEST(LinearProvenance, LinearProvenanceMapsIntoSingleFactChase) {
  std::mt19937 rng(5);
  auto rels = corpus::leveled_relations(4);
  std::vector<corpus::Rel> base(rels.begin(), rels.begin() + 4);
  for (int i = 0; i < 20; ++i) {
    RuleSet T = rules(corpus::random_linear_rules(rng, rels, 4, true));
    Database D = corpus::random_database(rng, base, 3, 4);
    auto r = chase(D, T, depth(30));
    ASSERT_TRUE(r.saturated);
    for (const auto& alpha : D) {
      Instance below = chase_below_fact(r, alpha);
      auto single = chase(Instance{alpha}, T, depth(30));
      HomOptions o;
      o.db_preserving = true;
      EXPECT_TRUE(find_hom(below, single.facts, o).found());
    }
  }
}

TEST(UnravelingChase, UnravelingCopiesReceiveTheChaseBelow) {
  std::mt19937 rng(17);
  auto rels = corpus::leveled_relations(4);
  std::vector<corpus::Rel> base(rels.begin(), rels.begin() + 4);
  int cases = 0;
  while (cases < 20) {
    RuleSet T = rules(corpus::random_frontier_one_rules(rng, rels, 4));
    if (!all_frontier_one(T)) continue;
    Database D = corpus::random_database(rng, base, 3, 4);
    auto r = chase(D, T, depth(30));
    if (!r.saturated) continue;
    ++cases;
    int k = std::max(1, body_width(T));
    Unraveling u = unravel(D, k, 2, 512);
    auto ru = chase(u.db, T, depth(30));
    ASSERT_TRUE(ru.saturated);
    // Copies in top-level bags have every neighbouring bag materialized.
    std::set<Term> top;
    for (size_t bi = 0; bi < u.bags.size(); ++bi)
      if (u.parent[bi] == -1) top.insert(u.bags[bi].begin(), u.bags[bi].end());
    for (Term c : D.adom()) {
      Instance below = chase_below(r, c);
      for (auto [copy, orig] : u.back_map) {
        if (orig != c || !top.count(copy)) continue;
        HomOptions o;
        o.pins[c] = copy;
        EXPECT_TRUE(find_hom(below, ru.facts, o).found()) << format_rules(T);
      }
    }
  }
}
