#include "test_util.hpp"

#include "tgdc/conway.hpp"
#include "tgdc/join.hpp"

#include <gtest/gtest.h>

using namespace tgdc;
using namespace tgdc::testing;

TEST(Classify, ExistentialHeadWithOneFrontierVariable) {
  auto T = rules("A(x) -> exists y. S(x,y), B(y).");
  auto f = classify(T[0]);
  EXPECT_TRUE(f.linear);
  EXPECT_TRUE(f.guarded);
  EXPECT_TRUE(f.frontier_one);
  EXPECT_EQ(T[0].frontier.size(), 1u);
  EXPECT_EQ(T[0].existentials.size(), 1u);
}

TEST(Classify, EmptyBodyIsLinearButNotFrontierOne) {
  auto T = rules("-> exists x. P(x).");
  auto f = classify(T[0]);
  EXPECT_TRUE(f.linear);
  EXPECT_TRUE(f.guarded);
  EXPECT_FALSE(f.frontier_one);
  EXPECT_TRUE(T[0].body.empty());
}

TEST(Classify, UnguardedJoin) {
  auto T = rules("R(x,y), S(y,z) -> exists w. T(x,w).");
  auto f = classify(T[0]);
  EXPECT_FALSE(f.linear);
  EXPECT_FALSE(f.guarded);
  EXPECT_TRUE(f.frontier_one);
}

TEST(Classify, GuardAtomCoversBodyVariables) {
  auto T = rules("G(x,y,z), R(x,y) -> S(x,z).");
  auto f = classify(T[0]);
  EXPECT_FALSE(f.linear);
  EXPECT_TRUE(f.guarded);
  EXPECT_FALSE(f.frontier_one);
}

TEST(Classify, FrontierMissingFromHeadIsMalformed) {
  TGD t = rules("A(x) -> B(x).")[0];
  t.frontier = {0, 1};
  t.var_names.push_back("zz");
  EXPECT_THROW(classify(t), MalformedRule);
}

TEST(Classify, LinearImpliesGuardedOnRandomCorpus) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> var(0, 3), atoms(0, 3);
  const char* names = "xyzw";
  for (int i = 0; i < 200; ++i) {
    std::string body;
    char first = names[var(rng)];
    int nb = atoms(rng);
    for (int a = 0; a < nb; ++a) {
      if (a) body += ", ";
      body += std::string("R(") + (a ? names[var(rng)] : first) + "," + names[var(rng)] + ")";
    }
    std::string head = std::string("exists q. R(") + first + ",q).";
    if (nb == 0) head = "exists q. R(q,q).";
    auto T = rules(body + " -> " + head);
    auto f = classify(T[0]);
    if (f.linear) EXPECT_TRUE(f.guarded);
  }
}

TEST(Restrict, KeepsExactlyTheSchemaFacts) {
  Database D = db("A(c). R(c,d).");
  Schema r{{relation("R"), 2}};
  EXPECT_EQ(D.restrict(r), db("R(c,d)."));
  EXPECT_TRUE(D.restrict(Schema()).empty());
  EXPECT_EQ(D.restrict(r).restrict(r), D.restrict(r));
  EXPECT_TRUE(D.restrict(r).subset_of(D.restrict(r.merged(Schema{{relation("A"), 1}}))));
}

TEST(Restrict, RiverChannelFacts) {
  RiverSpec k{{1}, {1}};
  Database river = river_build(k);
  Schema ch{{relation("Channel"), 2}};
  Instance only = river.restrict(ch);
  size_t expected = 0;
  for (const auto& f : river)
    if (relation_name(f.rel) == "Channel") ++expected;
  EXPECT_EQ(only.size(), expected);
  EXPECT_GT(expected, 0u);
  for (const auto& f : only) EXPECT_EQ(relation_name(f.rel), "Channel");
}

TEST(Components, SplitAndJoin) {
  Schema rs{{relation("R"), 2}, {relation("S"), 2}};
  EXPECT_EQ(connected_components(db("R(a,b). R(c,d)."), rs).size(), 2u);
  EXPECT_EQ(connected_components(db("R(a,b). S(b,c)."), rs).size(), 1u);
}

TEST(Components, UnionIsTheRestriction) {
  std::mt19937 rng(3);
  Schema r{{relation("R"), 2}};
  for (int i = 0; i < 50; ++i) {
    Instance I = random_instance(rng, 6, 6, false);
    Instance u;
    for (const auto& c : connected_components(I, r)) {
      EXPECT_TRUE(is_connected(c));
      u = u.union_with(c);
    }
    EXPECT_EQ(u, I.restrict(r));
  }
}

TEST(Components, ExtensionChainIsDisjointFromTheConstant) {
  auto T2 = rules("A(x) -> exists y. S(x,y), B(y). B(x) -> exists y. R(y,x), B(y).");
  auto r = chase(db("A(c)."), T2, depth(3));
  auto comps = connected_components(r.instance(), Schema{{relation("R"), 2}});
  ASSERT_EQ(comps.size(), 1u);
  for (Term t : comps[0].adom()) EXPECT_TRUE(t.is_null());
}

TEST(InducedSubinstances, SingleEdge) {
  auto one = induced_subinstances(db("R(a,b)."), 1);
  ASSERT_EQ(one.size(), 2u);
  for (const auto& s : one) EXPECT_TRUE(s.instance.empty());
  auto two = induced_subinstances(db("R(a,b)."), 2);
  EXPECT_EQ(two.size(), 3u);
  EXPECT_EQ(two.back().instance, db("R(a,b)."));
}

TEST(InducedSubinstances, CliqueCount) {
  Database K = db("R(a,b). R(b,a). R(b,c). R(c,b). R(a,c). R(c,a).");
  EXPECT_EQ(induced_subinstances(K, 2).size(), 6u);
  EXPECT_THROW(induced_subinstances(K, 3, 4), BudgetExceeded);
}

TEST(CanonicalDatabase, RoundTripsUpToRenaming) {
  CQ q = parse_cq("q(x) :- R(x,y), R(y,z), A(z).");
  Instance Dq = canonical_database(q);
  EXPECT_EQ(Dq.adom().size(), 3u);
  CQ back = cq_from_instance(Dq, {Term::null(static_cast<uint32_t>(q.answer[0]))});
  Instance again = canonical_database(back);
  EXPECT_TRUE(brute_hom(Dq, again, Schema::universal(), false));
  EXPECT_TRUE(brute_hom(again, Dq, Schema::universal(), false));
  EXPECT_EQ(back.atoms.size(), q.atoms.size());
}

TEST(Terms, NamedAndNullSpacesAreDisjoint) {
  Term a = constant("a");
  EXPECT_TRUE(a.is_named());
  EXPECT_FALSE(a.is_null());
  EXPECT_TRUE(N(0).is_null());
  EXPECT_NE(a, N(a.index()));
  EXPECT_EQ(term_name(N(3)), "_n3");
  EXPECT_TRUE(db("A(c). R(c,d).").is_database());
  EXPECT_FALSE(inst("R(c,_n1).").is_database());
}

TEST(FactIndex, BulkBuildMatchesIncrementalAdds) {
  std::mt19937 rng(3);
  for (int i = 0; i < 30; ++i) {
    Instance I = random_instance(rng, 6, 40, i % 2);
    FactIndex bulk(I), inc;
    for (const auto& f : I) EXPECT_TRUE(inc.add(f).second);
    for (const auto& f : I) EXPECT_FALSE(inc.add(f).second);
    ASSERT_EQ(bulk.size(), inc.size());
    EXPECT_EQ(bulk.instance(), I);
    for (const auto& f : I) {
      EXPECT_EQ(bulk.find(f), inc.find(f));
      for (uint32_t p = 0; p < f.arity(); ++p)
        EXPECT_EQ(bulk.lookup(f.rel, p, f.args[p]).count, inc.lookup(f.rel, p, f.args[p]).count);
    }
  }
}

TEST(Instance, ConstructionSortsAndDeduplicates) {
  Instance I(std::vector<Fact>{make_fact("R", {"b", "a"}), make_fact("A", {"a"}), make_fact("R", {"b", "a"}),
                               make_fact("R", {"a", "b"})});
  ASSERT_EQ(I.size(), 3u);
  EXPECT_TRUE(std::is_sorted(I.begin(), I.end()));
  EXPECT_EQ(std::adjacent_find(I.begin(), I.end()), I.end());
}
