// Serial vs parallel timings for the data-parallel deciders, plus the
// river cross-check and the chase.

#include "tgdc/conway.hpp"
#include "tgdc/frontier_one.hpp"
#include "tgdc/parallel.hpp"
#include "tgdc/textio.hpp"
#include "tgdc/triviality.hpp"

#include <benchmark/benchmark.h>

using namespace tgdc;

namespace {

const char* kT1 = "A(x) -> exists y. S(x,y), B(y).\nB(x) -> exists y. R(x,y), B(y).\n";
const char* kT2 = "A(x) -> exists y. S(x,y), B(y).\nB(x) -> exists y. R(y,x), B(y).\n";

Schema schema(std::string_view facts) { return schema_of(parse_database(facts)); }

// Arg 0 = serial, 1 = parallel.
void BM_Triviality(benchmark::State& st) {
  RuleSet T = parse_rules(
      "R(x,y) -> exists z. S(y,z), A(z).\n"
      "S(x,y) -> exists z. T(x,y,z).\n"
      "T(x,y,z) -> exists w. R(z,w), B(w).\n"
      "A(x) -> exists y. R(x,y).\n");
  Schema sd = schema("R(a,b). A(a). T(a,b,c).");
  for (auto _ : st) benchmark::DoNotOptimize(check_triviality(T, sd, Schema::universal(), Budget(), st.range(0)));
  st.SetLabel(st.range(0) ? "parallel" : "serial");
}
BENCHMARK(BM_Triviality)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_CqConservative(benchmark::State& st) {
  RuleSet T1 = parse_rules(kT1), T2 = parse_rules(kT2);
  Schema sd = schema("A(a). B(a)."), sq = schema("R(a,b).");
  Budget b;
  b.db_size = 2;
  for (auto _ : st) benchmark::DoNotOptimize(check_cq_conservative(T1, T2, sd, sq, b, st.range(0)));
  st.SetLabel(st.range(0) ? "parallel" : "serial");
}
BENCHMARK(BM_CqConservative)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_RiverCrossCheck(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  size_t total = size_t{1} << (4 * n);
  for (auto _ : st) {
    size_t bad = first_index(total, [&](size_t code) {
      RiverSpec k;
      std::vector<int> v(2 * n);
      for (int i = 2 * n - 1; i >= 0; --i, code /= 4) v[i] = static_cast<int>(code % 4) + 1;
      k.p.assign(v.begin(), v.begin() + n);
      k.t.assign(v.begin() + n, v.end());
      return (river_myth_hom(k).value == Outcome::Holds) != observation1(k);
    });
    benchmark::DoNotOptimize(bad);
  }
  st.SetItemsProcessed(static_cast<int64_t>(st.iterations() * total));
  st.counters["threads"] = thread_count();
}
BENCHMARK(BM_RiverCrossCheck)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_ChaseConway(benchmark::State& st) {
  ConwaySpec s;
  s.gamma = 2;
  s.alpha = {3, 2};
  s.beta = {2, 2};
  s.reduction = true;
  RuleSet T1 = gen_T1(s);
  Budget b;
  b.max_depth = static_cast<int>(st.range(0));
  b.max_facts = 400000;
  for (auto _ : st) {
    auto r = chase(Database(), T1, b);
    st.counters["facts"] = static_cast<double>(r.size());
  }
}
BENCHMARK(BM_ChaseConway)->Arg(15)->Arg(30)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
