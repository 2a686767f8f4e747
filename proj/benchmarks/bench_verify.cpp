#include <benchmark/benchmark.h>

#include "bagcheck/normalizer.hpp"
#include "bagcheck/oracle.hpp"
#include "bagcheck/verifier.hpp"
#include "testkit.hpp"

namespace {

using namespace bagcheck;

void BM_DecideGroupedSum(benchmark::State& state) {
  Catalog catalog = testkit::corpus_catalog();
  QueryPtr q1 = testkit::corpus_query("motivating/grouped_sum_1.sql", catalog);
  QueryPtr q2 = testkit::corpus_query("motivating/grouped_sum_2.sql", catalog);
  SmtSession session;
  VerifyOptions options;
  for (auto _ : state) {
    Verdict v = decide_equivalence(q1, q2, catalog, session, options);
    benchmark::DoNotOptimize(v.equivalent);
  }
}
BENCHMARK(BM_DecideGroupedSum)->Unit(benchmark::kMillisecond);

void BM_DecideCorpus(benchmark::State& state) {
  Catalog catalog = testkit::corpus_catalog();
  auto pairs = testkit::load_corpus(catalog);
  SmtSession session;
  VerifyOptions options;
  std::size_t proved = 0;
  for (auto _ : state) {
    proved = 0;
    for (const auto& p : pairs) proved += decide_equivalence(p.q1, p.q2, catalog, session, options).equivalent;
  }
  state.counters["pairs"] = static_cast<double>(pairs.size());
  state.counters["proved"] = static_cast<double>(proved);
}
BENCHMARK(BM_DecideCorpus)->Unit(benchmark::kMillisecond)->Iterations(1);

void BM_NormalizeRandomTrees(benchmark::State& state) {
  Catalog fuzz = testkit::fuzz_catalog();
  testkit::Generator gen(fuzz, 1);
  std::vector<QueryPtr> trees;
  for (int i = 0; i < 50; ++i) trees.push_back(gen.tree(static_cast<int>(state.range(0))));
  for (auto _ : state) {
    for (const auto& t : trees) benchmark::DoNotOptimize(normalize(t, fuzz));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(trees.size()));
}
BENCHMARK(BM_NormalizeRandomTrees)->Arg(2)->Arg(4);

void BM_OracleEval(benchmark::State& state) {
  Catalog catalog = testkit::corpus_catalog();
  QueryPtr q = testkit::corpus_query("motivating/grouped_sum_1.sql", catalog);
  Database db = random_database(catalog, 7, static_cast<std::size_t>(state.range(0)), 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(eval_query(q, db));
}
BENCHMARK(BM_OracleEval)->Arg(5)->Arg(50);

}  // namespace

BENCHMARK_MAIN();
