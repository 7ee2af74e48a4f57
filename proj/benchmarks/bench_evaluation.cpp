#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>

#include "lama/evaluation.hpp"

namespace {

const lama::Taxonomy& taxonomy() {
  static const auto t = lama::Taxonomy::load(std::string(LAMA_BENCH_DATA_DIR) + "/taxonomy_99.tsv");
  return t;
}

// A test-split-sized prediction set, right about 80% of the time.
std::vector<lama::ScoredPrediction> predictions(std::size_t n) {
  const auto& labels = taxonomy().nationalities().labels();
  std::mt19937_64 rng(7);
  std::vector<lama::ScoredPrediction> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& gold = labels[rng() % labels.size()];
    std::vector<lama::Label> ranks;
    if (rng() % 5 != 0) ranks.push_back(gold);
    while (ranks.size() < 5) {
      const auto& l = labels[rng() % labels.size()];
      if (std::find(ranks.begin(), ranks.end(), l) == ranks.end()) ranks.push_back(l);
    }
    out.push_back({gold, std::move(ranks)});
  }
  return out;
}

void BM_MacroF1(benchmark::State& state) {
  const auto preds = predictions(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(lama::macro_f1(preds, taxonomy().nationalities()));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MacroF1)->Arg(7534);

void BM_FullEvaluation(benchmark::State& state) {
  const auto preds = predictions(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(lama::evaluate(preds, lama::Granularity::nationality, taxonomy()));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FullEvaluation)->Arg(7534);

}  // namespace
