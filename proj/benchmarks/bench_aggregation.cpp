#include <benchmark/benchmark.h>

#include <random>

#include "lama/aggregation.hpp"
#include "lama/prediction.hpp"

namespace {

const lama::Taxonomy& taxonomy() {
  static const auto t = lama::Taxonomy::load(std::string(LAMA_BENCH_DATA_DIR) + "/taxonomy_99.tsv");
  return t;
}

lama::RecallSet random_recall(std::size_t size, std::size_t distinct, std::uint64_t seed) {
  const auto& labels = taxonomy().nationalities().labels();
  std::mt19937_64 rng(seed);
  lama::RecallSet set;
  for (std::size_t i = 0; i < size; ++i) {
    set.entries.push_back({"Person " + std::to_string(i), labels[rng() % distinct], lama::AgentKind::person, i});
  }
  return set;
}

void BM_TallyAndSelect(benchmark::State& state) {
  const auto recall = random_recall(static_cast<std::size_t>(state.range(0)), 6, 1);
  for (auto _ : state) {
    const auto tally = lama::tally_votes(recall);
    benchmark::DoNotOptimize(lama::select_top1(tally));
    benchmark::DoNotOptimize(lama::positive_labels(tally));
  }
}
BENCHMARK(BM_TallyAndSelect)->Arg(2)->Arg(8)->Arg(64);

void BM_AssembleRanking(benchmark::State& state) {
  const auto& nats = taxonomy().nationalities();
  const auto& all = nats.labels();
  const std::vector<lama::Label> residual{all[3], all[7]};
  const std::vector<lama::Label> completion{all[7], all[11], all[2], all[40]};
  for (auto _ : state) {
    benchmark::DoNotOptimize(lama::assemble_ranking(all[0], residual, completion, 5, nats));
  }
}
BENCHMARK(BM_AssembleRanking);

}  // namespace
