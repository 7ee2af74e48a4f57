#include <benchmark/benchmark.h>

#include "lama/mock_backend.hpp"
#include "lama/prediction.hpp"

namespace {

const lama::Taxonomy& taxonomy() {
  static const auto t = lama::Taxonomy::load(std::string(LAMA_BENCH_DATA_DIR) + "/taxonomy_99.tsv");
  return t;
}

lama::MockKnowledgeBase knowledge_base() {
  lama::MockKnowledgeBase kb;
  kb.person_domain["tanaka"] = {{"Kakuei Tanaka", "Japanese"}, {"Tanaka Giichi", "Japanese"}};
  kb.media_domain["tanaka"] = {{"Masahiro Tanaka", "Japanese"}, {"Tanaka Min", "Korean"}};
  kb.completion_answers["tanaka"] = {"Korean", "Chinese", "Taiwanese", "American"};
  kb.direct_answers["xqz vortly"] = {"Hungarian", "Czech", "Slovak", "Polish", "Austrian"};
  return kb;
}

// Per-name pipeline overhead with a zero-latency backend.
void BM_PredictRecallPath(benchmark::State& state) {
  lama::MockChatBackend mock(knowledge_base());
  const lama::Predictor predictor(mock, taxonomy().nationalities(), lama::PipelineConfig{});
  for (auto _ : state) benchmark::DoNotOptimize(predictor.predict("Hiro Tanaka"));
}
BENCHMARK(BM_PredictRecallPath)->UseRealTime();

void BM_PredictFallbackPath(benchmark::State& state) {
  lama::MockChatBackend mock(knowledge_base());
  const lama::Predictor predictor(mock, taxonomy().nationalities(), lama::PipelineConfig{});
  for (auto _ : state) benchmark::DoNotOptimize(predictor.predict("Xqz Vortly"));
}
BENCHMARK(BM_PredictFallbackPath)->UseRealTime();

void BM_PredictBatch(benchmark::State& state) {
  lama::MockChatBackend mock(knowledge_base());
  const lama::Predictor predictor(mock, taxonomy().nationalities(), lama::PipelineConfig{});
  std::vector<std::string> names;
  for (int i = 0; i < 256; ++i) names.push_back(i % 5 ? "Hiro Tanaka" : "Xqz Vortly");
  for (auto _ : state) {
    benchmark::DoNotOptimize(lama::predict_batch(predictor, names, static_cast<std::size_t>(state.range(0))));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(names.size()));
}
BENCHMARK(BM_PredictBatch)->Arg(1)->Arg(8)->UseRealTime();

}  // namespace
