#include <benchmark/benchmark.h>

#include "actalign/actalign.hpp"

using namespace actalign;

namespace {

const ActionTokenizer& tokenizer() {
  static const ActionTokenizer tok = ActionTokenizer::train(gen_synthetic(500, 8, 7, 1, SyntheticProfile::smooth),
                                                            TokenizerConfig{});
  return tok;
}

std::vector<ActionVector> random_series(std::uint64_t seed, std::size_t n, std::size_t d) {
  Rng rng(seed);
  std::vector<ActionVector> s(n, ActionVector(d));
  for (auto& v : s) {
    for (auto& x : v) x = rng.uniform(-1, 1);
  }
  return s;
}

}  // namespace

static void BM_Dct2(benchmark::State& state) {
  const auto chunk = extract_chunks(gen_synthetic(1, 8, 7, 2, SyntheticProfile::mixed), 8).front();
  for (auto _ : state) benchmark::DoNotOptimize(dct2(chunk));
}
BENCHMARK(BM_Dct2);

static void BM_Tokenize(benchmark::State& state) {
  const auto& tok = tokenizer();
  const auto chunks = extract_chunks(gen_synthetic(64, 8, 7, 3, SyntheticProfile::smooth), 8);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(tok.tokenize(chunks[i++ % chunks.size()]));
}
BENCHMARK(BM_Tokenize);

static void BM_BpeTrain(benchmark::State& state) {
  std::vector<SymbolSequence> corpus;
  const auto& tok = tokenizer();
  for (const auto& c : extract_chunks(gen_synthetic(state.range(0), 8, 7, 4, SyntheticProfile::smooth), 8)) {
    corpus.push_back(tok.symbols(c));
  }
  for (auto _ : state) benchmark::DoNotOptimize(bpe_train(corpus, 256, 1024));
}
BENCHMARK(BM_BpeTrain)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_ScoreResponse(benchmark::State& state) {
  const std::vector<TokenId> ids{486, 265, 268, 116, 269};
  const auto text = render_templated_response(ids);
  const ActionTokenSeq target{ids};
  for (auto _ : state) benchmark::DoNotOptimize(score(text, target));
}
BENCHMARK(BM_ScoreResponse);

static void BM_Dtw(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_series(5, n, 7);
  const auto b = random_series(6, n, 7);
  for (auto _ : state) benchmark::DoNotOptimize(dtw(a, b));
}
BENCHMARK(BM_Dtw)->Arg(64)->Arg(256);

static void BM_KnnAccuracy(benchmark::State& state) {
  Rng rng(7);
  std::vector<LabeledFeature> features;
  for (std::size_t k = 0; k < 20; ++k) {
    for (std::size_t t = 0; t < 64; ++t) {
      LabeledFeature f;
      f.vector.resize(32);
      for (auto& x : f.vector) x = rng.normal();
      f.label = static_cast<std::uint32_t>(t / 2);
      f.trajectory = "t" + std::to_string(k);
      f.timestep = t;
      features.push_back(std::move(f));
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(knn_accuracy(features, 32));
}
BENCHMARK(BM_KnnAccuracy)->Unit(benchmark::kMillisecond);

static void BM_GrpoSteps(benchmark::State& state) {
  const auto task = make_synthetic_task(8, 16, 6, 0);
  GrpoConfig cfg;
  cfg.steps = 10;
  for (auto _ : state) benchmark::DoNotOptimize(train(task, cfg));
}
BENCHMARK(BM_GrpoSteps)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
