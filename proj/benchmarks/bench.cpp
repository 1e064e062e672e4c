#include <benchmark/benchmark.h>

#include "bleubound/bleu.hpp"
#include "bleubound/expected.hpp"
#include "bleubound/grad.hpp"
#include "bleubound/lower_bound.hpp"
#include "bleubound/optimizer.hpp"
#include "bleubound/rng.hpp"
#include "bleubound/text.hpp"

using namespace bleubound;

namespace {

Matrix normal_logits(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (double& z : m.flat()) z = rng.normal();
  return m;
}

TokenSeq distinct_ref(std::size_t len) {
  TokenSeq ref;
  for (std::size_t i = 0; i < len; ++i) ref.ids.push_back(static_cast<TokenId>(7 * i + 3));
  return ref;
}

void BM_Softmax(benchmark::State& state) {
  const Matrix logits = normal_logits(10, static_cast<std::size_t>(state.range(0)), 1);
  Matrix probs;
  for (auto _ : state) {
    softmax_rows_into(logits, probs);
    benchmark::DoNotOptimize(probs.flat().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(logits.size()));
}
BENCHMARK(BM_Softmax)->Arg(1000)->Arg(10000);

void BM_LbBleu(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DistMatrix p = softmax_rows(normal_logits(20, 1000, 2));
  const TokenSeq ref = distinct_ref(20);
  const BleuConfig cfg = BleuConfig::uniform(n);
  for (auto _ : state) benchmark::DoNotOptimize(lb_bleu(p, ref, cfg).aggregate);
}
BENCHMARK(BM_LbBleu)->Arg(1)->Arg(4);

void BM_LbGradient(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix logits = normal_logits(10, 10000, 3);
  LbObjective objective(distinct_ref(10), BleuConfig::uniform(n), true);
  Matrix grad;
  for (auto _ : state) benchmark::DoNotOptimize(objective.value_and_grad(logits, grad));
}
BENCHMARK(BM_LbGradient)->Arg(1)->Arg(4);

void BM_AdamStep(benchmark::State& state) {
  const std::size_t size = 100000;
  std::vector<double> params(size, 0.0), grad(size, 1e-3);
  Adam adam(size, 1e-4);
  for (auto _ : state) {
    adam.step(params, grad);
    benchmark::DoNotOptimize(params.data());
  }
}
BENCHMARK(BM_AdamStep);

void BM_SentenceBleu(benchmark::State& state) {
  Rng rng(4);
  TokenSeq cand, ref;
  for (int i = 0; i < 30; ++i) {
    cand.ids.push_back(static_cast<TokenId>(rng.below(50)));
    ref.ids.push_back(static_cast<TokenId>(rng.below(50)));
  }
  const BleuConfig cfg = BleuConfig::uniform(4);
  for (auto _ : state) benchmark::DoNotOptimize(bleu(cand, ref, cfg).score);
}
BENCHMARK(BM_SentenceBleu);

void BM_MonteCarlo(benchmark::State& state) {
  const DistMatrix p = softmax_rows(normal_logits(10, 10000, 5));
  const TokenSeq ref = distinct_ref(10);
  const BleuConfig cfg = BleuConfig::uniform(1);
  for (auto _ : state) benchmark::DoNotOptimize(mc_expected_bleu(p, ref, cfg, 1000, 9).mean);
}
BENCHMARK(BM_MonteCarlo)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
