#include <benchmark/benchmark.h>

#include <random>

#include "glemb/embed_net.hpp"
#include "glemb/laplacian_loss.hpp"
#include "glemb/trainer.hpp"

namespace {

using namespace glemb;

Matrix random_features(std::size_t d, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  Matrix h(d, n);
  for (double& x : h.data()) x = coord(rng);
  return h;
}

Labels cyclic_labels(std::size_t n, int classes) {
  Labels labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i) % classes;
  return labels;
}

void BM_PairwiseSqDist(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix h = random_features(32, n, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pairwise_sq_dist(h));
  }
}
BENCHMARK(BM_PairwiseSqDist)->Arg(64)->Arg(128)->Arg(256);

void BM_TripletWeights(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix h = random_features(32, n, 2);
  const Labels labels = cyclic_labels(n, 8);
  const auto d2 = pairwise_sq_dist(h);
  for (auto _ : state) {
    benchmark::DoNotOptimize(triplet_weights(d2, labels, 1.0));
  }
}
BENCHMARK(BM_TripletWeights)->Arg(64)->Arg(128)->Arg(256);

void BM_AssembleAndLaplacian(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix h = random_features(32, n, 3);
  const Labels labels = cyclic_labels(n, 8);
  const LossConfig cfg;
  const auto d2 = pairwise_sq_dist(h);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        build_laplacian(assemble_weights(d2, labels, cfg, TrainMode::joint)));
  }
}
BENCHMARK(BM_AssembleAndLaplacian)->Arg(64)->Arg(128)->Arg(256);

void BM_LaplacianLossAndGrad(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix h = random_features(32, n, 4);
  const Labels labels = cyclic_labels(n, 8);
  const auto lap = build_laplacian(
      assemble_weights(pairwise_sq_dist(h), labels, LossConfig{}, TrainMode::joint));
  for (auto _ : state) {
    benchmark::DoNotOptimize(laplacian_loss(h, lap));
    benchmark::DoNotOptimize(laplacian_grad(h, lap));
  }
}
BENCHMARK(BM_LaplacianLossAndGrad)->Arg(64)->Arg(128)->Arg(256);

void BM_JointBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto params = init_params({16, 32, 16}, 8, 5);
  Batch batch{random_features(16, n, 6), cyclic_labels(n, 8)};
  const LossConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        joint_backward(params, batch, cfg, TrainMode::joint, true));
  }
}
BENCHMARK(BM_JointBackward)->Arg(32)->Arg(64)->Arg(128);

void BM_TrainIterationStream(benchmark::State& state) {
  SynthConfig synth;
  synth.num_identities = 16;
  synth.samples_per_view = 2;
  synth.dim = 16;
  synth.seed = 7;
  const auto data = gen_synth(synth);
  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 32;
  tc.seed = 7;
  for (auto _ : state) {
    benchmark::DoNotOptimize(train(data, tc));
  }
}
BENCHMARK(BM_TrainIterationStream);

}  // namespace

BENCHMARK_MAIN();
