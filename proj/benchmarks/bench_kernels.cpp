#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "tps/knowledge.hpp"
#include "tps/lda.hpp"
#include "tps/mathkit.hpp"
#include "tps/rng.hpp"

namespace {

using namespace tps;

Eigen::VectorXd random_vec(std::uint64_t seed, Eigen::Index n) {
  Rng rng(seed);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

void bm_softmax(benchmark::State& state) {
  const Eigen::VectorXd x = random_vec(1, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(softmax(x));
}
BENCHMARK(bm_softmax)->Arg(16)->Arg(256)->Arg(4096);

void bm_log_sum_exp(benchmark::State& state) {
  const Eigen::VectorXd x = random_vec(2, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(log_sum_exp(x));
}
BENCHMARK(bm_log_sum_exp)->Arg(16)->Arg(256)->Arg(4096);

void bm_digamma(benchmark::State& state) {
  const double x = 0.01 + 0.001 * state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(digamma(x));
}
BENCHMARK(bm_digamma)->Arg(1)->Arg(1000)->Arg(100000);

// Full concave maximization of the per-row minibatch objective.
void bm_maximize_row(benchmark::State& state) {
  const Eigen::Index L = 16;
  const Eigen::Index V = state.range(0);
  Rng rng(3);
  KnowledgeMatrix eta;
  eta.values.resize(L, V);
  for (Eigen::Index r = 0; r < L; ++r)
    for (Eigen::Index c = 0; c < V; ++c) eta.values(r, c) = rng.normal();
  const Eigen::VectorXd pi_prev = random_vec(4, L);
  Eigen::VectorXd stats(V);
  for (Eigen::Index v = 0; v < V; ++v) stats(v) = 10.0 * rng.uniform();
  auto f = [&](const Eigen::VectorXd& x) { return lp_objective(x, pi_prev, stats, eta, 1.0); };
  auto g = [&](const Eigen::VectorXd& x) { return lp_gradient(x, pi_prev, stats, eta, 1.0); };
  MaximizerOptions opts;
  opts.grad_tol = 1e-6;
  for (auto _ : state) benchmark::DoNotOptimize(maximize_concave(f, g, pi_prev, opts));
}
BENCHMARK(bm_maximize_row)->Arg(256)->Arg(2048)->Arg(8192);

}  // namespace

BENCHMARK_MAIN();
