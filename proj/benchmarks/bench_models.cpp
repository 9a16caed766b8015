#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <memory>

#include "tps/corpus.hpp"
#include "tps/knowledge.hpp"
#include "tps/lda.hpp"
#include "tps/synthetic.hpp"

namespace {

using namespace tps;

SyntheticData make_stream(int docs_per_batch, int n_batches) {
  SyntheticSpec spec;
  spec.num_topics = 20;
  spec.vocab_size = 2000;
  spec.knowledge_dim = 50;
  spec.docs_per_batch = docs_per_batch;
  spec.tokens_per_doc = 40;
  spec.n_batches = n_batches;
  spec.seed = 7;
  return synth_generate(spec);
}

LdaConfig bench_config() {
  LdaConfig cfg;
  cfg.num_topics = 20;
  cfg.alpha = 0.1;
  cfg.local_max_iters = 30;
  cfg.local_tol = 1e-4;
  cfg.outer_max_iters = 2;
  cfg.outer_tol = 1e-3;
  return cfg;
}

void bm_infer_document(benchmark::State& state) {
  const SyntheticData data = make_stream(64, 1);
  const LdaConfig cfg = bench_config();
  const Eigen::MatrixXd beta = data.beta_trace.front();
  std::size_t d = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(infer_document(data.corpus.docs[d], beta, cfg));
    d = (d + 1) % data.corpus.docs.size();
  }
}
BENCHMARK(bm_infer_document);

void bm_tps_lda_step(benchmark::State& state) {
  const int batch_size = static_cast<int>(state.range(0));
  const SyntheticData data = make_stream(batch_size, 1);
  const LdaConfig cfg = bench_config();
  auto eta = std::make_shared<const KnowledgeMatrix>(
      KnowledgeMatrix{data.eta_true, KnowledgeKind::Custom});
  const TpsLdaState init = tps_lda_init(20, eta, 1.0, 11);
  Minibatch batch;
  batch.index = 0;
  for (const Document& doc : data.corpus.docs) batch.docs.push_back(&doc);
  for (auto _ : state) benchmark::DoNotOptimize(tps_lda_step(init, batch, cfg));
  state.SetItemsProcessed(state.iterations() * batch_size);
}
BENCHMARK(bm_tps_lda_step)->Arg(16)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void bm_svb_lda_step(benchmark::State& state) {
  const int batch_size = static_cast<int>(state.range(0));
  const SyntheticData data = make_stream(batch_size, 1);
  const LdaConfig cfg = bench_config();
  const SuffStatsState init{Eigen::MatrixXd::Ones(20, 2000), 0};
  Minibatch batch;
  batch.index = 0;
  for (const Document& doc : data.corpus.docs) batch.docs.push_back(&doc);
  for (auto _ : state) benchmark::DoNotOptimize(svb_lda_step(init, batch, cfg));
  state.SetItemsProcessed(state.iterations() * batch_size);
}
BENCHMARK(bm_svb_lda_step)->Arg(16)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
