#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "tps/corpus.hpp"

namespace tps {

struct SyntheticSpec {
  int num_topics = 5;  // topic count, or class count when labeled
  int vocab_size = 100;
  int knowledge_dim = 8;
  double alpha = 0.1;
  int docs_per_batch = 50;
  int tokens_per_doc = 20;
  int n_batches = 200;
  enum class Drift { None, RandomWalk } drift = Drift::None;
  double drift_sigma = 0.0;
  std::uint64_t seed = 0;
  bool labeled = false;  // draw every doc from a single class row instead of a mixture
  int eval_docs = 0;     // extra documents from the first-batch model
};

struct SyntheticData {
  Corpus corpus;  // stream order: batch 0 docs, batch 1 docs, ...
  std::vector<std::int32_t> labels;
  Corpus eval_corpus;
  Vocabulary vocabulary;
  Eigen::MatrixXd eta_true;                 // L x V, i.i.d. standard normal
  Eigen::MatrixXd pi0_true;                 // K x L
  std::vector<Eigen::MatrixXd> beta_trace;  // K x V per batch (softmax(pi_t eta))
};

// Draws eta* and pi*0, walks pi* per batch under the drift, and emits documents
// from the generative process: theta ~ Dir(alpha), token topics from theta, words
// from beta rows (labeled mode fixes one row per document).
SyntheticData synth_generate(const SyntheticSpec& spec);

// docword.txt, vocab.txt, eta.bin, pi0.bin, plus labels.txt and docword_eval.txt
// when present. Returns the list of file names written.
std::vector<std::string> write_synthetic(const SyntheticData& data, const std::string& dir);

}  // namespace tps
