#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tps/corpus.hpp"

namespace tps {

struct MetricRecord {
  std::int64_t t = 0;
  std::optional<double> lpp;
  std::optional<double> npmi;
  std::optional<double> accuracy;
  std::int64_t elapsed_ms = 0;
};

// Mean held-out-token log likelihood: each document is split by split_heldout with
// seed mix_seed(seed, doc position), gamma is inferred from the observed part, and
// each held-out token w scores log sum_k (gamma_k / sum gamma) * beta(k, w).
// Documents shorter than two tokens are skipped; throws when none are evaluable.
double log_predictive_probability(const Eigen::MatrixXd& beta, double alpha,
                                  const std::vector<const Document*>& eval_docs,
                                  double heldout_fraction, std::uint64_t seed,
                                  int local_max_iters = 100, double local_tol = 1e-5);
double log_predictive_probability(const Eigen::MatrixXd& beta, double alpha,
                                  const Corpus& eval_docs, double heldout_fraction,
                                  std::uint64_t seed, int local_max_iters = 100,
                                  double local_tol = 1e-5);

// Document-level co-occurrence counts over a growing reference corpus.
class CooccurrenceIndex {
 public:
  CooccurrenceIndex() = default;
  explicit CooccurrenceIndex(const Corpus& corpus);

  void add_document(const Document& doc);
  void add_corpus(const Corpus& corpus);

  std::int64_t num_docs() const { return num_docs_; }
  std::int64_t doc_frequency(std::int32_t w) const;
  std::int64_t joint_frequency(std::int32_t a, std::int32_t b) const;

 private:
  // Sorted doc ids per word; joint counts by ordered-list intersection.
  std::vector<std::vector<std::int64_t>> postings_;
  std::int64_t num_docs_ = 0;
};

// Mean over topics of the mean pairwise NPMI of each topic's top_t words.
// A pair that never co-occurs scores ln(eps/(p_i p_j)) / -ln(eps) with eps=1e-12;
// a pair with an absent word scores -1; a pair present in every document scores 0.
double npmi(const Eigen::MatrixXd& beta, int top_t, const CooccurrenceIndex& reference);
double npmi(const Eigen::MatrixXd& beta, int top_t, const Corpus& reference);

double accuracy(const std::vector<int>& predictions, const std::vector<std::int32_t>& truth);

std::vector<std::vector<int>> top_word_ids(const Eigen::MatrixXd& beta, int top_t);
std::vector<std::vector<std::string>> top_words(const Eigen::MatrixXd& beta,
                                                const Vocabulary& vocab, int top_t);

struct ForgettingTrace {
  std::vector<double> divergence;  // ||xi_t - xi_0||_1, index = t
  std::vector<double> ratio;       // ||xi_0||_1 / ||xi_t||_1
  double fitted_slope = 0.0;       // log-log least squares of ratio over t >= 10
  bool slope_valid = false;
};

ForgettingTrace forgetting_trace(const std::vector<Eigen::MatrixXd>& xi_states);

// Pairwise sign trend statistic in [-1, 1]: sum of sign(x_j - x_i) over i < j,
// divided by the pair count.
double mann_kendall_statistic(const std::vector<double>& values);

}  // namespace tps
