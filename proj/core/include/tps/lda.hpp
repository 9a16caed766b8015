#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

#include "tps/corpus.hpp"
#include "tps/knowledge.hpp"
#include "tps/mathkit.hpp"

namespace tps {

struct LdaConfig {
  int num_topics = 50;
  double alpha = 0.01;
  int local_max_iters = 100;
  double local_tol = 1e-5;
  int outer_max_iters = 10;
  double outer_tol = 1e-4;
  MaximizerOptions maximizer;
  int threads = 1;
};

struct TpsLdaState {
  Eigen::MatrixXd pi;  // K x L
  std::shared_ptr<const KnowledgeMatrix> eta;
  double sigma = 1.0;
  std::int64_t t = 0;
};

struct LocalPosterior {
  Eigen::VectorXd gamma;  // K, always equals alpha + phi' * counts for the returned phi
  Eigen::MatrixXd phi;    // distinct terms x K, rows on the simplex, doc term order
};

struct SuffStatsState {
  Eigen::MatrixXd xi;  // K x V
  std::int64_t t = 0;
};

struct StepReport {
  std::vector<double> lp_trace;  // summed converged LP per outer iteration
  int outer_iterations = 0;
  std::int64_t maximizer_iterations = 0;
  bool converged = false;
};

// Mean-field updates, log-space topics: phi_ik ~ softmax_k(digamma(gamma_k) + log_beta(k, w_i)).
LocalPosterior infer_document_logbeta(const Document& doc, const Eigen::MatrixXd& log_beta,
                                      const LdaConfig& cfg);
LocalPosterior infer_document(const Document& doc, const Eigen::MatrixXd& beta,
                              const LdaConfig& cfg);

// stats(k, v) = sum over batch docs of count * phi for word v; inference per doc under log_beta.
Eigen::MatrixXd batch_topic_word_stats(const Minibatch& batch, const Eigen::MatrixXd& log_beta,
                                       const LdaConfig& cfg);

double lp_objective(const Eigen::VectorXd& pi_k, const Eigen::VectorXd& pi_prev_k,
                    const Eigen::VectorXd& topic_word_stats, const KnowledgeMatrix& eta,
                    double sigma);
Eigen::VectorXd lp_gradient(const Eigen::VectorXd& pi_k, const Eigen::VectorXd& pi_prev_k,
                            const Eigen::VectorXd& topic_word_stats, const KnowledgeMatrix& eta,
                            double sigma);

// pi entries i.i.d. N(0, 0.1^2) so initial topics start near uniform.
TpsLdaState tps_lda_init(int num_topics, std::shared_ptr<const KnowledgeMatrix> eta, double sigma,
                         std::uint64_t seed);

TpsLdaState tps_lda_step(const TpsLdaState& state, const Minibatch& batch, const LdaConfig& cfg,
                         StepReport* report = nullptr);

SuffStatsState svb_lda_step(const SuffStatsState& state, const Minibatch& batch,
                            const LdaConfig& cfg);

SuffStatsState kps_lda_step(const SuffStatsState& state, const Minibatch& batch,
                            const Eigen::MatrixXd& eta_prior, double kappa, const LdaConfig& cfg);

// Row-stochastic topic-word matrix: softmax(pi * eta) rows, or normalized xi rows.
Eigen::MatrixXd topics(const TpsLdaState& state);
Eigen::MatrixXd topics(const SuffStatsState& state);
Eigen::MatrixXd log_topics(const TpsLdaState& state);
Eigen::MatrixXd log_topics(const SuffStatsState& state);
Eigen::MatrixXd tps_log_topics(const Eigen::MatrixXd& pi, const KnowledgeMatrix& eta);

// digamma(xi) - digamma(row sum): the variational geometric-mean topics SVB infers with.
Eigen::MatrixXd svb_elog_topics(const SuffStatsState& state);

}  // namespace tps
