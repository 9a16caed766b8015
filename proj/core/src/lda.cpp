#include "tps/lda.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "tps/rng.hpp"

namespace tps {

namespace {

void check_config(const LdaConfig& cfg) {
  if (cfg.num_topics < 1) throw std::invalid_argument("LdaConfig: num_topics must be >= 1");
  if (!(cfg.alpha > 0.0)) throw std::invalid_argument("LdaConfig: alpha must be positive");
  if (cfg.local_max_iters < 1 || cfg.outer_max_iters < 1)
    throw std::invalid_argument("LdaConfig: iteration limits must be positive");
  if (!(cfg.local_tol > 0.0) || !(cfg.outer_tol > 0.0))
    throw std::invalid_argument("LdaConfig: tolerances must be positive");
  if (cfg.threads < 1) throw std::invalid_argument("LdaConfig: threads must be >= 1");
}

Eigen::MatrixXd accumulate_stats(const Minibatch& batch, const Eigen::MatrixXd& log_beta,
                                 const LdaConfig& cfg, std::size_t begin, std::size_t end) {
  Eigen::MatrixXd stats = Eigen::MatrixXd::Zero(log_beta.rows(), log_beta.cols());
  for (std::size_t d = begin; d < end; ++d) {
    const Document& doc = *batch.docs[d];
    LocalPosterior post = infer_document_logbeta(doc, log_beta, cfg);
    for (std::size_t i = 0; i < doc.term_ids.size(); ++i) {
      stats.col(doc.term_ids[i]) += doc.counts[i] * post.phi.row(i).transpose();
    }
  }
  return stats;
}

}  // namespace

LocalPosterior infer_document_logbeta(const Document& doc, const Eigen::MatrixXd& log_beta,
                                      const LdaConfig& cfg) {
  check_config(cfg);
  if (doc.term_ids.empty()) throw std::invalid_argument("infer_document: empty document");
  const Eigen::Index K = log_beta.rows();
  const auto n_terms = static_cast<Eigen::Index>(doc.term_ids.size());
  const double total = static_cast<double>(doc.length());

  LocalPosterior post;
  post.gamma = Eigen::VectorXd::Constant(K, cfg.alpha + total / static_cast<double>(K));
  post.phi.resize(n_terms, K);

  Eigen::VectorXd elog_theta(K);
  Eigen::VectorXd gamma_new(K);
  for (int iter = 0; iter < cfg.local_max_iters; ++iter) {
    for (Eigen::Index k = 0; k < K; ++k) elog_theta(k) = digamma(post.gamma(k));
    gamma_new.setConstant(cfg.alpha);
    for (Eigen::Index i = 0; i < n_terms; ++i) {
      Eigen::VectorXd row = softmax(elog_theta + log_beta.col(doc.term_ids[i]));
      post.phi.row(i) = row.transpose();
      gamma_new += doc.counts[i] * row;
    }
    const double delta =
        (gamma_new - post.gamma).cwiseAbs().sum() / static_cast<double>(K);
    post.gamma = gamma_new;
    if (delta < cfg.local_tol) break;
  }
  return post;
}

LocalPosterior infer_document(const Document& doc, const Eigen::MatrixXd& beta,
                              const LdaConfig& cfg) {
  return infer_document_logbeta(doc, beta.array().log().matrix(), cfg);
}

Eigen::MatrixXd batch_topic_word_stats(const Minibatch& batch, const Eigen::MatrixXd& log_beta,
                                       const LdaConfig& cfg) {
  check_config(cfg);
  const std::size_t n = batch.docs.size();
  const auto n_threads = static_cast<std::size_t>(std::min<std::size_t>(
      static_cast<std::size_t>(cfg.threads), std::max<std::size_t>(n, 1)));
  if (n_threads <= 1) return accumulate_stats(batch, log_beta, cfg, 0, n);

  // Fixed contiguous chunks summed in chunk order keep the reduction deterministic.
  std::vector<Eigen::MatrixXd> partial(n_threads);
  std::vector<std::thread> workers;
  workers.reserve(n_threads);
  const std::size_t chunk = (n + n_threads - 1) / n_threads;
  for (std::size_t w = 0; w < n_threads; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    workers.emplace_back([&, w, begin, end] {
      partial[w] = accumulate_stats(batch, log_beta, cfg, begin, std::max(begin, end));
    });
  }
  for (auto& worker : workers) worker.join();
  Eigen::MatrixXd stats = std::move(partial[0]);
  for (std::size_t w = 1; w < n_threads; ++w) stats += partial[w];
  return stats;
}

double lp_objective(const Eigen::VectorXd& pi_k, const Eigen::VectorXd& pi_prev_k,
                    const Eigen::VectorXd& topic_word_stats, const KnowledgeMatrix& eta,
                    double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("lp_objective: sigma must be positive");
  const Eigen::VectorXd logits = eta.values.transpose() * pi_k;
  const double mass = topic_word_stats.sum();
  return -(pi_k - pi_prev_k).squaredNorm() / (2.0 * sigma) + topic_word_stats.dot(logits) -
         mass * log_sum_exp(logits);
}

Eigen::VectorXd lp_gradient(const Eigen::VectorXd& pi_k, const Eigen::VectorXd& pi_prev_k,
                            const Eigen::VectorXd& topic_word_stats, const KnowledgeMatrix& eta,
                            double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("lp_gradient: sigma must be positive");
  const Eigen::VectorXd logits = eta.values.transpose() * pi_k;
  const double mass = topic_word_stats.sum();
  return -(pi_k - pi_prev_k) / sigma + eta.values * topic_word_stats -
         mass * (eta.values * softmax(logits));
}

TpsLdaState tps_lda_init(int num_topics, std::shared_ptr<const KnowledgeMatrix> eta, double sigma,
                         std::uint64_t seed) {
  if (num_topics < 1) throw std::invalid_argument("tps_lda_init: num_topics must be >= 1");
  if (!eta) throw std::invalid_argument("tps_lda_init: null knowledge matrix");
  if (!(sigma > 0.0)) throw std::invalid_argument("tps_lda_init: sigma must be positive");
  TpsLdaState state;
  state.eta = std::move(eta);
  state.sigma = sigma;
  state.t = 0;
  Rng rng(seed);
  state.pi.resize(num_topics, state.eta->dim());
  for (Eigen::Index k = 0; k < state.pi.rows(); ++k) {
    for (Eigen::Index l = 0; l < state.pi.cols(); ++l) state.pi(k, l) = rng.normal(0.0, 0.1);
  }
  return state;
}

Eigen::MatrixXd tps_log_topics(const Eigen::MatrixXd& pi, const KnowledgeMatrix& eta) {
  Eigen::MatrixXd logits = pi * eta.values;
  for (Eigen::Index k = 0; k < logits.rows(); ++k) {
    logits.row(k).array() -= log_sum_exp(logits.row(k).transpose());
  }
  return logits;
}

TpsLdaState tps_lda_step(const TpsLdaState& state, const Minibatch& batch, const LdaConfig& cfg,
                         StepReport* report) {
  check_config(cfg);
  if (batch.docs.empty()) throw std::invalid_argument("tps_lda_step: empty minibatch");
  if (!state.eta) throw std::invalid_argument("tps_lda_step: null knowledge matrix");

  const Eigen::Index K = state.pi.rows();
  StepReport local_report;
  TpsLdaState next = state;

  double lp_prev = 0.0;
  for (int outer = 0; outer < cfg.outer_max_iters; ++outer) {
    const Eigen::MatrixXd log_beta = tps_log_topics(next.pi, *state.eta);
    const Eigen::MatrixXd stats = batch_topic_word_stats(batch, log_beta, cfg);

    double lp_total = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) {
      const Eigen::VectorXd prev_row = state.pi.row(k).transpose();
      const Eigen::VectorXd stats_row = stats.row(k).transpose();
      auto f = [&](const Eigen::VectorXd& x) {
        return lp_objective(x, prev_row, stats_row, *state.eta, state.sigma);
      };
      auto g = [&](const Eigen::VectorXd& x) {
        return lp_gradient(x, prev_row, stats_row, *state.eta, state.sigma);
      };
      MaximizerResult res;
      try {
        res = maximize_concave(f, g, next.pi.row(k).transpose(), cfg.maximizer);
      } catch (const std::runtime_error& err) {
        std::ostringstream msg;
        msg << "minibatch " << batch.index << ", topic " << k << ": " << err.what();
        throw std::runtime_error(msg.str());
      }
      next.pi.row(k) = res.x.transpose();
      lp_total += res.value;
      local_report.maximizer_iterations += res.iterations;
    }

    local_report.lp_trace.push_back(lp_total);
    local_report.outer_iterations = outer + 1;
    if (outer > 0 &&
        std::abs(lp_total - lp_prev) < cfg.outer_tol * std::max(1.0, std::abs(lp_prev))) {
      local_report.converged = true;
      break;
    }
    lp_prev = lp_total;
  }

  next.t = state.t + 1;
  if (report) *report = std::move(local_report);
  return next;
}

SuffStatsState svb_lda_step(const SuffStatsState& state, const Minibatch& batch,
                            const LdaConfig& cfg) {
  check_config(cfg);
  if (batch.docs.empty()) return {state.xi, state.t + 1};
  SuffStatsState next;
  next.xi = state.xi + batch_topic_word_stats(batch, svb_elog_topics(state), cfg);
  next.t = state.t + 1;
  return next;
}

SuffStatsState kps_lda_step(const SuffStatsState& state, const Minibatch& batch,
                            const Eigen::MatrixXd& eta_prior, double kappa, const LdaConfig& cfg) {
  if (kappa < 0.0) throw std::invalid_argument("kps_lda_step: kappa must be nonnegative");
  if (eta_prior.rows() != state.xi.rows() || eta_prior.cols() != state.xi.cols())
    throw std::invalid_argument("kps_lda_step: prior shape mismatch");
  SuffStatsState next = svb_lda_step(state, batch, cfg);
  next.xi += std::pow(1.0 + static_cast<double>(next.t), -kappa) * eta_prior;
  return next;
}

Eigen::MatrixXd topics(const TpsLdaState& state) {
  Eigen::MatrixXd beta = state.pi * state.eta->values;
  for (Eigen::Index k = 0; k < beta.rows(); ++k) {
    beta.row(k) = softmax(beta.row(k).transpose()).transpose();
  }
  return beta;
}

Eigen::MatrixXd topics(const SuffStatsState& state) {
  Eigen::MatrixXd beta = state.xi;
  const Eigen::VectorXd sums = beta.rowwise().sum();
  beta.array().colwise() /= sums.array();
  return beta;
}

Eigen::MatrixXd log_topics(const TpsLdaState& state) {
  return tps_log_topics(state.pi, *state.eta);
}

Eigen::MatrixXd log_topics(const SuffStatsState& state) {
  return topics(state).array().log().matrix();
}

Eigen::MatrixXd svb_elog_topics(const SuffStatsState& state) {
  Eigen::MatrixXd elog = state.xi;
  for (Eigen::Index k = 0; k < elog.rows(); ++k) {
    const double row_sum = digamma(state.xi.row(k).sum());
    for (Eigen::Index v = 0; v < elog.cols(); ++v) elog(k, v) = digamma(state.xi(k, v)) - row_sum;
  }
  return elog;
}

}  // namespace tps
