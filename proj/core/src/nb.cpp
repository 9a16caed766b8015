#include "tps/nb.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "tps/lda.hpp"
#include "tps/rng.hpp"

namespace tps {

ClassPrior ClassPrior::uniform(int num_classes) {
  if (num_classes < 1) throw std::invalid_argument("ClassPrior: num_classes must be >= 1");
  ClassPrior prior;
  prior.weights = Eigen::VectorXd::Constant(num_classes, 1.0 / num_classes);
  return prior;
}

Eigen::MatrixXd batch_class_word_counts(const Minibatch& batch, int num_classes, int vocab_size) {
  if (batch.labels.size() != batch.docs.size())
    throw std::invalid_argument("batch_class_word_counts: batch carries no labels");
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(num_classes, vocab_size);
  for (std::size_t d = 0; d < batch.docs.size(); ++d) {
    const auto c = batch.labels[d];
    if (c < 0 || c >= num_classes)
      throw std::invalid_argument("batch_class_word_counts: label out of range");
    const Document& doc = *batch.docs[d];
    for (std::size_t i = 0; i < doc.term_ids.size(); ++i) {
      counts(c, doc.term_ids[i]) += doc.counts[i];
    }
  }
  return counts;
}

TpsNbState tps_nb_init(int num_classes, std::shared_ptr<const KnowledgeMatrix> eta, double sigma,
                       std::uint64_t seed) {
  if (num_classes < 1) throw std::invalid_argument("tps_nb_init: num_classes must be >= 1");
  if (!eta) throw std::invalid_argument("tps_nb_init: null knowledge matrix");
  if (!(sigma > 0.0)) throw std::invalid_argument("tps_nb_init: sigma must be positive");
  TpsNbState state;
  state.eta = std::move(eta);
  state.sigma = sigma;
  state.t = 0;
  Rng rng(seed);
  state.pi.resize(num_classes, state.eta->dim());
  for (Eigen::Index c = 0; c < state.pi.rows(); ++c) {
    for (Eigen::Index l = 0; l < state.pi.cols(); ++l) state.pi(c, l) = rng.normal(0.0, 0.1);
  }
  return state;
}

TpsNbState tps_nb_step(const TpsNbState& state, const Minibatch& batch,
                       const MaximizerOptions& opts, NbStepReport* report) {
  if (!state.eta) throw std::invalid_argument("tps_nb_step: null knowledge matrix");
  const auto C = static_cast<int>(state.pi.rows());
  const auto V = static_cast<int>(state.eta->vocab_size());
  const Eigen::MatrixXd counts = batch_class_word_counts(batch, C, V);

  NbStepReport local_report;
  TpsNbState next = state;
  // Same objective as the topic rows, with class-word counts as the statistics;
  // it separates by class, and a class with no counts is maximized at pi_prev.
  for (int c = 0; c < C; ++c) {
    const Eigen::VectorXd stats_row = counts.row(c).transpose();
    if (stats_row.sum() == 0.0) continue;
    const Eigen::VectorXd prev_row = state.pi.row(c).transpose();
    auto f = [&](const Eigen::VectorXd& x) {
      return lp_objective(x, prev_row, stats_row, *state.eta, state.sigma);
    };
    auto g = [&](const Eigen::VectorXd& x) {
      return lp_gradient(x, prev_row, stats_row, *state.eta, state.sigma);
    };
    MaximizerResult res;
    try {
      res = maximize_concave(f, g, prev_row, opts);
    } catch (const std::runtime_error& err) {
      std::ostringstream msg;
      msg << "minibatch " << batch.index << ", class " << c << ": " << err.what();
      throw std::runtime_error(msg.str());
    }
    next.pi.row(c) = res.x.transpose();
    local_report.lp_total += res.value;
    local_report.maximizer_iterations += res.iterations;
    local_report.classes_updated += 1;
  }
  next.t = state.t + 1;
  if (report) *report = local_report;
  return next;
}

NbSuffStats svb_nb_step(const NbSuffStats& state, const Minibatch& batch) {
  NbSuffStats next;
  next.xi = state.xi + batch_class_word_counts(batch, static_cast<int>(state.xi.rows()),
                                               static_cast<int>(state.xi.cols()));
  next.t = state.t + 1;
  return next;
}

NbSuffStats kps_nb_step(const NbSuffStats& state, const Minibatch& batch,
                        const Eigen::MatrixXd& eta_prior, double kappa) {
  if (kappa < 0.0) throw std::invalid_argument("kps_nb_step: kappa must be nonnegative");
  if (eta_prior.rows() != state.xi.rows() || eta_prior.cols() != state.xi.cols())
    throw std::invalid_argument("kps_nb_step: prior shape mismatch");
  NbSuffStats next = svb_nb_step(state, batch);
  next.xi += std::pow(1.0 + static_cast<double>(next.t), -kappa) * eta_prior;
  return next;
}

Eigen::MatrixXd class_word_dists(const TpsNbState& state) {
  Eigen::MatrixXd beta = state.pi * state.eta->values;
  for (Eigen::Index c = 0; c < beta.rows(); ++c) {
    beta.row(c) = softmax(beta.row(c).transpose()).transpose();
  }
  return beta;
}

Eigen::MatrixXd class_word_dists(const NbSuffStats& state) {
  Eigen::MatrixXd beta = state.xi;
  const Eigen::VectorXd sums = beta.rowwise().sum();
  beta.array().colwise() /= sums.array();
  return beta;
}

Eigen::MatrixXd log_class_word_dists(const TpsNbState& state) {
  Eigen::MatrixXd logits = state.pi * state.eta->values;
  for (Eigen::Index c = 0; c < logits.rows(); ++c) {
    logits.row(c).array() -= log_sum_exp(logits.row(c).transpose());
  }
  return logits;
}

Eigen::MatrixXd log_class_word_dists(const NbSuffStats& state) {
  return class_word_dists(state).array().log().matrix();
}

Prediction predict(const Document& doc, const Eigen::MatrixXd& log_beta, const ClassPrior& prior) {
  if (doc.term_ids.empty()) throw std::invalid_argument("predict: empty document");
  if (prior.weights.size() != log_beta.rows())
    throw std::invalid_argument("predict: prior size mismatch");
  Prediction pred;
  pred.log_scores = prior.weights.array().log().matrix();
  for (std::size_t i = 0; i < doc.term_ids.size(); ++i) {
    pred.log_scores += doc.counts[i] * log_beta.col(doc.term_ids[i]);
  }
  pred.label = 0;
  for (Eigen::Index c = 1; c < pred.log_scores.size(); ++c) {
    if (pred.log_scores(c) > pred.log_scores(pred.label)) pred.label = static_cast<int>(c);
  }
  return pred;
}

Prediction predict(const Document& doc, const TpsNbState& state, const ClassPrior& prior) {
  return predict(doc, log_class_word_dists(state), prior);
}

Prediction predict(const Document& doc, const NbSuffStats& state, const ClassPrior& prior) {
  return predict(doc, log_class_word_dists(state), prior);
}

}  // namespace tps
