#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <utility>

#include "tps/corpus.hpp"
#include "tps/knowledge.hpp"
#include "tps/mathkit.hpp"

namespace tps {

struct TpsNbState {
  Eigen::MatrixXd pi;  // C x L
  std::shared_ptr<const KnowledgeMatrix> eta;
  double sigma = 1.0;
  std::int64_t t = 0;
};

struct NbSuffStats {
  Eigen::MatrixXd xi;  // C x V, positive
  std::int64_t t = 0;
};

struct ClassPrior {
  Eigen::VectorXd weights;  // C-simplex

  static ClassPrior uniform(int num_classes);
};

struct NbStepReport {
  double lp_total = 0.0;
  std::int64_t maximizer_iterations = 0;
  int classes_updated = 0;
};

// Per-batch class-word counts: row c sums n_dv over batch docs labeled c.
Eigen::MatrixXd batch_class_word_counts(const Minibatch& batch, int num_classes, int vocab_size);

TpsNbState tps_nb_init(int num_classes, std::shared_ptr<const KnowledgeMatrix> eta, double sigma,
                       std::uint64_t seed);

// Maximizes LP(pi_c) per class present in the batch; absent classes keep pi_c exactly.
TpsNbState tps_nb_step(const TpsNbState& state, const Minibatch& batch,
                       const MaximizerOptions& opts = {}, NbStepReport* report = nullptr);

NbSuffStats svb_nb_step(const NbSuffStats& state, const Minibatch& batch);

NbSuffStats kps_nb_step(const NbSuffStats& state, const Minibatch& batch,
                        const Eigen::MatrixXd& eta_prior, double kappa);

Eigen::MatrixXd class_word_dists(const TpsNbState& state);
Eigen::MatrixXd class_word_dists(const NbSuffStats& state);
Eigen::MatrixXd log_class_word_dists(const TpsNbState& state);
Eigen::MatrixXd log_class_word_dists(const NbSuffStats& state);

struct Prediction {
  int label = 0;
  Eigen::VectorXd log_scores;  // C
};

// argmax_c [log prior_c + sum_v n_dv log beta_cv], ties to the lower class index.
Prediction predict(const Document& doc, const Eigen::MatrixXd& log_beta, const ClassPrior& prior);
Prediction predict(const Document& doc, const TpsNbState& state, const ClassPrior& prior);
Prediction predict(const Document& doc, const NbSuffStats& state, const ClassPrior& prior);

}  // namespace tps
