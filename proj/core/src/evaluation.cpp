#include "tps/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tps/lda.hpp"
#include "tps/rng.hpp"

namespace tps {

double log_predictive_probability(const Eigen::MatrixXd& beta, double alpha,
                                  const std::vector<const Document*>& eval_docs,
                                  double heldout_fraction, std::uint64_t seed,
                                  int local_max_iters, double local_tol) {
  LdaConfig cfg;
  cfg.num_topics = static_cast<int>(beta.rows());
  cfg.alpha = alpha;
  cfg.local_max_iters = local_max_iters;
  cfg.local_tol = local_tol;

  const Eigen::MatrixXd log_beta = beta.array().log().matrix();
  double total_log_prob = 0.0;
  std::int64_t total_tokens = 0;
  for (std::size_t d = 0; d < eval_docs.size(); ++d) {
    const auto split =
        split_heldout(*eval_docs[d], heldout_fraction, mix_seed(seed, static_cast<std::uint64_t>(d)));
    if (!split) continue;
    const LocalPosterior post = infer_document_logbeta(split->observed, log_beta, cfg);
    const Eigen::VectorXd theta = post.gamma / post.gamma.sum();
    for (std::size_t i = 0; i < split->heldout.term_ids.size(); ++i) {
      const double p = theta.dot(beta.col(split->heldout.term_ids[i]));
      total_log_prob += split->heldout.counts[i] * std::log(p);
      total_tokens += split->heldout.counts[i];
    }
  }
  if (total_tokens == 0)
    throw std::invalid_argument("log_predictive_probability: no evaluable documents");
  return total_log_prob / static_cast<double>(total_tokens);
}

double log_predictive_probability(const Eigen::MatrixXd& beta, double alpha,
                                  const Corpus& eval_docs, double heldout_fraction,
                                  std::uint64_t seed, int local_max_iters, double local_tol) {
  std::vector<const Document*> docs;
  docs.reserve(eval_docs.docs.size());
  for (const auto& doc : eval_docs.docs) docs.push_back(&doc);
  return log_predictive_probability(beta, alpha, docs, heldout_fraction, seed, local_max_iters,
                                    local_tol);
}

CooccurrenceIndex::CooccurrenceIndex(const Corpus& corpus) { add_corpus(corpus); }

void CooccurrenceIndex::add_document(const Document& doc) {
  for (auto w : doc.term_ids) {
    if (static_cast<std::size_t>(w) >= postings_.size()) postings_.resize(w + 1);
    postings_[w].push_back(num_docs_);  // term ids ascend within a doc, so lists stay sorted
  }
  ++num_docs_;
}

void CooccurrenceIndex::add_corpus(const Corpus& corpus) {
  if (postings_.size() < static_cast<std::size_t>(corpus.vocab_size))
    postings_.resize(static_cast<std::size_t>(corpus.vocab_size));
  for (const auto& doc : corpus.docs) add_document(doc);
}

std::int64_t CooccurrenceIndex::doc_frequency(std::int32_t w) const {
  if (w < 0 || static_cast<std::size_t>(w) >= postings_.size()) return 0;
  return static_cast<std::int64_t>(postings_[w].size());
}

std::int64_t CooccurrenceIndex::joint_frequency(std::int32_t a, std::int32_t b) const {
  if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= postings_.size() ||
      static_cast<std::size_t>(b) >= postings_.size())
    return 0;
  const auto& pa = postings_[a];
  const auto& pb = postings_[b];
  std::int64_t joint = 0;
  std::size_t i = 0, j = 0;
  while (i < pa.size() && j < pb.size()) {
    if (pa[i] < pb[j]) {
      ++i;
    } else if (pb[j] < pa[i]) {
      ++j;
    } else {
      ++joint;
      ++i;
      ++j;
    }
  }
  return joint;
}

namespace {

double pair_npmi(const CooccurrenceIndex& ref, std::int32_t a, std::int32_t b) {
  constexpr double kEps = 1e-12;
  const auto docs = static_cast<double>(ref.num_docs());
  const std::int64_t df_a = ref.doc_frequency(a);
  const std::int64_t df_b = ref.doc_frequency(b);
  if (df_a == 0 || df_b == 0) return -1.0;
  const std::int64_t joint = ref.joint_frequency(a, b);
  if (joint == ref.num_docs()) return 0.0;  // both words everywhere: no association signal
  const double p_a = static_cast<double>(df_a) / docs;
  const double p_b = static_cast<double>(df_b) / docs;
  const double p_ab = joint > 0 ? static_cast<double>(joint) / docs : kEps;
  return std::log(p_ab / (p_a * p_b)) / -std::log(p_ab);
}

}  // namespace

double npmi(const Eigen::MatrixXd& beta, int top_t, const CooccurrenceIndex& reference) {
  if (top_t < 2) throw std::invalid_argument("npmi: top_t must be >= 2");
  if (reference.num_docs() == 0) throw std::invalid_argument("npmi: empty reference corpus");
  const auto tops = top_word_ids(beta, top_t);
  double topic_sum = 0.0;
  for (const auto& words : tops) {
    double pair_sum = 0.0;
    std::int64_t pairs = 0;
    for (std::size_t i = 0; i < words.size(); ++i) {
      for (std::size_t j = i + 1; j < words.size(); ++j) {
        pair_sum += pair_npmi(reference, words[i], words[j]);
        ++pairs;
      }
    }
    topic_sum += pair_sum / static_cast<double>(pairs);
  }
  return topic_sum / static_cast<double>(tops.size());
}

double npmi(const Eigen::MatrixXd& beta, int top_t, const Corpus& reference) {
  return npmi(beta, top_t, CooccurrenceIndex(reference));
}

double accuracy(const std::vector<int>& predictions, const std::vector<std::int32_t>& truth) {
  if (predictions.size() != truth.size())
    throw std::invalid_argument("accuracy: length mismatch");
  if (predictions.empty()) throw std::invalid_argument("accuracy: empty inputs");
  std::int64_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] == truth[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

std::vector<std::vector<int>> top_word_ids(const Eigen::MatrixXd& beta, int top_t) {
  if (top_t < 1 || top_t > beta.cols())
    throw std::invalid_argument("top_word_ids: top_t out of range");
  std::vector<std::vector<int>> out(static_cast<std::size_t>(beta.rows()));
  std::vector<int> order(static_cast<std::size_t>(beta.cols()));
  for (Eigen::Index k = 0; k < beta.rows(); ++k) {
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + top_t, order.end(), [&](int a, int b) {
      if (beta(k, a) != beta(k, b)) return beta(k, a) > beta(k, b);
      return a < b;
    });
    out[static_cast<std::size_t>(k)].assign(order.begin(), order.begin() + top_t);
  }
  return out;
}

std::vector<std::vector<std::string>> top_words(const Eigen::MatrixXd& beta,
                                                const Vocabulary& vocab, int top_t) {
  const auto ids = top_word_ids(beta, top_t);
  std::vector<std::vector<std::string>> out(ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    out[k].reserve(ids[k].size());
    for (int w : ids[k]) out[k].push_back(vocab.token(w));
  }
  return out;
}

ForgettingTrace forgetting_trace(const std::vector<Eigen::MatrixXd>& xi_states) {
  if (xi_states.size() < 2)
    throw std::invalid_argument("forgetting_trace: need at least two states");
  const auto& xi0 = xi_states.front();
  for (const auto& xi : xi_states) {
    if (xi.rows() != xi0.rows() || xi.cols() != xi0.cols())
      throw std::invalid_argument("forgetting_trace: shape mismatch");
  }
  ForgettingTrace trace;
  const double base = xi0.cwiseAbs().sum();
  trace.divergence.reserve(xi_states.size());
  trace.ratio.reserve(xi_states.size());
  for (const auto& xi : xi_states) {
    trace.divergence.push_back((xi - xi0).cwiseAbs().sum());
    trace.ratio.push_back(base / xi.cwiseAbs().sum());
  }

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::int64_t n = 0;
  for (std::size_t t = 10; t < trace.ratio.size(); ++t) {
    if (!(trace.ratio[t] > 0.0)) continue;
    const double x = std::log(static_cast<double>(t));
    const double y = std::log(trace.ratio[t]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  const double denom = static_cast<double>(n) * sxx - sx * sx;
  if (n >= 2 && denom != 0.0) {
    trace.fitted_slope = (static_cast<double>(n) * sxy - sx * sy) / denom;
    trace.slope_valid = true;
  }
  return trace;
}

double mann_kendall_statistic(const std::vector<double>& values) {
  const auto n = static_cast<std::int64_t>(values.size());
  if (n < 2) throw std::invalid_argument("mann_kendall_statistic: need at least two values");
  std::int64_t s = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = i + 1; j < n; ++j) {
      if (values[j] > values[i]) ++s;
      else if (values[j] < values[i]) --s;
    }
  }
  return static_cast<double>(s) / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

}  // namespace tps
