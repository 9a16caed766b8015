#include "tps/synthetic.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "tps/mathkit.hpp"
#include "tps/rng.hpp"
#include "tps/serialize.hpp"

namespace tps {

namespace {

void check_spec(const SyntheticSpec& spec) {
  if (spec.num_topics < 1 || spec.vocab_size < 2 || spec.knowledge_dim < 1 ||
      spec.docs_per_batch < 1 || spec.tokens_per_doc < 1 || spec.n_batches < 1)
    throw std::invalid_argument("SyntheticSpec: sizes must be positive (vocab >= 2)");
  if (!(spec.alpha > 0.0)) throw std::invalid_argument("SyntheticSpec: alpha must be positive");
  if (spec.drift_sigma < 0.0)
    throw std::invalid_argument("SyntheticSpec: drift_sigma must be nonnegative");
  if (spec.eval_docs < 0) throw std::invalid_argument("SyntheticSpec: eval_docs must be >= 0");
}

int draw_categorical(const Eigen::VectorXd& probs, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    cum += probs(i);
    if (u < cum) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size() - 1);
}

Eigen::VectorXd draw_dirichlet(int dim, double alpha, Rng& rng) {
  Eigen::VectorXd x(dim);
  for (int i = 0; i < dim; ++i) x(i) = rng.gamma(alpha);
  const double sum = x.sum();
  if (sum <= 0.0) return Eigen::VectorXd::Constant(dim, 1.0 / dim);
  return x / sum;
}

Document draw_document(const SyntheticSpec& spec, const Eigen::MatrixXd& beta, Rng& rng,
                       std::int32_t* label_out) {
  std::map<std::int32_t, std::int32_t> counts;
  if (spec.labeled) {
    const auto c = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(spec.num_topics)));
    if (label_out) *label_out = c;
    const Eigen::VectorXd row = beta.row(c).transpose();
    for (int n = 0; n < spec.tokens_per_doc; ++n) {
      counts[static_cast<std::int32_t>(draw_categorical(row, rng))]++;
    }
  } else {
    const Eigen::VectorXd theta = draw_dirichlet(spec.num_topics, spec.alpha, rng);
    for (int n = 0; n < spec.tokens_per_doc; ++n) {
      const int z = draw_categorical(theta, rng);
      counts[static_cast<std::int32_t>(
          draw_categorical(beta.row(z).transpose(), rng))]++;
    }
  }
  Document doc;
  doc.term_ids.reserve(counts.size());
  doc.counts.reserve(counts.size());
  for (auto& [w, c] : counts) {
    doc.term_ids.push_back(w);
    doc.counts.push_back(c);
  }
  return doc;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    out.row(r) = softmax(logits.row(r).transpose()).transpose();
  }
  return out;
}

}  // namespace

SyntheticData synth_generate(const SyntheticSpec& spec) {
  check_spec(spec);
  Rng rng(spec.seed);

  SyntheticData data;
  data.eta_true.resize(spec.knowledge_dim, spec.vocab_size);
  for (Eigen::Index r = 0; r < data.eta_true.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.eta_true.cols(); ++c) data.eta_true(r, c) = rng.normal();
  }
  data.pi0_true.resize(spec.num_topics, spec.knowledge_dim);
  for (Eigen::Index r = 0; r < data.pi0_true.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.pi0_true.cols(); ++c) data.pi0_true(r, c) = rng.normal();
  }

  data.corpus.vocab_size = spec.vocab_size;
  data.corpus.docs.reserve(static_cast<std::size_t>(spec.n_batches) * spec.docs_per_batch);
  if (spec.labeled) data.labels.reserve(data.corpus.docs.capacity());

  Eigen::MatrixXd pi = data.pi0_true;
  data.beta_trace.reserve(spec.n_batches);
  for (int b = 0; b < spec.n_batches; ++b) {
    if (b > 0 && spec.drift == SyntheticSpec::Drift::RandomWalk && spec.drift_sigma > 0.0) {
      for (Eigen::Index r = 0; r < pi.rows(); ++r) {
        for (Eigen::Index c = 0; c < pi.cols(); ++c) pi(r, c) += rng.normal(0.0, spec.drift_sigma);
      }
    }
    data.beta_trace.push_back(softmax_rows(pi * data.eta_true));
    const Eigen::MatrixXd& beta = data.beta_trace.back();
    for (int d = 0; d < spec.docs_per_batch; ++d) {
      std::int32_t label = 0;
      Document doc = draw_document(spec, beta, rng, &label);
      data.corpus.docs.push_back(std::move(doc));
      if (spec.labeled) data.labels.push_back(label);
    }
  }

  data.eval_corpus.vocab_size = spec.vocab_size;
  if (spec.eval_docs > 0) {
    const Eigen::MatrixXd& beta0 = data.beta_trace.front();
    data.eval_corpus.docs.reserve(spec.eval_docs);
    for (int d = 0; d < spec.eval_docs; ++d) {
      data.eval_corpus.docs.push_back(draw_document(spec, beta0, rng, nullptr));
    }
  }

  std::vector<std::string> tokens;
  tokens.reserve(spec.vocab_size);
  for (int v = 0; v < spec.vocab_size; ++v) {
    std::ostringstream name;
    name << "w" << v;
    tokens.push_back(name.str());
  }
  data.vocabulary = Vocabulary(std::move(tokens));
  return data;
}

std::vector<std::string> write_synthetic(const SyntheticData& data, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> written;
  auto open = [&](const std::string& name) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + name + " in " + dir);
    written.push_back(name);
    return out;
  };

  {
    auto out = open("docword.txt");
    write_bow_corpus(out, data.corpus);
  }
  {
    auto out = open("vocab.txt");
    write_vocabulary(out, data.vocabulary);
  }
  {
    auto out = open("eta.bin");
    write_matrix_cache(out, data.eta_true);
  }
  {
    auto out = open("pi0.bin");
    write_matrix_cache(out, data.pi0_true);
  }
  if (!data.labels.empty()) {
    auto out = open("labels.txt");
    for (std::size_t d = 0; d < data.labels.size(); ++d) {
      out << (d + 1) << " c" << data.labels[d] << "\n";
    }
  }
  if (!data.eval_corpus.docs.empty()) {
    auto out = open("docword_eval.txt");
    write_bow_corpus(out, data.eval_corpus);
  }
  return written;
}

}  // namespace tps
