#include "tps/knowledge.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "tps/rng.hpp"

namespace tps {

EmbeddingTable parse_embeddings(std::istream& in, const Vocabulary* filter) {
  EmbeddingTable table;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    std::vector<double> vals;
    std::string field;
    while (fields >> field) {
      std::size_t pos = 0;
      double v = 0.0;
      try {
        v = std::stod(field, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != field.size() || !std::isfinite(v)) {
        std::ostringstream msg;
        msg << "unparsable value '" << field << "' (line " << line_no << ")";
        throw ParseError(msg.str());
      }
      vals.push_back(v);
    }
    if (vals.empty()) {
      std::ostringstream msg;
      msg << "embedding line has no values (line " << line_no << ")";
      throw ParseError(msg.str());
    }
    if (table.dim == 0) {
      table.dim = static_cast<Eigen::Index>(vals.size());
    } else if (static_cast<Eigen::Index>(vals.size()) != table.dim) {
      std::ostringstream msg;
      msg << "inconsistent embedding dimension " << vals.size() << ", expected " << table.dim
          << " (line " << line_no << ")";
      throw ParseError(msg.str());
    }
    if (filter && !filter->lookup(token)) continue;
    table.vectors.emplace(std::move(token),
                          Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size())));
  }
  return table;
}

KnowledgeMatrix load_embeddings(std::istream& in, const Vocabulary& vocab,
                                const MissingPolicy& missing, std::int64_t* missing_count) {
  EmbeddingTable table = parse_embeddings(in, &vocab);
  if (table.vectors.empty()) throw ParseError("no embedding line matches the vocabulary");

  const auto V = static_cast<Eigen::Index>(vocab.size());
  KnowledgeMatrix out;
  out.kind = KnowledgeKind::Embedding;
  out.values.setZero(table.dim, V);
  std::int64_t missed = 0;
  for (Eigen::Index v = 0; v < V; ++v) {
    auto it = table.vectors.find(vocab.token(static_cast<int>(v)));
    if (it != table.vectors.end()) {
      out.values.col(v) = it->second;
      continue;
    }
    ++missed;
    if (missing.fill == MissingPolicy::Fill::Random) {
      Rng rng(mix_seed(missing.seed, static_cast<std::uint64_t>(v)));
      for (Eigen::Index r = 0; r < table.dim; ++r) out.values(r, v) = rng.normal(0.0, missing.scale);
    }
  }
  if (missing_count) *missing_count = missed;
  return out;
}

KnowledgeMatrix build_knn_graph(const KnowledgeMatrix& emb, int k, std::int64_t* zero_columns) {
  const Eigen::Index V = emb.values.cols();
  if (k < 1) throw std::invalid_argument("build_knn_graph: k must be positive");
  if (k >= V) throw std::invalid_argument("build_knn_graph: k must be smaller than the vocabulary");

  Eigen::VectorXd norms = emb.values.colwise().norm();
  if ((norms.array() == 0.0).all()) throw std::invalid_argument("build_knn_graph: all-zero embeddings");
  std::int64_t zeros = 0;

  KnowledgeMatrix out;
  out.kind = KnowledgeKind::Graph;
  out.values.setZero(V, V);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(V));
  for (Eigen::Index i = 0; i < V; ++i) {
    if (norms(i) == 0.0) {
      ++zeros;
      continue;
    }
    Eigen::VectorXd sims = (emb.values.transpose() * emb.values.col(i)) / norms(i);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    auto better = [&](Eigen::Index a, Eigen::Index b) {
      const double sa = norms(a) > 0.0 ? sims(a) / norms(a) : -2.0;
      const double sb = norms(b) > 0.0 ? sims(b) / norms(b) : -2.0;
      if (sa != sb) return sa > sb;
      return a < b;
    };
    order.erase(std::remove(order.begin(), order.end(), i), order.end());
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      better);
    for (std::size_t n = 0; n < take; ++n) {
      const Eigen::Index j = order[n];
      if (norms(j) == 0.0) continue;
      out.values(i, j) = 1.0;
      out.values(j, i) = 1.0;
    }
    order.resize(static_cast<std::size_t>(V));
  }
  if (zero_columns) *zero_columns = zeros;
  return out;
}

KnowledgeMatrix pca_reduce(const KnowledgeMatrix& mat, int target_dim) {
  const Eigen::Index L = mat.values.rows();
  const Eigen::Index V = mat.values.cols();
  if (target_dim < 1) throw std::invalid_argument("pca_reduce: target_dim must be positive");
  if (target_dim > std::min(L, V))
    throw std::invalid_argument("pca_reduce: target_dim exceeds min(L, V)");

  const Eigen::VectorXd mean = mat.values.rowwise().mean();
  const Eigen::MatrixXd centered = mat.values.colwise() - mean;

  // Eigendecompose the smaller of the scatter (L x L) and Gram (V x V) matrices.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  const bool use_scatter = L <= V;
  if (use_scatter) {
    solver.compute(centered * centered.transpose());
  } else {
    solver.compute(centered.transpose() * centered);
  }
  if (solver.info() != Eigen::Success) throw std::runtime_error("pca_reduce: eigensolver failed");

  const Eigen::VectorXd& evals = solver.eigenvalues();  // ascending
  const double lead = evals(evals.size() - 1);
  const double tol = std::max(lead, 0.0) * 1e-10;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < evals.size(); ++i) {
    if (evals(i) > tol && evals(i) > 0.0) ++rank;
  }
  if (target_dim > rank) {
    std::ostringstream msg;
    msg << "pca_reduce: target_dim " << target_dim << " exceeds effective rank " << rank;
    throw std::invalid_argument(msg.str());
  }

  KnowledgeMatrix out;
  out.kind = KnowledgeKind::Custom;
  out.values.resize(target_dim, V);
  for (int d = 0; d < target_dim; ++d) {
    const Eigen::Index src = evals.size() - 1 - d;
    Eigen::VectorXd component;
    if (use_scatter) {
      component = solver.eigenvectors().col(src);
    } else {
      component = centered * solver.eigenvectors().col(src) / std::sqrt(evals(src));
    }
    Eigen::Index peak = 0;
    component.cwiseAbs().maxCoeff(&peak);
    if (component(peak) < 0.0) component = -component;
    out.values.row(d) = component.transpose() * centered;
  }
  return out;
}

KnowledgeMatrix build_nb_feature_prior(const LabeledCorpus& corpus) {
  const auto C = static_cast<Eigen::Index>(corpus.num_classes());
  const Eigen::Index V = corpus.corpus.vocab_size;
  if (C < 1) throw std::invalid_argument("build_nb_feature_prior: corpus has no classes");

  std::vector<std::int64_t> class_docs(static_cast<std::size_t>(C), 0);
  for (auto label : corpus.labels) class_docs[static_cast<std::size_t>(label)]++;
  for (Eigen::Index c = 0; c < C; ++c) {
    if (class_docs[static_cast<std::size_t>(c)] == 0) {
      std::ostringstream msg;
      msg << "build_nb_feature_prior: class " << c << " has no documents";
      throw std::invalid_argument(msg.str());
    }
  }

  Eigen::MatrixXd occurrences = Eigen::MatrixXd::Zero(C, V);
  Eigen::VectorXd docs_containing = Eigen::VectorXd::Zero(V);
  for (std::size_t d = 0; d < corpus.corpus.docs.size(); ++d) {
    const auto& doc = corpus.corpus.docs[d];
    const auto c = static_cast<Eigen::Index>(corpus.labels[d]);
    for (std::size_t i = 0; i < doc.term_ids.size(); ++i) {
      occurrences(c, doc.term_ids[i]) += doc.counts[i];
      docs_containing(doc.term_ids[i]) += 1.0;
    }
  }

  KnowledgeMatrix out;
  out.kind = KnowledgeKind::NbFeature;
  out.values.setZero(C, V);
  for (Eigen::Index v = 0; v < V; ++v) {
    if (docs_containing(v) > 0.0) out.values.col(v) = occurrences.col(v) / docs_containing(v);
  }
  return out;
}

KnowledgeMatrix concat_onehot_prior(const KnowledgeMatrix& feature) {
  const Eigen::Index C = feature.values.rows();
  const Eigen::Index V = feature.values.cols();
  KnowledgeMatrix out;
  out.kind = KnowledgeKind::NbFeature;
  out.values.setZero(V + C, V);
  out.values.topRows(V) = Eigen::MatrixXd::Identity(V, V);
  out.values.bottomRows(C) = feature.values;
  return out;
}

KnowledgeMatrix normalize_unit_interval(const KnowledgeMatrix& mat,
                                        std::int64_t* constant_columns) {
  KnowledgeMatrix out;
  out.kind = mat.kind;
  out.values.resizeLike(mat.values);
  std::int64_t constants = 0;
  for (Eigen::Index v = 0; v < mat.values.cols(); ++v) {
    const double lo = mat.values.col(v).minCoeff();
    const double hi = mat.values.col(v).maxCoeff();
    if (hi > lo) {
      out.values.col(v) = (mat.values.col(v).array() - lo) / (hi - lo);
    } else {
      out.values.col(v).setZero();
      ++constants;
    }
  }
  if (constant_columns) *constant_columns = constants;
  return out;
}

KnowledgeMatrix make_identity_prior(int vocab_size) {
  if (vocab_size < 1) throw std::invalid_argument("make_identity_prior: vocab_size must be positive");
  KnowledgeMatrix out;
  out.kind = KnowledgeKind::Identity;
  out.values = Eigen::MatrixXd::Identity(vocab_size, vocab_size);
  return out;
}

}  // namespace tps
