#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>

#include "tps/corpus.hpp"

namespace tps {

enum class KnowledgeKind { Embedding, Graph, Identity, NbFeature, Custom };

// External knowledge eta: one column of L knowledge features per vocabulary word.
struct KnowledgeMatrix {
  Eigen::MatrixXd values;
  KnowledgeKind kind = KnowledgeKind::Custom;

  Eigen::Index dim() const { return values.rows(); }
  Eigen::Index vocab_size() const { return values.cols(); }
};

struct EmbeddingTable {
  std::unordered_map<std::string, Eigen::VectorXd> vectors;
  Eigen::Index dim = 0;
};

// Reads "token v1 ... vE" lines; with a filter, tokens outside it are skipped.
// Duplicate tokens keep their first occurrence.
EmbeddingTable parse_embeddings(std::istream& in, const Vocabulary* filter = nullptr);

struct MissingPolicy {
  enum class Fill { Zero, Random };
  Fill fill = Fill::Random;
  std::uint64_t seed = 0;
  double scale = 0.01;

  static MissingPolicy zero() { return {Fill::Zero, 0, 0.0}; }
  static MissingPolicy random(std::uint64_t seed, double scale = 0.01) {
    return {Fill::Random, seed, scale};
  }
};

// E x V matrix with column v holding the embedding of vocab token v. Vocab tokens
// absent from the stream are filled per `missing`; their number lands in missing_count.
KnowledgeMatrix load_embeddings(std::istream& in, const Vocabulary& vocab,
                                const MissingPolicy& missing = {},
                                std::int64_t* missing_count = nullptr);

// Binary V x V adjacency by cosine similarity, OR-symmetrized, zero diagonal;
// similarity ties prefer the lower word index. All-zero embedding columns get
// no out-edges; their number lands in zero_columns.
KnowledgeMatrix build_knn_graph(const KnowledgeMatrix& emb, int k,
                                std::int64_t* zero_columns = nullptr);

// Scores of the column-mean-centered columns on the top target_dim principal
// components (target_dim x V). Each component's largest-magnitude loading is
// made positive. Throws when target_dim exceeds the effective rank.
KnowledgeMatrix pca_reduce(const KnowledgeMatrix& mat, int target_dim);

// F[c][j] = occurrences of word j in class-c docs / number of docs containing j.
KnowledgeMatrix build_nb_feature_prior(const LabeledCorpus& corpus);

// (V+C) x V: identity on top of the C x V feature block.
KnowledgeMatrix concat_onehot_prior(const KnowledgeMatrix& feature);

// Min-max scales each column to [0,1]; constant columns become zero and are counted.
KnowledgeMatrix normalize_unit_interval(const KnowledgeMatrix& mat,
                                        std::int64_t* constant_columns = nullptr);

KnowledgeMatrix make_identity_prior(int vocab_size);

}  // namespace tps
