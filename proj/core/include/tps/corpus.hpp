#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace tps {

/// File-format violation; message carries the offending line number.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Immutable token table. Index range is [0, size()); lookup() inverts token().
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::optional<int> lookup(const std::string& token) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

/// Sparse bag of words: distinct term ids with parallel counts >= 1.
struct Document {
  std::vector<std::int32_t> term_ids;
  std::vector<std::int32_t> counts;

  std::int64_t length() const {  // N_d
    std::int64_t n = 0;
    for (auto c : counts) n += c;
    return n;
  }
};

struct Corpus {
  std::vector<Document> docs;
  int vocab_size = 0;  // V; every term id is in [0, V)

  std::size_t size() const { return docs.size(); }
};

/// Corpus plus one class index per document, classes numbered by first
/// appearance in the label file.
struct LabeledCorpus {
  Corpus corpus;
  std::vector<std::int32_t> labels;
  std::vector<std::string> class_names;

  int num_classes() const { return static_cast<int>(class_names.size()); }
};

struct Minibatch {
  std::int64_t index = 0;  // t
  std::vector<const Document*> docs;
  std::vector<std::int32_t> labels;  // empty for unlabeled streams

  std::size_t size() const { return docs.size(); }
};

struct HeldoutSplit {
  Document observed;
  Document heldout;
};

struct BowParseResult {
  Corpus corpus;
  Vocabulary vocabulary;
  int dropped_empty_docs = 0;
};

/// Reads the UCI bag-of-words format: three header lines (D, W, NNZ) then NNZ
/// lines "docID wordID count" with 1-based ids, plus one vocabulary token per
/// line. Documents that receive no entries are dropped and counted. Repeated
/// (docID, wordID) pairs are aggregated. Throws ParseError (with the line
/// number) on malformed headers, ids out of range, or counts <= 0.
BowParseResult parse_bow_corpus(std::istream& docword, std::istream& vocab);

/// Parses only the docword part against a known vocabulary size.
BowParseResult parse_bow_docs(std::istream& docword, int vocab_size);

/// Inverse of parse_bow_corpus on the entry multiset: emits the three header
/// lines and one 1-based entry per (doc, term), terms ascending.
void write_bow_corpus(std::ostream& out, const Corpus& corpus);
void write_vocabulary(std::ostream& out, const Vocabulary& vocab);

/// Reads "docID label" lines, one per document of `corpus` (1-based docID
/// into the parsed corpus). Class indices are assigned by first appearance.
LabeledCorpus attach_labels(Corpus corpus, std::istream& labels);

enum class StreamOrder { AsIs, Shuffled };

/// Single-pass (or epoch-repeating) minibatch stream over a corpus. Yields
/// batches of `batch_size` documents (the last batch of an epoch may be
/// smaller) with indices 0, 1, 2, ... Shuffled order is reseeded per epoch,
/// deterministically from (seed, epoch).
class MinibatchStream {
 public:
  MinibatchStream(const Corpus& corpus, int batch_size, StreamOrder order,
                  std::uint64_t seed = 0, int epochs = 1,
                  const std::vector<std::int32_t>* labels = nullptr);

  std::optional<Minibatch> next();

  std::int64_t batches_per_epoch() const;

 private:
  void start_epoch();

  const Corpus* corpus_;
  const std::vector<std::int32_t>* labels_;
  int batch_size_;
  StreamOrder order_;
  std::uint64_t seed_;
  int epochs_;
  int epoch_ = 0;
  std::size_t cursor_ = 0;
  std::int64_t next_index_ = 0;
  std::vector<std::size_t> perm_;
};

MinibatchStream make_stream(const Corpus& corpus, int batch_size, StreamOrder order,
                            std::uint64_t seed = 0, int epochs = 1);
MinibatchStream make_stream(const LabeledCorpus& corpus, int batch_size, StreamOrder order,
                            std::uint64_t seed = 0, int epochs = 1);

/// Randomly partitions the token occurrences of `doc`; the held-out part gets
/// round(heldout_fraction * N_d) occurrences clamped to [1, N_d - 1].
/// Returns nullopt when N_d < 2 (such documents are excluded from evaluation).
std::optional<HeldoutSplit> split_heldout(const Document& doc, double heldout_fraction,
                                          std::uint64_t seed);

}  // namespace tps
