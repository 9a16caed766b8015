#include "tps/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "tps/rng.hpp"

namespace tps {

namespace {

[[noreturn]] void fail(const std::string& what, std::int64_t line) {
  std::ostringstream msg;
  msg << what << " (line " << line << ")";
  throw ParseError(msg.str());
}

bool read_int(const std::string& field, std::int64_t& out) {
  if (field.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stoll(field, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == field.size();
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    auto [it, inserted] = index_.emplace(tokens_[i], static_cast<int>(i));
    if (!inserted) throw std::invalid_argument("Vocabulary: duplicate token '" + tokens_[i] + "'");
  }
}

std::optional<int> Vocabulary::lookup(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

BowParseResult parse_bow_docs(std::istream& docword, int vocab_size) {
  std::int64_t line_no = 0;
  std::string line;
  auto next_line = [&]() -> bool {
    while (std::getline(docword, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  };

  std::int64_t header[3];
  for (int i = 0; i < 3; ++i) {
    if (!next_line()) fail("malformed header: expected three numeric lines (D, W, NNZ)", line_no);
    if (!read_int(line, header[i]) || header[i] < 0)
      fail("malformed header: expected a nonnegative integer, got '" + line + "'", line_no);
  }
  const std::int64_t num_docs = header[0];
  const std::int64_t num_words = header[1];
  const std::int64_t nnz = header[2];
  if (vocab_size >= 0 && num_words != vocab_size)
    fail("header W does not match vocabulary size", 2);

  // Entries may arrive in any docID order; duplicates aggregate.
  std::vector<std::map<std::int32_t, std::int64_t>> acc(static_cast<std::size_t>(num_docs));
  for (std::int64_t i = 0; i < nnz; ++i) {
    if (!next_line()) fail("unexpected end of file: fewer than NNZ entry lines", line_no);
    std::istringstream fields(line);
    std::string f1, f2, f3, extra;
    fields >> f1 >> f2 >> f3;
    std::int64_t doc_id, word_id, count;
    if (!read_int(f1, doc_id) || !read_int(f2, word_id) || !read_int(f3, count) || (fields >> extra))
      fail("malformed entry: expected 'docID wordID count', got '" + line + "'", line_no);
    if (doc_id < 1 || doc_id > num_docs) fail("docID out of range", line_no);
    if (word_id < 1 || word_id > num_words) fail("wordID exceeds W", line_no);
    if (count <= 0) fail("count must be positive", line_no);
    acc[static_cast<std::size_t>(doc_id - 1)][static_cast<std::int32_t>(word_id - 1)] += count;
  }
  if (next_line()) fail("trailing content after NNZ entries", line_no);

  BowParseResult result;
  result.corpus.vocab_size = static_cast<int>(num_words);
  result.corpus.docs.reserve(acc.size());
  for (auto& terms : acc) {
    if (terms.empty()) {
      ++result.dropped_empty_docs;
      continue;
    }
    Document doc;
    doc.term_ids.reserve(terms.size());
    doc.counts.reserve(terms.size());
    for (auto& [term, count] : terms) {
      doc.term_ids.push_back(term);
      doc.counts.push_back(static_cast<std::int32_t>(count));
    }
    result.corpus.docs.push_back(std::move(doc));
  }
  return result;
}

BowParseResult parse_bow_corpus(std::istream& docword, std::istream& vocab) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(vocab, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  while (!tokens.empty() && tokens.back().empty()) tokens.pop_back();

  BowParseResult result = parse_bow_docs(docword, static_cast<int>(tokens.size()));
  result.vocabulary = Vocabulary(std::move(tokens));
  return result;
}

void write_bow_corpus(std::ostream& out, const Corpus& corpus) {
  std::int64_t nnz = 0;
  for (const auto& doc : corpus.docs) nnz += static_cast<std::int64_t>(doc.term_ids.size());
  out << corpus.docs.size() << "\n" << corpus.vocab_size << "\n" << nnz << "\n";
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
    const auto& doc = corpus.docs[d];
    for (std::size_t i = 0; i < doc.term_ids.size(); ++i) {
      out << (d + 1) << " " << (doc.term_ids[i] + 1) << " " << doc.counts[i] << "\n";
    }
  }
}

void write_vocabulary(std::ostream& out, const Vocabulary& vocab) {
  for (const auto& token : vocab.tokens()) out << token << "\n";
}

LabeledCorpus attach_labels(Corpus corpus, std::istream& labels) {
  LabeledCorpus out;
  out.labels.assign(corpus.size(), -1);

  std::unordered_map<std::string, std::int32_t> class_index;
  std::string line;
  std::int64_t line_no = 0;
  std::int64_t assigned = 0;
  while (std::getline(labels, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string f_doc, f_label;
    fields >> f_doc >> f_label;
    std::int64_t doc_id;
    if (!read_int(f_doc, doc_id) || f_label.empty())
      fail("malformed label line: expected 'docID label'", line_no);
    if (doc_id < 1 || doc_id > static_cast<std::int64_t>(corpus.size()))
      fail("unknown docID in label file", line_no);
    auto [it, inserted] =
        class_index.emplace(f_label, static_cast<std::int32_t>(out.class_names.size()));
    if (inserted) out.class_names.push_back(f_label);
    auto& slot = out.labels[static_cast<std::size_t>(doc_id - 1)];
    if (slot != -1) fail("duplicate label for docID", line_no);
    slot = it->second;
    ++assigned;
  }
  if (assigned == 0) throw ParseError("empty label file");
  for (std::size_t d = 0; d < out.labels.size(); ++d) {
    if (out.labels[d] == -1) {
      std::ostringstream msg;
      msg << "missing docID " << (d + 1) << " in label file";
      throw ParseError(msg.str());
    }
  }
  out.corpus = std::move(corpus);
  return out;
}

MinibatchStream::MinibatchStream(const Corpus& corpus, int batch_size, StreamOrder order,
                                 std::uint64_t seed, int epochs,
                                 const std::vector<std::int32_t>* labels)
    : corpus_(&corpus),
      labels_(labels),
      batch_size_(batch_size),
      order_(order),
      seed_(seed),
      epochs_(epochs) {
  if (corpus.docs.empty()) throw std::invalid_argument("MinibatchStream: empty corpus");
  if (batch_size < 1) throw std::invalid_argument("MinibatchStream: batch_size must be >= 1");
  if (epochs < 1) throw std::invalid_argument("MinibatchStream: epochs must be >= 1");
  start_epoch();
}

void MinibatchStream::start_epoch() {
  perm_.resize(corpus_->size());
  for (std::size_t i = 0; i < perm_.size(); ++i) perm_[i] = i;
  if (order_ == StreamOrder::Shuffled) {
    Rng rng(mix_seed(seed_, static_cast<std::uint64_t>(epoch_)));
    rng.shuffle(perm_);
  }
  cursor_ = 0;
}

std::int64_t MinibatchStream::batches_per_epoch() const {
  const auto n = static_cast<std::int64_t>(corpus_->size());
  return (n + batch_size_ - 1) / batch_size_;
}

std::optional<Minibatch> MinibatchStream::next() {
  if (cursor_ >= perm_.size()) {
    if (epoch_ + 1 >= epochs_) return std::nullopt;
    ++epoch_;
    start_epoch();
  }
  const std::size_t end = std::min(cursor_ + static_cast<std::size_t>(batch_size_), perm_.size());
  Minibatch batch;
  batch.index = next_index_++;
  batch.docs.reserve(end - cursor_);
  if (labels_) batch.labels.reserve(end - cursor_);
  for (std::size_t i = cursor_; i < end; ++i) {
    batch.docs.push_back(&corpus_->docs[perm_[i]]);
    if (labels_) batch.labels.push_back((*labels_)[perm_[i]]);
  }
  cursor_ = end;
  return batch;
}

MinibatchStream make_stream(const Corpus& corpus, int batch_size, StreamOrder order,
                            std::uint64_t seed, int epochs) {
  return MinibatchStream(corpus, batch_size, order, seed, epochs);
}

MinibatchStream make_stream(const LabeledCorpus& corpus, int batch_size, StreamOrder order,
                            std::uint64_t seed, int epochs) {
  return MinibatchStream(corpus.corpus, batch_size, order, seed, epochs, &corpus.labels);
}

std::optional<HeldoutSplit> split_heldout(const Document& doc, double heldout_fraction,
                                          std::uint64_t seed) {
  if (!(heldout_fraction > 0.0 && heldout_fraction < 1.0))
    throw std::invalid_argument("split_heldout: fraction must be in (0, 1)");
  const std::int64_t total = doc.length();
  if (total < 2) return std::nullopt;

  std::int64_t heldout_n = std::llround(heldout_fraction * static_cast<double>(total));
  heldout_n = std::clamp<std::int64_t>(heldout_n, 1, total - 1);

  // Expand to occurrence slots, draw heldout_n of them without replacement.
  std::vector<std::int32_t> slots;
  slots.reserve(static_cast<std::size_t>(total));
  for (std::size_t i = 0; i < doc.term_ids.size(); ++i) {
    for (std::int32_t c = 0; c < doc.counts[i]; ++c) slots.push_back(static_cast<std::int32_t>(i));
  }
  Rng rng(seed);
  std::vector<std::int32_t> heldout_counts(doc.term_ids.size(), 0);
  std::int64_t remaining = total;
  for (std::int64_t k = 0; k < heldout_n; ++k) {
    const auto j = static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(remaining)));
    heldout_counts[static_cast<std::size_t>(slots[static_cast<std::size_t>(j)])]++;
    std::swap(slots[static_cast<std::size_t>(j)], slots[static_cast<std::size_t>(remaining - 1)]);
    --remaining;
  }

  HeldoutSplit split;
  for (std::size_t i = 0; i < doc.term_ids.size(); ++i) {
    const std::int32_t ho = heldout_counts[i];
    const std::int32_t obs = doc.counts[i] - ho;
    if (obs > 0) {
      split.observed.term_ids.push_back(doc.term_ids[i]);
      split.observed.counts.push_back(obs);
    }
    if (ho > 0) {
      split.heldout.term_ids.push_back(doc.term_ids[i]);
      split.heldout.counts.push_back(ho);
    }
  }
  return split;
}

}  // namespace tps
