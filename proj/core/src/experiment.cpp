#include "tps/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "tps/lda.hpp"
#include "tps/mathkit.hpp"
#include "tps/nb.hpp"
#include "tps/rng.hpp"
#include "tps/serialize.hpp"

namespace tps {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

int to_int(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  int out = 0;
  try {
    out = std::stoi(value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != value.size()) throw ConfigError(key + ": expected an integer, got '" + value + "'");
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != value.size()) throw ConfigError(key + ": expected a number, got '" + value + "'");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  unsigned long long out = 0;
  try {
    out = std::stoull(value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != value.size())
    throw ConfigError(key + ": expected a nonnegative integer, got '" + value + "'");
  return static_cast<std::uint64_t>(out);
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + value + "'");
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

}  // namespace

ModelKind parse_model_kind(const std::string& name) {
  if (name == "tps-lda") return ModelKind::TpsLda;
  if (name == "svb-lda") return ModelKind::SvbLda;
  if (name == "kps-lda") return ModelKind::KpsLda;
  if (name == "tps-nb") return ModelKind::TpsNb;
  if (name == "svb-nb") return ModelKind::SvbNb;
  if (name == "kps-nb") return ModelKind::KpsNb;
  throw ConfigError("unknown model '" + name +
                    "' (expected tps-lda, svb-lda, kps-lda, tps-nb, svb-nb, kps-nb)");
}

PriorSource parse_prior_source(const std::string& name) {
  if (name == "embedding") return PriorSource::Embedding;
  if (name == "graph") return PriorSource::Graph;
  if (name == "identity") return PriorSource::Identity;
  if (name == "nb-feature") return PriorSource::NbFeature;
  if (name == "matrix") return PriorSource::Matrix;
  throw ConfigError("unknown prior kind '" + name +
                    "' (expected embedding, graph, identity, nb-feature, matrix)");
}

std::string to_string(ModelKind model) {
  switch (model) {
    case ModelKind::TpsLda: return "tps-lda";
    case ModelKind::SvbLda: return "svb-lda";
    case ModelKind::KpsLda: return "kps-lda";
    case ModelKind::TpsNb: return "tps-nb";
    case ModelKind::SvbNb: return "svb-nb";
    case ModelKind::KpsNb: return "kps-nb";
  }
  return "";
}

std::string to_string(PriorSource source) {
  switch (source) {
    case PriorSource::Embedding: return "embedding";
    case PriorSource::Graph: return "graph";
    case PriorSource::Identity: return "identity";
    case PriorSource::NbFeature: return "nb-feature";
    case PriorSource::Matrix: return "matrix";
  }
  return "";
}

bool is_tps(ModelKind model) { return model == ModelKind::TpsLda || model == ModelKind::TpsNb; }
bool is_kps(ModelKind model) { return model == ModelKind::KpsLda || model == ModelKind::KpsNb; }
bool is_nb(ModelKind model) {
  return model == ModelKind::TpsNb || model == ModelKind::SvbNb || model == ModelKind::KpsNb;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "model") cfg.model = parse_model_kind(value);
  else if (key == "data") cfg.data = value;
  else if (key == "vocab") cfg.vocab = value;
  else if (key == "labels") cfg.labels = value;
  else if (key == "eval-data") cfg.eval_data = value;
  else if (key == "prior") cfg.prior = value;
  else if (key == "prior-kind") cfg.prior_kind = parse_prior_source(value);
  else if (key == "normalize-prior") cfg.normalize_prior = to_bool(key, value);
  else if (key == "knn") cfg.knn = to_int(key, value);
  else if (key == "topics") cfg.topics = to_int(key, value);
  else if (key == "classes") cfg.classes = to_int(key, value);
  else if (key == "alpha") cfg.alpha = to_double(key, value);
  else if (key == "sigma") cfg.sigma = to_double(key, value);
  else if (key == "kappa") cfg.kappa = to_double(key, value);
  else if (key == "batch-size") cfg.batch_size = to_int(key, value);
  else if (key == "heldout-fraction") cfg.heldout_fraction = to_double(key, value);
  else if (key == "npmi-top") cfg.npmi_top = to_int(key, value);
  else if (key == "eval-every") cfg.eval_every = to_int(key, value);
  else if (key == "epochs") cfg.epochs = to_int(key, value);
  else if (key == "seed") cfg.seed = to_u64(key, value);
  else if (key == "out") cfg.out = value;
  else if (key == "checkpoint") cfg.checkpoint = value;
  else if (key == "log-timing") cfg.log_timing = to_bool(key, value);
  else if (key == "shuffle") cfg.shuffle = to_bool(key, value);
  else if (key == "local-max-iters") cfg.local_max_iters = to_int(key, value);
  else if (key == "local-tol") cfg.local_tol = to_double(key, value);
  else if (key == "outer-max-iters") cfg.outer_max_iters = to_int(key, value);
  else if (key == "outer-tol") cfg.outer_tol = to_double(key, value);
  else if (key == "threads") cfg.threads = to_int(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
  cfg.set_keys.insert(key);
}

ExperimentConfig parse_config_file(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      std::ostringstream msg;
      msg << "config line " << line_no << ": expected 'key = value'";
      throw ConfigError(msg.str());
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty() || value.empty()) {
      std::ostringstream msg;
      msg << "config line " << line_no << ": empty key or value";
      throw ConfigError(msg.str());
    }
    try {
      set_config_value(cfg, key, value);
    } catch (const ConfigError& err) {
      std::ostringstream msg;
      msg << "config line " << line_no << ": " << err.what();
      throw ConfigError(msg.str());
    }
  }
  return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.batch_size < 1) throw ConfigError("batch-size must be >= 1");
  if (!(cfg.alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (!(cfg.heldout_fraction > 0.0 && cfg.heldout_fraction < 1.0))
    throw ConfigError("heldout-fraction must be in (0, 1)");
  if (cfg.npmi_top < 2) throw ConfigError("npmi-top must be >= 2");
  if (cfg.eval_every < 1) throw ConfigError("eval-every must be >= 1");
  if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (cfg.threads < 1) throw ConfigError("threads must be >= 1");
  if (cfg.local_max_iters < 1 || cfg.outer_max_iters < 1)
    throw ConfigError("iteration limits must be >= 1");
  if (!(cfg.local_tol > 0.0) || !(cfg.outer_tol > 0.0))
    throw ConfigError("tolerances must be positive");

  if (cfg.set_keys.count("sigma") && !is_tps(cfg.model))
    throw ConfigError("sigma applies to tps-* models only");
  if (cfg.set_keys.count("kappa") && !is_kps(cfg.model))
    throw ConfigError("kappa applies to kps-* models only");
  if (is_tps(cfg.model) && !(cfg.sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (is_kps(cfg.model) && cfg.kappa < 0.0) throw ConfigError("kappa must be nonnegative");

  if (is_nb(cfg.model)) {
    if (cfg.labels.empty()) throw ConfigError(to_string(cfg.model) + " requires labels");
    if (cfg.classes < 0) throw ConfigError("classes must be >= 0");
  } else {
    if (cfg.topics < 1) throw ConfigError("topics must be >= 1");
  }

  switch (cfg.prior_kind) {
    case PriorSource::Embedding:
      if (cfg.prior.empty()) throw ConfigError("prior-kind embedding requires a prior path");
      if (cfg.vocab.empty()) throw ConfigError("prior-kind embedding requires a vocab path");
      break;
    case PriorSource::Graph:
      if (cfg.prior.empty()) throw ConfigError("prior-kind graph requires a prior path");
      if (cfg.vocab.empty()) throw ConfigError("prior-kind graph requires a vocab path");
      if (cfg.knn < 1) throw ConfigError("prior-kind graph requires knn >= 1");
      break;
    case PriorSource::NbFeature:
      if (cfg.labels.empty()) throw ConfigError("prior-kind nb-feature requires labels");
      break;
    case PriorSource::Matrix:
      if (cfg.prior.empty()) throw ConfigError("prior-kind matrix requires a prior path");
      break;
    case PriorSource::Identity:
      break;
  }
}

namespace {

std::ifstream open_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  return in;
}

}  // namespace

LoadedData load_experiment_data(const ExperimentConfig& cfg) {
  if (cfg.data.empty()) throw ConfigError("data path is required");
  LoadedData data;
  auto docword = open_text(cfg.data);
  if (!cfg.vocab.empty()) {
    auto vocab = open_text(cfg.vocab);
    BowParseResult parsed = parse_bow_corpus(docword, vocab);
    data.corpus = std::move(parsed.corpus);
    data.vocabulary = std::move(parsed.vocabulary);
  } else {
    BowParseResult parsed = parse_bow_docs(docword, -1);
    data.corpus = std::move(parsed.corpus);
  }

  if (!cfg.labels.empty()) {
    auto labels = open_text(cfg.labels);
    LabeledCorpus labeled = attach_labels(std::move(data.corpus), labels);
    data.corpus = std::move(labeled.corpus);
    data.labels = std::move(labeled.labels);
    data.class_names = std::move(labeled.class_names);
    data.num_classes = static_cast<int>(data.class_names.size());
    if (cfg.classes > 0) {
      if (cfg.classes < data.num_classes) {
        std::ostringstream msg;
        msg << "classes = " << cfg.classes << " but the label file names " << data.num_classes;
        throw ConfigError(msg.str());
      }
      data.num_classes = cfg.classes;
    }
  }

  if (!cfg.eval_data.empty()) {
    auto eval = open_text(cfg.eval_data);
    BowParseResult parsed = parse_bow_docs(eval, data.corpus.vocab_size);
    data.eval_corpus = std::move(parsed.corpus);
  }
  return data;
}

std::shared_ptr<const KnowledgeMatrix> build_prior(const ExperimentConfig& cfg,
                                                   const LoadedData& data) {
  KnowledgeMatrix prior;
  switch (cfg.prior_kind) {
    case PriorSource::Identity:
      prior = make_identity_prior(data.corpus.vocab_size);
      break;
    case PriorSource::Embedding: {
      auto in = open_text(cfg.prior);
      prior = load_embeddings(in, *data.vocabulary, MissingPolicy::random(mix_seed(cfg.seed, 0xE)));
      break;
    }
    case PriorSource::Graph: {
      auto in = open_text(cfg.prior);
      const KnowledgeMatrix emb =
          load_embeddings(in, *data.vocabulary, MissingPolicy::random(mix_seed(cfg.seed, 0xE)));
      prior = build_knn_graph(emb, cfg.knn);
      break;
    }
    case PriorSource::NbFeature: {
      LabeledCorpus labeled;
      labeled.corpus = data.corpus;
      labeled.labels = data.labels;
      labeled.class_names = data.class_names;
      prior = concat_onehot_prior(build_nb_feature_prior(labeled));
      break;
    }
    case PriorSource::Matrix: {
      prior.values = load_matrix_cache(cfg.prior);
      prior.kind = KnowledgeKind::Custom;
      if (prior.values.cols() != data.corpus.vocab_size)
        throw ConfigError("prior matrix columns do not match the vocabulary size");
      break;
    }
  }
  if (cfg.normalize_prior) prior = normalize_unit_interval(prior);
  return std::make_shared<const KnowledgeMatrix>(std::move(prior));
}

Eigen::MatrixXd baseline_initial_stats(const KnowledgeMatrix& prior, int rows) {
  if (rows < 1) throw std::invalid_argument("baseline_initial_stats: rows must be >= 1");
  const auto V = prior.vocab_size();
  if (prior.kind == KnowledgeKind::Identity) return Eigen::MatrixXd::Ones(rows, V);

  Eigen::MatrixXd stats;
  if (prior.dim() == rows) {
    stats = prior.values;
  } else if (prior.dim() > rows) {
    stats = pca_reduce(prior, rows).values;
  } else {
    std::ostringstream msg;
    msg << "baseline_initial_stats: prior has " << prior.dim() << " rows, cannot derive " << rows
        << "; supply a matrix prior with matching rows or use the identity prior";
    throw std::invalid_argument(msg.str());
  }
  const double lo = stats.minCoeff();
  const double hi = stats.maxCoeff();
  if (lo < 0.0) {
    if (hi > lo) stats = (stats.array() - lo) / (hi - lo);
    else stats.setZero();
  }
  stats.array() += 0.01;  // Dirichlet parameters must stay strictly positive
  return stats;
}

void write_metric_csv_header(std::ostream& out) { out << "t,lpp,npmi,accuracy,elapsed_ms\n"; }

void write_metric_csv_row(std::ostream& out, const MetricRecord& record) {
  out << record.t << ',';
  if (record.lpp) out << format_double(*record.lpp);
  out << ',';
  if (record.npmi) out << format_double(*record.npmi);
  out << ',';
  if (record.accuracy) out << format_double(*record.accuracy);
  out << ',' << record.elapsed_ms << '\n';
  out.flush();
}

namespace {

struct ModelRunner {
  // Exactly one of the states is live, selected by cfg.model.
  TpsLdaState tps_lda;
  SuffStatsState svb_lda;
  TpsNbState tps_nb;
  NbSuffStats svb_nb;
  Eigen::MatrixXd kps_prior;
  ClassPrior class_prior;
  LdaConfig lda_cfg;
  MaximizerOptions nb_opts;
  ModelKind kind;

  Eigen::MatrixXd word_dists() const {
    switch (kind) {
      case ModelKind::TpsLda: return topics(tps_lda);
      case ModelKind::SvbLda:
      case ModelKind::KpsLda: return topics(svb_lda);
      case ModelKind::TpsNb: return class_word_dists(tps_nb);
      case ModelKind::SvbNb:
      case ModelKind::KpsNb: return class_word_dists(svb_nb);
    }
    return {};
  }

  Eigen::MatrixXd log_word_dists() const {
    switch (kind) {
      case ModelKind::TpsLda: return log_topics(tps_lda);
      case ModelKind::SvbLda:
      case ModelKind::KpsLda: return log_topics(svb_lda);
      case ModelKind::TpsNb: return log_class_word_dists(tps_nb);
      case ModelKind::SvbNb:
      case ModelKind::KpsNb: return log_class_word_dists(svb_nb);
    }
    return {};
  }

  void step(const Minibatch& batch, double kappa) {
    switch (kind) {
      case ModelKind::TpsLda: tps_lda = tps_lda_step(tps_lda, batch, lda_cfg); break;
      case ModelKind::SvbLda: svb_lda = svb_lda_step(svb_lda, batch, lda_cfg); break;
      case ModelKind::KpsLda: svb_lda = kps_lda_step(svb_lda, batch, kps_prior, kappa, lda_cfg); break;
      case ModelKind::TpsNb: tps_nb = tps_nb_step(tps_nb, batch, nb_opts); break;
      case ModelKind::SvbNb: svb_nb = svb_nb_step(svb_nb, batch); break;
      case ModelKind::KpsNb: svb_nb = kps_nb_step(svb_nb, batch, kps_prior, kappa); break;
    }
  }

  void save(const std::string& path) const {
    switch (kind) {
      case ModelKind::TpsLda: save_tps_lda_checkpoint(path, tps_lda); break;
      case ModelKind::SvbLda:
      case ModelKind::KpsLda: save_matrix_cache(path, svb_lda.xi); break;
      case ModelKind::TpsNb: save_tps_nb_checkpoint(path, tps_nb); break;
      case ModelKind::SvbNb:
      case ModelKind::KpsNb: save_matrix_cache(path, svb_nb.xi); break;
    }
  }
};

ModelRunner init_runner(const ExperimentConfig& cfg, const LoadedData& data,
                        const std::shared_ptr<const KnowledgeMatrix>& prior) {
  ModelRunner runner;
  runner.kind = cfg.model;
  runner.lda_cfg.num_topics = cfg.topics;
  runner.lda_cfg.alpha = cfg.alpha;
  runner.lda_cfg.local_max_iters = cfg.local_max_iters;
  runner.lda_cfg.local_tol = cfg.local_tol;
  runner.lda_cfg.outer_max_iters = cfg.outer_max_iters;
  runner.lda_cfg.outer_tol = cfg.outer_tol;
  runner.lda_cfg.threads = cfg.threads;

  const int rows = is_nb(cfg.model) ? data.num_classes : cfg.topics;
  if (is_nb(cfg.model)) {
    if (data.num_classes < 2) throw ConfigError("classification needs at least two classes");
    runner.class_prior = ClassPrior::uniform(data.num_classes);
  }

  switch (cfg.model) {
    case ModelKind::TpsLda:
      runner.tps_lda = tps_lda_init(cfg.topics, prior, cfg.sigma, mix_seed(cfg.seed, 0x1));
      break;
    case ModelKind::TpsNb:
      runner.tps_nb = tps_nb_init(data.num_classes, prior, cfg.sigma, mix_seed(cfg.seed, 0x1));
      runner.nb_opts = MaximizerOptions{};
      break;
    case ModelKind::SvbLda:
    case ModelKind::KpsLda:
      runner.svb_lda.xi = baseline_initial_stats(*prior, rows);
      runner.svb_lda.t = 0;
      break;
    case ModelKind::SvbNb:
    case ModelKind::KpsNb:
      runner.svb_nb.xi = baseline_initial_stats(*prior, rows);
      runner.svb_nb.t = 0;
      break;
  }
  if (is_kps(cfg.model)) runner.kps_prior = baseline_initial_stats(*prior, rows);
  return runner;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const LoadedData data = load_experiment_data(cfg);
  const auto prior = build_prior(cfg, data);
  ModelRunner runner = init_runner(cfg, data, prior);

  std::ofstream csv;
  if (!cfg.out.empty()) {
    csv.open(cfg.out, std::ios::binary);
    if (!csv) throw ConfigError("cannot open " + cfg.out + " for writing");
    write_metric_csv_header(csv);
    csv.flush();
  }

  ExperimentResult result;
  result.checkpoint_path =
      !cfg.checkpoint.empty() ? cfg.checkpoint : (cfg.out.empty() ? "" : cfg.out + ".ckpt");

  const StreamOrder order = cfg.shuffle ? StreamOrder::Shuffled : StreamOrder::AsIs;
  MinibatchStream stream = is_nb(cfg.model)
                               ? MinibatchStream(data.corpus, cfg.batch_size, order, cfg.seed,
                                                 cfg.epochs, &data.labels)
                               : MinibatchStream(data.corpus, cfg.batch_size, order, cfg.seed,
                                                 cfg.epochs);

  CooccurrenceIndex npmi_index;
  const bool fixed_eval = !data.eval_corpus.docs.empty();
  const std::uint64_t lpp_seed = mix_seed(cfg.seed, 0x11);

  auto batch = stream.next();
  std::int64_t t = 0;
  std::int64_t elapsed_acc = 0;
  while (batch) {
    auto next_batch = stream.next();
    const auto started = std::chrono::steady_clock::now();

    std::optional<double> batch_accuracy;
    if (is_nb(cfg.model)) {
      // Predict the incoming minibatch before training on it.
      const Eigen::MatrixXd log_beta = runner.log_word_dists();
      std::vector<int> predicted;
      predicted.reserve(batch->docs.size());
      for (const Document* doc : batch->docs)
        predicted.push_back(predict(*doc, log_beta, runner.class_prior).label);
      batch_accuracy = accuracy(predicted, batch->labels);
    }

    try {
      runner.step(*batch, cfg.kappa);
    } catch (const std::runtime_error& err) {
      if (!result.checkpoint_path.empty()) runner.save(result.checkpoint_path);
      throw std::runtime_error(std::string(err.what()) +
                               (result.checkpoint_path.empty()
                                    ? ""
                                    : "; last good checkpoint at " + result.checkpoint_path));
    }
    ++t;
    if (!is_nb(cfg.model)) {
      for (const Document* doc : batch->docs) npmi_index.add_document(*doc);
    }
    elapsed_acc += std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - started)
                       .count();

    if (t % cfg.eval_every == 0) {
      MetricRecord record;
      record.t = t;
      if (is_nb(cfg.model)) {
        record.accuracy = batch_accuracy;
      } else {
        const Eigen::MatrixXd beta = runner.word_dists();
        try {
          if (fixed_eval) {
            record.lpp = log_predictive_probability(beta, cfg.alpha, data.eval_corpus,
                                                    cfg.heldout_fraction, lpp_seed,
                                                    cfg.local_max_iters, cfg.local_tol);
          } else if (next_batch) {
            record.lpp = log_predictive_probability(beta, cfg.alpha, next_batch->docs,
                                                    cfg.heldout_fraction, lpp_seed,
                                                    cfg.local_max_iters, cfg.local_tol);
          }
        } catch (const std::invalid_argument&) {
          // no evaluable documents in this round; leave the field empty
        }
        if (cfg.npmi_top <= data.corpus.vocab_size)
          record.npmi = npmi(beta, cfg.npmi_top, npmi_index);
      }
      record.elapsed_ms = cfg.log_timing ? elapsed_acc : 0;
      elapsed_acc = 0;
      if (csv.is_open()) write_metric_csv_row(csv, record);
      result.records.push_back(record);
    }
    batch = std::move(next_batch);
  }
  result.minibatches = t;

  if (!result.checkpoint_path.empty()) runner.save(result.checkpoint_path);
  return result;
}

std::vector<SweepCellResult> sweep(
    const ExperimentConfig& base,
    const std::vector<std::pair<std::string, std::vector<std::string>>>& grid,
    const std::string& out_dir) {
  if (grid.empty()) throw ConfigError("sweep: empty grid");
  for (const auto& [key, values] : grid) {
    if (values.empty()) throw ConfigError("sweep: no values for '" + key + "'");
  }
  std::filesystem::create_directories(out_dir);

  std::size_t cells = 1;
  for (const auto& [key, values] : grid) cells *= values.size();

  std::ofstream summary(std::filesystem::path(out_dir) / "summary.csv", std::ios::binary);
  if (!summary) throw ConfigError("sweep: cannot write summary.csv in " + out_dir);
  summary << "cell,overrides,lpp,npmi,accuracy,status\n";

  std::vector<SweepCellResult> results;
  results.reserve(cells);
  std::vector<std::size_t> index(grid.size(), 0);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    SweepCellResult res;
    ExperimentConfig cfg = base;
    std::ostringstream overrides;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto& [key, values] = grid[g];
      const std::string& value = values[index[g]];
      set_config_value(cfg, key, value);
      res.overrides.emplace_back(key, value);
      if (g > 0) overrides << ';';
      overrides << key << '=' << value;
    }
    cfg.seed = mix_seed(base.seed, static_cast<std::uint64_t>(cell));
    std::ostringstream name;
    name << "cell_" << cell << ".csv";
    cfg.out = (std::filesystem::path(out_dir) / name.str()).string();
    res.csv_path = cfg.out;

    try {
      const ExperimentResult run = run_experiment(cfg);
      for (auto it = run.records.rbegin(); it != run.records.rend(); ++it) {
        if (!res.lpp && it->lpp) res.lpp = it->lpp;
        if (!res.npmi && it->npmi) res.npmi = it->npmi;
        if (!res.accuracy && it->accuracy) res.accuracy = it->accuracy;
      }
      res.ok = true;
    } catch (const std::exception& err) {
      res.error = err.what();
    }

    summary << cell << ',' << overrides.str() << ',';
    if (res.lpp) summary << format_double(*res.lpp);
    summary << ',';
    if (res.npmi) summary << format_double(*res.npmi);
    summary << ',';
    if (res.accuracy) summary << format_double(*res.accuracy);
    summary << ',' << (res.ok ? "ok" : "error") << '\n';
    summary.flush();
    results.push_back(std::move(res));

    for (std::size_t g = grid.size(); g-- > 0;) {
      if (++index[g] < grid[g].second.size()) break;
      index[g] = 0;
    }
  }
  return results;
}

ForgettingTrace forgetting_experiment(const SyntheticSpec& spec, ModelKind model,
                                      int inject_empty_every, std::ostream* csv) {
  if (model != ModelKind::SvbLda && model != ModelKind::SvbNb)
    throw std::invalid_argument("forgetting_experiment: model must be svb-lda or svb-nb");

  SyntheticSpec synth_spec = spec;
  synth_spec.labeled = (model == ModelKind::SvbNb);
  const SyntheticData data = synth_generate(synth_spec);

  const int rows = spec.num_topics;
  const double batch_tokens =
      static_cast<double>(spec.docs_per_batch) * static_cast<double>(spec.tokens_per_doc);

  // xi0 carries one minibatch's worth of mass so the ratio decays visibly from t=1.
  Eigen::MatrixXd xi0 = Eigen::MatrixXd::Constant(
      rows, spec.vocab_size, batch_tokens / (static_cast<double>(rows) * spec.vocab_size));

  LdaConfig lda_cfg;
  lda_cfg.num_topics = spec.num_topics;
  lda_cfg.alpha = spec.alpha;

  MinibatchStream stream =
      model == ModelKind::SvbNb
          ? MinibatchStream(data.corpus, spec.docs_per_batch, StreamOrder::AsIs, spec.seed, 1,
                            &data.labels)
          : MinibatchStream(data.corpus, spec.docs_per_batch, StreamOrder::AsIs, spec.seed, 1);

  std::vector<Eigen::MatrixXd> snapshots;
  snapshots.reserve(static_cast<std::size_t>(spec.n_batches) + 1);
  snapshots.push_back(xi0);
  std::vector<bool> empty_at;
  empty_at.push_back(false);

  SuffStatsState lda_state{xi0, 0};
  NbSuffStats nb_state{xi0, 0};
  std::int64_t t = 0;
  while (auto batch = stream.next()) {
    ++t;
    const bool inject = inject_empty_every > 0 && t % inject_empty_every == 0;
    Minibatch effective = std::move(*batch);
    if (inject) {
      effective.docs.clear();
      effective.labels.clear();
    }
    if (model == ModelKind::SvbLda) {
      lda_state = svb_lda_step(lda_state, effective, lda_cfg);
      snapshots.push_back(lda_state.xi);
    } else {
      nb_state = svb_nb_step(nb_state, effective);
      snapshots.push_back(nb_state.xi);
    }
    empty_at.push_back(inject);
  }

  ForgettingTrace trace = forgetting_trace(snapshots);
  if (csv) {
    *csv << "t,divergence,ratio,note\n";
    for (std::size_t i = 0; i < trace.divergence.size(); ++i) {
      *csv << i << ',' << format_double(trace.divergence[i]) << ','
           << format_double(trace.ratio[i]) << ','
           << (empty_at[i] ? "empty-minibatch" : "") << '\n';
    }
    if (trace.slope_valid) *csv << "# fitted_slope=" << format_double(trace.fitted_slope) << '\n';
    csv->flush();
  }
  return trace;
}

}  // namespace tps
