#include <exception>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "tps/evaluation.hpp"
#include "tps/experiment.hpp"
#include "tps/lda.hpp"
#include "tps/nb.hpp"
#include "tps/serialize.hpp"
#include "tps/synthetic.hpp"

namespace {

// Every flag funnels through set_config_value so CLI flags, config-file keys,
// and sweep overrides share one vocabulary; flags given on the command line win.
struct ConfigFlags {
  CLI::App* cmd;
  std::vector<std::pair<std::string, std::shared_ptr<std::string>>> holders;
  std::set<std::string> skip;  // keys the subcommand claims for itself

  void add(const std::string& key, const std::string& desc) {
    if (skip.count(key)) return;
    auto holder = std::make_shared<std::string>();
    cmd->add_option("--" + key, *holder, desc);
    holders.emplace_back(key, holder);
  }

  void add_model_flags() {
    add("model", "tps-lda | svb-lda | kps-lda | tps-nb | svb-nb | kps-nb");
    add("data", "docword file (UCI bag-of-words)");
    add("vocab", "vocabulary file, one token per line");
    add("labels", "label file, 'docID label' per line");
    add("eval-data", "fixed evaluation docword file; omit to score the next minibatch");
    add("prior", "embedding text file or binary matrix, per --prior-kind");
    add("prior-kind", "embedding | graph | identity | nb-feature | matrix");
    add("normalize-prior", "min-max each prior column to [0,1] (true/false)");
    add("knn", "neighbors for --prior-kind graph");
    add("topics", "topic count K");
    add("classes", "class count C (default: from the label file)");
    add("alpha", "symmetric Dirichlet hyperparameter");
    add("sigma", "random-walk penalty scale (tps-*)");
    add("kappa", "prior dimming exponent (kps-*)");
    add("batch-size", "documents per minibatch");
    add("heldout-fraction", "held-out token fraction for LPP");
    add("npmi-top", "top words per topic for NPMI and the topics command");
    add("eval-every", "evaluate every N minibatches");
    add("epochs", "passes over the data");
    add("seed", "root RNG seed");
    add("out", "metrics CSV path");
    add("checkpoint", "checkpoint path (default: <out>.ckpt)");
    add("log-timing", "record wall-clock ms per row; off keeps CSV bytes reproducible");
    add("shuffle", "shuffle documents each epoch (true/false)");
    add("local-max-iters", "document inference iteration cap");
    add("local-tol", "document inference tolerance");
    add("outer-max-iters", "per-minibatch outer loop cap (tps-lda)");
    add("outer-tol", "relative objective tolerance for the outer loop");
    add("threads", "worker threads for per-document inference");
  }

  void apply(tps::ExperimentConfig& cfg) const {
    for (const auto& [key, holder] : holders) {
      if (cmd->count("--" + key) > 0) tps::set_config_value(cfg, key, *holder);
    }
  }
};

tps::ExperimentConfig load_config(const std::string& config_path, const ConfigFlags& flags) {
  tps::ExperimentConfig cfg;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw tps::ConfigError("cannot open config file " + config_path);
    cfg = tps::parse_config_file(in);
  }
  flags.apply(cfg);
  return cfg;
}

void add_synth_flags(CLI::App* cmd, tps::SyntheticSpec& spec, std::string& drift) {
  cmd->add_option("--topics", spec.num_topics, "topic (or class) count");
  cmd->add_option("--vocab-size", spec.vocab_size, "vocabulary size");
  cmd->add_option("--knowledge-dim", spec.knowledge_dim, "rows of the true knowledge matrix");
  cmd->add_option("--alpha", spec.alpha, "Dirichlet hyperparameter for document mixtures");
  cmd->add_option("--docs-per-batch", spec.docs_per_batch, "documents per minibatch");
  cmd->add_option("--tokens-per-doc", spec.tokens_per_doc, "tokens per document");
  cmd->add_option("--batches", spec.n_batches, "number of minibatches");
  cmd->add_option("--drift", drift, "none | random-walk");
  cmd->add_option("--drift-sigma", spec.drift_sigma, "per-batch walk scale under --drift random-walk");
  cmd->add_option("--seed", spec.seed, "RNG seed");
  cmd->add_flag("--labeled", spec.labeled, "draw each document from a single class");
  cmd->add_option("--eval-docs", spec.eval_docs, "extra held-out documents from the first batch");
}

tps::SyntheticSpec::Drift parse_drift(const std::string& name) {
  if (name == "none") return tps::SyntheticSpec::Drift::None;
  if (name == "random-walk") return tps::SyntheticSpec::Drift::RandomWalk;
  throw tps::ConfigError("unknown drift '" + name + "' (expected none or random-walk)");
}

tps::Vocabulary read_vocab_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw tps::ConfigError("cannot open " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  while (!tokens.empty() && tokens.back().empty()) tokens.pop_back();
  return tps::Vocabulary(std::move(tokens));
}

int run_train(const tps::ExperimentConfig& cfg) {
  const tps::ExperimentResult result = tps::run_experiment(cfg);
  std::cout << "trained " << result.minibatches << " minibatches, " << result.records.size()
            << " metric rows";
  if (!cfg.out.empty()) std::cout << " -> " << cfg.out;
  if (!result.checkpoint_path.empty()) std::cout << ", checkpoint " << result.checkpoint_path;
  std::cout << "\n";
  return 0;
}

int run_sweep(const tps::ExperimentConfig& base, const std::vector<std::string>& grid_specs,
              const std::string& out_dir) {
  std::vector<std::pair<std::string, std::vector<std::string>>> grid;
  for (const auto& spec : grid_specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 >= spec.size())
      throw tps::ConfigError("bad --grid '" + spec + "' (expected key=v1,v2,...)");
    std::vector<std::string> values;
    std::istringstream list(spec.substr(eq + 1));
    std::string value;
    while (std::getline(list, value, ',')) {
      if (!value.empty()) values.push_back(value);
    }
    grid.emplace_back(spec.substr(0, eq), std::move(values));
  }
  const auto results = tps::sweep(base, grid, out_dir);
  std::size_t failed = 0;
  for (const auto& cell : results) {
    if (!cell.ok) ++failed;
  }
  std::cout << results.size() << " cells, " << failed << " failed -> " << out_dir
            << "/summary.csv\n";
  return failed == 0 ? 0 : 1;
}

int run_eval(const tps::ExperimentConfig& cfg_in, const std::string& checkpoint) {
  tps::ExperimentConfig cfg = cfg_in;
  const tps::LoadedData data = tps::load_experiment_data(cfg);

  Eigen::MatrixXd beta;
  std::int64_t t = 0;
  if (tps::is_tps(cfg.model)) {
    const auto prior = tps::build_prior(cfg, data);
    if (cfg.model == tps::ModelKind::TpsLda) {
      const tps::TpsLdaState state = tps::load_tps_lda_checkpoint(checkpoint, prior);
      beta = tps::topics(state);
      t = state.t;
    } else {
      const tps::TpsNbState state = tps::load_tps_nb_checkpoint(checkpoint, prior);
      beta = tps::class_word_dists(state);
      t = state.t;
    }
  } else {
    tps::SuffStatsState state{tps::load_matrix_cache(checkpoint), 0};
    beta = tps::topics(state);
  }

  tps::MetricRecord record;
  record.t = t;
  if (tps::is_nb(cfg.model)) {
    if (data.labels.empty()) throw tps::ConfigError("eval: classification needs --labels");
    if (beta.rows() != data.num_classes)
      throw tps::ConfigError("eval: checkpoint class count does not match the labels");
    const Eigen::MatrixXd log_beta = beta.array().log().matrix();
    const tps::ClassPrior prior = tps::ClassPrior::uniform(data.num_classes);
    std::vector<int> predicted;
    predicted.reserve(data.corpus.docs.size());
    for (const auto& doc : data.corpus.docs)
      predicted.push_back(tps::predict(doc, log_beta, prior).label);
    record.accuracy = tps::accuracy(predicted, data.labels);
  } else {
    record.lpp = tps::log_predictive_probability(beta, cfg.alpha, data.corpus,
                                                 cfg.heldout_fraction, cfg.seed,
                                                 cfg.local_max_iters, cfg.local_tol);
    if (cfg.npmi_top <= data.corpus.vocab_size)
      record.npmi = tps::npmi(beta, cfg.npmi_top, data.corpus);
  }

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!cfg.out.empty()) {
    file.open(cfg.out, std::ios::binary);
    if (!file) throw tps::ConfigError("cannot open " + cfg.out + " for writing");
    out = &file;
  }
  tps::write_metric_csv_header(*out);
  tps::write_metric_csv_row(*out, record);
  return 0;
}

int run_topics(const tps::ExperimentConfig& cfg, const std::string& checkpoint) {
  const tps::Vocabulary vocab = read_vocab_file(cfg.vocab);

  Eigen::MatrixXd beta;
  if (tps::is_tps(cfg.model)) {
    tps::LoadedData data;
    data.corpus.vocab_size = static_cast<int>(vocab.size());
    data.vocabulary = vocab;
    const auto prior = tps::build_prior(cfg, data);
    if (cfg.model == tps::ModelKind::TpsLda) {
      beta = tps::topics(tps::load_tps_lda_checkpoint(checkpoint, prior));
    } else {
      beta = tps::class_word_dists(tps::load_tps_nb_checkpoint(checkpoint, prior));
    }
  } else {
    tps::SuffStatsState state{tps::load_matrix_cache(checkpoint), 0};
    beta = tps::topics(state);
  }
  if (beta.cols() != static_cast<Eigen::Index>(vocab.size()))
    throw tps::ConfigError("topics: checkpoint vocabulary size does not match --vocab");

  const auto tables = tps::top_words(beta, vocab, cfg.npmi_top);
  for (std::size_t k = 0; k < tables.size(); ++k) {
    std::cout << "topic " << k << ":";
    for (const auto& word : tables[k]) std::cout << ' ' << word;
    std::cout << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"streaming topic models and classifiers with transformed knowledge priors"};
  app.require_subcommand(1);

  std::string config_path;

  auto* train = app.add_subcommand("train", "run one streaming experiment");
  train->add_option("--config", config_path, "flat key = value config file; flags override");
  ConfigFlags train_flags{train, {}};
  train_flags.add_model_flags();

  auto* sweep_cmd = app.add_subcommand("sweep", "grid of experiments with a summary CSV");
  std::string sweep_config;
  std::vector<std::string> grid_specs;
  std::string sweep_dir = "sweep_out";
  sweep_cmd->add_option("--config", sweep_config, "base config file");
  sweep_cmd->add_option("--grid", grid_specs, "key=v1,v2,... (repeatable)")->required();
  sweep_cmd->add_option("--out-dir", sweep_dir, "directory for per-cell CSVs and summary.csv");
  ConfigFlags sweep_flags{sweep_cmd, {}};
  sweep_flags.add_model_flags();

  auto* synth = app.add_subcommand("synth", "generate a synthetic stream");
  tps::SyntheticSpec synth_spec;
  std::string synth_drift = "none";
  std::string synth_dir = "synth_out";
  add_synth_flags(synth, synth_spec, synth_drift);
  synth->add_option("--out-dir", synth_dir, "output directory");

  auto* forgetting = app.add_subcommand("forgetting", "measure how fast SVB forgets its prior");
  tps::SyntheticSpec forget_spec;
  std::string forget_drift = "none";
  std::string forget_model = "svb-nb";
  std::string forget_out;
  int inject_empty_every = 0;
  add_synth_flags(forgetting, forget_spec, forget_drift);
  forgetting->add_option("--model", forget_model, "svb-lda | svb-nb");
  forgetting->add_option("--inject-empty-every", inject_empty_every,
                         "replace every n-th minibatch with an empty one");
  forgetting->add_option("--out", forget_out, "trace CSV path");

  auto* eval = app.add_subcommand("eval", "score a checkpoint on a corpus");
  std::string eval_checkpoint;
  eval->add_option("--checkpoint", eval_checkpoint, "model checkpoint")->required();
  ConfigFlags eval_flags{eval, {}, {"checkpoint"}};
  eval_flags.add_model_flags();

  auto* topics_cmd = app.add_subcommand("topics", "print top-word tables from a checkpoint");
  std::string topics_checkpoint;
  topics_cmd->add_option("--checkpoint", topics_checkpoint, "model checkpoint")->required();
  ConfigFlags topics_flags{topics_cmd, {}, {"checkpoint"}};
  topics_flags.add_model_flags();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return run_train(load_config(config_path, train_flags));
    if (sweep_cmd->parsed())
      return run_sweep(load_config(sweep_config, sweep_flags), grid_specs, sweep_dir);
    if (synth->parsed()) {
      synth_spec.drift = parse_drift(synth_drift);
      const tps::SyntheticData data = tps::synth_generate(synth_spec);
      const auto files = tps::write_synthetic(data, synth_dir);
      std::cout << "wrote";
      for (const auto& name : files) std::cout << ' ' << synth_dir << '/' << name;
      std::cout << "\n";
      return 0;
    }
    if (forgetting->parsed()) {
      forget_spec.drift = parse_drift(forget_drift);
      std::ofstream csv;
      std::ostream* out = nullptr;
      if (!forget_out.empty()) {
        csv.open(forget_out, std::ios::binary);
        if (!csv) throw tps::ConfigError("cannot open " + forget_out + " for writing");
        out = &csv;
      }
      const tps::ForgettingTrace trace = tps::forgetting_experiment(
          forget_spec, tps::parse_model_kind(forget_model), inject_empty_every, out);
      std::cout << "final ratio " << trace.ratio.back();
      if (trace.slope_valid) std::cout << ", fitted log-log slope " << trace.fitted_slope;
      std::cout << "\n";
      return 0;
    }
    if (eval->parsed()) {
      tps::ExperimentConfig cfg;
      eval_flags.apply(cfg);
      return run_eval(cfg, eval_checkpoint);
    }
    if (topics_cmd->parsed()) {
      tps::ExperimentConfig cfg;
      topics_flags.apply(cfg);
      if (cfg.vocab.empty()) throw tps::ConfigError("topics: --vocab is required");
      return run_topics(cfg, topics_checkpoint);
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
