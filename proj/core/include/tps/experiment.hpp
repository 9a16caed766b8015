#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tps/corpus.hpp"
#include "tps/evaluation.hpp"
#include "tps/knowledge.hpp"
#include "tps/synthetic.hpp"

namespace tps {

enum class ModelKind { TpsLda, SvbLda, KpsLda, TpsNb, SvbNb, KpsNb };
enum class PriorSource { Embedding, Graph, Identity, NbFeature, Matrix };

ModelKind parse_model_kind(const std::string& name);
PriorSource parse_prior_source(const std::string& name);
std::string to_string(ModelKind model);
std::string to_string(PriorSource source);
bool is_tps(ModelKind model);
bool is_kps(ModelKind model);
bool is_nb(ModelKind model);

struct ExperimentConfig {
  ModelKind model = ModelKind::TpsLda;
  std::string data;
  std::string vocab;
  std::string labels;
  std::string eval_data;
  std::string prior;
  PriorSource prior_kind = PriorSource::Identity;
  bool normalize_prior = false;
  int knn = 500;
  int topics = 50;
  int classes = 0;  // 0: take the class count from the label file
  double alpha = 0.01;
  double sigma = 1.0;
  double kappa = 0.0;
  int batch_size = 500;
  double heldout_fraction = 0.2;
  int npmi_top = 10;
  int eval_every = 1;
  int epochs = 1;
  std::uint64_t seed = 0;
  std::string out;
  std::string checkpoint;
  bool log_timing = false;  // off: elapsed_ms prints 0, keeping CSV bytes reproducible
  bool shuffle = false;
  int local_max_iters = 100;
  double local_tol = 1e-5;
  int outer_max_iters = 10;
  double outer_tol = 1e-4;
  int threads = 1;

  std::set<std::string> set_keys;  // keys assigned explicitly via file or flag
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat "key = value" lines; '#' starts a comment; keys match the CLI long flags.
ExperimentConfig parse_config_file(std::istream& in);
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
void validate_config(const ExperimentConfig& cfg);

struct LoadedData {
  Corpus corpus;
  std::optional<Vocabulary> vocabulary;
  std::vector<std::int32_t> labels;
  std::vector<std::string> class_names;
  int num_classes = 0;
  Corpus eval_corpus;  // empty unless cfg.eval_data is set
};

LoadedData load_experiment_data(const ExperimentConfig& cfg);

std::shared_ptr<const KnowledgeMatrix> build_prior(const ExperimentConfig& cfg,
                                                   const LoadedData& data);

// K x V (or C x V) positive matrix seeding SVB/KPS: the prior itself when shapes
// match, its PCA scores otherwise, min-max shifted when negative, plus a 0.01 floor.
// The identity prior maps to all-ones.
Eigen::MatrixXd baseline_initial_stats(const KnowledgeMatrix& prior, int rows);

void write_metric_csv_header(std::ostream& out);
void write_metric_csv_row(std::ostream& out, const MetricRecord& record);

struct ExperimentResult {
  std::vector<MetricRecord> records;
  std::int64_t minibatches = 0;
  std::string checkpoint_path;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

struct SweepCellResult {
  std::vector<std::pair<std::string, std::string>> overrides;
  std::string csv_path;
  std::optional<double> lpp;
  std::optional<double> npmi;
  std::optional<double> accuracy;
  bool ok = false;
  std::string error;
};

// Cartesian product over the grid, one run_experiment per cell with an isolated
// seed; failures are recorded and the sweep continues. Writes out_dir/summary.csv.
std::vector<SweepCellResult> sweep(
    const ExperimentConfig& base,
    const std::vector<std::pair<std::string, std::vector<std::string>>>& grid,
    const std::string& out_dir);

// Runs the SVB variant on a synthetic stream, snapshotting xi each minibatch.
// inject_empty_every > 0 replaces every n-th minibatch with an empty one, noted
// in the CSV; the fitted decay slope lands on a trailing comment line.
ForgettingTrace forgetting_experiment(const SyntheticSpec& spec, ModelKind model,
                                      int inject_empty_every = 0, std::ostream* csv = nullptr);

}  // namespace tps
