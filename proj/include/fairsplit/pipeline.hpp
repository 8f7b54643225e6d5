#pragma once

// Experiment harness: CSV ingestion and preprocessing, choice of the
// sensitive attribute, nested cross-validation over the four baselines and
// report emission.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairsplit/core.hpp"
#include "fairsplit/csv.hpp"
#include "fairsplit/losses.hpp"
#include "fairsplit/transfer.hpp"

namespace fairsplit {

using OrderedJson = nlohmann::ordered_json;

enum class Baseline { blind, coupled, decoupled, decoupled_transfer };
const char* to_string(Baseline b);
std::vector<Baseline> parse_baselines(std::string_view text);
inline const std::vector<Baseline> kAllBaselines{Baseline::blind, Baseline::coupled, Baseline::decoupled,
                                                 Baseline::decoupled_transfer};

/// Every non-label column after preprocessing, plus the processed labels.
struct IngestedTable {
  FeatureMatrix features;
  std::vector<ColumnMeta> columns;
  std::vector<double> labels;
  Mode mode = Mode::binary;
  std::vector<std::string> log;
};

/// Labels: in binary mode the most common class becomes 1 and the rest 0;
/// in regression mode values are min-max scaled to [0, 1]. Columns with two
/// distinct values become binary (numeric {a < b} maps a to 0 and b to 1,
/// text maps the most frequent value to 1). Text columns with more values
/// collapse to most-frequent versus rest. Frequency ties go to the value
/// seen first. Empty or "?" cells, and columns mixing numbers and text,
/// are errors naming row and column.
IngestedTable ingest_table(const CsvTable& table, const std::string& label_column, Mode mode);
IngestedTable ingest_csv(const std::filesystem::path& path, const std::string& label_column, Mode mode);

struct SensitiveSelection {
  std::size_t column = 0;
  std::string name;
  Dataset dataset;  // group 1 where the column is 0, group 2 where it is 1
  std::vector<std::string> log;
};

/// The requested column, or the first binary column with at least
/// min_per_group rows on each side. Larger groups are subsampled to
/// max_per_group (seeded, original row order kept). Throws
/// DatasetDiscarded when no column qualifies.
SensitiveSelection select_sensitive_attribute(const IngestedTable& table, const std::optional<std::string>& requested,
                                              std::size_t min_per_group = 100, std::size_t max_per_group = 10000,
                                              std::uint64_t seed = 0);

struct ExperimentConfig {
  std::filesystem::path input_path;
  std::string label_column;
  std::optional<std::string> sensitive_column;
  Mode mode = Mode::regression;
  std::string loss = "balanced";
  std::size_t outer_folds = 5;
  TransferConfig transfer;
  std::uint64_t seed = 0;
  std::vector<Baseline> baselines = kAllBaselines;
  std::filesystem::path output_path = "out";
  std::size_t min_per_group = 100;
  std::size_t max_per_group = 10000;
  /// Blind mean test loss below this marks the dataset as trivial.
  double trivial_loss = 0.001;

  /// Throws ConfigError.
  void validate() const;
};

struct DatasetInfo {
  std::string path;
  std::string sensitive_column;
  std::vector<std::string> preprocessing_log;
};

struct ExperimentResult {
  OrderedJson report;
  /// Per fold, the trained models of each baseline, with every number
  /// written as its shortest round-trip decimal.
  std::vector<OrderedJson> fold_models;
  bool discarded_trivial = false;
};

/// Stratified by group: each group's rows are shuffled and cut into
/// contiguous blocks, one per fold. Returns the test rows of each fold.
std::vector<std::vector<std::size_t>> stratified_folds(const Dataset& ds, std::size_t folds, std::uint64_t seed);

/// Seed for a sub-task, derived from the master seed by a splitmix64 chain.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

/// The held-out rows of each outer fold, as run_experiment_on_dataset uses them.
std::vector<std::vector<std::size_t>> outer_folds(const Dataset& ds, const ExperimentConfig& cfg);

/// Reads, preprocesses and runs. Throws DatasetDiscarded, ConfigError.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Runs on an already prepared dataset whose `sensitive_column` holds the
/// group attribute.
ExperimentResult run_experiment_on_dataset(const ExperimentConfig& cfg, const Dataset& ds,
                                           std::size_t sensitive_column, const DatasetInfo& info);

/// Writes report.json and summary.csv into `dir`.
void emit_report(const ExperimentResult& result, const std::filesystem::path& dir);

std::string summary_csv(const OrderedJson& report);

OrderedJson predictor_to_json(const Predictor& p);

}  // namespace fairsplit
