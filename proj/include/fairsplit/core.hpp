#pragma once

// Shared data model: datasets with a group partition, predictors, and the
// decoupled dispatcher that routes each example to its group's predictor.
//
// Classifications are written z throughout (a prediction for example i is
// z_i); the same quantity is often written y-hat elsewhere.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace fairsplit {

/// 1-based group index, matching the external formats and reports.
using GroupIndex = std::uint32_t;

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Mode { binary, regression };

enum class ColumnKind { numeric, binary, categorical_collapsed };

struct ColumnMeta {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
};

const char* to_string(Mode mode);
const char* to_string(ColumnKind kind);

/// Feature matrix, labels and group assignment for n examples.
///
/// The struct itself does not enforce its invariants; `validate_dataset`
/// reports every violation so that malformed inputs can be diagnosed.
struct Dataset {
  FeatureMatrix features;
  std::vector<double> labels;
  std::vector<GroupIndex> groups;
  std::size_t group_count = 0;
  Mode mode = Mode::binary;
  std::vector<ColumnMeta> columns;
  /// Permit groups with no rows (otherwise every group needs n_k >= 1).
  bool allow_empty_groups = false;

  std::size_t rows() const { return labels.size(); }
  std::size_t cols() const { return static_cast<std::size_t>(features.cols()); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * cols(), cols()};
  }

  /// Row indices of group k in ascending order.
  std::vector<std::size_t> group_rows(GroupIndex k) const;
  std::vector<std::size_t> group_sizes() const;  // index k-1 holds n_k

  Dataset subset(std::span<const std::size_t> row_ids) const;
  Dataset without_column(std::size_t column) const;
};

struct Violation {
  std::size_t row;     // 0-based; meaningless for dataset-level rules
  std::size_t column;  // 0-based feature column, or npos
  std::string rule;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// Empty iff every Dataset invariant holds.
std::vector<Violation> validate_dataset(const Dataset& ds);

// ---------------------------------------------------------------------------
// Predictors

struct ConstantPredictor {
  double value = 0.0;
};

/// w.x + b; unthresholded (regression output).
struct LinearModel {
  std::vector<double> weights;
  double intercept = 0.0;
  /// Set when the normal equations were singular and a ridge term was added.
  bool ridge_fallback = false;

  double evaluate(std::span<const double> x) const;
};

/// z = 1 iff score(x) > threshold. A single-feature threshold is a score with
/// one unit weight; a negative unit weight flips the orientation.
struct ThresholdClassifier {
  LinearModel score;
  double threshold = 0.0;
};

/// z = 1 iff w.x + b >= 0.
struct Halfspace {
  std::vector<double> weights;
  double bias = 0.0;
};

/// Explicit lookup from feature vectors to outputs.
struct TruthTable {
  std::map<std::vector<double>, double> table;
  double fallback = 0.0;
};

using Predictor = std::variant<ConstantPredictor, LinearModel, ThresholdClassifier, Halfspace, TruthTable>;

double predict(const Predictor& model, std::span<const double> x);
std::vector<double> predict_all(const Predictor& model, const Dataset& ds);
std::vector<double> predict_rows(const Predictor& model, const Dataset& ds,
                                 std::span<const std::size_t> row_ids);

/// One chosen predictor per group plus the joint loss it achieved on the
/// data it was selected on.
struct DecoupledClassifier {
  std::vector<Predictor> per_group;
  double achieved_loss = 0.0;
  std::string loss_spec_id;
  /// Index of the chosen candidate within each group's candidate list.
  std::vector<std::size_t> selection;
  /// A strict-parity loss had no feasible combination (see product_search).
  bool parity_infeasible = false;
};

/// Applies per_group[g-1] to x. Throws std::out_of_range for a bad group.
double predict_decoupled(const DecoupledClassifier& dc, std::span<const double> x, GroupIndex g);

}  // namespace fairsplit
