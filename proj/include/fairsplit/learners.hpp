#pragma once

// Base learners that satisfy the optimal-learner contract: for every
// achievable number of in-group positives P they return at most one
// classifier, and it has minimal (weighted) error among classifiers with
// exactly P positives.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairsplit/core.hpp"

namespace fairsplit {

/// Rows with per-row weights. `in_group` marks rows whose positive
/// classifications count toward P; out-group rows only contribute error.
struct WeightedSample {
  FeatureMatrix features;
  std::vector<double> labels;
  std::vector<double> weights;
  std::vector<std::uint8_t> in_group;

  std::size_t size() const { return labels.size(); }
  std::size_t cols() const { return static_cast<std::size_t>(features.cols()); }
  std::span<const double> row(std::size_t i) const { return {features.data() + i * cols(), cols()}; }
  double total_weight() const;
  std::size_t in_group_count() const;

  static WeightedSample from_rows(const Dataset& ds, std::span<const std::size_t> rows, double weight = 1.0,
                                  bool in_group = true);
  void append(const Dataset& ds, std::span<const std::size_t> rows, double weight, bool in_group);
};

struct CandidateClassifier {
  Predictor model;
  /// Positive classifications on the sample's in-group rows (binary learners).
  std::size_t positives = 0;
  /// sum w_i |y_i - z_i| / W for classifiers, sum w_i (y_i - z_i)^2 / W for
  /// regressors.
  double weighted_error = 0.0;
  /// Down-weight used for out-group rows, when trained by a transfer learner.
  std::optional<double> theta;
  /// Position in the finite class, for exhaustive learners.
  std::optional<std::size_t> class_index;
};

class BaseLearner {
 public:
  virtual ~BaseLearner() = default;
  virtual std::vector<CandidateClassifier> fit(const WeightedSample& sample) const = 0;
  virtual bool binary() const = 0;
  virtual std::string name() const = 0;
};

// ---------------------------------------------------------------------------
// Weighted least squares

struct LeastSquaresOptions {
  bool allow_ridge_fallback = true;
  /// Ridge strength relative to trace(G) / (d + 1).
  double ridge_scale = 1e-10;
  /// Reciprocal condition estimate below which G counts as singular.
  double singular_rcond = 1e-13;
};

/// Minimizes sum (w_i / W)(y_i - (w.x_i + b))^2 via the weighted normal
/// equations. Rows of zero weight are skipped entirely, so the result is
/// bit-identical to fitting without them. Throws std::runtime_error on a
/// singular system when the ridge fallback is disabled.
LinearModel fit_weighted_least_squares(const WeightedSample& sample, const LeastSquaresOptions& options = {});

/// Weighted mean squared error of a model on a sample.
double weighted_squared_error(const LinearModel& model, const WeightedSample& sample);

// ---------------------------------------------------------------------------
// Threshold sweep

/// z = 1 iff score > threshold.
struct ThresholdCut {
  double threshold = 0.0;
  std::size_t positives = 0;    // in-group positives
  double weighted_error = 0.0;  // normalized by total weight
};

struct SweepResult {
  std::vector<ThresholdCut> cuts;         // ascending in positives
  std::vector<std::size_t> omitted;       // P values no threshold reaches (ties)
};

/// One cut per achievable positive count, via one sort and a prefix sweep.
/// Thresholds are midpoints between consecutive distinct scores plus +-inf.
SweepResult sweep_thresholds(std::span<const double> scores, std::span<const double> labels);

/// Weighted form: P counts only in-group rows, and among cuts with the same
/// P the one of least weighted error wins (ties: the larger threshold).
/// Rows with zero weight outside the group do not generate thresholds.
SweepResult sweep_thresholds(std::span<const double> scores, std::span<const double> labels,
                             std::span<const double> weights, std::span<const std::uint8_t> in_group);

/// The thresholds a sweep over these scores considers, from +inf (no
/// positives) down to -inf (all positive).
std::vector<double> candidate_thresholds(std::span<const double> scores);

// ---------------------------------------------------------------------------
// Finite classes

/// An explicit list of classifiers; a member's identifier is its position.
struct FiniteClass {
  std::vector<Predictor> members;

  std::size_t size() const { return members.size(); }
};

/// Threshold classifiers on `score` at every candidate threshold of the
/// given score values. With both_orientations, the flipped rules follow.
FiniteClass threshold_class(std::span<const double> score_values, const LinearModel& score, bool both_orientations);

inline constexpr std::size_t kDefaultExhaustiveBudget = 10'000'000;

/// For each achievable in-group positive count, the member of least weighted
/// error (ties: lowest identifier). Throws BudgetExceeded when
/// |C| * m > budget.
std::vector<CandidateClassifier> exhaustive_learn(const FiniteClass& cls, const WeightedSample& sample,
                                                  std::size_t budget = kDefaultExhaustiveBudget);

/// One representative halfspace I[w.x + b >= 0] for each labeling of the
/// 2-D points that some halfspace realizes.
FiniteClass enumerate_linear_separators_2d(const FeatureMatrix& points, std::size_t max_points = 20);

// ---------------------------------------------------------------------------
// Learner adapters

/// Regression: a single weighted least-squares fit.
class LeastSquaresLearner final : public BaseLearner {
 public:
  explicit LeastSquaresLearner(LeastSquaresOptions options = {}) : options_(options) {}
  std::vector<CandidateClassifier> fit(const WeightedSample& sample) const override;
  bool binary() const override { return false; }
  std::string name() const override { return "least_squares"; }

 private:
  LeastSquaresOptions options_;
};

/// Learns a real-valued score and returns one threshold classifier per
/// achievable P. The score is a weighted least-squares fit by default, or a
/// fixed signed feature.
class ThresholdSweepLearner final : public BaseLearner {
 public:
  ThresholdSweepLearner() = default;
  static ThresholdSweepLearner on_feature(std::size_t column, double sign = 1.0);

  std::vector<CandidateClassifier> fit(const WeightedSample& sample) const override;
  bool binary() const override { return true; }
  std::string name() const override;

 private:
  std::optional<std::size_t> feature_;
  double sign_ = 1.0;
  LeastSquaresOptions options_;
};

class ExhaustiveLearner final : public BaseLearner {
 public:
  explicit ExhaustiveLearner(FiniteClass cls, std::size_t budget = kDefaultExhaustiveBudget)
      : class_(std::move(cls)), budget_(budget) {}
  std::vector<CandidateClassifier> fit(const WeightedSample& sample) const override {
    return exhaustive_learn(class_, sample, budget_);
  }
  bool binary() const override { return true; }
  std::string name() const override { return "exhaustive"; }
  const FiniteClass& finite_class() const { return class_; }

 private:
  FiniteClass class_;
  std::size_t budget_;
};

/// Forwards to another learner and counts fit calls.
class CountingLearner final : public BaseLearner {
 public:
  CountingLearner(const BaseLearner& inner, std::size_t& counter) : inner_(inner), counter_(counter) {}
  std::vector<CandidateClassifier> fit(const WeightedSample& sample) const override {
    ++counter_;
    return inner_.fit(sample);
  }
  bool binary() const override { return inner_.binary(); }
  std::string name() const override { return inner_.name(); }

 private:
  const BaseLearner& inner_;
  std::size_t& counter_;
};

}  // namespace fairsplit
