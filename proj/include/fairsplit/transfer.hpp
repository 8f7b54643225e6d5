#pragma once

// Transfer across groups by down-weighting out-group rows with theta, the
// error bound that motivates it, and cross-validated choice of theta.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairsplit/core.hpp"
#include "fairsplit/decouple.hpp"
#include "fairsplit/learners.hpp"

namespace fairsplit {

/// {0, 2^-10, 2^-9, ..., 2^-1, 1}
std::vector<double> default_theta_grid();

struct TransferConfig {
  std::vector<double> theta_grid = default_theta_grid();
  std::size_t inner_folds = 5;
  std::optional<double> delta_bound;
  double confidence = 0.05;
  std::optional<double> class_size;

  /// Throws ConfigError on an unsorted, duplicated or out-of-range grid,
  /// fewer than 2 folds or a confidence outside (0, 1).
  void validate() const;

  /// "default" or a comma-separated list of reals.
  static std::vector<double> parse_grid(std::string_view text);
};

struct BoundInputs {
  double n_k = 1;
  double n_minus_k = 0;
  double delta_cap = 0;   // Delta
  double confidence = 0.05;
  double class_size = 1;  // |C|

  void validate() const;
};

/// Fits `base` on in-group rows at weight 1 followed by out-group rows at
/// weight theta. Candidates record theta. Throws std::invalid_argument when
/// theta is outside [0, 1] or there are no in-group rows.
std::vector<CandidateClassifier> transfer_fit(const Dataset& ds, std::span<const std::size_t> in_rows,
                                              std::span<const std::size_t> out_rows, double theta,
                                              const BaseLearner& base);

/// Transfer learner with a fixed theta per group. With several thetas for a
/// group, the candidates of all fits are pooled; for classifiers, each
/// positive count keeps the candidate of least in-group training error
/// (ties: smaller theta).
class DownWeightTransfer final : public TransferLearner {
 public:
  DownWeightTransfer(const BaseLearner& base, std::vector<std::vector<double>> thetas_by_group)
      : base_(base), thetas_(std::move(thetas_by_group)) {}
  static DownWeightTransfer uniform(const BaseLearner& base, double theta, std::size_t groups);

  std::vector<CandidateClassifier> fit(const Dataset& ds, std::span<const std::size_t> in_rows,
                                       std::span<const std::size_t> out_rows, GroupIndex k) const override;

 private:
  const BaseLearner& base_;
  std::vector<std::vector<double>> thetas_;
};

/// (sqrt(2 (n_k + theta^2 n_-k) ln(2|C|/delta)) + theta n_-k Delta) / (n_k + theta n_-k)
double f_bound(double theta, const BoundInputs& in);

enum class ThetaBranch { boundary_zero, interior };
const char* to_string(ThetaBranch branch);

struct ThetaStar {
  double theta = 0;
  double f_value = 0;
  ThetaBranch branch = ThetaBranch::boundary_zero;
  /// sqrt((2/n_k) ln(2|C|/delta)), the value of f at theta = 0.
  double r = 0;
  /// Delta - r (1 - theta) / sqrt(1 + theta^2 n_-k / n_k); zero at an
  /// interior optimum.
  double stationarity_residual = 0;
  /// Closed form sqrt(beta^2/4 + (n_-k/n_k)(1 - beta)) - beta/2 under the two
  /// readings of beta: Delta^2 * r^2 and Delta^2 / r^2. Only for interior
  /// optima; the flags say whether each lands within 1e-6 of theta.
  std::optional<double> closed_form_product;
  std::optional<double> closed_form_ratio;
  bool product_agrees = false;
  bool ratio_agrees = false;
};

/// Minimizes f over [0, 1]. f is unimodal there; the interior optimum is
/// found by bisection on the sign of the derivative.
ThetaStar theta_star(const BoundInputs& in);

/// 5 R K tau + R sum_k min(tau sqrt(1/(nu_k - tau)), Delta) with
/// tau = sqrt((2/n) ln(8 |C| (n + K)/delta)); groups with nu_k <= tau use
/// Delta. Returns +inf when tau >= 1.
double generalization_bound(std::span<const double> nu, double R, double n, std::size_t K, double class_size,
                            double confidence, double delta_cap);

struct ThetaSelection {
  double theta = 0;
  std::vector<double> mean_loss;  // per grid value
};

/// Seeded fold assignment: shuffle then contiguous blocks.
std::vector<std::vector<std::size_t>> make_folds(std::span<const std::size_t> rows, std::size_t folds,
                                                 std::uint64_t seed);

/// Picks theta for one group by inner cross-validation over the grid. Folds
/// split the in-group rows; out-group rows are available to every fold.
/// The validation metric is in-group mean squared error for regression and
/// in-group 0-1 error of the least-training-error candidate for classifiers.
/// Ties go to the smaller theta.
ThetaSelection select_theta_cv(const Dataset& ds, std::span<const std::size_t> in_rows,
                               std::span<const std::size_t> out_rows, const TransferConfig& cfg,
                               const BaseLearner& base, std::uint64_t seed);

}  // namespace fairsplit
