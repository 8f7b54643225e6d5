#include "fairsplit/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include "fairsplit/errors.hpp"

namespace fairsplit {

double WeightedSample::total_weight() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

std::size_t WeightedSample::in_group_count() const {
  return static_cast<std::size_t>(std::count(in_group.begin(), in_group.end(), std::uint8_t{1}));
}

WeightedSample WeightedSample::from_rows(const Dataset& ds, std::span<const std::size_t> rows, double weight,
                                         bool in_group) {
  WeightedSample s;
  s.features.resize(0, static_cast<Eigen::Index>(ds.cols()));
  s.append(ds, rows, weight, in_group);
  return s;
}

void WeightedSample::append(const Dataset& ds, std::span<const std::size_t> rows, double weight, bool in_group_flag) {
  if (weight < 0.0 || !std::isfinite(weight)) throw std::invalid_argument("sample weight must be finite and >= 0");
  const Eigen::Index start = features.rows();
  if (start == 0) features.resize(0, static_cast<Eigen::Index>(ds.cols()));
  if (static_cast<std::size_t>(features.cols()) != ds.cols()) throw std::invalid_argument("column count mismatch");
  features.conservativeResize(start + static_cast<Eigen::Index>(rows.size()), features.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    features.row(start + static_cast<Eigen::Index>(r)) = ds.features.row(static_cast<Eigen::Index>(rows[r]));
    labels.push_back(ds.labels[rows[r]]);
    weights.push_back(weight);
    in_group.push_back(in_group_flag ? 1 : 0);
  }
}

// ---------------------------------------------------------------------------

LinearModel fit_weighted_least_squares(const WeightedSample& sample, const LeastSquaresOptions& options) {
  const std::size_t d = sample.cols();
  const auto p = static_cast<Eigen::Index>(d + 1);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd xt(p);
  double total = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double w = sample.weights[i];
    if (w == 0.0) continue;
    total += w;
    auto x = sample.row(i);
    for (std::size_t j = 0; j < d; ++j) xt[static_cast<Eigen::Index>(j)] = x[j];
    xt[p - 1] = 1.0;
    for (Eigen::Index a = 0; a < p; ++a) {
      rhs[a] += w * sample.labels[i] * xt[a];
      for (Eigen::Index b = 0; b <= a; ++b) gram(a, b) += w * xt[a] * xt[b];
    }
  }
  if (!(total > 0.0)) throw std::invalid_argument("least squares needs positive total weight");
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = 0; b < a; ++b) gram(b, a) = gram(a, b);
  }

  LinearModel model;
  Eigen::VectorXd beta;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  const bool singular = ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < options.singular_rcond;
  if (!singular) {
    beta = ldlt.solve(rhs);
  } else {
    if (!options.allow_ridge_fallback) {
      throw std::runtime_error("rank-deficient normal equations (rcond " + std::to_string(ldlt.rcond()) + ")");
    }
    const double scale = gram.trace() / static_cast<double>(p);
    const double ridge = options.ridge_scale * (scale > 0.0 ? scale : 1.0);
    Eigen::MatrixXd regularized = gram + ridge * Eigen::MatrixXd::Identity(p, p);
    beta = regularized.ldlt().solve(rhs);
    model.ridge_fallback = true;
  }
  model.weights.assign(beta.data(), beta.data() + d);
  model.intercept = beta[p - 1];
  return model;
}

double weighted_squared_error(const LinearModel& model, const WeightedSample& sample) {
  double total = 0.0, weight = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double w = sample.weights[i];
    if (w == 0.0) continue;
    const double r = sample.labels[i] - model.evaluate(sample.row(i));
    total += w * r * r;
    weight += w;
  }
  return weight > 0.0 ? total / weight : 0.0;
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Strictly between lo and hi (lo < hi), preferring the midpoint.
double between(double lo, double hi) {
  double t = lo + (hi - lo) / 2.0;
  if (!(t < hi)) t = lo;
  return t;
}

}  // namespace

std::vector<double> candidate_thresholds(std::span<const double> scores) {
  std::vector<double> values(scores.begin(), scores.end());
  std::sort(values.begin(), values.end(), std::greater<>());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<double> out{kInf};
  for (std::size_t r = 0; r + 1 < values.size(); ++r) out.push_back(between(values[r + 1], values[r]));
  out.push_back(-kInf);
  return out;
}

SweepResult sweep_thresholds(std::span<const double> scores, std::span<const double> labels) {
  std::vector<double> weights(scores.size(), 1.0);
  std::vector<std::uint8_t> in_group(scores.size(), 1);
  return sweep_thresholds(scores, labels, weights, in_group);
}

SweepResult sweep_thresholds(std::span<const double> scores, std::span<const double> labels,
                             std::span<const double> weights, std::span<const std::uint8_t> in_group) {
  const std::size_t m = scores.size();
  if (labels.size() != m || weights.size() != m || in_group.size() != m) {
    throw std::invalid_argument("sweep inputs differ in length");
  }
  if (m == 0) throw std::invalid_argument("sweep needs at least one score");

  std::vector<std::size_t> order;
  double total_weight = 0.0;
  double positive_weight = 0.0;  // error of the all-negative classifier
  std::size_t in_total = 0;
  for (std::size_t i = 0; i < m; ++i) {
    in_total += in_group[i] ? 1 : 0;
    if (weights[i] > 0.0 || in_group[i]) order.push_back(i);
    total_weight += weights[i];
    positive_weight += weights[i] * labels[i];
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const double norm = total_weight > 0.0 ? total_weight : 1.0;

  // raw (unnormalized) error alongside each cut
  std::map<std::size_t, std::pair<ThresholdCut, double>> best;
  auto offer = [&](double threshold, std::size_t positives, double error) {
    auto it = best.find(positives);
    if (it == best.end() || error < it->second.second) {
      best[positives] = {{threshold, positives, error / norm}, error};
    }
  };

  double error = positive_weight;
  std::size_t positives = 0;
  offer(kInf, 0, error);
  std::size_t r = 0;
  while (r < order.size()) {
    const double value = scores[order[r]];
    std::size_t s = r;
    while (s < order.size() && scores[order[s]] == value) {
      const std::size_t i = order[s];
      error += weights[i] * (1.0 - labels[i]) - weights[i] * labels[i];
      positives += in_group[i] ? 1 : 0;
      ++s;
    }
    const double threshold = s < order.size() ? between(scores[order[s]], value) : -kInf;
    offer(threshold, positives, error);
    r = s;
  }

  SweepResult result;
  for (auto& [p, entry] : best) result.cuts.push_back(entry.first);
  for (std::size_t p = 0; p <= in_total; ++p) {
    if (!best.count(p)) result.omitted.push_back(p);
  }
  return result;
}

FiniteClass threshold_class(std::span<const double> score_values, const LinearModel& score, bool both_orientations) {
  FiniteClass cls;
  for (double t : candidate_thresholds(score_values)) cls.members.emplace_back(ThresholdClassifier{score, t});
  if (both_orientations) {
    LinearModel flipped = score;
    for (double& w : flipped.weights) w = -w;
    flipped.intercept = -flipped.intercept;
    std::vector<double> negated(score_values.begin(), score_values.end());
    for (double& v : negated) v = -v;
    for (double t : candidate_thresholds(negated)) cls.members.emplace_back(ThresholdClassifier{flipped, t});
  }
  return cls;
}

std::vector<CandidateClassifier> exhaustive_learn(const FiniteClass& cls, const WeightedSample& sample,
                                                  std::size_t budget) {
  if (cls.members.empty()) throw std::invalid_argument("finite class is empty");
  const std::size_t m = sample.size();
  if (m != 0 && cls.size() > budget / m) {
    throw BudgetExceeded("exhaustive learner needs " + std::to_string(cls.size() * m) + " evaluations, budget is " +
                         std::to_string(budget));
  }
  const double total = sample.total_weight();
  const double norm = total > 0.0 ? total : 1.0;
  struct Best {
    std::size_t index;
    double error;
  };
  std::map<std::size_t, Best> best;
  for (std::size_t c = 0; c < cls.size(); ++c) {
    double error = 0.0;
    std::size_t positives = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const double z = predict(cls.members[c], sample.row(i));
      error += sample.weights[i] * std::abs(sample.labels[i] - z);
      if (sample.in_group[i] && z == 1.0) ++positives;
    }
    auto it = best.find(positives);
    if (it == best.end() || error < it->second.error) best[positives] = {c, error};
  }
  std::vector<CandidateClassifier> out;
  for (auto& [p, b] : best) {
    CandidateClassifier cand;
    cand.model = cls.members[b.index];
    cand.positives = p;
    cand.weighted_error = b.error / norm;
    cand.class_index = b.index;
    out.push_back(std::move(cand));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct LabelingHash {
  std::size_t operator()(const std::vector<std::uint64_t>& words) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (std::uint64_t w : words) h ^= w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

FiniteClass enumerate_linear_separators_2d(const FeatureMatrix& points, std::size_t max_points) {
  if (points.cols() != 2) throw std::invalid_argument("separator enumeration needs 2-D points");
  const std::size_t n = static_cast<std::size_t>(points.rows());
  if (n > max_points) {
    throw BudgetExceeded("separator enumeration limited to " + std::to_string(max_points) + " points, got " +
                         std::to_string(n));
  }

  // Directions where two distinct points project equally; between
  // consecutive ones the projection order is fixed.
  std::vector<double> critical;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = points(static_cast<Eigen::Index>(j), 0) - points(static_cast<Eigen::Index>(i), 0);
      const double dy = points(static_cast<Eigen::Index>(j), 1) - points(static_cast<Eigen::Index>(i), 1);
      if (dx == 0.0 && dy == 0.0) continue;
      double a = std::atan2(dy, dx) + std::numbers::pi / 2.0;
      a = std::fmod(a, std::numbers::pi);
      if (a < 0) a += std::numbers::pi;
      critical.push_back(a);
      critical.push_back(a + std::numbers::pi);
    }
  }
  std::sort(critical.begin(), critical.end());
  critical.erase(std::unique(critical.begin(), critical.end()), critical.end());

  std::vector<double> directions;
  if (critical.empty()) {
    directions.push_back(0.0);
  } else {
    for (std::size_t c = 0; c < critical.size(); ++c) {
      const double lo = critical[c];
      const double hi = c + 1 < critical.size() ? critical[c + 1] : critical.front() + 2.0 * std::numbers::pi;
      directions.push_back((lo + hi) / 2.0);
    }
  }

  FiniteClass cls;
  const std::size_t words = (n + 63) / 64;
  std::unordered_set<std::vector<std::uint64_t>, LabelingHash> seen;
  std::vector<std::uint64_t> labeling(words, 0);
  seen.insert(labeling);
  cls.members.emplace_back(Halfspace{{0.0, 0.0}, -1.0});  // all negative

  std::vector<double> proj(n);
  std::vector<std::size_t> order(n);
  for (double angle : directions) {
    const double ux = std::cos(angle), uy = std::sin(angle);
    for (std::size_t i = 0; i < n; ++i) {
      proj[i] = ux * points(static_cast<Eigen::Index>(i), 0) + uy * points(static_cast<Eigen::Index>(i), 1);
    }
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return proj[a] > proj[b]; });
    std::fill(labeling.begin(), labeling.end(), 0);
    std::size_t r = 0;
    while (r < n) {
      std::size_t s = r;
      while (s < n && proj[order[s]] == proj[order[r]]) {
        labeling[order[s] / 64] |= std::uint64_t{1} << (order[s] % 64);
        ++s;
      }
      if (s < n && seen.insert(labeling).second) {
        const double t = between(proj[order[s]], proj[order[r]]);
        cls.members.emplace_back(Halfspace{{ux, uy}, -t});
      }
      r = s;
    }
  }
  std::fill(labeling.begin(), labeling.end(), ~std::uint64_t{0});
  if (n % 64) labeling.back() = (std::uint64_t{1} << (n % 64)) - 1;
  if (n > 0 && seen.insert(labeling).second) cls.members.emplace_back(Halfspace{{0.0, 0.0}, 1.0});
  return cls;
}

// ---------------------------------------------------------------------------

std::vector<CandidateClassifier> LeastSquaresLearner::fit(const WeightedSample& sample) const {
  CandidateClassifier cand;
  LinearModel model = fit_weighted_least_squares(sample, options_);
  cand.weighted_error = weighted_squared_error(model, sample);
  cand.model = std::move(model);
  return {std::move(cand)};
}

ThresholdSweepLearner ThresholdSweepLearner::on_feature(std::size_t column, double sign) {
  ThresholdSweepLearner learner;
  learner.feature_ = column;
  learner.sign_ = sign;
  return learner;
}

std::string ThresholdSweepLearner::name() const {
  return feature_ ? "threshold_sweep(feature " + std::to_string(*feature_) + ")" : "threshold_sweep(least_squares)";
}

std::vector<CandidateClassifier> ThresholdSweepLearner::fit(const WeightedSample& sample) const {
  LinearModel score;
  if (feature_) {
    if (*feature_ >= sample.cols()) throw std::invalid_argument("score feature out of range");
    score.weights.assign(sample.cols(), 0.0);
    score.weights[*feature_] = sign_;
  } else {
    score = fit_weighted_least_squares(sample, options_);
  }
  std::vector<double> scores(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) scores[i] = score.evaluate(sample.row(i));
  SweepResult sweep = sweep_thresholds(scores, sample.labels, sample.weights, sample.in_group);
  std::vector<CandidateClassifier> out;
  for (const ThresholdCut& cut : sweep.cuts) {
    CandidateClassifier cand;
    cand.model = ThresholdClassifier{score, cut.threshold};
    cand.positives = cut.positives;
    cand.weighted_error = cut.weighted_error;
    out.push_back(std::move(cand));
  }
  return out;
}

}  // namespace fairsplit
