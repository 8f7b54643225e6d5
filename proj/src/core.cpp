#include "fairsplit/core.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fairsplit {

const char* to_string(Mode mode) { return mode == Mode::binary ? "binary" : "regression"; }

const char* to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::numeric:
      return "numeric";
    case ColumnKind::binary:
      return "binary";
    case ColumnKind::categorical_collapsed:
      return "categorical-collapsed";
  }
  return "numeric";
}

std::vector<std::size_t> Dataset::group_rows(GroupIndex k) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i] == k) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> Dataset::group_sizes() const {
  std::vector<std::size_t> sizes(group_count, 0);
  for (GroupIndex g : groups) {
    if (g >= 1 && g <= group_count) ++sizes[g - 1];
  }
  return sizes;
}

Dataset Dataset::subset(std::span<const std::size_t> row_ids) const {
  Dataset out;
  out.group_count = group_count;
  out.mode = mode;
  out.columns = columns;
  out.allow_empty_groups = allow_empty_groups;
  out.features.resize(static_cast<Eigen::Index>(row_ids.size()), features.cols());
  out.labels.reserve(row_ids.size());
  out.groups.reserve(row_ids.size());
  for (std::size_t r = 0; r < row_ids.size(); ++r) {
    auto i = static_cast<Eigen::Index>(row_ids[r]);
    out.features.row(static_cast<Eigen::Index>(r)) = features.row(i);
    out.labels.push_back(labels[row_ids[r]]);
    out.groups.push_back(groups[row_ids[r]]);
  }
  return out;
}

Dataset Dataset::without_column(std::size_t column) const {
  if (column >= cols()) throw std::out_of_range("column index out of range");
  Dataset out = *this;
  const auto d = static_cast<Eigen::Index>(cols());
  const auto c = static_cast<Eigen::Index>(column);
  FeatureMatrix reduced(features.rows(), d - 1);
  if (c > 0) reduced.leftCols(c) = features.leftCols(c);
  if (c < d - 1) reduced.rightCols(d - 1 - c) = features.rightCols(d - 1 - c);
  out.features = std::move(reduced);
  if (column < out.columns.size()) out.columns.erase(out.columns.begin() + static_cast<std::ptrdiff_t>(column));
  return out;
}

std::vector<Violation> validate_dataset(const Dataset& ds) {
  std::vector<Violation> out;
  const std::size_t n = ds.labels.size();
  if (static_cast<std::size_t>(ds.features.rows()) != n || ds.groups.size() != n) {
    out.push_back({0, Violation::npos,
                   "row count mismatch: features " + std::to_string(ds.features.rows()) + ", labels " +
                       std::to_string(n) + ", groups " + std::to_string(ds.groups.size())});
    return out;
  }
  if (!ds.columns.empty() && ds.columns.size() != ds.cols()) {
    out.push_back({0, Violation::npos, "column metadata count does not match feature columns"});
  }
  if (ds.group_count == 0) out.push_back({0, Violation::npos, "group count K must be at least 1"});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < ds.cols(); ++j) {
      if (!std::isfinite(ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))) {
        out.push_back({i, j, "feature not finite"});
      }
    }
    GroupIndex g = ds.groups[i];
    if (g < 1 || g > ds.group_count) {
      out.push_back({i, Violation::npos, "group out of range: " + std::to_string(g)});
    }
    double y = ds.labels[i];
    if (ds.mode == Mode::binary && !(y == 0.0 || y == 1.0)) {
      out.push_back({i, Violation::npos, "label not in {0,1}"});
    } else if (ds.mode == Mode::regression && !(y >= 0.0 && y <= 1.0)) {
      out.push_back({i, Violation::npos, "label not in [0,1]"});
    }
  }
  if (!ds.allow_empty_groups) {
    auto sizes = ds.group_sizes();
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      if (sizes[k] == 0) out.push_back({0, Violation::npos, "group " + std::to_string(k + 1) + " is empty"});
    }
  }
  return out;
}

double LinearModel::evaluate(std::span<const double> x) const {
  if (x.size() != weights.size()) throw std::invalid_argument("feature dimension mismatch");
  double s = intercept;
  for (std::size_t j = 0; j < x.size(); ++j) s += weights[j] * x[j];
  return s;
}

namespace {

struct PredictVisitor {
  std::span<const double> x;

  double operator()(const ConstantPredictor& p) const { return p.value; }
  double operator()(const LinearModel& p) const { return p.evaluate(x); }
  double operator()(const ThresholdClassifier& p) const { return p.score.evaluate(x) > p.threshold ? 1.0 : 0.0; }
  double operator()(const Halfspace& p) const {
    if (x.size() != p.weights.size()) throw std::invalid_argument("feature dimension mismatch");
    double s = p.bias;
    for (std::size_t j = 0; j < x.size(); ++j) s += p.weights[j] * x[j];
    return s >= 0.0 ? 1.0 : 0.0;
  }
  double operator()(const TruthTable& p) const {
    auto it = p.table.find(std::vector<double>(x.begin(), x.end()));
    return it == p.table.end() ? p.fallback : it->second;
  }
};

}  // namespace

double predict(const Predictor& model, std::span<const double> x) { return std::visit(PredictVisitor{x}, model); }

std::vector<double> predict_all(const Predictor& model, const Dataset& ds) {
  std::vector<double> z(ds.rows());
  for (std::size_t i = 0; i < ds.rows(); ++i) z[i] = predict(model, ds.row(i));
  return z;
}

std::vector<double> predict_rows(const Predictor& model, const Dataset& ds, std::span<const std::size_t> row_ids) {
  std::vector<double> z(row_ids.size());
  for (std::size_t r = 0; r < row_ids.size(); ++r) z[r] = predict(model, ds.row(row_ids[r]));
  return z;
}

double predict_decoupled(const DecoupledClassifier& dc, std::span<const double> x, GroupIndex g) {
  if (g < 1 || g > dc.per_group.size()) {
    throw std::out_of_range("group index " + std::to_string(g) + " outside 1.." + std::to_string(dc.per_group.size()));
  }
  return predict(dc.per_group[g - 1], x);
}

}  // namespace fairsplit
