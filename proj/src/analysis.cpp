#include "fairsplit/analysis.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "fairsplit/decouple.hpp"
#include "fairsplit/errors.hpp"

namespace fairsplit {

namespace {

constexpr std::size_t kEnumerateUpTo = 12;

// Bit vectors over {0,1}^d: all of them in counting order, or seeded draws.
std::vector<std::vector<double>> cube_points(std::size_t d, std::size_t samples, std::uint64_t seed) {
  std::vector<std::vector<double>> pts;
  if (d <= kEnumerateUpTo) {
    for (std::size_t code = 0; code < (std::size_t{1} << d); ++code) {
      std::vector<double> x(d);
      for (std::size_t j = 0; j < d; ++j) x[j] = static_cast<double>((code >> (d - 1 - j)) & 1U);
      pts.push_back(std::move(x));
    }
  } else {
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < samples; ++i) {
      std::vector<double> x(d);
      for (std::size_t j = 0; j < d; ++j) x[j] = static_cast<double>(rng() & 1U);
      pts.push_back(std::move(x));
    }
  }
  return pts;
}

Dataset bits_dataset(const std::vector<std::vector<double>>& pts, std::size_t parity_bits, Mode mode) {
  const std::size_t d = pts.front().size();
  Dataset ds;
  ds.mode = mode;
  ds.group_count = 2;
  ds.features.resize(static_cast<Eigen::Index>(pts.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    unsigned parity = 0;
    for (std::size_t j = d - parity_bits; j < d; ++j) parity ^= static_cast<unsigned>(pts[i][j]);
    for (std::size_t j = 0; j < d; ++j) ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = pts[i][j];
    ds.labels.push_back(parity);
    ds.groups.push_back(pts[i][d - 1] == 0.0 ? 1 : 2);
  }
  for (std::size_t j = 0; j < d; ++j) ds.columns.push_back({"x" + std::to_string(j + 1), ColumnKind::binary});
  return ds;
}

}  // namespace

Fixture make_parity_fixture(std::size_t d, ParityTarget target, std::size_t samples, std::uint64_t seed) {
  if (d < 2) throw std::invalid_argument("parity fixture needs d >= 2");
  Fixture fx;
  fx.dataset = bits_dataset(cube_points(d, samples, seed), 2,
                            target == ParityTarget::regression ? Mode::regression : Mode::binary);
  fx.description = "uniform over {0,1}^" + std::to_string(d) + ", y = x" + std::to_string(d - 1) + " xor x" +
                   std::to_string(d) + ", groups split on x" + std::to_string(d) +
                   (target == ParityTarget::regression ? " (squared error)" : " (0-1 error)");
  fx.expected_coupled_loss = 0.25;
  fx.expected_decoupled_loss = 0.0;
  return fx;
}

Fixture make_tree_parity_fixture(std::size_t s, std::size_t d, std::size_t samples, std::uint64_t seed) {
  if (s < 1 || d < s + 1) throw std::invalid_argument("tree parity fixture needs 1 <= s and s + 1 <= d");
  Fixture fx;
  fx.dataset = bits_dataset(cube_points(d, samples, seed), s + 1, Mode::binary);
  fx.description = "uniform over {0,1}^" + std::to_string(d) + ", y = parity of the last " + std::to_string(s + 1) +
                   " bits, groups split on x" + std::to_string(d);
  fx.expected_coupled_loss = 0.25;
  fx.expected_decoupled_loss = 0.0;
  return fx;
}

Fixture make_figure1_fixture(std::size_t n_major, std::size_t n_minor, std::uint64_t seed) {
  if (n_major < 2 || n_minor < 2) throw std::invalid_argument("figure1 fixture needs at least 2 rows per group");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> magnitude(0.0, 1.0);
  auto draw = [&]() {
    double u = 0.0;
    while (u == 0.0) u = magnitude(rng);
    return u;
  };

  Fixture fx;
  Dataset& ds = fx.dataset;
  ds.mode = Mode::binary;
  ds.group_count = 2;
  ds.columns = {{"x1", ColumnKind::numeric}, {"x2", ColumnKind::binary}};
  std::vector<double> x1;
  for (GroupIndex g : {GroupIndex{1}, GroupIndex{2}}) {
    const std::size_t count = g == 1 ? n_major : n_minor;
    // mirrored pairs keep each group exactly half positive
    for (std::size_t i = 0; i + 1 < count; i += 2) {
      const double u = draw();
      x1.push_back(u);
      x1.push_back(-u);
    }
    if (count % 2) x1.push_back((rng() & 1U) ? draw() : -draw());
    while (ds.groups.size() < x1.size()) {
      const double v = x1[ds.groups.size()];
      const double side = v > 0.0 ? 1.0 : 0.0;
      ds.labels.push_back(g == 1 ? side : 1.0 - side);
      ds.groups.push_back(g);
    }
  }
  ds.features.resize(static_cast<Eigen::Index>(x1.size()), 2);
  for (std::size_t i = 0; i < x1.size(); ++i) {
    ds.features(static_cast<Eigen::Index>(i), 0) = x1[i];
    ds.features(static_cast<Eigen::Index>(i), 1) = static_cast<double>(ds.groups[i]);
  }
  fx.description = "two groups on parallel lines with opposite labelings of sign(x1)";
  fx.expected_decoupled_loss = 0.0;
  return fx;
}

CouplingGap empirical_coupling_gap(const Dataset& ds, const FiniteClass& cls, const LossSpec& spec,
                                   std::size_t budget) {
  if (ds.mode != Mode::binary) throw std::invalid_argument("finite-class coupling gap needs binary labels");
  if (cls.members.empty()) throw std::invalid_argument("finite class is empty");
  if (ds.rows() != 0 && cls.size() > budget / ds.rows()) {
    throw BudgetExceeded("coupling gap needs " + std::to_string(cls.size() * ds.rows()) +
                         " evaluations, budget is " + std::to_string(budget));
  }
  Instance inst{ds.groups, ds.labels, {}};
  LossSpec resolved = spec;
  if (resolved.groups == 0) resolved.groups = ds.group_count;
  std::optional<Rational> coupled;
  for (const Predictor& c : cls.members) {
    inst.classifications = predict_all(c, ds);
    Rational loss = joint_loss_exact(resolved, inst);
    if (!coupled || loss < *coupled) coupled = loss;
  }
  DecoupledClassifier dc = decouple(ExhaustiveLearner(cls, budget), spec, ds);

  CouplingGap out;
  out.coupled = to_double(*coupled);
  out.decoupled = dc.achieved_loss;
  out.gap = out.coupled - out.decoupled;
  return out;
}

CouplingGap empirical_coupling_gap(const Dataset& ds, const LossSpec& spec) {
  if (spec.kind != LossKind::l1 && spec.kind != LossKind::balanced) {
    throw ConfigError("regression coupling gap supports l1 and balanced losses only");
  }
  const auto sizes = ds.group_sizes();
  std::vector<std::size_t> all(ds.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

  auto group_mse = [&](auto&& model_for_group) {
    std::vector<double> sse(ds.group_count, 0.0);
    for (std::size_t i = 0; i < ds.rows(); ++i) {
      const double r = ds.labels[i] - model_for_group(ds.groups[i]).evaluate(ds.row(i));
      sse[ds.groups[i] - 1] += r * r;
    }
    std::vector<double> mse(ds.group_count, 0.0);
    for (std::size_t k = 0; k < ds.group_count; ++k) mse[k] = sizes[k] ? sse[k] / static_cast<double>(sizes[k]) : 0.0;
    return evaluate_real(spec, mse, sizes);
  };

  // Under the balanced loss the best single model weights rows by 1/n_k.
  WeightedSample pooled = WeightedSample::from_rows(ds, all);
  if (spec.kind == LossKind::balanced) {
    for (std::size_t i = 0; i < ds.rows(); ++i) pooled.weights[i] = 1.0 / static_cast<double>(sizes[ds.groups[i] - 1]);
  }
  const LinearModel coupled = fit_weighted_least_squares(pooled);

  std::vector<LinearModel> per_group;
  for (GroupIndex k = 1; k <= ds.group_count; ++k) {
    auto rows = ds.group_rows(k);
    if (rows.empty()) throw std::invalid_argument("group " + std::to_string(k) + " is empty");
    per_group.push_back(fit_weighted_least_squares(WeightedSample::from_rows(ds, rows)));
  }

  CouplingGap out;
  out.coupled = group_mse([&](GroupIndex) -> const LinearModel& { return coupled; });
  out.decoupled = group_mse([&](GroupIndex g) -> const LinearModel& { return per_group[g - 1]; });
  out.gap = out.coupled - out.decoupled;
  return out;
}

}  // namespace fairsplit
