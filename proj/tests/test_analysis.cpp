#include <doctest.h>

#include <random>

#include "fairsplit/analysis.hpp"
#include "fairsplit/decouple.hpp"
#include "oracles.hpp"

using namespace fairsplit;

TEST_CASE("parity fixture layout") {
  Fixture fx = make_parity_fixture(3, ParityTarget::regression);
  const Dataset& ds = fx.dataset;
  REQUIRE(ds.rows() == 8);
  CHECK(ds.cols() == 3);
  CHECK(validate_dataset(ds).empty());
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(ds.labels[i] == static_cast<double>(static_cast<int>(ds.features(i, 1)) ^ static_cast<int>(ds.features(i, 2))));
    CHECK(ds.groups[i] == (ds.features(i, 2) == 0.0 ? 1u : 2u));
  }
  CHECK(*fx.expected_coupled_loss == 0.25);
  CHECK(*fx.expected_decoupled_loss == 0.0);
  Fixture big = make_parity_fixture(14, ParityTarget::separator, 500, 3);
  CHECK(big.dataset.rows() == 500);
  CHECK(validate_dataset(big.dataset).empty());
}

TEST_CASE("least-squares coupling gap on parity is one quarter") {
  for (std::size_t d = 2; d <= 8; ++d) {
    Fixture fx = make_parity_fixture(d, ParityTarget::regression);
    CouplingGap l1 = empirical_coupling_gap(fx.dataset, LossSpec::l1());
    CHECK(l1.coupled == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(std::abs(l1.decoupled) < 1e-9);
    CHECK(l1.gap == doctest::Approx(0.25).epsilon(1e-9));
    CouplingGap bal = empirical_coupling_gap(fx.dataset, LossSpec::balanced());
    CHECK(bal.gap == doctest::Approx(0.25).epsilon(1e-9));
  }
}

TEST_CASE("separator coupling gap on parity") {
  Fixture fx = make_parity_fixture(2, ParityTarget::separator);
  FiniteClass seps = enumerate_linear_separators_2d(fx.dataset.features);
  CouplingGap g = empirical_coupling_gap(fx.dataset, seps, LossSpec::l1());
  CHECK(g.coupled >= 0.25);
  CHECK(g.decoupled == 0.0);
}

TEST_CASE("threshold on the next-to-last bit decouples any parity fixture") {
  for (std::size_t d = 2; d <= 6; ++d) {
    Fixture fx = make_parity_fixture(d, ParityTarget::separator);
    std::vector<double> w(d, 0.0);
    w[d - 2] = 1.0;
    std::vector<double> bits{0.0, 1.0};
    ExhaustiveLearner learner(threshold_class(bits, LinearModel{w, 0.0, false}, true));
    CHECK(decouple(learner, LossSpec::l1(), fx.dataset).achieved_loss == 0.0);
  }
}

TEST_CASE("figure1 two-line fixture") {
  Fixture fx = make_figure1_fixture(200, 20, 1);
  const Dataset& ds = fx.dataset;
  CHECK(ds.group_sizes() == std::vector<std::size_t>{200, 20});
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    CHECK(ds.features(i, 0) != 0.0);
    CHECK(ds.features(i, 1) == static_cast<double>(ds.groups[i]));
    const bool pos = ds.features(i, 0) > 0;
    CHECK(ds.labels[i] == ((ds.groups[i] == 1) == pos ? 1.0 : 0.0));
  }
  // the majority-optimal threshold ignoring x2 misclassifies every minority row
  std::vector<std::size_t> major = ds.group_rows(1), minor = ds.group_rows(2);
  auto cands = ThresholdSweepLearner::on_feature(0).fit(WeightedSample::from_rows(ds, major));
  auto best = std::min_element(cands.begin(), cands.end(), [](auto& a, auto& b) { return a.weighted_error < b.weighted_error; });
  CHECK(best->weighted_error == 0.0);
  std::size_t wrong = 0;
  for (auto r : minor) wrong += predict(best->model, ds.row(r)) != ds.labels[r];
  CHECK(wrong == minor.size());
  CHECK(make_figure1_fixture(200, 20, 1).dataset.features == ds.features);
}

TEST_CASE("coupling gap is never negative") {
  std::mt19937_64 rng(51);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng() % 10;
    Dataset ds;
    ds.group_count = 2;
    ds.features.resize(static_cast<Eigen::Index>(n), 1);
    for (std::size_t i = 0; i < n; ++i) {
      ds.features(static_cast<Eigen::Index>(i), 0) = static_cast<double>(rng() % 4);
      ds.labels.push_back(static_cast<double>(rng() & 1));
      ds.groups.push_back(i < 2 ? static_cast<GroupIndex>(i + 1) : static_cast<GroupIndex>(1 + rng() % 2));
    }
    FiniteClass cls = oracle::random_truth_class(rng, 2 + rng() % 6, 4);
    for (LossSpec spec : {LossSpec::l1(), LossSpec::balanced(), LossSpec::numerical_parity(Rational(1, 2))}) {
      CouplingGap g = empirical_coupling_gap(ds, cls, spec);
      CHECK(g.gap >= 0.0);
      CHECK(g.gap == g.coupled - g.decoupled);
    }
  }
}

TEST_CASE("shared distribution with the optimum in the class has no gap") {
  // both groups follow y = [x >= 2]
  Dataset ds;
  ds.group_count = 2;
  ds.features.resize(16, 1);
  for (int i = 0; i < 16; ++i) {
    ds.features(i, 0) = i % 4;
    ds.labels.push_back(i % 4 >= 2 ? 1.0 : 0.0);
    ds.groups.push_back(i < 8 ? 1 : 2);
  }
  std::vector<double> xs{0, 1, 2, 3};
  FiniteClass cls = threshold_class(xs, LinearModel{{1.0}, 0.0, false}, true);
  CouplingGap g = empirical_coupling_gap(ds, cls, LossSpec::l1());
  CHECK(g.gap == 0.0);
  CHECK(g.coupled == 0.0);
}

TEST_CASE("tree parity fixture") {
  Fixture fx = make_tree_parity_fixture(2, 5);
  const Dataset& ds = fx.dataset;
  REQUIRE(ds.rows() == 32);
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    int parity = 0;
    for (int j = 2; j < 5; ++j) parity ^= static_cast<int>(ds.features(i, j));
    CHECK(ds.labels[i] == parity);
    CHECK(ds.groups[i] == (ds.features(i, 4) == 0.0 ? 1u : 2u));
  }
}
