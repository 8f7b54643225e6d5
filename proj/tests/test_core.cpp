#include <doctest.h>

#include "fairsplit/core.hpp"
#include "fairsplit/csv.hpp"
#include "fairsplit/analysis.hpp"

#include <filesystem>
#include <random>

using namespace fairsplit;

namespace {

Dataset small_binary() {
  Dataset ds;
  ds.group_count = 2;
  ds.features.resize(4, 2);
  ds.features << 0, 1, 1, 1, 0, 2, 1, 2;
  ds.labels = {0, 1, 1, 0};
  ds.groups = {1, 1, 2, 2};
  return ds;
}

ThresholdClassifier on_first(double sign) {
  ThresholdClassifier c;
  c.score.weights = {sign, 0.0};
  c.threshold = sign > 0 ? 0.5 : -0.5;
  return c;
}

}  // namespace

TEST_CASE("constant dispatch by group") {
  DecoupledClassifier dc;
  dc.per_group = {ConstantPredictor{0.0}, ConstantPredictor{1.0}};
  std::vector<double> x{3.0, -1.0};
  CHECK(predict_decoupled(dc, x, 2) == 1.0);
  CHECK(predict_decoupled(dc, x, 1) == 0.0);
}

TEST_CASE("parity models: z = x1 in group 1 and 1 - x1 in group 2") {
  DecoupledClassifier dc;
  dc.per_group = {on_first(1.0), on_first(-1.0)};
  std::vector<double> x{1.0, 1.0};
  CHECK(predict_decoupled(dc, x, 2) == 0.0);
  CHECK(predict_decoupled(dc, x, 1) == 1.0);
  std::vector<double> x0{0.0, 0.0};
  CHECK(predict_decoupled(dc, x0, 2) == 1.0);
}

TEST_CASE("identical per-group models behave like the single model") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  LinearModel m{{0.3, -1.2}, 0.1, false};
  DecoupledClassifier dc;
  dc.per_group = {m, m, m};
  for (int t = 0; t < 200; ++t) {
    std::vector<double> x{nd(rng), nd(rng)};
    for (GroupIndex g = 1; g <= 3; ++g) CHECK(predict_decoupled(dc, x, g) == predict(m, x));
  }
}

TEST_CASE("bad group index is rejected") {
  DecoupledClassifier dc;
  dc.per_group = {ConstantPredictor{0.0}, ConstantPredictor{1.0}};
  std::vector<double> x{0.0};
  CHECK_THROWS_AS(predict_decoupled(dc, x, 0), std::out_of_range);
  CHECK_THROWS_AS(predict_decoupled(dc, x, 3), std::out_of_range);
}

TEST_CASE("linear model rejects wrong dimension") {
  LinearModel m{{1.0, 2.0}, 0.0, false};
  std::vector<double> x{1.0};
  CHECK_THROWS_AS(m.evaluate(x), std::invalid_argument);
}

TEST_CASE("validate_dataset") {
  SUBCASE("well formed") { CHECK(validate_dataset(small_binary()).empty()); }
  SUBCASE("fractional binary label") {
    Dataset ds = small_binary();
    ds.labels[3] = 0.5;
    auto v = validate_dataset(ds);
    REQUIRE(v.size() == 1);
    CHECK(v[0].row == 3);
    CHECK(v[0].rule == "label not in {0,1}");
  }
  SUBCASE("group K+1") {
    Dataset ds = small_binary();
    ds.groups[2] = 3;
    auto v = validate_dataset(ds);
    REQUIRE(!v.empty());
    CHECK(v[0].row == 2);
    CHECK(v[0].rule.find("group out of range") == 0);
  }
  SUBCASE("empty group unless allowed") {
    Dataset ds = small_binary();
    ds.group_count = 3;
    CHECK(validate_dataset(ds).size() == 1);
    ds.allow_empty_groups = true;
    CHECK(validate_dataset(ds).empty());
  }
  SUBCASE("regression labels in [0,1]") {
    Dataset ds = small_binary();
    ds.mode = Mode::regression;
    ds.labels = {0.0, 0.25, 1.0, 0.5};
    CHECK(validate_dataset(ds).empty());
    ds.labels[1] = 1.5;
    CHECK(validate_dataset(ds).size() == 1);
  }
  SUBCASE("non-finite feature") {
    Dataset ds = small_binary();
    ds.features(1, 1) = std::nan("");
    auto v = validate_dataset(ds);
    REQUIRE(v.size() == 1);
    CHECK(v[0].column == 1);
  }
  SUBCASE("shape mismatch") {
    Dataset ds = small_binary();
    ds.labels.pop_back();
    CHECK(validate_dataset(ds).size() == 1);
  }
}

TEST_CASE("subset and column removal") {
  Dataset ds = small_binary();
  std::vector<std::size_t> rows{3, 0};
  Dataset s = ds.subset(rows);
  CHECK(s.rows() == 2);
  CHECK(s.features(0, 1) == 2.0);
  CHECK(s.groups == std::vector<GroupIndex>{2, 1});
  Dataset w = ds.without_column(0);
  CHECK(w.cols() == 1);
  CHECK(w.features(2, 0) == 2.0);
}

TEST_CASE("dataset CSV round trip is bit exact") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  Dataset ds;
  ds.mode = Mode::regression;
  ds.group_count = 3;
  ds.features.resize(50, 3);
  for (int i = 0; i < 50; ++i) {
    ds.features(i, 0) = u(rng);
    ds.features(i, 1) = u(rng) * 1e-300;
    ds.features(i, 2) = std::ldexp(u(rng), -40);
    ds.labels.push_back(std::uniform_real_distribution<double>(0, 1)(rng));
    ds.groups.push_back(static_cast<GroupIndex>(1 + i % 3));
  }
  ds.columns = {{"a", ColumnKind::numeric}, {"b,quoted", ColumnKind::numeric}, {"c", ColumnKind::numeric}};
  auto path = std::filesystem::temp_directory_path() / "fairsplit_roundtrip.csv";
  write_dataset_csv(ds, path);
  Dataset back = read_dataset_csv(path, Mode::regression);
  std::filesystem::remove(path);
  REQUIRE(back.rows() == ds.rows());
  CHECK(back.columns[1].name == "b,quoted");
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 3; ++j) CHECK(back.features(i, j) == ds.features(i, j));
    CHECK(back.labels[i] == ds.labels[i]);
    CHECK(back.groups[i] == ds.groups[i]);
  }
  CHECK(back.group_count == 3);
}

TEST_CASE("fixture round trip through CSV") {
  Fixture fx = make_figure1_fixture(30, 7, 5);
  auto path = std::filesystem::temp_directory_path() / "fairsplit_fixture.csv";
  write_dataset_csv(fx.dataset, path);
  Dataset back = read_dataset_csv(path, Mode::binary);
  std::filesystem::remove(path);
  CHECK(back.features == fx.dataset.features);
  CHECK(back.labels == fx.dataset.labels);
  CHECK(back.groups == fx.dataset.groups);
}

TEST_CASE("CSV quoting") {
  CsvTable t = parse_csv("a,b\r\n\"x, \"\"y\"\"\",2\n\"multi\nline\",3\n");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][0] == "x, \"y\"");
  CHECK(t.rows[1][0] == "multi\nline");
  CHECK(parse_csv(format_csv(t)).rows == t.rows);
  CHECK_THROWS(parse_csv("a,b\n1\n"));
  CHECK_THROWS(parse_csv("a,b\n\"1,2\n"));
}
