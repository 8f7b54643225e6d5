#include "fairsplit/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "fairsplit/decouple.hpp"
#include "fairsplit/errors.hpp"
#include "fairsplit/learners.hpp"

#ifndef FAIRSPLIT_VERSION
#define FAIRSPLIT_VERSION "0.0.0"
#endif

namespace fairsplit {

const char* to_string(Baseline b) {
  switch (b) {
    case Baseline::blind:
      return "blind";
    case Baseline::coupled:
      return "coupled";
    case Baseline::decoupled:
      return "decoupled";
    case Baseline::decoupled_transfer:
      return "decoupled_transfer";
  }
  return "blind";
}

std::vector<Baseline> parse_baselines(std::string_view text) {
  std::vector<Baseline> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view token = text.substr(start, end - start);
    bool found = false;
    for (Baseline b : kAllBaselines) {
      if (token == to_string(b)) {
        if (std::find(out.begin(), out.end(), b) == out.end()) out.push_back(b);
        found = true;
      }
    }
    if (!found) throw ConfigError("unknown baseline '" + std::string(token) + "'");
    start = end + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ingestion

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::optional<double> as_number(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

bool is_missing(const std::string& s) { return s.empty() || s == "?"; }

// Distinct values with counts, in first-occurrence order.
struct Frequencies {
  std::vector<std::string> values;
  std::map<std::string, std::size_t> count;

  void add(const std::string& v) {
    if (count[v]++ == 0) values.push_back(v);
  }
  const std::string& most_frequent() const {
    const std::string* best = &values.front();
    for (const auto& v : values) {
      if (count.at(v) > count.at(*best)) best = &v;
    }
    return *best;
  }
};

std::string cell_ref(std::size_t row, const std::string& column) {
  return "row " + std::to_string(row + 1) + ", column '" + column + "'";
}

}  // namespace

IngestedTable ingest_table(const CsvTable& table, const std::string& label_column, Mode mode) {
  auto label_it = std::find(table.header.begin(), table.header.end(), label_column);
  if (label_it == table.header.end()) throw ConfigError("label column '" + label_column + "' not found");
  const std::size_t label_idx = static_cast<std::size_t>(label_it - table.header.begin());
  const std::size_t n = table.rows.size();
  if (n == 0) throw InputError("no data rows");

  IngestedTable out;
  out.mode = mode;

  // labels
  std::vector<std::string> raw(n);
  for (std::size_t i = 0; i < n; ++i) {
    raw[i] = trim(table.rows[i][label_idx]);
    if (is_missing(raw[i])) throw InputError(cell_ref(i, label_column) + ": missing label");
  }
  if (mode == Mode::binary) {
    Frequencies freq;
    std::vector<std::string> keys(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto v = as_number(raw[i]);
      keys[i] = v ? format_double(*v) : raw[i];
      freq.add(keys[i]);
    }
    if (freq.values.size() < 2) throw InputError("label column '" + label_column + "' is constant");
    const std::string top = freq.most_frequent();
    for (const auto& k : keys) out.labels.push_back(k == top ? 1.0 : 0.0);
    out.log.push_back("label '" + label_column + "': " + std::to_string(freq.values.size()) +
                      " classes, most common '" + top + "' (" + std::to_string(freq.count.at(top)) +
                      " rows) -> 1, rest -> 0");
  } else {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
      auto v = as_number(raw[i]);
      if (!v) throw InputError(cell_ref(i, label_column) + ": unparseable number '" + raw[i] + "'");
      out.labels.push_back(*v);
      lo = std::min(lo, *v);
      hi = std::max(hi, *v);
    }
    if (!(hi > lo)) throw InputError("label column '" + label_column + "' is constant");
    for (double& y : out.labels) y = (y - lo) / (hi - lo);
    out.log.push_back("label '" + label_column + "': min-max scaled from [" + format_double(lo) + ", " +
                      format_double(hi) + "] to [0, 1]");
  }

  // features
  std::vector<std::vector<double>> cols;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (j == label_idx) continue;
    const std::string& name = table.header[j];
    std::vector<std::string> cells(n);
    std::vector<std::optional<double>> nums(n);
    std::optional<std::size_t> first_text, first_number;
    for (std::size_t i = 0; i < n; ++i) {
      cells[i] = trim(table.rows[i][j]);
      if (is_missing(cells[i])) throw InputError(cell_ref(i, name) + ": missing value");
      nums[i] = as_number(cells[i]);
      if (nums[i] && !first_number) first_number = i;
      if (!nums[i] && !first_text) first_text = i;
    }
    if (first_text && first_number) {
      throw InputError(cell_ref(*first_text, name) + ": unparseable number '" + cells[*first_text] + "'");
    }
    std::vector<double> values(n);
    ColumnMeta meta{name, ColumnKind::numeric};
    if (!first_text) {
      std::vector<double> distinct;
      for (const auto& v : nums) distinct.push_back(*v);
      std::sort(distinct.begin(), distinct.end());
      distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
      if (distinct.size() == 2) {
        meta.kind = ColumnKind::binary;
        for (std::size_t i = 0; i < n; ++i) values[i] = *nums[i] == distinct[1] ? 1.0 : 0.0;
        if (!(distinct[0] == 0.0 && distinct[1] == 1.0)) {
          out.log.push_back("column '" + name + "': numeric {" + format_double(distinct[0]) + ", " +
                            format_double(distinct[1]) + "} -> {0, 1}");
        }
      } else {
        for (std::size_t i = 0; i < n; ++i) values[i] = *nums[i];
      }
    } else {
      Frequencies freq;
      for (const auto& c : cells) freq.add(c);
      const std::string top = freq.most_frequent();
      for (std::size_t i = 0; i < n; ++i) values[i] = cells[i] == top ? 1.0 : 0.0;
      meta.kind = freq.values.size() == 2 ? ColumnKind::binary : ColumnKind::categorical_collapsed;
      out.log.push_back("column '" + name + "': " + std::to_string(freq.values.size()) + " categories, '" + top +
                        "' -> 1, rest -> 0");
    }
    out.columns.push_back(meta);
    cols.push_back(std::move(values));
  }
  out.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    for (std::size_t i = 0; i < n; ++i) out.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cols[j][i];
  }
  return out;
}

IngestedTable ingest_csv(const std::filesystem::path& path, const std::string& label_column, Mode mode) {
  CsvTable table;
  try {
    table = read_csv(path);
  } catch (const std::runtime_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return ingest_table(table, label_column, mode);
}

SensitiveSelection select_sensitive_attribute(const IngestedTable& table, const std::optional<std::string>& requested,
                                              std::size_t min_per_group, std::size_t max_per_group,
                                              std::uint64_t seed) {
  const std::size_t n = table.labels.size();
  auto side_counts = [&](std::size_t j) {
    std::size_t ones = 0;
    for (std::size_t i = 0; i < n; ++i) ones += table.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) == 1.0;
    return std::pair<std::size_t, std::size_t>{n - ones, ones};
  };

  std::optional<std::size_t> chosen;
  if (requested) {
    for (std::size_t j = 0; j < table.columns.size(); ++j) {
      if (table.columns[j].name == *requested) chosen = j;
    }
    if (!chosen) throw ConfigError("sensitive column '" + *requested + "' not found among the features");
    if (table.columns[*chosen].kind != ColumnKind::binary) {
      throw ConfigError("sensitive column '" + *requested + "' is not binary");
    }
    auto [zeros, ones] = side_counts(*chosen);
    if (zeros < min_per_group || ones < min_per_group) {
      throw DatasetDiscarded("sensitive column '" + *requested + "' has groups of " + std::to_string(zeros) + " and " +
                             std::to_string(ones) + " rows; need " + std::to_string(min_per_group) + " each");
    }
  } else {
    for (std::size_t j = 0; j < table.columns.size() && !chosen; ++j) {
      if (table.columns[j].kind != ColumnKind::binary) continue;
      auto [zeros, ones] = side_counts(j);
      if (zeros >= min_per_group && ones >= min_per_group) chosen = j;
    }
    if (!chosen) {
      throw DatasetDiscarded("no binary column has at least " + std::to_string(min_per_group) +
                             " rows on each side");
    }
  }

  SensitiveSelection sel;
  sel.column = *chosen;
  sel.name = table.columns[*chosen].name;
  sel.log.push_back("sensitive column '" + sel.name + "': value 0 -> group 1, value 1 -> group 2");

  std::vector<std::vector<std::size_t>> by_group(2);
  for (std::size_t i = 0; i < n; ++i) {
    by_group[table.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(*chosen)) == 1.0 ? 1 : 0].push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < 2; ++k) {
    auto rows = by_group[k];
    if (rows.size() > max_per_group) {
      sel.log.push_back("group " + std::to_string(k + 1) + " subsampled from " + std::to_string(rows.size()) + " to " +
                        std::to_string(max_per_group) + " rows");
      std::shuffle(rows.begin(), rows.end(), rng);
      rows.resize(max_per_group);
    }
    keep.insert(keep.end(), rows.begin(), rows.end());
  }
  std::sort(keep.begin(), keep.end());

  Dataset& ds = sel.dataset;
  ds.mode = table.mode;
  ds.group_count = 2;
  ds.columns = table.columns;
  ds.features.resize(static_cast<Eigen::Index>(keep.size()), table.features.cols());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    ds.features.row(static_cast<Eigen::Index>(r)) = table.features.row(static_cast<Eigen::Index>(keep[r]));
    ds.labels.push_back(table.labels[keep[r]]);
    ds.groups.push_back(ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(*chosen)) == 1.0 ? 2 : 1);
  }
  return sel;
}

// ---------------------------------------------------------------------------
// Experiment

void ExperimentConfig::validate() const {
  if (outer_folds < 2) throw ConfigError("outer folds must be at least 2");
  if (label_column.empty()) throw ConfigError("label column is required");
  if (baselines.empty()) throw ConfigError("no baselines selected");
  if (min_per_group < 1 || max_per_group < min_per_group) throw ConfigError("need 1 <= min_per_group <= max_per_group");
  transfer.validate();
  LossSpec spec = LossSpec::parse(loss);
  spec.validate(2);
  if (mode == Mode::regression && spec.kind != LossKind::l1 && spec.kind != LossKind::balanced) {
    throw ConfigError("regression mode accepts only balanced and l1 losses, got '" + loss + "'");
  }
}

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix(mix(mix(mix(master) ^ a) ^ b) ^ c);
}

std::vector<std::vector<std::size_t>> outer_folds(const Dataset& ds, const ExperimentConfig& cfg) {
  return stratified_folds(ds, cfg.outer_folds, derive_seed(cfg.seed, 1));
}

std::vector<std::vector<std::size_t>> stratified_folds(const Dataset& ds, std::size_t folds, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> out(folds);
  for (GroupIndex k = 1; k <= ds.group_count; ++k) {
    auto rows = ds.group_rows(k);
    std::mt19937_64 rng(derive_seed(seed, k));
    std::shuffle(rows.begin(), rows.end(), rng);
    const std::size_t m = rows.size();
    for (std::size_t f = 0; f < folds; ++f) {
      out[f].insert(out[f].end(), rows.begin() + static_cast<std::ptrdiff_t>(f * m / folds),
                    rows.begin() + static_cast<std::ptrdiff_t>((f + 1) * m / folds));
    }
  }
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

OrderedJson predictor_to_json(const Predictor& p) {
  auto vec = [](const std::vector<double>& v) {
    OrderedJson a = OrderedJson::array();
    for (double x : v) a.push_back(format_double(x));
    return a;
  };
  return std::visit(
      [&](const auto& m) -> OrderedJson {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ConstantPredictor>) {
          return {{"type", "constant"}, {"value", format_double(m.value)}};
        } else if constexpr (std::is_same_v<T, LinearModel>) {
          return {{"type", "linear"}, {"weights", vec(m.weights)}, {"intercept", format_double(m.intercept)},
                  {"ridge_fallback", m.ridge_fallback}};
        } else if constexpr (std::is_same_v<T, ThresholdClassifier>) {
          return {{"type", "threshold"}, {"weights", vec(m.score.weights)},
                  {"intercept", format_double(m.score.intercept)}, {"threshold", format_double(m.threshold)}};
        } else if constexpr (std::is_same_v<T, Halfspace>) {
          return {{"type", "halfspace"}, {"weights", vec(m.weights)}, {"bias", format_double(m.bias)}};
        } else {
          OrderedJson rows = OrderedJson::array();
          for (const auto& [x, z] : m.table) rows.push_back({{"x", vec(x)}, {"z", format_double(z)}});
          return {{"type", "truth_table"}, {"rows", rows}, {"fallback", format_double(m.fallback)}};
        }
      },
      p);
}

namespace {

struct Evaluation {
  double loss = 0;
  std::vector<double> group_losses;
};

Evaluation evaluate(const LossSpec& spec, const Dataset& test, const std::vector<double>& z) {
  Evaluation ev;
  const std::size_t K = test.group_count;
  if (test.mode == Mode::binary) {
    Instance inst{test.groups, test.labels, z};
    auto counts = group_counts(inst, K);
    ev.loss = to_double(evaluate_exact(spec, counts, test.rows()));
    for (const auto& c : counts) ev.group_losses.push_back(static_cast<double>(c.errors()) / static_cast<double>(c.size));
  } else {
    std::vector<double> sse(K, 0.0);
    auto sizes = test.group_sizes();
    for (std::size_t i = 0; i < test.rows(); ++i) {
      const double r = test.labels[i] - z[i];
      sse[test.groups[i] - 1] += r * r;
    }
    for (std::size_t k = 0; k < K; ++k) ev.group_losses.push_back(sse[k] / static_cast<double>(sizes[k]));
    ev.loss = evaluate_real(spec, ev.group_losses, sizes);
  }
  return ev;
}

// Single model for everyone. Classifiers threshold a least-squares score
// where the joint loss on the training rows is smallest.
Predictor fit_single(const Dataset& train, const LossSpec& spec, const BaseLearner& learner) {
  std::vector<std::size_t> all(train.rows());
  std::iota(all.begin(), all.end(), 0);
  WeightedSample sample = WeightedSample::from_rows(train, all);
  if (train.mode == Mode::regression) return learner.fit(sample).front().model;

  const auto fitted = learner.fit(sample);  // counted fit of the score
  const LinearModel score = std::get<ThresholdClassifier>(fitted.front().model).score;
  std::vector<double> s(train.rows());
  for (std::size_t i = 0; i < train.rows(); ++i) s[i] = score.evaluate(train.row(i));
  std::vector<std::size_t> order(all);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });

  const std::size_t K = train.group_count;
  std::vector<GroupCounts> counts(K);
  for (std::size_t i = 0; i < train.rows(); ++i) {
    auto& c = counts[train.groups[i] - 1];
    ++c.size;
    if (train.labels[i] == 1.0) {
      ++c.label_positives;
      ++c.false_negatives;
    }
  }
  const double inf = std::numeric_limits<double>::infinity();
  double best_t = inf;
  Rational best = evaluate_exact(spec, counts, train.rows());
  std::size_t r = 0;
  while (r < order.size()) {
    std::size_t q = r;
    while (q < order.size() && s[order[q]] == s[order[r]]) {
      const std::size_t i = order[q];
      auto& c = counts[train.groups[i] - 1];
      ++c.positives;
      if (train.labels[i] == 1.0) {
        --c.false_negatives;
      } else {
        ++c.false_positives;
      }
      ++q;
    }
    double t = -inf;
    if (q < order.size()) {
      const double lo = s[order[q]], hi = s[order[r]];
      t = lo + (hi - lo) / 2.0;
      if (!(t < hi)) t = lo;
    }
    Rational loss = evaluate_exact(spec, counts, train.rows());
    if (loss < best) {
      best = loss;
      best_t = t;
    }
    r = q;
  }
  return ThresholdClassifier{score, best_t};
}

OrderedJson decoupled_json(const DecoupledClassifier& dc) {
  OrderedJson per_group = OrderedJson::array();
  for (const auto& p : dc.per_group) per_group.push_back(predictor_to_json(p));
  return {{"per_group", per_group}, {"selection", dc.selection}, {"parity_infeasible", dc.parity_infeasible}};
}

std::vector<double> predict_all_decoupled(const DecoupledClassifier& dc, const Dataset& ds) {
  std::vector<double> z(ds.rows());
  for (std::size_t i = 0; i < ds.rows(); ++i) z[i] = predict_decoupled(dc, ds.row(i), ds.groups[i]);
  return z;
}

OrderedJson nullable(double v) { return std::isfinite(v) ? OrderedJson(v) : OrderedJson(nullptr); }

}  // namespace

ExperimentResult run_experiment_on_dataset(const ExperimentConfig& cfg, const Dataset& ds,
                                           std::size_t sensitive_column, const DatasetInfo& info) {
  cfg.validate();
  if (ds.group_count != 2) throw ConfigError("experiments need exactly two groups");
  if (sensitive_column >= ds.cols()) throw ConfigError("sensitive column index out of range");
  auto violations = validate_dataset(ds);
  if (!violations.empty()) throw InputError("invalid dataset: " + violations.front().rule);

  const LossSpec spec = LossSpec::parse(cfg.loss);
  ThresholdSweepLearner sweep;
  LeastSquaresLearner least_squares;
  const BaseLearner& base = ds.mode == Mode::binary ? static_cast<const BaseLearner&>(sweep) : least_squares;

  std::vector<Baseline> run{Baseline::blind};
  for (Baseline b : kAllBaselines) {
    if (b != Baseline::blind && std::find(cfg.baselines.begin(), cfg.baselines.end(), b) != cfg.baselines.end()) {
      run.push_back(b);
    }
  }
  std::map<Baseline, std::size_t> fits;
  std::size_t theta_fits = 0;

  ExperimentResult result;
  OrderedJson folds = OrderedJson::array();
  std::vector<std::size_t> degenerate;
  std::map<Baseline, std::vector<Evaluation>> by_baseline;

  const auto test_folds = outer_folds(ds, cfg);
  for (std::size_t f = 0; f < test_folds.size(); ++f) {
    std::vector<std::size_t> train_rows;
    {
      std::vector<char> in_test(ds.rows(), 0);
      for (std::size_t i : test_folds[f]) in_test[i] = 1;
      for (std::size_t i = 0; i < ds.rows(); ++i) {
        if (!in_test[i]) train_rows.push_back(i);
      }
    }
    const Dataset train = ds.subset(train_rows);
    const Dataset test = ds.subset(test_folds[f]);
    const auto train_sizes = train.group_sizes();
    const auto test_sizes = test.group_sizes();
    bool bad = false;
    for (std::size_t k = 0; k < 2; ++k) {
      if (train_sizes[k] == 0 || test_sizes[k] == 0) bad = true;
      if (std::find(run.begin(), run.end(), Baseline::decoupled_transfer) != run.end() &&
          train_sizes[k] < cfg.transfer.inner_folds) {
        bad = true;
      }
    }
    if (bad) {
      degenerate.push_back(f);
      result.fold_models.push_back(nullptr);
      continue;
    }
    const Dataset train_ns = train.without_column(sensitive_column);
    const Dataset test_ns = test.without_column(sensitive_column);

    OrderedJson models = OrderedJson::object();
    for (Baseline b : run) {
      CountingLearner counted(base, fits[b]);
      std::vector<double> z;
      OrderedJson theta_by_group = nullptr;
      switch (b) {
        case Baseline::blind: {
          Predictor p = fit_single(train_ns, spec, counted);
          models["blind"] = predictor_to_json(p);
          z = predict_all(p, test_ns);
          break;
        }
        case Baseline::coupled: {
          Predictor p = fit_single(train, spec, counted);
          models["coupled"] = predictor_to_json(p);
          z = predict_all(p, test);
          break;
        }
        case Baseline::decoupled: {
          DecoupledClassifier dc = decouple(counted, spec, train_ns);
          models["decoupled"] = decoupled_json(dc);
          z = predict_all_decoupled(dc, test_ns);
          theta_by_group = {0.0, 0.0};
          break;
        }
        case Baseline::decoupled_transfer: {
          CountingLearner cv_counted(base, theta_fits);
          std::vector<std::vector<double>> thetas;
          OrderedJson cv_losses = OrderedJson::array();
          for (GroupIndex k = 1; k <= 2; ++k) {
            std::vector<std::size_t> in_rows, out_rows;
            for (std::size_t i = 0; i < train_ns.rows(); ++i) (train_ns.groups[i] == k ? in_rows : out_rows).push_back(i);
            ThetaSelection sel =
                select_theta_cv(train_ns, in_rows, out_rows, cfg.transfer, cv_counted, derive_seed(cfg.seed, 2, f, k));
            thetas.push_back({sel.theta});
            cv_losses.push_back(sel.mean_loss);
          }
          DownWeightTransfer transfer(counted, thetas);
          DecoupledClassifier dc = general_decouple(transfer, spec, train_ns);
          models["decoupled_transfer"] = decoupled_json(dc);
          models["decoupled_transfer"]["theta_by_group"] = {thetas[0][0], thetas[1][0]};
          models["decoupled_transfer"]["theta_cv_loss"] = cv_losses;
          z = predict_all_decoupled(dc, test_ns);
          theta_by_group = {thetas[0][0], thetas[1][0]};
          break;
        }
      }
      Evaluation ev = evaluate(spec, test, z);
      folds.push_back({{"fold", f},
                       {"baseline", to_string(b)},
                       {"loss", ev.loss},
                       {"group_losses", ev.group_losses},
                       {"theta_by_group", theta_by_group},
                       {"train_size", train.rows()},
                       {"test_size", test.rows()}});
      by_baseline[b].push_back(std::move(ev));
    }
    result.fold_models.push_back(std::move(models));
  }
  if (by_baseline[Baseline::blind].empty()) throw Error("every outer fold is degenerate");

  auto mean_of = [](const std::vector<Evaluation>& evs) {
    double s = 0.0;
    for (const auto& e : evs) s += e.loss;
    return s / static_cast<double>(evs.size());
  };
  const double blind_mean = mean_of(by_baseline[Baseline::blind]);
  OrderedJson aggregates = OrderedJson::object();
  for (Baseline b : run) {
    const auto& evs = by_baseline[b];
    const double mean = mean_of(evs);
    double ss = 0.0;
    for (const auto& e : evs) ss += (e.loss - mean) * (e.loss - mean);
    const double sd = evs.size() > 1 ? std::sqrt(ss / static_cast<double>(evs.size() - 1)) : std::nan("");
    std::vector<double> group_means(2, 0.0);
    for (const auto& e : evs) {
      for (std::size_t k = 0; k < 2; ++k) group_means[k] += e.group_losses[k] / static_cast<double>(evs.size());
    }
    aggregates[to_string(b)] = {{"folds", evs.size()},
                                {"mean_loss", mean},
                                {"std_loss", nullable(sd)},
                                {"mean_group_losses", group_means},
                                {"log_ratio_vs_blind", nullable(std::log(mean / blind_mean))}};
  }
  result.discarded_trivial = blind_mean < cfg.trivial_loss;

  OrderedJson fit_counts = OrderedJson::object();
  for (Baseline b : run) {
    fit_counts[to_string(b)] = fits[b] + (b == Baseline::decoupled_transfer ? theta_fits : 0);
  }
  if (std::find(run.begin(), run.end(), Baseline::decoupled_transfer) != run.end()) {
    fit_counts["theta_selection"] = theta_fits;
  }

  std::vector<std::string> baseline_names;
  for (Baseline b : cfg.baselines) baseline_names.push_back(to_string(b));
  OrderedJson& rep = result.report;
  rep["version"] = FAIRSPLIT_VERSION;
  rep["config"] = {{"input_path", cfg.input_path.string()},
                   {"label_column", cfg.label_column},
                   {"sensitive_column", cfg.sensitive_column ? OrderedJson(*cfg.sensitive_column) : OrderedJson(nullptr)},
                   {"mode", to_string(cfg.mode)},
                   {"loss", spec.id()},
                   {"outer_folds", cfg.outer_folds},
                   {"inner_folds", cfg.transfer.inner_folds},
                   {"theta_grid", cfg.transfer.theta_grid},
                   {"seed", cfg.seed},
                   {"baselines", baseline_names},
                   {"min_per_group", cfg.min_per_group},
                   {"max_per_group", cfg.max_per_group}};
  rep["dataset"] = {{"path", info.path},
                    {"sensitive_column", info.sensitive_column},
                    {"rows", ds.rows()},
                    {"columns", ds.cols()},
                    {"group_sizes", ds.group_sizes()},
                    {"preprocessing_log", info.preprocessing_log},
                    {"status", result.discarded_trivial ? "discarded_trivial" : "ok"}};
  rep["folds"] = std::move(folds);
  rep["aggregates"] = std::move(aggregates);
  rep["degenerate_folds"] = degenerate;
  rep["fit_counts"] = std::move(fit_counts);
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  IngestedTable table = ingest_csv(cfg.input_path, cfg.label_column, cfg.mode);
  SensitiveSelection sel =
      select_sensitive_attribute(table, cfg.sensitive_column, cfg.min_per_group, cfg.max_per_group, cfg.seed);
  DatasetInfo info;
  info.path = cfg.input_path.string();
  info.sensitive_column = sel.name;
  info.preprocessing_log = table.log;
  if (cfg.mode == Mode::regression) {
    info.preprocessing_log.push_back("labels normalized before subsampling");
  }
  info.preprocessing_log.insert(info.preprocessing_log.end(), sel.log.begin(), sel.log.end());
  return run_experiment_on_dataset(cfg, sel.dataset, sel.column, info);
}

std::string summary_csv(const OrderedJson& report) {
  CsvTable table;
  table.header = {"baseline", "mean_loss", "std_loss", "log_ratio_vs_blind"};
  auto cell = [](const OrderedJson& v) { return v.is_null() ? std::string() : format_double(v.get<double>()); };
  for (const auto& [name, agg] : report.at("aggregates").items()) {
    table.rows.push_back({name, cell(agg.at("mean_loss")), cell(agg.at("std_loss")), cell(agg.at("log_ratio_vs_blind"))});
  }
  return format_csv(table);
}

void emit_report(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  auto write = [&](const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    out << text;
    if (!out) throw Error("write failed for " + p.string());
  };
  write(dir / "report.json", result.report.dump(2) + "\n");
  write(dir / "summary.csv", summary_csv(result.report));
}

}  // namespace fairsplit
