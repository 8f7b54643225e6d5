// fairsplit command-line interface.
//
// Exit codes: 0 success, 2 dataset discarded, 3 configuration or input
// error, 4 runtime error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "fairsplit/analysis.hpp"
#include "fairsplit/csv.hpp"
#include "fairsplit/errors.hpp"
#include "fairsplit/losses.hpp"
#include "fairsplit/pipeline.hpp"
#include "fairsplit/transfer.hpp"

namespace fs = fairsplit;

namespace {

constexpr int kOk = 0;
constexpr int kDiscarded = 2;
constexpr int kConfig = 3;
constexpr int kRuntime = 4;

std::string describe(const fs::Instance& inst) {
  std::string s;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    s += "  " + std::to_string(i + 1) + ": g=" + std::to_string(inst.groups[i]) + " y=" +
         fs::format_double(inst.labels[i]) + " z=" + fs::format_double(inst.classifications[i]) + "\n";
  }
  return s;
}

void write_features_csv(const fs::Dataset& ds, const std::string& path) {
  fs::CsvTable table;
  for (const auto& c : ds.columns) table.header.push_back(c.name);
  table.header.push_back("label");
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    std::vector<std::string> row;
    for (double v : ds.row(i)) row.push_back(fs::format_double(v));
    row.push_back(fs::format_double(ds.labels[i]));
    table.rows.push_back(std::move(row));
  }
  fs::write_csv(table, path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decoupled group-wise classification and transfer by down-weighting"};
  app.require_subcommand(1);
  app.set_version_flag("--version", FAIRSPLIT_VERSION);

  // run
  fs::ExperimentConfig cfg;
  std::string input, sensitive, mode = "regression", grid = "default", baselines = "blind,coupled,decoupled,decoupled_transfer";
  std::string out_dir = "out";
  auto* run = app.add_subcommand("run", "cross-validated comparison of blind, coupled and decoupled models");
  run->add_option("--input", input, "CSV file with a header row")->required();
  run->add_option("--label", cfg.label_column, "label column")->required();
  run->add_option("--sensitive", sensitive, "sensitive column (default: first qualifying binary column)");
  run->add_option("--mode", mode, "binary or regression")->check(CLI::IsMember({"binary", "regression"}));
  run->add_option("--loss", cfg.loss, "joint loss, e.g. balanced, l1, np:lambda=0.5");
  run->add_option("--folds", cfg.outer_folds, "outer folds");
  run->add_option("--inner-folds", cfg.transfer.inner_folds, "inner folds for choosing theta");
  run->add_option("--theta-grid", grid, "'default' or comma-separated values in [0,1]");
  run->add_option("--seed", cfg.seed, "master seed");
  run->add_option("--baselines", baselines, "comma-separated subset of blind,coupled,decoupled,decoupled_transfer");
  run->add_option("--min-per-group", cfg.min_per_group, "minimum rows on each side of the sensitive column");
  run->add_option("--max-per-group", cfg.max_per_group, "groups above this size are subsampled");
  run->add_option("--out", out_dir, "output directory");

  // fixture
  std::string fixture_name, fixture_out;
  std::size_t dim = 2, n_major = 200, n_minor = 20;
  std::uint64_t fixture_seed = 0;
  std::string target = "regression";
  auto* fixture = app.add_subcommand("fixture", "write a synthetic dataset as CSV");
  fixture->add_option("--name", fixture_name, "parity or figure1")->required()->check(CLI::IsMember({"parity", "figure1"}));
  fixture->add_option("--out", fixture_out, "output CSV path")->required();
  fixture->add_option("--d", dim, "parity: number of bits");
  fixture->add_option("--target", target, "parity: regression or separator")
      ->check(CLI::IsMember({"regression", "separator"}));
  fixture->add_option("--n-major", n_major, "figure1: rows in group 1");
  fixture->add_option("--n-minor", n_minor, "figure1: rows in group 2");
  fixture->add_option("--seed", fixture_seed, "sampling seed");

  // check-loss
  std::string loss_text;
  fs::CounterexampleSearch search;
  auto* check = app.add_subcommand("check-loss", "search for a swap that breaks monotonicity");
  check->add_option("--loss", loss_text, "joint loss")->required();
  check->add_option("--max-n", search.max_n, "largest instance size");
  check->add_option("--groups", search.groups, "number of groups (default 2)");
  check->add_option("--budget", search.budget, "random trials when max-n exceeds 16");
  check->add_option("--seed", search.seed, "seed for random trials");

  // bound
  fs::BoundInputs bound_in;
  auto* bound = app.add_subcommand("bound", "optimal down-weight theta* for the in-group error bound");
  bound->add_option("--nk", bound_in.n_k, "in-group training rows")->required();
  bound->add_option("--nmk", bound_in.n_minus_k, "out-group training rows")->required();
  bound->add_option("--delta-cap", bound_in.delta_cap, "Delta")->required();
  bound->add_option("--confidence", bound_in.confidence, "delta");
  bound->add_option("--class-size", bound_in.class_size, "|C|")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*run) {
      cfg.input_path = input;
      if (!sensitive.empty()) cfg.sensitive_column = sensitive;
      cfg.mode = mode == "binary" ? fs::Mode::binary : fs::Mode::regression;
      cfg.transfer.theta_grid = fs::TransferConfig::parse_grid(grid);
      cfg.baselines = fs::parse_baselines(baselines);
      cfg.output_path = out_dir;
      fs::ExperimentResult result = fs::run_experiment(cfg);
      fs::emit_report(result, cfg.output_path);
      std::cout << fs::summary_csv(result.report);
      if (result.discarded_trivial) {
        std::cerr << "dataset discarded: blind baseline is below " << cfg.trivial_loss << " test loss\n";
        return kDiscarded;
      }
    } else if (*fixture) {
      fs::Fixture fx = fixture_name == "parity"
                           ? fs::make_parity_fixture(dim, target == "regression" ? fs::ParityTarget::regression
                                                                                 : fs::ParityTarget::separator,
                                                     4096, fixture_seed)
                           : fs::make_figure1_fixture(n_major, n_minor, fixture_seed);
      const std::filesystem::path parent = std::filesystem::path(fixture_out).parent_path();
      if (!parent.empty()) std::filesystem::create_directories(parent);
      write_features_csv(fx.dataset, fixture_out);
      std::cout << fx.description << "\n" << fx.dataset.rows() << " rows written to " << fixture_out << "\n";
    } else if (*check) {
      fs::LossSpec spec = fs::LossSpec::parse(loss_text);
      if (search.groups == 0) search.groups = spec.groups != 0 ? spec.groups : 2;
      spec.validate(search.groups);
      auto witness = fs::find_monotonicity_counterexample(spec, search);
      if (!witness) {
        std::cout << spec.id() << ": no counterexample up to n = " << search.max_n
                  << (search.max_n <= fs::CounterexampleSearch::exhaustive_limit ? " (exhaustive)" : " (random)")
                  << "\n";
      } else {
        std::cout << spec.id() << ": counterexample, swapping rows " << witness->i + 1 << " and " << witness->j + 1
                  << " lowers the loss from " << fs::to_string(witness->loss_before) << " to "
                  << fs::to_string(witness->loss_after) << "\n"
                  << describe(witness->instance);
      }
    } else if (*bound) {
      fs::ThetaStar ts = fs::theta_star(bound_in);
      auto opt = [](const std::optional<double>& v) { return v ? fs::format_double(*v) : std::string("n/a"); };
      std::cout << "theta* = " << fs::format_double(ts.theta) << "\n"
                << "f(theta*) = " << fs::format_double(ts.f_value) << "\n"
                << "branch = " << fs::to_string(ts.branch) << "\n"
                << "f(0) = " << fs::format_double(ts.r) << "\n"
                << "f(1) = " << fs::format_double(fs::f_bound(1.0, bound_in)) << "\n"
                << "stationarity residual = " << fs::format_double(ts.stationarity_residual) << "\n"
                << "closed form, beta = Delta^2 r^2: " << opt(ts.closed_form_product)
                << (ts.closed_form_product ? (ts.product_agrees ? " (agrees)" : " (disagrees)") : "") << "\n"
                << "closed form, beta = Delta^2 / r^2: " << opt(ts.closed_form_ratio)
                << (ts.closed_form_ratio ? (ts.ratio_agrees ? " (agrees)" : " (disagrees)") : "") << "\n";
    }
  } catch (const fs::DatasetDiscarded& e) {
    std::cerr << "dataset discarded: " << e.what() << "\n";
    return kDiscarded;
  } catch (const fs::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfig;
  } catch (const fs::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
