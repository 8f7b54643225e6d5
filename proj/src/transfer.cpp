#include "fairsplit/transfer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <string>

#include "fairsplit/errors.hpp"

namespace fairsplit {

std::vector<double> default_theta_grid() {
  std::vector<double> grid{0.0};
  for (int e = -10; e <= -1; ++e) grid.push_back(std::ldexp(1.0, e));
  grid.push_back(1.0);
  return grid;
}

void TransferConfig::validate() const {
  if (theta_grid.empty()) throw ConfigError("theta grid is empty");
  for (std::size_t i = 0; i < theta_grid.size(); ++i) {
    const double t = theta_grid[i];
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("theta grid value " + std::to_string(t) + " is outside [0, 1]");
    if (i > 0 && !(theta_grid[i - 1] < t)) throw ConfigError("theta grid must be strictly increasing");
  }
  if (inner_folds < 2) throw ConfigError("inner folds must be at least 2");
  if (!(confidence > 0.0 && confidence < 1.0)) throw ConfigError("confidence must lie in (0, 1)");
  if (delta_bound && !(*delta_bound >= 0.0)) throw ConfigError("Delta must be >= 0");
  if (class_size && !(*class_size >= 1.0)) throw ConfigError("class size must be >= 1");
}

std::vector<double> TransferConfig::parse_grid(std::string_view text) {
  if (text == "default") return default_theta_grid();
  std::vector<double> grid;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view token = text.substr(start, end - start);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (token.empty() || ec != std::errc() || ptr != token.data() + token.size()) {
      throw ConfigError("bad theta grid value '" + std::string(token) + "'");
    }
    grid.push_back(v);
    start = end + 1;
  }
  return grid;
}

void BoundInputs::validate() const {
  if (!(n_k >= 1.0)) throw ConfigError("n_k must be >= 1");
  if (!(n_minus_k >= 0.0)) throw ConfigError("n_-k must be >= 0");
  if (!(delta_cap >= 0.0) || !std::isfinite(delta_cap)) throw ConfigError("Delta must be finite and >= 0");
  if (!(confidence > 0.0 && confidence < 1.0)) throw ConfigError("confidence must lie in (0, 1)");
  if (!(class_size >= 1.0)) throw ConfigError("class size must be >= 1");
}

std::vector<CandidateClassifier> transfer_fit(const Dataset& ds, std::span<const std::size_t> in_rows,
                                              std::span<const std::size_t> out_rows, double theta,
                                              const BaseLearner& base) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("theta must lie in [0, 1]");
  if (in_rows.empty()) throw std::invalid_argument("transfer fit needs in-group rows");
  WeightedSample sample = WeightedSample::from_rows(ds, in_rows, 1.0, true);
  sample.append(ds, out_rows, theta, false);
  auto candidates = base.fit(sample);
  for (auto& c : candidates) c.theta = theta;
  return candidates;
}

DownWeightTransfer DownWeightTransfer::uniform(const BaseLearner& base, double theta, std::size_t groups) {
  return DownWeightTransfer(base, std::vector<std::vector<double>>(groups, std::vector<double>{theta}));
}

std::vector<CandidateClassifier> DownWeightTransfer::fit(const Dataset& ds, std::span<const std::size_t> in_rows,
                                                         std::span<const std::size_t> out_rows,
                                                         GroupIndex k) const {
  if (k < 1 || k > thetas_.size()) throw std::out_of_range("no theta configured for group " + std::to_string(k));
  const auto& thetas = thetas_[k - 1];
  if (thetas.empty()) throw std::invalid_argument("empty theta list for group " + std::to_string(k));
  if (thetas.size() == 1) return transfer_fit(ds, in_rows, out_rows, thetas.front(), base_);

  std::vector<CandidateClassifier> pooled;
  for (double theta : thetas) {
    for (auto& c : transfer_fit(ds, in_rows, out_rows, theta, base_)) pooled.push_back(std::move(c));
  }
  if (!base_.binary()) return pooled;

  std::map<std::size_t, std::pair<double, std::size_t>> best;  // P -> (in-group errors, index)
  for (std::size_t c = 0; c < pooled.size(); ++c) {
    auto z = predict_rows(pooled[c].model, ds, in_rows);
    double errors = 0.0;
    for (std::size_t i = 0; i < in_rows.size(); ++i) errors += std::abs(ds.labels[in_rows[i]] - z[i]);
    auto it = best.find(pooled[c].positives);
    if (it == best.end() || errors < it->second.first) best[pooled[c].positives] = {errors, c};
  }
  std::vector<CandidateClassifier> out;
  for (auto& [p, entry] : best) out.push_back(pooled[entry.second]);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

double log_term(const BoundInputs& in) { return std::log(2.0 * in.class_size / in.confidence); }

// Sign of f'(theta): f decreases while this is negative.
double slope_sign(double theta, double r, const BoundInputs& in) {
  const double b = in.n_k / in.n_minus_k;
  return in.delta_cap * std::sqrt(1.0 + theta * theta / b) - r * (1.0 - theta);
}

std::optional<double> closed_form(double beta, const BoundInputs& in) {
  const double disc = beta * beta / 4.0 + (in.n_minus_k / in.n_k) * (1.0 - beta);
  if (!(disc >= 0.0)) return std::nullopt;
  return std::sqrt(disc) - beta / 2.0;
}

}  // namespace

double f_bound(double theta, const BoundInputs& in) {
  const double weight = in.n_k + theta * in.n_minus_k;
  const double spread = std::sqrt(2.0 * (in.n_k + theta * theta * in.n_minus_k) * log_term(in));
  return (spread + theta * in.n_minus_k * in.delta_cap) / weight;
}

const char* to_string(ThetaBranch branch) {
  return branch == ThetaBranch::boundary_zero ? "boundary_zero" : "interior";
}

ThetaStar theta_star(const BoundInputs& in) {
  in.validate();
  ThetaStar out;
  out.r = std::sqrt(2.0 / in.n_k * log_term(in));

  // With no out-group rows f does not depend on theta.
  if (in.n_minus_k == 0.0 || in.delta_cap >= out.r) {
    out.theta = 0.0;
    out.branch = ThetaBranch::boundary_zero;
  } else if (in.delta_cap == 0.0) {
    out.theta = 1.0;
    out.branch = ThetaBranch::interior;
  } else {
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
      const double mid = lo + (hi - lo) / 2.0;
      if (mid <= lo || mid >= hi) break;
      (slope_sign(mid, out.r, in) < 0.0 ? lo : hi) = mid;
    }
    out.theta = f_bound(lo, in) <= f_bound(hi, in) ? lo : hi;
    out.branch = ThetaBranch::interior;
  }
  out.f_value = f_bound(out.theta, in);
  if (in.n_minus_k > 0.0) {
    out.stationarity_residual =
        in.delta_cap - out.r * (1.0 - out.theta) / std::sqrt(1.0 + out.theta * out.theta * in.n_minus_k / in.n_k);
  }
  if (out.branch == ThetaBranch::interior) {
    const double d2 = in.delta_cap * in.delta_cap;
    out.closed_form_product = closed_form(d2 * out.r * out.r, in);
    out.closed_form_ratio = closed_form(d2 / (out.r * out.r), in);
    out.product_agrees = out.closed_form_product && std::abs(*out.closed_form_product - out.theta) <= 1e-6;
    out.ratio_agrees = out.closed_form_ratio && std::abs(*out.closed_form_ratio - out.theta) <= 1e-6;
  }
  return out;
}

double generalization_bound(std::span<const double> nu, double R, double n, std::size_t K, double class_size,
                            double confidence, double delta_cap) {
  if (nu.size() != K) throw std::invalid_argument("need one nu per group");
  if (!(n >= 1.0) || !(confidence > 0.0 && confidence < 1.0) || !(class_size >= 1.0) || R < 0 || delta_cap < 0) {
    throw std::invalid_argument("invalid bound inputs");
  }
  const double tau = std::sqrt(2.0 / n * std::log(8.0 * class_size * (n + static_cast<double>(K)) / confidence));
  if (tau >= 1.0) return std::numeric_limits<double>::infinity();
  double arms = 0.0;
  for (double v : nu) {
    arms += v <= tau ? delta_cap : std::min(tau * std::sqrt(1.0 / (v - tau)), delta_cap);
  }
  return 5.0 * R * static_cast<double>(K) * tau + R * arms;
}

// ---------------------------------------------------------------------------

std::vector<std::vector<std::size_t>> make_folds(std::span<const std::size_t> rows, std::size_t folds,
                                                 std::uint64_t seed) {
  if (folds == 0) throw std::invalid_argument("fold count must be positive");
  std::vector<std::size_t> order(rows.begin(), rows.end());
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out(folds);
  const std::size_t m = order.size();
  for (std::size_t f = 0; f < folds; ++f) {
    out[f].assign(order.begin() + static_cast<std::ptrdiff_t>(f * m / folds),
                  order.begin() + static_cast<std::ptrdiff_t>((f + 1) * m / folds));
    std::sort(out[f].begin(), out[f].end());
  }
  return out;
}

namespace {

double validation_loss(const CandidateClassifier& cand, const Dataset& ds, std::span<const std::size_t> rows) {
  auto z = predict_rows(cand.model, ds, rows);
  double total = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double r = ds.labels[rows[i]] - z[i];
    total += ds.mode == Mode::binary ? std::abs(r) : r * r;
  }
  return total / static_cast<double>(rows.size());
}

}  // namespace

ThetaSelection select_theta_cv(const Dataset& ds, std::span<const std::size_t> in_rows,
                               std::span<const std::size_t> out_rows, const TransferConfig& cfg,
                               const BaseLearner& base, std::uint64_t seed) {
  cfg.validate();
  if (in_rows.size() < cfg.inner_folds) {
    throw std::invalid_argument("group has " + std::to_string(in_rows.size()) + " rows, fewer than the " +
                                std::to_string(cfg.inner_folds) + " inner folds");
  }
  auto folds = make_folds(in_rows, cfg.inner_folds, seed);
  ThetaSelection sel;
  sel.mean_loss.assign(cfg.theta_grid.size(), 0.0);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<std::size_t> train;
    for (std::size_t g = 0; g < folds.size(); ++g) {
      if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
    }
    std::sort(train.begin(), train.end());
    for (std::size_t t = 0; t < cfg.theta_grid.size(); ++t) {
      auto candidates = transfer_fit(ds, train, out_rows, cfg.theta_grid[t], base);
      const CandidateClassifier* chosen = &candidates.front();
      for (const auto& c : candidates) {
        if (c.weighted_error < chosen->weighted_error) chosen = &c;
      }
      sel.mean_loss[t] += validation_loss(*chosen, ds, folds[f]);
    }
  }
  std::size_t best = 0;
  for (std::size_t t = 0; t < sel.mean_loss.size(); ++t) {
    sel.mean_loss[t] /= static_cast<double>(folds.size());
    if (sel.mean_loss[t] < sel.mean_loss[best]) best = t;
  }
  sel.theta = cfg.theta_grid[best];
  return sel;
}

}  // namespace fairsplit
