#include "fairsplit/losses.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "fairsplit/errors.hpp"

namespace fairsplit {

bool is_binary_instance(const Instance& inst) {
  auto is01 = [](double v) { return v == 0.0 || v == 1.0; };
  return std::all_of(inst.labels.begin(), inst.labels.end(), is01) &&
         std::all_of(inst.classifications.begin(), inst.classifications.end(), is01);
}

void check_instance(const Instance& inst, std::size_t groups) {
  if (inst.groups.size() != inst.labels.size() || inst.classifications.size() != inst.labels.size()) {
    throw std::invalid_argument("instance vectors differ in length");
  }
  for (GroupIndex g : inst.groups) {
    if (g < 1 || g > groups) throw std::invalid_argument("group index " + std::to_string(g) + " outside 1..K");
  }
}

GroupCounts count_group(std::span<const double> labels, std::span<const double> classifications) {
  if (labels.size() != classifications.size()) throw std::invalid_argument("label/classification length mismatch");
  GroupCounts c;
  c.size = labels.size();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool y = labels[i] == 1.0;
    const bool z = classifications[i] == 1.0;
    c.positives += z;
    c.label_positives += y;
    c.false_positives += (z && !y);
    c.false_negatives += (!z && y);
  }
  return c;
}

std::vector<GroupCounts> group_counts(const Instance& inst, std::size_t groups) {
  check_instance(inst, groups);
  if (!is_binary_instance(inst)) throw std::invalid_argument("group counts need binary labels and classifications");
  std::vector<GroupCounts> out(groups);
  for (std::size_t i = 0; i < inst.size(); ++i) {
    GroupCounts& c = out[inst.groups[i] - 1];
    const bool y = inst.labels[i] == 1.0;
    const bool z = inst.classifications[i] == 1.0;
    ++c.size;
    c.positives += z;
    c.label_positives += y;
    c.false_positives += (z && !y);
    c.false_negatives += (!z && y);
  }
  return out;
}

std::vector<ExactGroupStats> exact_group_stats(std::span<const GroupCounts> counts, std::size_t n) {
  std::vector<ExactGroupStats> out;
  out.reserve(counts.size());
  for (const GroupCounts& c : counts) {
    ExactGroupStats s;
    s.n_k = c.size;
    if (c.size == 0) {
      out.push_back(s);
      continue;
    }
    Rational nk(static_cast<unsigned long>(c.size));
    s.pi = Rational(static_cast<unsigned long>(c.label_positives)) / nk;
    s.p_hat = Rational(static_cast<unsigned long>(c.positives), static_cast<unsigned long>(n));
    s.p_hat.canonicalize();
    s.ell_hat = Rational(static_cast<unsigned long>(c.errors())) / nk;
    s.fp = Rational(static_cast<unsigned long>(c.false_positives)) / nk;
    s.fn = Rational(static_cast<unsigned long>(c.false_negatives)) / nk;
    if (c.label_positives > 0) s.fnr = Rational(s.fn / s.pi);
    out.push_back(s);
  }
  return out;
}

std::vector<GroupStats> group_stats(const Instance& inst, std::size_t groups) {
  check_instance(inst, groups);
  const std::size_t n = inst.size();
  std::vector<GroupStats> out(groups);
  if (is_binary_instance(inst)) {
    auto counts = group_counts(inst, groups);
    auto exact = exact_group_stats(counts, n);
    for (std::size_t k = 0; k < groups; ++k) {
      out[k].n_k = counts[k].size;
      if (counts[k].size == 0) continue;
      out[k].pi = to_double(exact[k].pi);
      out[k].p_hat = to_double(exact[k].p_hat);
      out[k].ell_hat = to_double(exact[k].ell_hat);
      out[k].fp = to_double(exact[k].fp);
      out[k].fn = to_double(exact[k].fn);
      if (exact[k].fnr) out[k].fnr = to_double(*exact[k].fnr);
    }
    return out;
  }
  // Randomized classifications: only loss, profile and base rate exist.
  std::vector<double> loss_sum(groups, 0.0), z_sum(groups, 0.0), y_sum(groups, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = inst.groups[i] - 1;
    ++out[k].n_k;
    loss_sum[k] += std::abs(inst.labels[i] - inst.classifications[i]);
    z_sum[k] += inst.classifications[i];
    y_sum[k] += inst.labels[i];
  }
  for (std::size_t k = 0; k < groups; ++k) {
    if (out[k].n_k == 0) continue;
    const double nk = static_cast<double>(out[k].n_k);
    out[k].pi = y_sum[k] / nk;
    out[k].p_hat = z_sum[k] / static_cast<double>(n);
    out[k].ell_hat = loss_sum[k] / nk;
  }
  return out;
}

// ---------------------------------------------------------------------------

bool requires_lambda(LossKind kind) {
  switch (kind) {
    case LossKind::numerical_parity:
    case LossKind::demographic_parity:
    case LossKind::fnr_parity:
    case LossKind::abs_gap:
      return true;
    default:
      return false;
  }
}

bool is_strict(LossKind kind) {
  return kind == LossKind::strict_numerical_parity || kind == LossKind::strict_demographic_parity ||
         kind == LossKind::fixed_profile;
}

LossSpec LossSpec::balanced() { return {LossKind::balanced, std::nullopt, {}, 0}; }
LossSpec LossSpec::l1() { return {LossKind::l1, std::nullopt, {}, 0}; }
LossSpec LossSpec::strict_numerical_parity() { return {LossKind::strict_numerical_parity, std::nullopt, {}, 0}; }
namespace {

// mpq_class(a, b) is not reduced; equality needs canonical form
Rational canonical(Rational q) {
  q.canonicalize();
  return q;
}

}  // namespace

LossSpec LossSpec::numerical_parity(Rational lambda) {
  return {LossKind::numerical_parity, canonical(lambda), {}, 0};
}
LossSpec LossSpec::strict_demographic_parity() {
  return {LossKind::strict_demographic_parity, std::nullopt, {}, 0};
}
LossSpec LossSpec::demographic_parity(Rational lambda) {
  return {LossKind::demographic_parity, canonical(lambda), {}, 0};
}
LossSpec LossSpec::fixed_profile(std::vector<Rational> target) {
  const std::size_t k = target.size();
  for (Rational& p : target) p.canonicalize();
  return {LossKind::fixed_profile, std::nullopt, std::move(target), k};
}
LossSpec LossSpec::fnr_parity(Rational lambda) { return {LossKind::fnr_parity, canonical(lambda), {}, 0}; }
LossSpec LossSpec::abs_gap(Rational lambda) { return {LossKind::abs_gap, canonical(lambda), {}, 2}; }

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::string format_rational(const Rational& q) {
  // Prefer a short decimal when the value has one, else num/den.
  for (int digits = 0; digits <= 12; ++digits) {
    mpz_class scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(digits));
    Rational scaled = q * scale;
    if (scaled.get_den() == 1) {
      mpz_class num = scaled.get_num();
      bool negative = num < 0;
      if (negative) num = -num;
      std::string s = num.get_str();
      if (digits > 0) {
        if (s.size() <= static_cast<std::size_t>(digits)) s.insert(0, static_cast<std::size_t>(digits) + 1 - s.size(), '0');
        s.insert(s.size() - static_cast<std::size_t>(digits), ".");
      }
      return negative ? "-" + s : s;
    }
  }
  return q.get_str();
}

}  // namespace

LossSpec LossSpec::parse(std::string_view text) {
  const std::string t = lower(trim(text));
  const auto colon = t.find(':');
  const std::string head = t.substr(0, colon);
  const std::string tail = colon == std::string::npos ? "" : t.substr(colon + 1);

  auto param = [&](const std::string& key) -> std::string {
    const std::string prefix = key + "=";
    if (tail.rfind(prefix, 0) != 0) throw ConfigError("loss '" + t + "' expects parameter '" + key + "='");
    return tail.substr(prefix.size());
  };
  auto no_param = [&]() {
    if (colon != std::string::npos) throw ConfigError("loss '" + head + "' takes no parameters");
  };

  LossSpec spec;
  if (head == "l1") {
    no_param();
    spec = l1();
  } else if (head == "balanced") {
    no_param();
    spec = balanced();
  } else if (head == "np-strict") {
    no_param();
    spec = strict_numerical_parity();
  } else if (head == "dp-strict") {
    no_param();
    spec = strict_demographic_parity();
  } else if (head == "np") {
    spec = numerical_parity(parse_rational(param("lambda")));
  } else if (head == "dp") {
    spec = demographic_parity(parse_rational(param("lambda")));
  } else if (head == "fnr") {
    spec = fnr_parity(parse_rational(param("lambda")));
  } else if (head == "absgap") {
    spec = abs_gap(parse_rational(param("lambda")));
  } else if (head == "fixed") {
    std::vector<Rational> target;
    std::stringstream ss(param("p"));
    std::string item;
    while (std::getline(ss, item, ',')) target.push_back(parse_rational(item));
    if (target.empty()) throw ConfigError("fixed profile needs at least one target value");
    spec = fixed_profile(std::move(target));
  } else {
    throw ConfigError("unknown loss '" + head + "'");
  }
  spec.validate(spec.groups);
  return spec;
}

std::string LossSpec::id() const {
  switch (kind) {
    case LossKind::balanced:
      return "balanced";
    case LossKind::l1:
      return "l1";
    case LossKind::strict_numerical_parity:
      return "np-strict";
    case LossKind::strict_demographic_parity:
      return "dp-strict";
    case LossKind::numerical_parity:
      return "np:lambda=" + format_rational(lambda.value_or(0));
    case LossKind::demographic_parity:
      return "dp:lambda=" + format_rational(lambda.value_or(0));
    case LossKind::fnr_parity:
      return "fnr:lambda=" + format_rational(lambda.value_or(0));
    case LossKind::abs_gap:
      return "absgap:lambda=" + format_rational(lambda.value_or(0));
    case LossKind::fixed_profile: {
      std::string s = "fixed:p=";
      for (std::size_t k = 0; k < target_profile.size(); ++k) {
        if (k) s += ",";
        s += format_rational(target_profile[k]);
      }
      return s;
    }
  }
  return "l1";
}

void LossSpec::validate(std::size_t k) const {
  if (requires_lambda(kind) != lambda.has_value()) {
    throw ConfigError(requires_lambda(kind) ? "loss '" + id() + "' requires lambda" : "loss '" + id() + "' takes no lambda");
  }
  if (lambda && (*lambda < 0 || *lambda > 1)) throw ConfigError("lambda must lie in [0,1]");
  if ((kind == LossKind::fixed_profile) != !target_profile.empty()) {
    throw ConfigError("target profile is required exactly for the fixed-profile loss");
  }
  for (const Rational& p : target_profile) {
    if (p < 0 || p > 1) throw ConfigError("target profile entries must lie in [0,1]");
  }
  if (kind == LossKind::abs_gap && k != 0 && k != 2) throw ConfigError("absgap loss requires exactly K=2 groups");
  if (kind == LossKind::fixed_profile && k != 0 && k != target_profile.size()) {
    throw ConfigError("fixed profile has " + std::to_string(target_profile.size()) + " entries but K=" + std::to_string(k));
  }
  if (groups != 0 && k != 0 && groups != k) {
    throw ConfigError("loss expects K=" + std::to_string(groups) + " but data has K=" + std::to_string(k));
  }
}

namespace {

Rational count_q(std::size_t v) { return Rational(static_cast<unsigned long>(v)); }

Rational group_loss(const GroupCounts& c, std::size_t k) {
  if (c.size == 0) throw UndefinedLoss("group loss undefined: group " + std::to_string(k + 1) + " is empty");
  return count_q(c.errors()) / count_q(c.size);
}

Rational within_group_rate(const GroupCounts& c, std::size_t k) {
  if (c.size == 0) throw UndefinedLoss("positive rate undefined: group " + std::to_string(k + 1) + " is empty");
  return count_q(c.positives) / count_q(c.size);
}

Rational fnr(const GroupCounts& c, std::size_t k) {
  if (c.label_positives == 0) throw UndefinedLoss("FNR undefined for group " + std::to_string(k + 1));
  return count_q(c.false_negatives) / count_q(c.label_positives);
}

Rational spread(const std::vector<Rational>& values) {
  Rational mean = 0;
  for (const Rational& v : values) mean += v;
  mean /= count_q(values.size());
  Rational total = 0;
  for (const Rational& v : values) total += abs_value(v - mean);
  return total;
}

bool all_equal(const std::vector<Rational>& values) {
  return std::all_of(values.begin(), values.end(), [&](const Rational& v) { return v == values.front(); });
}

}  // namespace

bool parity_holds(const LossSpec& spec, std::span<const GroupCounts> counts, std::size_t n) {
  const std::size_t K = counts.size();
  switch (spec.kind) {
    case LossKind::strict_numerical_parity:
      return std::all_of(counts.begin(), counts.end(), [&](const GroupCounts& c) { return c.positives == counts[0].positives; });
    case LossKind::strict_demographic_parity: {
      std::vector<Rational> rates;
      for (std::size_t k = 0; k < K; ++k) rates.push_back(within_group_rate(counts[k], k));
      return all_equal(rates);
    }
    case LossKind::fixed_profile:
      for (std::size_t k = 0; k < K; ++k) {
        if (Rational(count_q(counts[k].positives) / count_q(n)) != spec.target_profile[k]) return false;
      }
      return true;
    default:
      return true;
  }
}

Rational evaluate_exact(const LossSpec& spec, std::span<const GroupCounts> counts, std::size_t n) {
  const std::size_t K = counts.size();
  spec.validate(K);
  if (n == 0) throw UndefinedLoss("joint loss undefined on an empty instance");
  std::size_t errors = 0;
  for (const GroupCounts& c : counts) errors += c.errors();
  const Rational l1 = count_q(errors) / count_q(n);
  const Rational one = 1;

  switch (spec.kind) {
    case LossKind::l1:
      return l1;
    case LossKind::balanced: {
      Rational total = 0;
      for (std::size_t k = 0; k < K; ++k) total += group_loss(counts[k], k);
      return total / count_q(K);
    }
    case LossKind::strict_numerical_parity:
    case LossKind::strict_demographic_parity:
    case LossKind::fixed_profile:
      return parity_holds(spec, counts, n) ? l1 : one;
    case LossKind::numerical_parity: {
      std::vector<Rational> profile;
      for (const GroupCounts& c : counts) profile.push_back(count_q(c.positives) / count_q(n));
      return *spec.lambda * l1 + (one - *spec.lambda) * spread(profile);
    }
    case LossKind::demographic_parity: {
      std::vector<Rational> rates;
      for (std::size_t k = 0; k < K; ++k) rates.push_back(within_group_rate(counts[k], k));
      return *spec.lambda * l1 + (one - *spec.lambda) * spread(rates);
    }
    case LossKind::fnr_parity: {
      std::vector<Rational> rates;
      for (std::size_t k = 0; k < K; ++k) rates.push_back(fnr(counts[k], k));
      return *spec.lambda * l1 + (one - *spec.lambda) * spread(rates);
    }
    case LossKind::abs_gap: {
      const Rational a = group_loss(counts[0], 0);
      const Rational b = group_loss(counts[1], 1);
      return (one - *spec.lambda) * (a + b) + *spec.lambda * abs_value(a - b);
    }
  }
  throw ConfigError("unhandled loss kind");
}

double evaluate_real(const LossSpec& spec, std::span<const double> group_losses, std::span<const std::size_t> group_sizes) {
  if (group_losses.size() != group_sizes.size()) throw std::invalid_argument("group loss/size length mismatch");
  const std::size_t K = group_losses.size();
  spec.validate(K);
  std::size_t n = 0;
  for (std::size_t s : group_sizes) n += s;
  if (spec.kind == LossKind::balanced) {
    double total = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      if (group_sizes[k] == 0) throw UndefinedLoss("group loss undefined: group " + std::to_string(k + 1) + " is empty");
      total += group_losses[k];
    }
    return total / static_cast<double>(K);
  }
  if (spec.kind == LossKind::l1) {
    if (n == 0) throw UndefinedLoss("joint loss undefined on an empty instance");
    double total = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      if (group_sizes[k] > 0) total += static_cast<double>(group_sizes[k]) * group_losses[k];
    }
    return total / static_cast<double>(n);
  }
  throw ConfigError("loss '" + spec.id() + "' needs binary classifications; only balanced and l1 accept real-valued group losses");
}

std::size_t resolve_groups(const LossSpec& spec, const Instance& inst) {
  if (spec.groups != 0) return spec.groups;
  GroupIndex k = 0;
  for (GroupIndex g : inst.groups) k = std::max(k, g);
  return k;
}

Rational joint_loss_exact(const LossSpec& spec, const Instance& inst) {
  const std::size_t K = resolve_groups(spec, inst);
  return evaluate_exact(spec, group_counts(inst, K), inst.size());
}

double joint_loss(const LossSpec& spec, const Instance& inst) {
  if (is_binary_instance(inst)) return to_double(joint_loss_exact(spec, inst));
  const std::size_t K = resolve_groups(spec, inst);
  auto stats = group_stats(inst, K);
  std::vector<double> losses(K, 0.0);
  std::vector<std::size_t> sizes(K, 0);
  for (std::size_t k = 0; k < K; ++k) {
    sizes[k] = stats[k].n_k;
    losses[k] = stats[k].ell_hat.value_or(0.0);
  }
  return evaluate_real(spec, losses, sizes);
}

// ---------------------------------------------------------------------------

const char* to_string(SwapEffect effect) {
  switch (effect) {
    case SwapEffect::increased:
      return "increased";
    case SwapEffect::decreased:
      return "decreased";
    case SwapEffect::unchanged:
      return "unchanged";
  }
  return "unchanged";
}

SwapEffect swap_increases_loss(const LossSpec& spec, const Instance& inst, std::size_t i, std::size_t j) {
  if (i >= inst.size() || j >= inst.size()) throw std::invalid_argument("swap index out of range");
  if (inst.groups[i] != inst.groups[j] || inst.labels[i] > inst.labels[j] ||
      inst.classifications[i] > inst.classifications[j]) {
    throw std::invalid_argument("swap requires g_i = g_j, y_i <= y_j and z_i <= z_j");
  }
  const Rational before = joint_loss_exact(spec, inst);
  Instance swapped = inst;
  std::swap(swapped.classifications[i], swapped.classifications[j]);
  const Rational after = joint_loss_exact(spec, swapped);
  if (after > before) return SwapEffect::increased;
  if (after < before) return SwapEffect::decreased;
  return SwapEffect::unchanged;
}

namespace {

// Cell order within a group: (y,z) = (0,0), (0,1), (1,0), (1,1).
constexpr std::array<std::pair<double, double>, 4> kCells{{{0, 0}, {0, 1}, {1, 0}, {1, 1}}};

Instance build_canonical(const std::vector<std::size_t>& cells, std::size_t groups) {
  Instance inst;
  for (std::size_t k = 0; k < groups; ++k) {
    for (std::size_t c = 0; c < 4; ++c) {
      for (std::size_t r = 0; r < cells[4 * k + c]; ++r) {
        inst.groups.push_back(static_cast<GroupIndex>(k + 1));
        inst.labels.push_back(kCells[c].first);
        inst.classifications.push_back(kCells[c].second);
      }
    }
  }
  return inst;
}

std::optional<MonotonicityWitness> try_swap(const LossSpec& spec, const Instance& inst, std::size_t i, std::size_t j) {
  Instance swapped = inst;
  std::swap(swapped.classifications[i], swapped.classifications[j]);
  Rational before, after;
  try {
    before = joint_loss_exact(spec, inst);
    after = joint_loss_exact(spec, swapped);
  } catch (const UndefinedLoss&) {
    return std::nullopt;
  }
  if (after < before) return MonotonicityWitness{inst, i, j, before, after};
  return std::nullopt;
}

struct Enumerator {
  const LossSpec& spec;
  std::size_t groups;
  std::vector<std::size_t> cells;
  std::optional<MonotonicityWitness> found;

  // Distributes `remaining` rows over cells[pos..].
  void recurse(std::size_t pos, std::size_t remaining) {
    if (found) return;
    if (pos + 1 == cells.size()) {
      cells[pos] = remaining;
      check();
      return;
    }
    for (std::size_t v = 0; v <= remaining && !found; ++v) {
      cells[pos] = v;
      recurse(pos + 1, remaining - v);
    }
  }

  void check() {
    for (std::size_t k = 0; k < groups && !found; ++k) {
      if (cells[4 * k] == 0 || cells[4 * k + 3] == 0) continue;
      Instance inst = build_canonical(cells, groups);
      std::size_t offset = 0;
      for (std::size_t q = 0; q < 4 * k; ++q) offset += cells[q];
      const std::size_t i = offset;                                           // first (0,0) row
      const std::size_t j = offset + cells[4 * k] + cells[4 * k + 1] + cells[4 * k + 2];  // first (1,1) row
      found = try_swap(spec, inst, i, j);
    }
  }
};

}  // namespace

std::optional<MonotonicityWitness> find_monotonicity_counterexample(const LossSpec& spec,
                                                                     const CounterexampleSearch& options) {
  const std::size_t groups = options.groups != 0 ? options.groups : (spec.groups != 0 ? spec.groups : 2);
  spec.validate(groups);

  if (options.max_n <= CounterexampleSearch::exhaustive_limit) {
    Enumerator e{spec, groups, std::vector<std::size_t>(4 * groups, 0), std::nullopt};
    for (std::size_t n = 2; n <= options.max_n && !e.found; ++n) e.recurse(0, n);
    return e.found;
  }

  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<std::size_t> size_dist(2, options.max_n);
  std::uniform_int_distribution<GroupIndex> group_dist(1, static_cast<GroupIndex>(groups));
  std::bernoulli_distribution coin(0.5);
  for (std::size_t trial = 0; trial < options.budget; ++trial) {
    const std::size_t n = size_dist(rng);
    Instance inst;
    for (std::size_t r = 0; r < n; ++r) {
      inst.groups.push_back(group_dist(rng));
      inst.labels.push_back(coin(rng) ? 1.0 : 0.0);
      inst.classifications.push_back(coin(rng) ? 1.0 : 0.0);
    }
    std::vector<std::pair<std::size_t, std::size_t>> aligned;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j && inst.groups[i] == inst.groups[j] && inst.labels[i] <= inst.labels[j] &&
            inst.classifications[i] <= inst.classifications[j]) {
          aligned.emplace_back(i, j);
        }
      }
    }
    if (aligned.empty()) continue;
    std::uniform_int_distribution<std::size_t> pick(0, aligned.size() - 1);
    auto [i, j] = aligned[pick(rng)];
    if (auto w = try_swap(spec, inst, i, j)) return w;
  }
  return std::nullopt;
}

}  // namespace fairsplit
