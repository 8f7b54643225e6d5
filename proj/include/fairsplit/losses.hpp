#pragma once

// Group statistics and the catalog of joint losses.
//
// Every catalog loss is a function of per-group confusion counts, so losses
// are evaluated exactly over rationals built from integer counts. Strict
// parity predicates and swap comparisons therefore need no tolerance.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairsplit/core.hpp"
#include "fairsplit/rational.hpp"

namespace fairsplit {

/// A full <g_i, y_i, z_i> sequence.
struct Instance {
  std::vector<GroupIndex> groups;
  std::vector<double> labels;
  std::vector<double> classifications;

  std::size_t size() const { return labels.size(); }
};

/// Integer confusion counts of one group (binary labels and classifications).
struct GroupCounts {
  std::size_t size = 0;             // n_k
  std::size_t positives = 0;        // sum of z_i
  std::size_t label_positives = 0;  // sum of y_i
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;

  std::size_t errors() const { return false_positives + false_negatives; }
  bool operator==(const GroupCounts&) const = default;
};

/// Per-group statistics. Profile is normalized by the total n, so the
/// within-group positive fraction is p_hat * n / n_k. Every rate is absent
/// for an empty group; fp/fn require binary classifications; fnr requires
/// pi > 0.
struct GroupStats {
  std::size_t n_k = 0;
  std::optional<double> pi;
  std::optional<double> p_hat;
  std::optional<double> ell_hat;
  std::optional<double> fp;
  std::optional<double> fn;
  std::optional<double> fnr;
};

/// The same statistics as exact rationals (binary instances only).
struct ExactGroupStats {
  std::size_t n_k = 0;
  Rational pi, p_hat, ell_hat, fp, fn;
  std::optional<Rational> fnr;
};

bool is_binary_instance(const Instance& inst);

/// Throws std::invalid_argument on length mismatch or a group outside 1..K.
void check_instance(const Instance& inst, std::size_t groups);

std::vector<GroupCounts> group_counts(const Instance& inst, std::size_t groups);

/// Counts for a single group from aligned label/classification vectors.
GroupCounts count_group(std::span<const double> labels, std::span<const double> classifications);

std::vector<GroupStats> group_stats(const Instance& inst, std::size_t groups);
std::vector<ExactGroupStats> exact_group_stats(std::span<const GroupCounts> counts, std::size_t n);

// ---------------------------------------------------------------------------
// Loss catalog

enum class LossKind {
  balanced,
  l1,
  strict_numerical_parity,
  numerical_parity,
  strict_demographic_parity,
  demographic_parity,
  fixed_profile,
  fnr_parity,
  abs_gap,
};

bool requires_lambda(LossKind kind);
bool is_strict(LossKind kind);

struct LossSpec {
  LossKind kind = LossKind::l1;
  std::optional<Rational> lambda;
  std::vector<Rational> target_profile;  // fixed_profile only
  std::size_t groups = 0;                // K; 0 means "take it from the data"

  /// Compact form: l1, balanced, np-strict, np:lambda=0.5, dp-strict,
  /// dp:lambda=0.5, fixed:p=0.1,0.2, fnr:lambda=0.3, absgap:lambda=0.5.
  static LossSpec parse(std::string_view text);

  static LossSpec balanced();
  static LossSpec l1();
  static LossSpec strict_numerical_parity();
  static LossSpec numerical_parity(Rational lambda);
  static LossSpec strict_demographic_parity();
  static LossSpec demographic_parity(Rational lambda);
  static LossSpec fixed_profile(std::vector<Rational> target);
  static LossSpec fnr_parity(Rational lambda);
  static LossSpec abs_gap(Rational lambda);

  /// Canonical compact string; parse(id()) reproduces the loss.
  std::string id() const;

  /// Throws ConfigError if parameters are missing, extra, or out of range,
  /// or if the loss cannot be used with `k` groups.
  void validate(std::size_t k) const;
};

/// Exact loss from per-group counts; n is the total number of examples.
/// Throws UndefinedLoss when a needed rate does not exist.
Rational evaluate_exact(const LossSpec& spec, std::span<const GroupCounts> counts, std::size_t n);

/// True when a strict-parity predicate holds (always true for other kinds).
bool parity_holds(const LossSpec& spec, std::span<const GroupCounts> counts, std::size_t n);

/// Balanced and L1 over real-valued group losses (e.g. mean squared error).
double evaluate_real(const LossSpec& spec, std::span<const double> group_losses,
                     std::span<const std::size_t> group_sizes);

/// Number of groups to use: spec.groups if set, else the largest index seen.
std::size_t resolve_groups(const LossSpec& spec, const Instance& inst);

Rational joint_loss_exact(const LossSpec& spec, const Instance& inst);

/// Binary instances are evaluated exactly; fractional classifications are
/// accepted for Balanced and L1 with group loss mean |y - z|.
double joint_loss(const LossSpec& spec, const Instance& inst);

// ---------------------------------------------------------------------------
// Monotonicity

enum class SwapEffect { increased, decreased, unchanged };
const char* to_string(SwapEffect effect);

/// Compares the loss after exchanging z_i and z_j against the original.
/// Requires g_i = g_j, y_i <= y_j, z_i <= z_j (std::invalid_argument otherwise).
SwapEffect swap_increases_loss(const LossSpec& spec, const Instance& inst, std::size_t i, std::size_t j);

struct MonotonicityWitness {
  Instance instance;
  std::size_t i = 0;
  std::size_t j = 0;
  Rational loss_before;
  Rational loss_after;
};

struct CounterexampleSearch {
  std::size_t max_n = 8;
  std::size_t budget = 100000;  // random trials when max_n > exhaustive_limit
  std::uint64_t seed = 0;
  std::size_t groups = 0;       // 0: spec.groups, else 2

  static constexpr std::size_t exhaustive_limit = 16;
};

/// Searches for an aligned pair whose swap strictly decreases the loss.
///
/// For max_n <= 16 the search covers every per-group multiset of (y, z)
/// cells for every n <= max_n; catalog losses depend only on those counts,
/// so this covers every sequence. Instances on which the loss is undefined
/// are skipped. Larger max_n falls back to `budget` seeded random trials.
std::optional<MonotonicityWitness> find_monotonicity_counterexample(const LossSpec& spec,
                                                                     const CounterexampleSearch& options);

}  // namespace fairsplit
