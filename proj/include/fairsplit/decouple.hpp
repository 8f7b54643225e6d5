#pragma once

// Per-group candidate generation and the joint-loss product search.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fairsplit/core.hpp"
#include "fairsplit/learners.hpp"
#include "fairsplit/losses.hpp"

namespace fairsplit {

/// A candidate with its training statistics on its own group's rows.
struct CandidateEntry {
  Predictor model;
  GroupCounts counts;          // binary mode
  double squared_error = 0.0;  // regression mode: sum of (y - z)^2 over the group
  std::optional<double> theta;
};

struct CandidateTable {
  Mode mode = Mode::binary;
  std::vector<std::vector<CandidateEntry>> per_group;
};

struct GroupMeta {
  std::vector<std::size_t> sizes;  // n_k
  std::size_t total = 0;           // n

  static GroupMeta of(const Dataset& ds);
};

struct SearchOptions {
  std::size_t max_groups = 4;
  /// For l1 and balanced losses, minimize each group on its own (same
  /// result, sum instead of product of list sizes in evaluations).
  bool exploit_separable = true;
};

struct SearchResult {
  std::vector<std::size_t> selection;
  double loss = 0.0;
  std::optional<Rational> exact_loss;  // binary mode
  bool parity_infeasible = false;
  std::size_t evaluations = 0;
};

/// Exact minimizer of the joint loss over every combination of one
/// candidate per group, using only the table's stored statistics.
/// Ties go to the lexicographically smallest selection.
///
/// A fixed-profile loss selects, in each group, the candidate with
/// P = p*_k * n directly. For a strict-parity loss with no feasible
/// combination, the L1-minimal combination is returned and flagged.
SearchResult product_search(const CandidateTable& table, const LossSpec& spec, const GroupMeta& meta,
                            const SearchOptions& options = {});

/// Builds the table entry for `candidate` by predicting on `rows` of `ds`.
CandidateEntry make_entry(const CandidateClassifier& candidate, const Dataset& ds, std::span<const std::size_t> rows);

/// Runs the learner on each group's rows and picks the best combination.
/// Throws ContractViolation on duplicate positive counts or stale stored
/// counts, and std::invalid_argument on an empty group.
DecoupledClassifier decouple(const BaseLearner& learner, const LossSpec& spec, const Dataset& ds,
                             const SearchOptions& options = {});

/// Trains group k's candidates given its own rows and everyone else's.
class TransferLearner {
 public:
  virtual ~TransferLearner() = default;
  virtual std::vector<CandidateClassifier> fit(const Dataset& ds, std::span<const std::size_t> in_rows,
                                               std::span<const std::size_t> out_rows, GroupIndex k) const = 0;
};

DecoupledClassifier general_decouple(const TransferLearner& transfer, const LossSpec& spec, const Dataset& ds,
                                     const SearchOptions& options = {});

/// The table general_decouple searches over (exposed for inspection).
CandidateTable build_candidate_table(const TransferLearner& transfer, const Dataset& ds);

}  // namespace fairsplit
