#include "fairsplit/decouple.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>

#include "fairsplit/errors.hpp"

namespace fairsplit {

GroupMeta GroupMeta::of(const Dataset& ds) {
  GroupMeta meta;
  meta.sizes = ds.group_sizes();
  meta.total = ds.rows();
  return meta;
}

namespace {

bool separable(LossKind kind) { return kind == LossKind::l1 || kind == LossKind::balanced; }

bool advance(std::vector<std::size_t>& idx, const CandidateTable& table) {
  for (std::size_t k = idx.size(); k > 0; --k) {
    if (++idx[k - 1] < table.per_group[k - 1].size()) return true;
    idx[k - 1] = 0;
  }
  return false;
}

SearchResult fixed_profile_lookup(const CandidateTable& table, const LossSpec& spec, const GroupMeta& meta) {
  SearchResult result;
  const std::size_t K = table.per_group.size();
  std::vector<GroupCounts> counts;
  for (std::size_t k = 0; k < K; ++k) {
    const Rational target = spec.target_profile[k] * Rational(static_cast<unsigned long>(meta.total));
    const auto& list = table.per_group[k];
    std::optional<std::size_t> hit;
    for (std::size_t c = 0; c < list.size(); ++c) {
      if (target.get_den() == 1 && Rational(static_cast<unsigned long>(list[c].counts.positives)) == target) {
        hit = c;
        break;
      }
    }
    if (!hit) {
      std::size_t nearest = list.front().counts.positives;
      for (const auto& e : list) {
        if (abs_value(Rational(static_cast<unsigned long>(e.counts.positives)) - target) <
            abs_value(Rational(static_cast<unsigned long>(nearest)) - target)) {
          nearest = e.counts.positives;
        }
      }
      throw ContractViolation("target profile unachievable in group " + std::to_string(k + 1) + ": needs P = " +
                              to_string(target) + ", nearest achievable P = " + std::to_string(nearest));
    }
    result.selection.push_back(*hit);
    counts.push_back(list[*hit].counts);
  }
  Rational loss = evaluate_exact(spec, counts, meta.total);
  result.evaluations = 1;
  result.loss = to_double(loss);
  result.exact_loss = loss;
  return result;
}

// Each group's first candidate with the fewest errors; the lexicographically
// first joint minimizer of a separable loss.
SearchResult search_separable(const CandidateTable& table, const LossSpec& spec, const GroupMeta& meta) {
  SearchResult result;
  std::vector<GroupCounts> counts;
  for (const auto& list : table.per_group) {
    std::size_t best = 0;
    for (std::size_t c = 0; c < list.size(); ++c) {
      ++result.evaluations;
      if (list[c].counts.errors() < list[best].counts.errors()) best = c;
    }
    result.selection.push_back(best);
    counts.push_back(list[best].counts);
  }
  Rational loss = evaluate_exact(spec, counts, meta.total);
  result.exact_loss = loss;
  result.loss = to_double(loss);
  return result;
}

SearchResult search_binary(const CandidateTable& table, const LossSpec& spec, const GroupMeta& meta) {
  const std::size_t K = table.per_group.size();
  std::vector<std::size_t> idx(K, 0);
  std::vector<GroupCounts> counts(K);

  SearchResult result;
  std::optional<Rational> best;                  // feasible (or any, for non-strict losses)
  std::optional<Rational> best_l1;               // strict losses: L1 over every combination
  std::vector<std::size_t> best_l1_selection;
  const bool strict = is_strict(spec.kind);
  const LossSpec l1 = LossSpec::l1();

  while (true) {
    for (std::size_t k = 0; k < K; ++k) counts[k] = table.per_group[k][idx[k]].counts;
    ++result.evaluations;
    if (strict) {
      Rational err = evaluate_exact(l1, counts, meta.total);
      if (!best_l1 || err < *best_l1) {
        best_l1 = err;
        best_l1_selection = idx;
      }
      if (parity_holds(spec, counts, meta.total) && (!best || err < *best)) {
        best = err;
        result.selection = idx;
      }
    } else {
      Rational loss = evaluate_exact(spec, counts, meta.total);
      if (!best || loss < *best) {
        best = loss;
        result.selection = idx;
      }
    }
    // odometer, last group fastest, so strict < keeps the lexicographic first
    if (!advance(idx, table)) break;
  }

  if (strict && !best) {
    result.selection = best_l1_selection;
    result.parity_infeasible = true;
    best = Rational(1);
  }
  result.exact_loss = *best;
  result.loss = to_double(*best);
  return result;
}

SearchResult search_regression(const CandidateTable& table, const LossSpec& spec, const GroupMeta& meta) {
  if (!separable(spec.kind)) {
    throw ConfigError("regression mode accepts only balanced and l1 losses, got '" + spec.id() + "'");
  }
  const std::size_t K = table.per_group.size();
  std::vector<std::size_t> idx(K, 0);
  std::vector<double> losses(K);
  SearchResult result;
  std::optional<double> best;
  while (true) {
    for (std::size_t k = 0; k < K; ++k) {
      losses[k] = table.per_group[k][idx[k]].squared_error / static_cast<double>(meta.sizes[k]);
    }
    ++result.evaluations;
    const double loss = evaluate_real(spec, losses, meta.sizes);
    if (!best || loss < *best) {
      best = loss;
      result.selection = idx;
    }
    if (!advance(idx, table)) break;
  }
  result.loss = *best;
  return result;
}

}  // namespace

SearchResult product_search(const CandidateTable& table, const LossSpec& spec, const GroupMeta& meta,
                            const SearchOptions& options) {
  const std::size_t K = table.per_group.size();
  if (K == 0) throw std::invalid_argument("candidate table has no groups");
  if (K > options.max_groups) {
    throw BudgetExceeded("product search over " + std::to_string(K) + " groups exceeds the cap of " +
                         std::to_string(options.max_groups));
  }
  if (meta.sizes.size() != K) throw std::invalid_argument("group metadata does not match the table");
  for (std::size_t k = 0; k < K; ++k) {
    if (table.per_group[k].empty()) throw std::invalid_argument("group " + std::to_string(k + 1) + " has no candidates");
  }
  spec.validate(K);
  if (table.mode == Mode::regression) return search_regression(table, spec, meta);
  if (spec.kind == LossKind::fixed_profile) return fixed_profile_lookup(table, spec, meta);
  if (options.exploit_separable && separable(spec.kind)) return search_separable(table, spec, meta);
  return search_binary(table, spec, meta);
}

CandidateEntry make_entry(const CandidateClassifier& candidate, const Dataset& ds, std::span<const std::size_t> rows) {
  CandidateEntry entry;
  entry.model = candidate.model;
  entry.theta = candidate.theta;
  std::vector<double> z = predict_rows(candidate.model, ds, rows);
  std::vector<double> y;
  y.reserve(rows.size());
  for (std::size_t r : rows) y.push_back(ds.labels[r]);
  if (ds.mode == Mode::binary) {
    entry.counts = count_group(y, z);
  } else {
    for (std::size_t i = 0; i < rows.size(); ++i) entry.squared_error += (y[i] - z[i]) * (y[i] - z[i]);
    entry.counts.size = rows.size();
  }
  return entry;
}

namespace {

std::vector<CandidateEntry> entries_for_group(const std::vector<CandidateClassifier>& candidates, const Dataset& ds,
                                              std::span<const std::size_t> rows, std::size_t k) {
  if (candidates.empty()) throw ContractViolation("learner returned no candidates for group " + std::to_string(k + 1));
  std::vector<CandidateEntry> out;
  std::set<std::size_t> seen;
  for (const CandidateClassifier& cand : candidates) {
    CandidateEntry entry = make_entry(cand, ds, rows);
    if (ds.mode == Mode::binary) {
      if (entry.counts.positives != cand.positives) {
        throw ContractViolation("group " + std::to_string(k + 1) + ": candidate claims P = " +
                                std::to_string(cand.positives) + " but classifies " +
                                std::to_string(entry.counts.positives) + " rows positive");
      }
      if (!seen.insert(cand.positives).second) {
        throw ContractViolation("group " + std::to_string(k + 1) + ": two candidates with P = " +
                                std::to_string(cand.positives));
      }
    }
    out.push_back(std::move(entry));
  }
  return out;
}

DecoupledClassifier assemble(const CandidateTable& table, const LossSpec& spec, const Dataset& ds,
                             const SearchOptions& options) {
  SearchResult found = product_search(table, spec, GroupMeta::of(ds), options);
  DecoupledClassifier dc;
  for (std::size_t k = 0; k < table.per_group.size(); ++k) {
    dc.per_group.push_back(table.per_group[k][found.selection[k]].model);
  }
  dc.achieved_loss = found.loss;
  dc.loss_spec_id = spec.id();
  dc.selection = found.selection;
  dc.parity_infeasible = found.parity_infeasible;
  return dc;
}

void check_groups(const Dataset& ds) {
  if (ds.group_count == 0) throw std::invalid_argument("dataset has no groups");
  auto sizes = ds.group_sizes();
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (sizes[k] == 0) throw std::invalid_argument("group " + std::to_string(k + 1) + " is empty");
  }
}

}  // namespace

DecoupledClassifier decouple(const BaseLearner& learner, const LossSpec& spec, const Dataset& ds,
                             const SearchOptions& options) {
  check_groups(ds);
  if (ds.group_count > options.max_groups) {
    throw BudgetExceeded("decoupling " + std::to_string(ds.group_count) + " groups exceeds the cap of " +
                         std::to_string(options.max_groups));
  }
  CandidateTable table;
  table.mode = ds.mode;
  for (GroupIndex k = 1; k <= ds.group_count; ++k) {
    auto rows = ds.group_rows(k);
    auto candidates = learner.fit(WeightedSample::from_rows(ds, rows));
    table.per_group.push_back(entries_for_group(candidates, ds, rows, k - 1));
  }
  return assemble(table, spec, ds, options);
}

CandidateTable build_candidate_table(const TransferLearner& transfer, const Dataset& ds) {
  check_groups(ds);
  CandidateTable table;
  table.mode = ds.mode;
  for (GroupIndex k = 1; k <= ds.group_count; ++k) {
    std::vector<std::size_t> in_rows, out_rows;
    for (std::size_t i = 0; i < ds.rows(); ++i) (ds.groups[i] == k ? in_rows : out_rows).push_back(i);
    auto candidates = transfer.fit(ds, in_rows, out_rows, k);
    table.per_group.push_back(entries_for_group(candidates, ds, in_rows, k - 1));
  }
  return table;
}

DecoupledClassifier general_decouple(const TransferLearner& transfer, const LossSpec& spec, const Dataset& ds,
                                     const SearchOptions& options) {
  if (ds.group_count > options.max_groups) {
    throw BudgetExceeded("decoupling " + std::to_string(ds.group_count) + " groups exceeds the cap of " +
                         std::to_string(options.max_groups));
  }
  return assemble(build_candidate_table(transfer, ds), spec, ds, options);
}

}  // namespace fairsplit
