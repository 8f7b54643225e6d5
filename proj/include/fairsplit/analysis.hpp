#pragma once

// Fixtures where a single classifier must pay for serving several groups,
// and exact measurement of that gap.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "fairsplit/core.hpp"
#include "fairsplit/learners.hpp"
#include "fairsplit/losses.hpp"

namespace fairsplit {

struct Fixture {
  Dataset dataset;
  std::string description;
  std::optional<double> expected_coupled_loss;
  std::optional<double> expected_decoupled_loss;
};

enum class ParityTarget { regression, separator };

/// Uniform over {0,1}^d (every point once for d <= 12, otherwise
/// `samples` seeded draws), y = x_{d-1} xor x_d, group 1 where x_d = 0 and
/// group 2 where x_d = 1.
Fixture make_parity_fixture(std::size_t d, ParityTarget target, std::size_t samples = 4096, std::uint64_t seed = 0);

/// y is the parity of the last s + 1 of d bits, groups split on x_d. A tree
/// needs more than 2^s leaves to beat error 1/4 on it.
Fixture make_tree_parity_fixture(std::size_t s, std::size_t d, std::size_t samples = 4096, std::uint64_t seed = 0);

/// Two groups on parallel lines x2 = 1 (n_major rows) and x2 = 2 (n_minor
/// rows). x1 is symmetric about 0 and never 0; group 1 has y = [x1 > 0],
/// group 2 the opposite.
Fixture make_figure1_fixture(std::size_t n_major, std::size_t n_minor, std::uint64_t seed);

struct CouplingGap {
  double coupled = 0;
  double decoupled = 0;
  double gap = 0;
};

/// Exact best single member of `cls` versus the best per-group combination
/// (found by decoupling with an exhaustive learner, which is exact for
/// monotonic losses).
CouplingGap empirical_coupling_gap(const Dataset& ds, const FiniteClass& cls, const LossSpec& spec,
                                   std::size_t budget = kDefaultExhaustiveBudget);

/// Least-squares regression: one linear model for everyone versus one per
/// group, under l1 (overall MSE) or balanced (mean of group MSEs).
CouplingGap empirical_coupling_gap(const Dataset& ds, const LossSpec& spec);

}  // namespace fairsplit
