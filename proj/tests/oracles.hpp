#pragma once

// Brute-force reference implementations, written directly from the loss
// and bound formulas without reusing library code paths.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "fairsplit/core.hpp"
#include "fairsplit/learners.hpp"
#include "fairsplit/losses.hpp"
#include "fairsplit/rational.hpp"

namespace oracle {

using fairsplit::Rational;

struct Tally {
  long n = 0, errors = 0, positives = 0, label_pos = 0, false_neg = 0, false_pos = 0;
};

inline std::vector<Tally> tally(const std::vector<unsigned>& g, const std::vector<int>& y, const std::vector<int>& z,
                                std::size_t K) {
  std::vector<Tally> t(K);
  for (std::size_t i = 0; i < g.size(); ++i) {
    Tally& s = t[g[i] - 1];
    s.n += 1;
    s.errors += y[i] != z[i];
    s.positives += z[i];
    s.label_pos += y[i];
    s.false_neg += (y[i] == 1 && z[i] == 0);
    s.false_pos += (y[i] == 0 && z[i] == 1);
  }
  return t;
}

inline Rational q(long a, long b) {
  Rational r(a, b);
  r.canonicalize();
  return r;
}

/// Joint loss straight from the sequence; nullopt where undefined.
inline std::optional<Rational> joint_loss(const fairsplit::LossSpec& spec, const std::vector<unsigned>& g,
                                          const std::vector<int>& y, const std::vector<int>& z, std::size_t K) {
  using K_ = fairsplit::LossKind;
  const long n = static_cast<long>(g.size());
  auto t = tally(g, y, z, K);
  long err = 0;
  for (auto& s : t) err += s.errors;
  const Rational L1 = q(err, n);
  const Rational lam = spec.lambda.value_or(Rational(0));
  auto spread = [&](const std::vector<Rational>& v) {
    Rational mean = 0;
    for (auto& x : v) mean += x;
    mean /= static_cast<long>(v.size());
    Rational s = 0;
    for (auto& x : v) s += x >= mean ? Rational(x - mean) : Rational(mean - x);
    return s;
  };
  std::vector<Rational> v;
  switch (spec.kind) {
    case K_::l1:
      return L1;
    case K_::balanced: {
      Rational s = 0;
      for (auto& c : t) {
        if (c.n == 0) return std::nullopt;
        s += q(c.errors, c.n);
      }
      return s / static_cast<long>(K);
    }
    case K_::strict_numerical_parity:
      for (auto& c : t) {
        if (c.positives != t[0].positives) return Rational(1);
      }
      return L1;
    case K_::numerical_parity:
      for (auto& c : t) v.push_back(q(c.positives, n));
      return lam * L1 + (1 - lam) * spread(v);
    case K_::strict_demographic_parity:
      for (auto& c : t) {
        if (c.n == 0) return std::nullopt;
      }
      for (auto& c : t) {
        if (q(c.positives, c.n) != q(t[0].positives, t[0].n)) return Rational(1);
      }
      return L1;
    case K_::demographic_parity:
      for (auto& c : t) {
        if (c.n == 0) return std::nullopt;
        v.push_back(q(c.positives, c.n));
      }
      return lam * L1 + (1 - lam) * spread(v);
    case K_::fixed_profile:
      for (std::size_t k = 0; k < K; ++k) {
        if (q(t[k].positives, n) != spec.target_profile[k]) return Rational(1);
      }
      return L1;
    case K_::fnr_parity:
      for (auto& c : t) {
        if (c.label_pos == 0) return std::nullopt;
        v.push_back(q(c.false_neg, c.label_pos));
      }
      return lam * L1 + (1 - lam) * spread(v);
    case K_::abs_gap: {
      if (t[0].n == 0 || t[1].n == 0) return std::nullopt;
      Rational a = q(t[0].errors, t[0].n), b = q(t[1].errors, t[1].n);
      Rational gap = a >= b ? Rational(a - b) : Rational(b - a);
      return (1 - lam) * (a + b) + lam * gap;
    }
  }
  return std::nullopt;
}

/// f(theta) evaluated in long double.
inline long double f_bound(long double theta, long double nk, long double nmk, long double Delta, long double conf,
                           long double C) {
  long double L = std::log(2.0L * C / conf);
  return (std::sqrt(2.0L * (nk + theta * theta * nmk) * L) + theta * nmk * Delta) / (nk + theta * nmk);
}

/// Error counts per positive count over every threshold "score > t", with
/// t ranging over +inf, -inf and every midpoint of distinct scores.
/// Returns P -> (errors, threshold) keeping the first (largest) threshold.
inline std::map<std::size_t, std::pair<long, double>> threshold_table(const std::vector<double>& s,
                                                                      const std::vector<int>& y) {
  std::vector<double> u(s);
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  std::vector<double> ts{INFINITY};
  for (std::size_t i = u.size(); i-- > 1;) ts.push_back(u[i - 1] + (u[i] - u[i - 1]) / 2);
  ts.push_back(-INFINITY);
  std::map<std::size_t, std::pair<long, double>> out;
  for (double t : ts) {
    std::size_t P = 0;
    long e = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      int z = s[i] > t;
      P += z;
      e += z != y[i];
    }
    auto it = out.find(P);
    if (it == out.end() || e < it->second.first) out[P] = {e, t};
  }
  return out;
}

/// Minimum joint loss over every assignment of one class member per group.
/// outputs[c][i] is member c's classification of row i. nullopt when the
/// loss is undefined everywhere.
inline std::optional<Rational> brute_force_min(const fairsplit::LossSpec& spec,
                                               const std::vector<std::vector<int>>& outputs,
                                               const std::vector<unsigned>& g, const std::vector<int>& y,
                                               std::size_t K) {
  const std::size_t C = outputs.size();
  std::vector<std::size_t> pick(K, 0);
  std::optional<Rational> best;
  std::vector<int> z(g.size());
  while (true) {
    for (std::size_t i = 0; i < g.size(); ++i) z[i] = outputs[pick[g[i] - 1]][i];
    auto v = joint_loss(spec, g, y, z, K);
    if (v && (!best || *v < *best)) best = v;
    std::size_t k = 0;
    while (k < K && ++pick[k] == C) pick[k++] = 0;
    if (k == K) break;
  }
  return best;
}

/// Random truth tables over x in {0..values-1}; member 0 is constant 0.
inline fairsplit::FiniteClass random_truth_class(std::mt19937_64& rng, std::size_t size, int values) {
  fairsplit::FiniteClass cls;
  cls.members.emplace_back(fairsplit::ConstantPredictor{0.0});
  while (cls.size() < size) {
    fairsplit::TruthTable t;
    for (int v = 0; v < values; ++v) t.table[{static_cast<double>(v)}] = static_cast<double>(rng() & 1);
    cls.members.emplace_back(std::move(t));
  }
  return cls;
}

}  // namespace oracle
