#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "facade_affect/core/error.hpp"
#include "facade_affect/stats/basic.hpp"

namespace facade_affect::stats {

struct KruskalWallis {
  double h = 0.0;
  double p_value = 1.0;
  int df = 0;
};

inline void check_groups(const std::vector<std::vector<double>>& groups, const char* what) {
  if (groups.size() < 2) throw InputError(fmt::format("{}: need at least 2 groups", what));
  std::size_t total = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) throw InputError(fmt::format("{}: group {} is empty", what, g));
    total += groups[g].size();
  }
  if (total < 5) throw InputError(fmt::format("{}: need at least 5 observations in total, got {}", what, total));
}

// Tie-corrected H; chi-square reference on g-1 degrees of freedom.
inline KruskalWallis kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  check_groups(groups, "kruskal_wallis");
  std::vector<double> pooled;
  for (const auto& g : groups) pooled.insert(pooled.end(), g.begin(), g.end());
  if (is_constant(pooled)) throw DegenerateInputError("kruskal_wallis: all observations are identical");
  const auto ranks = midranks(pooled);
  const double n = static_cast<double>(pooled.size());
  double sum = 0.0;
  std::size_t offset = 0;
  for (const auto& g : groups) {
    double r = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) r += ranks[offset + i];
    sum += r * r / static_cast<double>(g.size());
    offset += g.size();
  }
  KruskalWallis kw;
  kw.df = static_cast<int>(groups.size()) - 1;
  const double h = 12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0);
  const double correction = 1.0 - tie_term(pooled) / (n * n * n - n);
  kw.h = std::max(0.0, h / correction);
  kw.p_value = chi_squared_upper(kw.h, kw.df);
  return kw;
}

// Samples up to this size per group without ties use the exact null
// distribution of U; larger or tied samples use the normal approximation.
inline constexpr std::size_t kExactMannWhitneyMax = 8;

namespace detail {

// Number of arrangements of m x-values and n y-values with U_x = u, u = 0..m*n.
inline std::vector<double> mann_whitney_counts(int m, int n) {
  // f[i][j][u] built incrementally over (i, j) with the recursion
  // f(u; i, j) = f(u - j; i - 1, j) + f(u; i, j - 1).
  std::vector<std::vector<std::vector<double>>> f(
      static_cast<std::size_t>(m + 1), std::vector<std::vector<double>>(static_cast<std::size_t>(n + 1)));
  for (int i = 0; i <= m; ++i)
    for (int j = 0; j <= n; ++j) {
      auto& cur = f[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      cur.assign(static_cast<std::size_t>(i * j + 1), 0.0);
      if (i == 0 || j == 0) {
        cur[0] = 1.0;
        continue;
      }
      const auto& a = f[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j)];
      const auto& b = f[static_cast<std::size_t>(i)][static_cast<std::size_t>(j - 1)];
      for (int u = 0; u <= i * j; ++u) {
        double v = 0.0;
        if (u - j >= 0 && u - j < static_cast<int>(a.size())) v += a[static_cast<std::size_t>(u - j)];
        if (u < static_cast<int>(b.size())) v += b[static_cast<std::size_t>(u)];
        cur[static_cast<std::size_t>(u)] = v;
      }
    }
  return f[static_cast<std::size_t>(m)][static_cast<std::size_t>(n)];
}

}  // namespace detail

struct MannWhitney {
  double u = 0.0;  // U of the first sample
  double p_value = 1.0;
  bool exact = false;
};

inline MannWhitney mann_whitney(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 2 || y.size() < 2) throw InputError("mann_whitney: each group needs at least 2 observations");
  std::vector<double> pooled = x;
  pooled.insert(pooled.end(), y.begin(), y.end());
  const auto ranks = midranks(pooled);
  const double n1 = static_cast<double>(x.size()), n2 = static_cast<double>(y.size());
  double r1 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) r1 += ranks[i];
  MannWhitney out;
  out.u = r1 - n1 * (n1 + 1.0) / 2.0;
  const double ties = tie_term(pooled);

  if (ties == 0.0 && x.size() <= kExactMannWhitneyMax && y.size() <= kExactMannWhitneyMax) {
    const auto counts = detail::mann_whitney_counts(static_cast<int>(x.size()), static_cast<int>(y.size()));
    double total = 0.0, lower = 0.0, upper = 0.0;
    for (std::size_t u = 0; u < counts.size(); ++u) {
      total += counts[u];
      if (static_cast<double>(u) <= out.u) lower += counts[u];
      if (static_cast<double>(u) >= out.u) upper += counts[u];
    }
    out.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / total);
    out.exact = true;
    return out;
  }

  const double n = n1 + n2;
  const double mu = n1 * n2 / 2.0;
  const double var = n1 * n2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
  if (var <= 0.0) {
    out.p_value = 1.0;
    return out;
  }
  const double diff = std::abs(out.u - mu);
  const double z = std::max(0.0, diff - 0.5) / std::sqrt(var);
  out.p_value = std::min(1.0, normal_two_sided_p(z));
  return out;
}

struct PairwiseComparison {
  std::size_t group_a = 0;
  std::size_t group_b = 0;
  double u = 0.0;
  double p_raw = 1.0;
  double p_adjusted = 1.0;
  bool exact = false;
};

// All pairs (a < b) with Bonferroni adjustment over the number of pairs.
inline std::vector<PairwiseComparison> mann_whitney_bonferroni(const std::vector<std::vector<double>>& groups) {
  check_groups(groups, "mann_whitney_bonferroni");
  for (std::size_t g = 0; g < groups.size(); ++g)
    if (groups[g].size() < 2)
      throw InputError(fmt::format("mann_whitney_bonferroni: group {} has fewer than 2 observations", g));
  const double pairs = static_cast<double>(groups.size() * (groups.size() - 1) / 2);
  std::vector<PairwiseComparison> out;
  for (std::size_t a = 0; a < groups.size(); ++a)
    for (std::size_t b = a + 1; b < groups.size(); ++b) {
      const auto mw = mann_whitney(groups[a], groups[b]);
      out.push_back({a, b, mw.u, mw.p_value, std::min(1.0, mw.p_value * pairs), mw.exact});
    }
  return out;
}

}  // namespace facade_affect::stats
