#pragma once

// Reference computations used to check the library: brute-force enumeration,
// direct numerical integration and plain textbook formulas, written without
// any of the library's statistical code.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "facade_affect/stats/dataset.hpp"

namespace facade_affect::testing {

// Two-sided Student t tail by composite Simpson integration of the density.
inline double t_two_sided_p_simpson(double t, double df, int intervals = 200000) {
  t = std::abs(t);
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * std::numbers::pi);
  auto pdf = [&](double x) { return c * std::pow(1.0 + x * x / df, -(df + 1) / 2); };
  const double h = t / intervals;
  double s = pdf(0) + pdf(t);
  for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * pdf(i * h);
  const double central = s * h / 3.0;  // P(0 <= T <= t)
  return std::max(0.0, 1.0 - 2.0 * central);
}

// Exact two-sided Mann-Whitney p by enumerating every split of the pooled
// sample into groups of the observed sizes.
inline double mann_whitney_exact_bruteforce(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> pooled = x;
  pooled.insert(pooled.end(), y.begin(), y.end());
  const int n = static_cast<int>(pooled.size()), m = static_cast<int>(x.size());
  auto u_of = [&](std::uint32_t mask) {
    double u = 0;
    for (int i = 0; i < n; ++i)
      if (mask >> i & 1)
        for (int j = 0; j < n; ++j)
          if (!(mask >> j & 1)) u += pooled[i] > pooled[j] ? 1.0 : (pooled[i] == pooled[j] ? 0.5 : 0.0);
    return u;
  };
  const double observed = u_of((1u << m) - 1);
  double total = 0, le = 0, ge = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != m) continue;
    const double u = u_of(mask);
    ++total;
    le += u <= observed + 1e-9;
    ge += u >= observed - 1e-9;
  }
  return std::min(1.0, 2.0 * std::min(le, ge) / total);
}

// Spearman rho for untied data from squared rank differences.
inline double spearman_no_ties(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  auto rank = [&](const std::vector<double>& v, std::size_t i) {
    double r = 1;
    for (std::size_t j = 0; j < n; ++j) r += v[j] < v[i];
    return r;
  };
  double d2 = 0;
  for (std::size_t i = 0; i < n; ++i) d2 += std::pow(rank(x, i) - rank(y, i), 2);
  const double nd = static_cast<double>(n);
  return 1.0 - 6.0 * d2 / (nd * (nd * nd - 1.0));
}

struct AnovaOracle {
  double ms_rows, ms_cols, ms_error, icc21;
};

// Two-way ANOVA from the cell-wise residual decomposition.
inline AnovaOracle two_way_anova(const std::vector<std::vector<double>>& t) {
  const std::size_t n = t.size(), k = t[0].size();
  std::vector<double> rm(n, 0), cm(k, 0);
  double g = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      rm[i] += t[i][j] / static_cast<double>(k);
      cm[j] += t[i][j] / static_cast<double>(n);
      g += t[i][j] / static_cast<double>(n * k);
    }
  double ssr = 0, ssc = 0, sse = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      ssr += std::pow(rm[i] - g, 2);
      ssc += std::pow(cm[j] - g, 2);
      sse += std::pow(t[i][j] - rm[i] - cm[j] + g, 2);
    }
  const double nd = static_cast<double>(n), kd = static_cast<double>(k);
  AnovaOracle o{ssr / (nd - 1), ssc / (kd - 1), sse / ((nd - 1) * (kd - 1)), 0};
  o.icc21 = (o.ms_rows - o.ms_error) / (o.ms_rows + (kd - 1) * o.ms_error + kd * (o.ms_cols - o.ms_error) / nd);
  return o;
}

// Full-study-scale long data: 85 participants x 15 stimuli drawn cyclically from 86.
// The predictor is z-scored at observation level before generating the
// response, so `beta` is the slope the fitter's standardised term estimates.
struct SyntheticLme {
  stats::LongDataset data;
  std::vector<double> z;  // standardised predictor per row
};

inline SyntheticLme synthetic_lme(std::uint64_t seed, double beta, double sd_u, double sd_e, int n_participants = 85,
                                  int n_stimuli = 86, int k = 15) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> feature(static_cast<std::size_t>(n_stimuli));
  for (auto& f : feature) f = normal(rng);
  std::vector<std::string> pid;
  std::vector<int> sid;
  std::vector<double> x;
  for (int p = 0; p < n_participants; ++p)
    for (int j = 0; j < k; ++j) {
      const int s = (p * k + j) % n_stimuli;
      pid.push_back("P" + std::to_string(1000 + p));
      sid.push_back(s + 1);
      x.push_back(feature[static_cast<std::size_t>(s)]);
    }
  SyntheticLme out;
  out.z = stats::standardize(x);
  std::vector<double> u(static_cast<std::size_t>(n_participants));
  for (auto& v : u) v = sd_u * normal(rng);
  out.data.response_name = "arousal";
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double y = beta * out.z[i] + u[i / static_cast<std::size_t>(k)] + sd_e * normal(rng);
    out.data.add_row(pid[i], sid[i], {{"complexity", x[i]}}, y);
  }
  return out;
}

}  // namespace facade_affect::testing
