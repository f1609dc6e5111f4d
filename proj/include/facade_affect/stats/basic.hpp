#pragma once

// Summary statistics, ranks and reference-distribution tail probabilities.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "facade_affect/core/error.hpp"

namespace facade_affect::stats {

inline double mean(const std::vector<double>& x) {
  if (x.empty()) throw InputError("mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// Sample variance (n-1 denominator); absent for n < 2.
inline std::optional<double> sample_variance(const std::vector<double>& x) {
  if (x.size() < 2) return std::nullopt;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

inline std::optional<double> sample_sd(const std::vector<double>& x) {
  auto v = sample_variance(x);
  if (!v) return std::nullopt;
  return std::sqrt(*v);
}

inline bool is_constant(const std::vector<double>& x) {
  return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
}

// Mid-ranks, 1-based.
inline std::vector<double> midranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double rank = (static_cast<double>(i + j) + 2.0) / 2.0;
    for (std::size_t t = i; t <= j; ++t) r[idx[t]] = rank;
    i = j + 1;
  }
  return r;
}

// Sum of t^3 - t over tie groups.
inline double tie_term(const std::vector<double>& x) {
  std::vector<double> s = x;
  std::sort(s.begin(), s.end());
  double total = 0.0;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t j = i;
    while (j < s.size() && s[j] == s[i]) ++j;
    const double t = static_cast<double>(j - i);
    total += t * t * t - t;
    i = j;
  }
  return total;
}

inline double normal_two_sided_p(double z) {
  if (std::isnan(z)) return 1.0;
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

inline double t_two_sided_p(double t, double df) {
  if (std::isinf(t)) return 0.0;
  boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

inline double chi_squared_upper(double x, double df) {
  if (x <= 0.0) return 1.0;
  boost::math::chi_squared dist(df);
  return boost::math::cdf(boost::math::complement(dist, x));
}

inline double f_upper(double f, double df1, double df2) {
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  boost::math::fisher_f dist(df1, df2);
  return boost::math::cdf(boost::math::complement(dist, f));
}

inline void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw InputError(std::string(what) + ": inputs differ in length");
}

}  // namespace facade_affect::stats
