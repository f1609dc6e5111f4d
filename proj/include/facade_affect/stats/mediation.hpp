#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <fmt/format.h>

#include "facade_affect/core/error.hpp"
#include "facade_affect/core/random.hpp"
#include "facade_affect/stats/basic.hpp"

namespace facade_affect::stats {

struct MediationResult {
  double path_a = 0.0;          // m ~ x
  double path_b = 0.0;          // y ~ x + m, coefficient of m
  double direct_effect = 0.0;   // y ~ x + m, coefficient of x
  double indirect_effect = 0.0; // a * b
  double total_effect = 0.0;    // y ~ x
  double indirect_ci_low = 0.0;
  double indirect_ci_high = 0.0;
  double indirect_p = 1.0;
  double direct_ci_low = 0.0;
  double direct_ci_high = 0.0;
  int n_bootstrap = 0;
  std::uint64_t seed = 0;
};

namespace detail {

struct Paths {
  double a, b, direct, total;
};

inline std::optional<Paths> mediation_paths(const std::vector<double>& x, const std::vector<double>& m,
                                            const std::vector<double>& y, const std::vector<std::size_t>& idx) {
  const double n = static_cast<double>(idx.size());
  double mx = 0, mm = 0, my = 0;
  for (auto i : idx) {
    mx += x[i];
    mm += m[i];
    my += y[i];
  }
  mx /= n;
  mm /= n;
  my /= n;
  double sxx = 0, smm = 0, sxm = 0, sxy = 0, smy = 0;
  for (auto i : idx) {
    const double dx = x[i] - mx, dm = m[i] - mm, dy = y[i] - my;
    sxx += dx * dx;
    smm += dm * dm;
    sxm += dx * dm;
    sxy += dx * dy;
    smy += dm * dy;
  }
  const double det = sxx * smm - sxm * sxm;
  if (sxx <= 0 || smm <= 0 || det <= 1e-12 * sxx * smm) return std::nullopt;
  Paths p;
  p.a = sxm / sxx;
  p.direct = (smm * sxy - sxm * smy) / det;
  p.b = (sxx * smy - sxm * sxy) / det;
  p.total = sxy / sxx;
  return p;
}

inline double quantile_sorted(const std::vector<double>& s, double q) {
  const double h = (static_cast<double>(s.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

}  // namespace detail

// Simple mediation x -> m -> y with a percentile bootstrap. Replicate b draws
// from its own stream; resamples with constant or collinear x and m are redrawn.
inline MediationResult mediate(const std::vector<double>& x, const std::vector<double>& m, const std::vector<double>& y,
                               int n_bootstrap = 5000, std::uint64_t seed = 0, double ci_level = 0.95) {
  require_same_length(x.size(), m.size(), "mediate");
  require_same_length(x.size(), y.size(), "mediate");
  if (x.size() < 10) throw InputError(fmt::format("mediate: need at least 10 observations, got {}", x.size()));
  if (is_constant(x)) throw InputError("mediate: x is constant");
  if (is_constant(m)) throw InputError("mediate: mediator is constant");
  if (n_bootstrap < 1) throw ConfigError("mediate: n_bootstrap must be >= 1");

  std::vector<std::size_t> all(x.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto point = detail::mediation_paths(x, m, y, all);
  if (!point) throw InputError("mediate: x and mediator are collinear");

  MediationResult r;
  r.path_a = point->a;
  r.path_b = point->b;
  r.direct_effect = point->direct;
  r.total_effect = point->total;
  r.indirect_effect = point->a * point->b;
  r.n_bootstrap = n_bootstrap;
  r.seed = seed;

  std::vector<double> indirect, direct;
  indirect.reserve(static_cast<std::size_t>(n_bootstrap));
  direct.reserve(static_cast<std::size_t>(n_bootstrap));
  std::vector<std::size_t> idx(x.size());
  std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
  for (int b = 0; b < n_bootstrap; ++b) {
    Rng rng = derive_rng(seed, static_cast<std::uint64_t>(b));
    std::optional<detail::Paths> p;
    for (int attempt = 0; attempt < 100 && !p; ++attempt) {
      for (auto& i : idx) i = pick(rng);
      p = detail::mediation_paths(x, m, y, idx);
    }
    if (!p) throw SimulationError(fmt::format("mediate: bootstrap replicate {} kept drawing degenerate samples", b));
    indirect.push_back(p->a * p->b);
    direct.push_back(p->direct);
  }

  const double below = static_cast<double>(std::count_if(indirect.begin(), indirect.end(), [](double v) { return v <= 0; }));
  const double above = static_cast<double>(std::count_if(indirect.begin(), indirect.end(), [](double v) { return v >= 0; }));
  r.indirect_p = std::min(1.0, 2.0 * std::min(below, above) / n_bootstrap);

  const double tail = (1.0 - ci_level) / 2.0;
  std::sort(indirect.begin(), indirect.end());
  std::sort(direct.begin(), direct.end());
  r.indirect_ci_low = detail::quantile_sorted(indirect, tail);
  r.indirect_ci_high = detail::quantile_sorted(indirect, 1.0 - tail);
  r.direct_ci_low = detail::quantile_sorted(direct, tail);
  r.direct_ci_high = detail::quantile_sorted(direct, 1.0 - tail);
  return r;
}

}  // namespace facade_affect::stats
