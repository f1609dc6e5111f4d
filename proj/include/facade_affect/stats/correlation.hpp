#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "facade_affect/core/error.hpp"
#include "facade_affect/stats/basic.hpp"

namespace facade_affect::stats {

struct Correlation {
  double r = 0.0;
  double p_value = 1.0;
  int n = 0;
};

inline Correlation pearson(const std::vector<double>& x, const std::vector<double>& y) {
  require_same_length(x.size(), y.size(), "correlation");
  if (x.size() < 3) throw InputError(fmt::format("correlation needs at least 3 pairs, got {}", x.size()));
  if (is_constant(x) || is_constant(y)) throw DegenerateInputError("correlation undefined: constant input");
  const double mx = mean(x), my = mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  Correlation c;
  c.n = static_cast<int>(x.size());
  c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = c.n - 2.0;
  const double denom = 1.0 - c.r * c.r;
  c.p_value = denom <= 0.0 ? 0.0 : t_two_sided_p(c.r * std::sqrt(df / denom), df);
  return c;
}

// Pearson on mid-ranks.
inline Correlation spearman(const std::vector<double>& x, const std::vector<double>& y) {
  require_same_length(x.size(), y.size(), "spearman");
  if (x.size() < 3) throw InputError(fmt::format("correlation needs at least 3 pairs, got {}", x.size()));
  if (is_constant(x) || is_constant(y)) throw DegenerateInputError("correlation undefined: constant input");
  return pearson(midranks(x), midranks(y));
}

}  // namespace facade_affect::stats
