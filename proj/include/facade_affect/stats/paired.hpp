#pragma once

#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "facade_affect/core/error.hpp"
#include "facade_affect/stats/basic.hpp"

namespace facade_affect::stats {

struct PairedT {
  double t = 0.0;
  double p_value = 1.0;
  double mean_diff = 0.0;  // mean of y - x
  int df = 0;
};

inline PairedT paired_t(const std::vector<double>& x, const std::vector<double>& y) {
  require_same_length(x.size(), y.size(), "paired_t");
  if (x.size() < 2) throw InputError(fmt::format("paired_t: need at least 2 pairs, got {}", x.size()));
  std::vector<double> d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = y[i] - x[i];
  const double sd = *sample_sd(d);
  PairedT r;
  r.mean_diff = mean(d);
  r.df = static_cast<int>(d.size()) - 1;
  // A constant nonzero shift is an infinitely strong effect; no shift at all is degenerate.
  if (sd == 0.0) {
    if (r.mean_diff == 0.0) throw DegenerateInputError("paired_t: all differences are zero");
    r.t = std::copysign(INFINITY, r.mean_diff);
    r.p_value = 0.0;
    return r;
  }
  r.t = r.mean_diff / (sd / std::sqrt(static_cast<double>(d.size())));
  r.p_value = t_two_sided_p(r.t, r.df);
  return r;
}

}  // namespace facade_affect::stats
