#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "facade_affect/core/error.hpp"
#include "facade_affect/stats/dataset.hpp"
#include "facade_affect/stats/ols.hpp"

namespace facade_affect::stats {

struct MultivariateR2 {
  double r_squared = 0.0;
  double f_statistic = 0.0;
  double p_value = 1.0;
  int n = 0;  // stimuli
  int df1 = 0;
  int df2 = 0;
  OlsFit fit;
};

// OLS of the stimulus-mean response on stimulus-mean predictors.
inline MultivariateR2 multivariate_r2(const LongDataset& data, const std::vector<std::string>& predictors,
                                      const std::string& response) {
  if (predictors.empty()) throw InputError("multivariate_r2: no predictors");
  std::vector<std::string> cols = predictors;
  cols.push_back(response);
  const auto agg = aggregate_by_stimulus(data, cols);
  const auto n = static_cast<Eigen::Index>(agg.stimulus.size());
  const auto p = static_cast<Eigen::Index>(predictors.size());
  if (n <= p + 1)
    throw InputError(fmt::format("multivariate_r2: {} stimuli cannot support {} predictors", n, predictors.size()));
  Eigen::MatrixXd X(n, p + 1);
  X.col(0).setOnes();
  std::vector<std::string> names{kInterceptName};
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto& c = agg.columns.at(predictors[static_cast<std::size_t>(j)]);
    for (Eigen::Index i = 0; i < n; ++i) X(i, j + 1) = c[static_cast<std::size_t>(i)];
    names.push_back(predictors[static_cast<std::size_t>(j)]);
  }
  const auto& yc = agg.columns.at(response);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(yc.data(), n);
  MultivariateR2 r;
  r.fit = fit_ols(X, y, names);
  r.r_squared = r.fit.r_squared;
  r.f_statistic = r.fit.f_statistic;
  r.p_value = r.fit.f_p_value;
  r.n = static_cast<int>(n);
  r.df1 = static_cast<int>(p);
  r.df2 = static_cast<int>(n - p - 1);
  return r;
}

}  // namespace facade_affect::stats
