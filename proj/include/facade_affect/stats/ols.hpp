#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "facade_affect/core/error.hpp"
#include "facade_affect/stats/basic.hpp"

namespace facade_affect::stats {

inline constexpr const char* kInterceptName = "(Intercept)";

// Throws ModelError naming the columns that pivoted QR finds dependent on the others.
inline void require_full_rank(const Eigen::MatrixXd& X, const std::vector<std::string>& names) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  const auto rank = qr.rank();
  if (rank == X.cols()) return;
  const auto& perm = qr.colsPermutation().indices();
  Eigen::MatrixXd kept(X.rows(), rank);
  for (Eigen::Index i = 0; i < rank; ++i) kept.col(i) = X.col(perm(i));
  std::vector<std::string> parts;
  for (Eigen::Index i = rank; i < X.cols(); ++i) {
    const Eigen::VectorXd c = kept.colPivHouseholderQr().solve(X.col(perm(i)));
    std::vector<std::string> with;
    for (Eigen::Index j = 0; j < rank; ++j)
      if (std::abs(c(j)) > 1e-8) with.push_back(names[static_cast<std::size_t>(perm(j))]);
    parts.push_back(fmt::format("'{}' is collinear with {{{}}}", names[static_cast<std::size_t>(perm(i))],
                                fmt::join(with, ", ")));
  }
  throw ModelError(fmt::format("design matrix is rank deficient ({} of {} columns): {}", rank, X.cols(),
                               fmt::join(parts, "; ")));
}

struct OlsFit {
  std::vector<std::string> names;
  Eigen::VectorXd coef;
  Eigen::VectorXd std_error;
  Eigen::VectorXd t_value;
  Eigen::VectorXd p_value;
  double rss = 0.0;
  double r_squared = 0.0;
  double f_statistic = 0.0;
  double f_p_value = 1.0;
  int n = 0;
  int df_residual = 0;

  std::size_t index(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw InputError(fmt::format("no coefficient '{}'", name));
    return static_cast<std::size_t>(it - names.begin());
  }
  double estimate(const std::string& name) const { return coef(static_cast<Eigen::Index>(index(name))); }
};

inline Eigen::VectorXd ols_coefficients(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  return X.colPivHouseholderQr().solve(y);
}

// Ordinary least squares with t inference. The first column of X must be the
// intercept; the overall F test compares against the intercept-only model.
inline OlsFit fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<std::string> names) {
  const auto n = X.rows(), p = X.cols();
  if (static_cast<std::size_t>(p) != names.size()) throw InputError("fit_ols: names do not match design columns");
  if (n <= p) throw InputError(fmt::format("fit_ols: {} observations cannot support {} coefficients", n, p));
  require_full_rank(X, names);

  OlsFit f;
  f.names = std::move(names);
  f.n = static_cast<int>(n);
  f.df_residual = static_cast<int>(n - p);
  f.coef = ols_coefficients(X, y);
  const Eigen::VectorXd resid = y - X * f.coef;
  f.rss = resid.squaredNorm();
  const double sigma2 = f.rss / f.df_residual;
  const Eigen::MatrixXd cov = sigma2 * (X.transpose() * X).inverse();
  f.std_error = cov.diagonal().cwiseSqrt();
  f.t_value.resize(p);
  f.p_value.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    f.t_value(i) = f.std_error(i) > 0 ? f.coef(i) / f.std_error(i) : (f.coef(i) == 0 ? 0.0 : INFINITY);
    f.p_value(i) = t_two_sided_p(f.t_value(i), f.df_residual);
  }
  const double tss = (y.array() - y.mean()).square().sum();
  f.r_squared = tss > 0 ? 1.0 - f.rss / tss : 0.0;
  if (p > 1) {
    const double df1 = static_cast<double>(p - 1);
    f.f_statistic = f.rss > 0 ? ((tss - f.rss) / df1) / sigma2 : INFINITY;
    f.f_p_value = f_upper(f.f_statistic, df1, f.df_residual);
  }
  return f;
}

}  // namespace facade_affect::stats
