#pragma once

// Linear mixed model with a random intercept per participant, fitted by REML.
//
// With H = I + lambda Z Z' (lambda = var_u / var_e) every group block of H^-1
// is I - w_j 11' with w_j = lambda / (1 + n_j lambda), so the GLS quantities
// reduce to per-group column sums. Fixed effects and var_e are profiled out;
// log(lambda) is searched numerically.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "facade_affect/core/error.hpp"
#include "facade_affect/core/types.hpp"
#include "facade_affect/stats/basic.hpp"
#include "facade_affect/stats/dataset.hpp"
#include "facade_affect/stats/ols.hpp"

namespace facade_affect::stats {

struct LmeSearch {
  double log_lambda_min = -12.0;
  double log_lambda_max = 8.0;
  double grid_step = 0.5;
  int bits = 28;  // relative tolerance 2^(1-bits), about 1e-8
  int max_iterations = 200;
};

namespace detail {

struct RemlProblem {
  const Eigen::MatrixXd& X;
  const Eigen::VectorXd& y;
  const std::vector<int>& group;
  int n_groups;
  Eigen::MatrixXd XtX;
  Eigen::VectorXd Xty;
  Eigen::MatrixXd S;   // p x G column sums per group
  Eigen::VectorXd T;   // response sums per group
  Eigen::VectorXd ng;  // group sizes

  RemlProblem(const Eigen::MatrixXd& X_, const Eigen::VectorXd& y_, const std::vector<int>& g, int G)
      : X(X_), y(y_), group(g), n_groups(G) {
    XtX = X.transpose() * X;
    Xty = X.transpose() * y;
    S = Eigen::MatrixXd::Zero(X.cols(), G);
    T = Eigen::VectorXd::Zero(G);
    ng = Eigen::VectorXd::Zero(G);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const int j = group[static_cast<std::size_t>(i)];
      S.col(j) += X.row(i).transpose();
      T(j) += y(i);
      ng(j) += 1.0;
    }
  }
};

struct RemlPoint {
  double loglik = -INFINITY;
  double lambda = 0.0;
  double sigma2 = 0.0;
  Eigen::VectorXd beta;
  Eigen::MatrixXd A;  // X' H^-1 X
  bool ok = false;
};

inline RemlPoint reml_at(const RemlProblem& pr, double lambda) {
  RemlPoint pt;
  pt.lambda = lambda;
  const auto n = static_cast<double>(pr.X.rows()), p = static_cast<double>(pr.X.cols());
  const Eigen::VectorXd w = (lambda / (1.0 + lambda * pr.ng.array())).matrix();
  pt.A = pr.XtX - pr.S * w.asDiagonal() * pr.S.transpose();
  const Eigen::VectorXd b = pr.Xty - pr.S * w.cwiseProduct(pr.T);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(pt.A);
  if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any()) return pt;
  pt.beta = ldlt.solve(b);
  const Eigen::VectorXd r = pr.y - pr.X * pt.beta;
  Eigen::VectorXd rg = Eigen::VectorXd::Zero(pr.n_groups);
  for (Eigen::Index i = 0; i < r.size(); ++i) rg(pr.group[static_cast<std::size_t>(i)]) += r(i);
  const double rss = r.squaredNorm() - w.dot(rg.cwiseAbs2());
  if (!(rss > 0.0)) return pt;
  pt.sigma2 = rss / (n - p);
  const double log_det_h = (1.0 + lambda * pr.ng.array()).log().sum();
  const double log_det_a = ldlt.vectorD().array().log().sum();
  pt.loglik = -0.5 * ((n - p) * (std::log(2.0 * std::numbers::pi * pt.sigma2) + 1.0) + log_det_h + log_det_a);
  pt.ok = std::isfinite(pt.loglik);
  return pt;
}

inline void fill_effects(ModelFit& fit, const std::vector<std::string>& names, const Eigen::VectorXd& beta,
                         const Eigen::MatrixXd& cov) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    FixedEffect e{names[i], beta(k), std::sqrt(std::max(0.0, cov(k, k))), 0.0, 1.0};
    if (e.std_error > 0)
      e.z_value = e.estimate / e.std_error;
    else
      e.z_value = e.estimate == 0.0 ? 0.0 : std::copysign(INFINITY, e.estimate);
    e.p_value = normal_two_sided_p(e.z_value);
    fit.fixed_effects.push_back(e);
  }
}

inline double marginal_r2(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta, double var_u, double var_e) {
  const Eigen::VectorXd fitted = X * beta;
  const double var_f = (fitted.array() - fitted.mean()).square().sum() / static_cast<double>(fitted.size());
  const double denom = var_f + var_u + var_e;
  return denom > 0 ? var_f / denom : 0.0;
}

}  // namespace detail

// Fits y = X beta + u_group + e. `group` holds 0-based group indices.
inline ModelFit fit_random_intercept(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<int>& group,
                                     int n_groups, const std::vector<std::string>& names,
                                     std::string description = {}, const LmeSearch& search = {}) {
  const auto n = X.rows(), p = X.cols();
  if (y.size() != n || static_cast<Eigen::Index>(group.size()) != n)
    throw InputError("fit_random_intercept: X, y and groups differ in length");
  if (static_cast<std::size_t>(p) != names.size()) throw InputError("fit_random_intercept: term names do not match X");
  if (n_groups < 2) throw InputError(fmt::format("mixed model needs at least 2 participants, got {}", n_groups));
  if (n <= p) throw InputError(fmt::format("mixed model: {} observations cannot support {} fixed effects", n, p));
  require_full_rank(X, names);

  ModelFit fit;
  fit.formula_description = std::move(description);
  fit.n_obs = static_cast<int>(n);
  fit.n_groups = n_groups;

  // Exact fits have no residual variance to partition.
  const Eigen::VectorXd beta_ols = ols_coefficients(X, y);
  const double rss_ols = (y - X * beta_ols).squaredNorm();
  const double tss = (y.array() - y.mean()).square().sum();
  if (rss_ols <= 1e-24 * std::max(1.0, tss)) {
    const double sigma2 = rss_ols / static_cast<double>(n - p);
    detail::fill_effects(fit, names, beta_ols, sigma2 * (X.transpose() * X).inverse());
    fit.variance_residual = sigma2;
    fit.log_restricted_likelihood = INFINITY;
    fit.r_squared_marginal = detail::marginal_r2(X, beta_ols, 0.0, sigma2);
    return fit;
  }

  const detail::RemlProblem pr(X, y, group, n_groups);
  std::vector<std::pair<double, double>> trace;
  auto objective = [&](double theta) {
    const auto pt = detail::reml_at(pr, std::exp(theta));
    trace.emplace_back(theta, pt.loglik);
    return pt.ok ? -pt.loglik : INFINITY;
  };

  std::vector<double> grid;
  for (double t = search.log_lambda_min; t <= search.log_lambda_max + 1e-12; t += search.grid_step) grid.push_back(t);
  std::size_t best = 0;
  double best_val = INFINITY;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = objective(grid[i]);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  if (!std::isfinite(best_val)) throw ConvergenceError("REML criterion is not finite anywhere on the search grid");
  const double lo = grid[best == 0 ? 0 : best - 1];
  const double hi = grid[std::min(best + 1, grid.size() - 1)];
  std::uintmax_t iters = static_cast<std::uintmax_t>(search.max_iterations);
  const auto [theta, neg_ll] = boost::math::tools::brent_find_minima(objective, lo, hi, search.bits, iters);
  if (iters >= static_cast<std::uintmax_t>(search.max_iterations)) {
    std::string tail;
    for (std::size_t i = trace.size() > 5 ? trace.size() - 5 : 0; i < trace.size(); ++i)
      tail += fmt::format(" (log_lambda={:.10g}, loglik={:.10g})", trace[i].first, trace[i].second);
    throw ConvergenceError(fmt::format("REML search did not converge after {} iterations; last evaluations:{}",
                                       search.max_iterations, tail));
  }
  fit.iterations = static_cast<int>(iters);

  auto pt = detail::reml_at(pr, std::exp(theta));
  // The boundary lambda = 0 is not reachable on the log scale.
  if (auto zero = detail::reml_at(pr, 0.0); zero.ok && (!pt.ok || zero.loglik >= pt.loglik)) pt = std::move(zero);
  if (!pt.ok) throw ConvergenceError("REML optimum is not a valid fit");

  detail::fill_effects(fit, names, pt.beta, pt.sigma2 * pt.A.inverse());
  fit.variance_residual = pt.sigma2;
  fit.variance_participant = pt.lambda * pt.sigma2;
  fit.log_restricted_likelihood = pt.loglik;
  fit.r_squared_marginal = detail::marginal_r2(X, pt.beta, fit.variance_participant, fit.variance_residual);
  return fit;
}

// ---------------------------------------------------------------------------
// Formula-level interface on long data.

struct Term {
  std::vector<std::string> factors;

  static Term main(std::string x) { return {{std::move(x)}}; }
  static Term square(const std::string& x) { return {{x, x}}; }
  static Term product(std::vector<std::string> xs) { return {std::move(xs)}; }

  std::string name() const {
    if (factors.size() == 2 && factors[0] == factors[1]) return factors[0] + "^2";
    return fmt::format("{}", fmt::join(factors, ":"));
  }
};

enum class Scaling { none, centre, z_score };

struct FitOptions {
  Scaling scaling = Scaling::z_score;
  LmeSearch search;
};

inline std::string_view to_string(Scaling s) {
  switch (s) {
    case Scaling::none: return "raw";
    case Scaling::centre: return "centred";
    case Scaling::z_score: return "z-scored";
  }
  return "raw";
}

struct DesignMatrix {
  Eigen::MatrixXd X;
  std::vector<std::string> names;
  std::vector<int> group;
  int n_groups = 0;
};

inline DesignMatrix build_design(const LongDataset& data, const std::vector<Term>& terms, Scaling scaling) {
  data.validate();
  const auto n = static_cast<Eigen::Index>(data.size());
  std::map<std::string, std::vector<double>> base;
  for (const auto& t : terms)
    for (const auto& f : t.factors) {
      if (base.count(f)) continue;
      const auto& col = data.column(f);
      if (scaling == Scaling::z_score) {
        base[f] = standardize(col, f);
      } else if (scaling == Scaling::centre) {
        const double m = mean(col);
        auto& c = base[f];
        for (double v : col) c.push_back(v - m);
      } else {
        base[f] = col;
      }
    }

  DesignMatrix d;
  d.X.resize(n, static_cast<Eigen::Index>(terms.size()) + 1);
  d.X.col(0).setOnes();
  d.names.push_back(kInterceptName);
  for (std::size_t t = 0; t < terms.size(); ++t) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double v = 1.0;
      for (const auto& f : terms[t].factors) v *= base[f][static_cast<std::size_t>(i)];
      d.X(i, static_cast<Eigen::Index>(t) + 1) = v;
    }
    d.names.push_back(terms[t].name());
  }
  std::map<std::string, int> index;
  for (const auto& pid : data.participant) index.emplace(pid, 0);
  int next = 0;
  for (auto& [pid, idx] : index) idx = next++;
  d.n_groups = next;
  for (const auto& pid : data.participant) d.group.push_back(index.at(pid));
  return d;
}

inline ModelFit fit_lme_random_intercept(const LongDataset& data, const std::vector<Term>& terms,
                                         const FitOptions& opt = {}) {
  if (terms.empty()) throw InputError("mixed model needs at least one fixed term");
  auto d = build_design(data, terms, opt.scaling);
  std::vector<std::string> term_names;
  for (const auto& t : terms) term_names.push_back(t.name());
  auto description = fmt::format(
      "{} ~ {} + (1 | participant); REML; Wald z p-values (normal reference); predictors {}", data.response_name,
      fmt::join(term_names, " + "), to_string(opt.scaling));
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(data.response.data(), static_cast<Eigen::Index>(data.size()));
  return fit_random_intercept(d.X, y, d.group, d.n_groups, d.names, std::move(description), opt.search);
}

struct PolynomialFit {
  ModelFit fit;
  bool inverted_u = false;
};

// Quadratic in one predictor. The predictor is at least centred so the linear
// and squared columns are not confounded.
inline PolynomialFit fit_polynomial_effect(const LongDataset& data, const std::string& predictor,
                                           FitOptions opt = {}, double alpha = 0.05) {
  if (opt.scaling == Scaling::none) opt.scaling = Scaling::centre;
  PolynomialFit out;
  out.fit = fit_lme_random_intercept(data, {Term::main(predictor), Term::square(predictor)}, opt);
  const auto& q = out.fit.effect(Term::square(predictor).name());
  out.inverted_u = q.estimate < 0.0 && q.p_value < alpha;
  return out;
}

// Full factorial in three predictors: 3 mains, 3 two-way and the three-way product.
inline ModelFit fit_three_way_interaction(const LongDataset& data, const std::string& a = "complexity",
                                          const std::string& b = "transparency",
                                          const std::string& c = "materiality", const FitOptions& opt = {}) {
  return fit_lme_random_intercept(data,
                                  {Term::main(a), Term::main(b), Term::main(c), Term::product({a, b}),
                                   Term::product({a, c}), Term::product({b, c}), Term::product({a, b, c})},
                                  opt);
}

}  // namespace facade_affect::stats
