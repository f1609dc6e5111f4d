#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "facade_affect/core/error.hpp"
#include "facade_affect/core/random.hpp"
#include "facade_affect/design/assignment.hpp"
#include "facade_affect/stats/lme.hpp"

namespace facade_affect::design {

struct PowerConfig {
  double effect_size_f2 = 0.06;
  int n_participants = 85;
  int ratings_per_stimulus_min = 12;
  int n_stimuli = 86;
  int block_size_k = 15;
  int n_simulations = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  double participant_variance_share = 0.25;  // sigma2_u / sigma2_total
  unsigned threads = 1;

  void validate() const {
    if (!(effect_size_f2 >= 0.0) || !std::isfinite(effect_size_f2))
      throw ConfigError("power: effect_size_f2 must be a finite value >= 0");
    if (n_participants < 1 || n_stimuli < 1 || block_size_k < 1 || n_simulations < 1 || ratings_per_stimulus_min < 0)
      throw ConfigError("power: counts must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("power: alpha must lie in (0, 1)");
    if (!(participant_variance_share >= 0.0 && participant_variance_share < 1.0))
      throw ConfigError("power: participant_variance_share must lie in [0, 1)");
    if (residual_variance() <= 0.0)
      throw ConfigError(fmt::format("power: f2={} and participant share {} leave no residual variance",
                                    effect_size_f2, participant_variance_share));
  }

  // Standardised predictor, unit total variance: beta^2 = R^2 = f2 / (1 + f2).
  double explained_variance() const { return effect_size_f2 / (1.0 + effect_size_f2); }
  double beta() const { return std::sqrt(explained_variance()); }
  double residual_variance() const { return 1.0 - explained_variance() - participant_variance_share; }
};

struct PowerResult {
  double power = 0.0;
  std::vector<double> p_values;  // per simulation; NaN where the fit failed
  int n_failures = 0;
  int effective_min_replication = 0;
  std::vector<std::string> warnings;
};

// One simulated study: returns the slope p-value.
inline double simulate_once(const PowerConfig& cfg, int min_rep, std::uint64_t sim_index) {
  const std::uint64_t sim_seed = derive_seed(cfg.seed, sim_index);
  std::vector<int> ids(static_cast<std::size_t>(cfg.n_stimuli));
  std::iota(ids.begin(), ids.end(), 1);
  const auto plan = generate_assignments(StratificationSpec::unstratified(ids), cfg.n_participants, cfg.block_size_k,
                                         min_rep, sim_seed);

  Rng rng = derive_rng(sim_seed, 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(static_cast<std::size_t>(cfg.n_stimuli));
  for (auto& v : x) v = normal(rng);
  if (cfg.n_stimuli > 1) x = stats::standardize(x, "x");

  const double beta = cfg.beta();
  const double sd_u = std::sqrt(cfg.participant_variance_share), sd_e = std::sqrt(cfg.residual_variance());
  const auto n = static_cast<Eigen::Index>(plan.total_assignments());
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  std::vector<int> group;
  group.reserve(static_cast<std::size_t>(n));
  Eigen::Index row = 0;
  for (std::size_t p = 0; p < plan.assignments.size(); ++p) {
    const double u = sd_u * normal(rng);
    for (int s : plan.assignments[p].stimuli) {
      const double xs = x[static_cast<std::size_t>(s - 1)];
      X(row, 0) = 1.0;
      X(row, 1) = xs;
      y(row) = beta * xs + u + sd_e * normal(rng);
      group.push_back(static_cast<int>(p));
      ++row;
    }
  }
  const auto fit = stats::fit_random_intercept(X, y, group, static_cast<int>(plan.assignments.size()),
                                               {stats::kInterceptName, "x"});
  return fit.fixed_effects[1].p_value;
}

// Monte-Carlo power of the slope test in the random-intercept model.
inline PowerResult power_simulation(const PowerConfig& cfg) {
  cfg.validate();
  if (cfg.block_size_k > cfg.n_stimuli)
    throw FeasibilityError(fmt::format("power: block size k={} exceeds the {} stimuli", cfg.block_size_k, cfg.n_stimuli));
  PowerResult r;
  const long long capacity = static_cast<long long>(cfg.n_participants) * cfg.block_size_k / cfg.n_stimuli;
  r.effective_min_replication = static_cast<int>(std::min<long long>(cfg.ratings_per_stimulus_min, capacity));
  if (r.effective_min_replication < cfg.ratings_per_stimulus_min)
    r.warnings.push_back(fmt::format("{} participants x k={} cannot give {} ratings per stimulus; simulating with {}",
                                     cfg.n_participants, cfg.block_size_k, cfg.ratings_per_stimulus_min,
                                     r.effective_min_replication));

  r.p_values.assign(static_cast<std::size_t>(cfg.n_simulations), std::nan(""));
  std::vector<std::exception_ptr> fatal(static_cast<std::size_t>(cfg.n_simulations));
  auto work = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < r.p_values.size(); i += step) {
      try {
        r.p_values[i] = simulate_once(cfg, r.effective_min_replication, i);
      } catch (const ModelError&) {
        // counted below
      } catch (const InputError&) {
      } catch (...) {
        fatal[i] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(cfg.n_simulations)));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }
  for (auto& e : fatal)
    if (e) std::rethrow_exception(e);

  int rejected = 0;
  for (double p : r.p_values) {
    if (std::isnan(p))
      ++r.n_failures;
    else if (p < cfg.alpha)
      ++rejected;
  }
  if (r.n_failures > 0.05 * cfg.n_simulations)
    throw SimulationError(fmt::format("power: {} of {} model fits failed", r.n_failures, cfg.n_simulations));
  if (r.n_failures > 0) r.warnings.push_back(fmt::format("{} model fits failed and were skipped", r.n_failures));
  r.power = static_cast<double>(rejected) / static_cast<double>(cfg.n_simulations - r.n_failures);
  return r;
}

}  // namespace facade_affect::design
