#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "facade_affect/core/error.hpp"

namespace facade_affect::stats {

struct IccResult {
  double icc21 = 0.0;
  double ms_rows = 0.0;
  double ms_cols = 0.0;
  double ms_error = 0.0;
  int n_targets = 0;
  int k_raters = 0;
};

// Two-way random effects, absolute agreement, single measure. Rows are
// targets, columns raters; NaN marks a missing cell.
inline IccResult icc_2_1(const Eigen::MatrixXd& table) {
  const auto n = table.rows(), k = table.cols();
  if (n < 2 || k < 2) throw InputError(fmt::format("icc_2_1: need at least 2 targets and 2 raters, got {}x{}", n, k));
  if (table.hasNaN())
    throw InputError("icc_2_1: table has missing cells; reduce it to a complete sub-table first (reduce_to_complete)");
  const double grand = table.mean();
  const Eigen::VectorXd row_means = table.rowwise().mean();
  const Eigen::RowVectorXd col_means = table.colwise().mean();
  const double ss_rows = static_cast<double>(k) * (row_means.array() - grand).square().sum();
  const double ss_cols = static_cast<double>(n) * (col_means.array() - grand).square().sum();
  const double ss_total = (table.array() - grand).square().sum();
  const double ss_error = std::max(0.0, ss_total - ss_rows - ss_cols);

  IccResult r;
  r.n_targets = static_cast<int>(n);
  r.k_raters = static_cast<int>(k);
  r.ms_rows = ss_rows / static_cast<double>(n - 1);
  r.ms_cols = ss_cols / static_cast<double>(k - 1);
  r.ms_error = ss_error / static_cast<double>((n - 1) * (k - 1));
  const double kd = static_cast<double>(k), nd = static_cast<double>(n);
  const double denom = r.ms_rows + (kd - 1.0) * r.ms_error + kd * (r.ms_cols - r.ms_error) / nd;
  if (denom == 0.0) throw DegenerateInputError("icc_2_1: every cell is identical");
  r.icc21 = (r.ms_rows - r.ms_error) / denom;
  return r;
}

struct CompleteTable {
  Eigen::MatrixXd table;
  std::vector<std::string> targets;
  std::vector<std::string> raters;
  std::vector<std::string> dropped_targets;
  std::vector<std::string> dropped_raters;
};

// Deterministic reduction of an incomplete table: targets nobody rated are
// removed, then the rater with the most missing cells is dropped repeatedly
// (ties: the lexicographically larger id goes first) until no gaps remain.
inline CompleteTable reduce_to_complete(const Eigen::MatrixXd& table, std::vector<std::string> targets,
                                        std::vector<std::string> raters) {
  if (static_cast<Eigen::Index>(targets.size()) != table.rows() || static_cast<Eigen::Index>(raters.size()) != table.cols())
    throw InputError("reduce_to_complete: labels do not match table shape");
  std::vector<Eigen::Index> rows, cols;
  CompleteTable out;
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    if (table.row(i).array().isNaN().all())
      out.dropped_targets.push_back(targets[static_cast<std::size_t>(i)]);
    else
      rows.push_back(i);
  }
  for (Eigen::Index j = 0; j < table.cols(); ++j) cols.push_back(j);

  for (;;) {
    Eigen::Index worst = -1;
    int worst_missing = 0;
    for (auto j : cols) {
      int missing = 0;
      for (auto i : rows) missing += std::isnan(table(i, j));
      const bool worse = missing > worst_missing ||
                         (missing == worst_missing && missing > 0 &&
                          raters[static_cast<std::size_t>(j)] > raters[static_cast<std::size_t>(worst)]);
      if (worse) {
        worst = j;
        worst_missing = missing;
      }
    }
    if (worst < 0) break;
    out.dropped_raters.push_back(raters[static_cast<std::size_t>(worst)]);
    cols.erase(std::find(cols.begin(), cols.end(), worst));
  }

  out.table.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t a = 0; a < rows.size(); ++a) {
    out.targets.push_back(targets[static_cast<std::size_t>(rows[a])]);
    for (std::size_t b = 0; b < cols.size(); ++b)
      out.table(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = table(rows[a], cols[b]);
  }
  for (auto j : cols) out.raters.push_back(raters[static_cast<std::size_t>(j)]);
  return out;
}

}  // namespace facade_affect::stats
