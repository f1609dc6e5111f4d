#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "facade_affect/core/error.hpp"
#include "facade_affect/core/random.hpp"
#include "facade_affect/core/types.hpp"
#include "facade_affect/design/stratify.hpp"

namespace facade_affect::design {

// Required position band: |mean position - (k+1)/2| < this, per stimulus.
inline constexpr double kPositionBand = 1.5;

inline std::string participant_label(int index, int n_participants) {
  const int width = std::max(3, static_cast<int>(std::to_string(n_participants).size()));
  return fmt::format("P{:0{}}", index + 1, width);
}

namespace detail {

template <class T>
std::size_t pick_uniform(const std::vector<T>& v, Rng& rng) {
  return std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng);
}

// Greedy block construction; returns stimulus indices per participant.
inline std::vector<std::vector<int>> build_blocks(int n_stimuli, int n_participants, int k,
                                                  const std::vector<std::vector<int>>& cells_of, int n_cells,
                                                  bool cover, Rng& rng) {
  std::vector<int> rep(static_cast<std::size_t>(n_stimuli), 0);
  std::vector<std::vector<int>> blocks;
  blocks.reserve(static_cast<std::size_t>(n_participants));
  std::vector<int> best;
  for (int p = 0; p < n_participants; ++p) {
    std::vector<char> in_block(static_cast<std::size_t>(n_stimuli), 0);
    std::vector<char> covered(static_cast<std::size_t>(n_cells), 0);
    int uncovered = cover ? n_cells : 0;
    std::vector<int> block;
    for (int slot = 0; slot < k; ++slot) {
      const int gmin = *std::min_element(rep.begin(), rep.end());
      const bool urgent = uncovered > 0 && k - slot <= uncovered;
      auto gain = [&](int s) {
        int g = 0;
        if (uncovered > 0)
          for (int c : cells_of[static_cast<std::size_t>(s)]) g += !covered[static_cast<std::size_t>(c)];
        return g;
      };
      // Candidates stay within one level of the minimum so the spread never exceeds 2.
      int limit = gmin + 1;
      bool any = false;
      for (int s = 0; s < n_stimuli && !any; ++s) any = !in_block[static_cast<std::size_t>(s)] && rep[static_cast<std::size_t>(s)] <= limit;
      if (!any) limit = std::numeric_limits<int>::max();

      best.clear();
      std::pair<int, int> best_key{std::numeric_limits<int>::max(), std::numeric_limits<int>::max()};
      for (int s = 0; s < n_stimuli; ++s) {
        const auto si = static_cast<std::size_t>(s);
        if (in_block[si] || rep[si] > limit) continue;
        const std::pair<int, int> key = urgent ? std::pair{-gain(s), rep[si]} : std::pair{rep[si], -gain(s)};
        if (key < best_key) {
          best_key = key;
          best.assign(1, s);
        } else if (key == best_key) {
          best.push_back(s);
        }
      }
      const int s = best[pick_uniform(best, rng)];
      const auto si = static_cast<std::size_t>(s);
      in_block[si] = 1;
      ++rep[si];
      block.push_back(s);
      if (uncovered > 0)
        for (int c : cells_of[si])
          if (!covered[static_cast<std::size_t>(c)]) {
            covered[static_cast<std::size_t>(c)] = 1;
            --uncovered;
          }
    }
    blocks.push_back(std::move(block));
  }
  return blocks;
}

// Orders every block so each stimulus's mean position sits near (k+1)/2.
// Blocks are visited in shuffled order; within a block the stimuli that have
// so far run earliest get the latest slots. A swap search then tightens the
// per-stimulus means.
inline void counterbalance(std::vector<std::vector<int>>& blocks, int n_stimuli, int k, Rng& rng) {
  const double centre = (k + 1) / 2.0;
  std::vector<double> dev(static_cast<std::size_t>(n_stimuli), 0.0);
  std::vector<int> count(static_cast<std::size_t>(n_stimuli), 0);
  for (const auto& b : blocks)
    for (int s : b) ++count[static_cast<std::size_t>(s)];

  std::vector<std::size_t> order(blocks.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t bi : order) {
    auto& b = blocks[bi];
    std::shuffle(b.begin(), b.end(), rng);
    std::stable_sort(b.begin(), b.end(), [&](int x, int y) {
      return dev[static_cast<std::size_t>(x)] > dev[static_cast<std::size_t>(y)];
    });
    // b[0] has run latest so far and now goes first.
    for (int pos = 0; pos < k; ++pos) dev[static_cast<std::size_t>(b[static_cast<std::size_t>(pos)])] += (pos + 1) - centre;
  }

  auto mean_dev = [&](int s) {
    const auto si = static_cast<std::size_t>(s);
    return count[si] ? dev[si] / count[si] : 0.0;
  };
  for (int pass = 0; pass < 50; ++pass) {
    bool improved = false;
    for (std::size_t bi : order) {
      auto& b = blocks[bi];
      for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j) {
          const int a = b[static_cast<std::size_t>(i)], c = b[static_cast<std::size_t>(j)];
          const double na = count[static_cast<std::size_t>(a)], nc = count[static_cast<std::size_t>(c)];
          const double before = std::pow(mean_dev(a), 2) + std::pow(mean_dev(c), 2);
          const double shift = j - i;
          const double after = std::pow((dev[static_cast<std::size_t>(a)] + shift) / na, 2) +
                               std::pow((dev[static_cast<std::size_t>(c)] - shift) / nc, 2);
          if (after < before - 1e-12) {
            dev[static_cast<std::size_t>(a)] += shift;
            dev[static_cast<std::size_t>(c)] -= shift;
            std::swap(b[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(j)]);
            improved = true;
          }
        }
    }
    if (!improved) break;
  }
}

}  // namespace detail

struct BalanceReport {
  std::map<int, int> replication;  // every stratified stimulus, zero when unused
  int min_replication = 0;
  int max_replication = 0;
  std::size_t total = 0;
  bool blocks_exact = true;                       // every block has k distinct stimuli
  std::vector<std::string> uncovered_blocks;      // participants missing some nonempty tertile
  double max_position_deviation = 0.0;            // over stimuli with at least one appearance
  std::map<int, double> mean_position;

  int spread() const { return max_replication - min_replication; }
};

inline BalanceReport check_balance(const AssignmentPlan& plan, const StratificationSpec& strata) {
  BalanceReport r;
  for (int id : strata.stimulus_ids) r.replication[id] = 0;
  std::map<int, double> pos_sum;
  for (const auto& a : plan.assignments) {
    std::set<int> distinct(a.stimuli.begin(), a.stimuli.end());
    if (static_cast<int>(a.stimuli.size()) != plan.block_size_k || distinct.size() != a.stimuli.size())
      r.blocks_exact = false;
    for (std::size_t i = 0; i < a.stimuli.size(); ++i) {
      const int s = a.stimuli[i];
      auto it = r.replication.find(s);
      if (it == r.replication.end())
        throw ValidationError(fmt::format("plan assigns stimulus {} which is not in the stratification", s));
      ++it->second;
      pos_sum[s] += static_cast<double>(i + 1);
      ++r.total;
    }
    bool ok = true;
    for (const auto& attr : strata.attributes)
      for (auto t : {Tertile::low, Tertile::medium, Tertile::high}) {
        if (!attr.nonempty(t)) continue;
        ok = ok && std::any_of(a.stimuli.begin(), a.stimuli.end(), [&](int s) { return attr.labels.at(s) == t; });
      }
    if (!ok) r.uncovered_blocks.push_back(a.participant_id);
  }
  if (!r.replication.empty()) {
    auto [lo, hi] = std::minmax_element(r.replication.begin(), r.replication.end(),
                                        [](const auto& x, const auto& y) { return x.second < y.second; });
    r.min_replication = lo->second;
    r.max_replication = hi->second;
  }
  const double centre = (plan.block_size_k + 1) / 2.0;
  for (const auto& [s, n] : r.replication) {
    if (n == 0) continue;
    const double m = pos_sum[s] / n;
    r.mean_position[s] = m;
    r.max_position_deviation = std::max(r.max_position_deviation, std::abs(m - centre));
  }
  return r;
}

// Ratings per stimulus in a collected data set.
inline std::map<int, int> replication_counts(const std::vector<RatingRecord>& ratings) {
  std::map<int, int> out;
  for (const auto& r : ratings) ++out[r.stimulus_id];
  return out;
}

// Seeded greedy construction, least-replicated stimuli first. Each block gets
// k distinct stimuli covering every nonempty tertile of every attribute when
// k allows; replication spread stays within 2.
inline AssignmentPlan generate_assignments(const StratificationSpec& strata, int n_participants, int k,
                                           int min_replication, std::uint64_t seed,
                                           std::vector<std::string>* warnings = nullptr) {
  const int n_stimuli = static_cast<int>(strata.stimulus_ids.size());
  if (n_stimuli < 1) throw ConfigError("generate_assignments: no stimuli");
  if (n_participants < 1) throw ConfigError("generate_assignments: n_participants must be >= 1");
  if (k < 1) throw ConfigError("generate_assignments: k must be >= 1");
  if (min_replication < 0) throw ConfigError("generate_assignments: min_replication must be >= 0");
  if (k > n_stimuli)
    throw FeasibilityError(fmt::format("block size k={} exceeds the {} available stimuli", k, n_stimuli));
  const long long slots = static_cast<long long>(n_participants) * k;
  const long long needed = static_cast<long long>(n_stimuli) * min_replication;
  if (slots < needed)
    throw FeasibilityError(fmt::format(
        "n_participants x k = {} x {} = {} < n_stimuli x min_replication = {} x {} = {}", n_participants, k, slots,
        n_stimuli, min_replication, needed));

  std::vector<std::string> local_warnings;
  auto& warn = warnings ? *warnings : local_warnings;

  // Coverage cells: one per (attribute, nonempty tertile).
  std::map<int, std::size_t> index_of;
  for (int i = 0; i < n_stimuli; ++i) index_of[strata.stimulus_ids[static_cast<std::size_t>(i)]] = static_cast<std::size_t>(i);
  std::vector<std::vector<int>> cells_of(static_cast<std::size_t>(n_stimuli));
  int n_cells = 0;
  for (const auto& attr : strata.attributes)
    for (auto t : {Tertile::low, Tertile::medium, Tertile::high}) {
      if (!attr.nonempty(t)) {
        warn.push_back(fmt::format("{}: {} tertile is empty; coverage relaxed for it", attr.name, to_string(t)));
        continue;
      }
      for (const auto& [id, label] : attr.labels)
        if (label == t) {
          auto it = index_of.find(id);
          if (it == index_of.end())
            throw ValidationError(fmt::format("stratification labels unknown stimulus {}", id));
          cells_of[it->second].push_back(n_cells);
        }
      ++n_cells;
    }
  bool cover = n_cells > 0;
  if (cover && k < 3) {
    warn.push_back(fmt::format("k={} cannot cover three tertiles; coverage relaxed", k));
    cover = false;
  }

  Rng rng = derive_rng(seed, 0);
  auto blocks = detail::build_blocks(n_stimuli, n_participants, k, cells_of, n_cells, cover, rng);
  auto min_rep = [&] {
    std::vector<int> rep(static_cast<std::size_t>(n_stimuli), 0);
    for (const auto& b : blocks)
      for (int s : b) ++rep[static_cast<std::size_t>(s)];
    return *std::min_element(rep.begin(), rep.end());
  };
  if (cover && min_rep() < min_replication) {
    warn.push_back(fmt::format("tertile coverage conflicted with min_replication={}; rebuilt without coverage",
                               min_replication));
    rng = derive_rng(seed, 1);
    blocks = detail::build_blocks(n_stimuli, n_participants, k, cells_of, n_cells, false, rng);
  }
  if (min_rep() < min_replication)
    throw FeasibilityError(fmt::format("could not reach min_replication={} (got {})", min_replication, min_rep()));

  Rng order_rng = derive_rng(seed, 2);
  detail::counterbalance(blocks, n_stimuli, k, order_rng);

  AssignmentPlan plan;
  plan.seed = seed;
  plan.block_size_k = k;
  for (int p = 0; p < n_participants; ++p) {
    ParticipantAssignment a{participant_label(p, n_participants), {}};
    for (int s : blocks[static_cast<std::size_t>(p)]) a.stimuli.push_back(strata.stimulus_ids[static_cast<std::size_t>(s)]);
    plan.assignments.push_back(std::move(a));
  }

  const auto report = check_balance(plan, strata);
  if (cover && !report.uncovered_blocks.empty())
    warn.push_back(fmt::format("{} blocks miss at least one tertile", report.uncovered_blocks.size()));
  if (report.max_position_deviation >= kPositionBand)
    warn.push_back(fmt::format("mean presentation position deviates by {:.3f} (band {})",
                               report.max_position_deviation, kPositionBand));
  return plan;
}

}  // namespace facade_affect::design
