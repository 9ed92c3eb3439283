#include "cylevo/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cylevo/parallel.hpp"

namespace cylevo {

double ShapleyReport::zeta_sum() const {
  return std::accumulate(zeta.begin(), zeta.end(), 0.0);
}

std::vector<double> shapley_from_table(std::span<const double> values, int m) {
  if (m < 1 || m > 20 || values.size() != (std::size_t{1} << m))
    throw std::invalid_argument("shapley_from_table: need 2^m values");

  // weight(|S|) = |S|! (m - |S| - 1)! / m!
  std::vector<double> factorial(static_cast<std::size_t>(m) + 1, 1.0);
  for (int i = 1; i <= m; ++i)
    factorial[std::size_t(i)] = factorial[std::size_t(i - 1)] * i;
  std::vector<double> weight(static_cast<std::size_t>(m), 0.0);
  for (int s = 0; s < m; ++s)
    weight[std::size_t(s)] = factorial[std::size_t(s)] *
                             factorial[std::size_t(m - s - 1)] /
                             factorial[std::size_t(m)];

  std::vector<double> zeta(static_cast<std::size_t>(m), 0.0);
  const std::uint32_t full = (1u << m) - 1u;
  for (int i = 0; i < m; ++i) {
    const std::uint32_t bit = 1u << i;
    double acc = 0.0;
    for (std::uint32_t s = 0; s <= full; ++s) {
      if (s & bit) continue;
      const int size = std::popcount(s);
      acc += weight[std::size_t(size)] * (values[s | bit] - values[s]);
    }
    zeta[std::size_t(i)] = acc;
  }
  return zeta;
}

namespace {

/// Final fitness of one seeded singleton run under an operator subset.
double run_coalition(const SingletonTask& task, OperatorSet ops, int budget,
                     std::uint64_t run_seed) {
  EvolutionConfig cfg = task.base_config;
  cfg.operator_set = ops;
  cfg.max_generations = budget;
  cfg.rng_seed = run_seed;
  return evolve_singleton(task.scene.points, cfg).back().fitness;
}

}  // namespace

CoalitionValue coalition_value(OperatorSet coalition, const SingletonTask& task,
                               int budget, int replicates, std::uint64_t seed,
                               unsigned threads) {
  if (budget < 1 || replicates < 1)
    throw std::invalid_argument("coalition_value: budget and replicates >= 1");
  CoalitionValue out;
  out.coalition = coalition;
  out.runs = replicates;
  if (coalition.empty()) return out;  // v(empty) = 0 by definition

  std::vector<double> finals(static_cast<std::size_t>(replicates));
  parallel_for(finals.size(), threads, [&](std::size_t rep) {
    finals[rep] = run_coalition(task, coalition, budget, mix_seed(seed, rep));
  });
  const double mean =
      std::accumulate(finals.begin(), finals.end(), 0.0) / double(replicates);
  double var = 0.0;
  for (double f : finals) var += (f - mean) * (f - mean);
  out.value = mean;
  out.stderr_ = replicates > 1
                    ? std::sqrt(var / double(replicates - 1) / double(replicates))
                    : 0.0;
  return out;
}

ShapleyReport shapley_values(const SingletonTask& task, int budget,
                             int replicates, std::uint64_t seed,
                             unsigned threads) {
  if (budget < 1 || replicates < 1)
    throw std::invalid_argument("shapley_values: budget and replicates >= 1");
  constexpr int m = kOperatorCount;
  constexpr std::size_t n_masks = std::size_t{1} << m;

  // values[rep][mask]; the empty coalition stays 0. Replicate seeds are
  // shared across masks so marginal differences cancel common noise.
  std::vector<std::vector<double>> values(
      static_cast<std::size_t>(replicates), std::vector<double>(n_masks, 0.0));
  const std::size_t jobs = static_cast<std::size_t>(replicates) * (n_masks - 1);
  parallel_for(jobs, threads, [&](std::size_t job) {
    const std::size_t rep = job / (n_masks - 1);
    const std::uint32_t mask = static_cast<std::uint32_t>(job % (n_masks - 1)) + 1;
    values[rep][mask] =
        run_coalition(task, OperatorSet{static_cast<std::uint8_t>(mask)}, budget,
                      mix_seed(seed, rep));
  });

  ShapleyReport report;
  report.replicates = replicates;
  report.budget = budget;
  report.task = task.name;

  std::array<double, m> sum{};
  std::array<double, m> sum_sq{};
  double grand = 0.0;
  for (int rep = 0; rep < replicates; ++rep) {
    const std::vector<double> zeta_rep =
        shapley_from_table(values[std::size_t(rep)], m);
    int best = 0;
    for (int i = 0; i < m; ++i) {
      sum[std::size_t(i)] += zeta_rep[std::size_t(i)];
      sum_sq[std::size_t(i)] += zeta_rep[std::size_t(i)] * zeta_rep[std::size_t(i)];
      if (zeta_rep[std::size_t(i)] > zeta_rep[std::size_t(best)]) best = i;
    }
    report.argmax_count[std::size_t(best)] += 1;
    grand += values[std::size_t(rep)][n_masks - 1];
  }
  for (int i = 0; i < m; ++i) {
    const double mean = sum[std::size_t(i)] / double(replicates);
    report.zeta[std::size_t(i)] = mean;
    if (replicates > 1) {
      const double var =
          (sum_sq[std::size_t(i)] - double(replicates) * mean * mean) /
          double(replicates - 1);
      report.zeta_stderr[std::size_t(i)] =
          std::sqrt(std::max(0.0, var) / double(replicates));
    }
  }
  report.grand_value = grand / double(replicates);

  std::array<int, m> order{};
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return report.zeta[std::size_t(a)] > report.zeta[std::size_t(b)];
  });
  for (int i = 0; i < m; ++i)
    report.ranking[std::size_t(i)] = static_cast<OperatorId>(order[std::size_t(i)]);
  return report;
}

std::vector<PositionedReport> spatial_shapley_sweep(
    const SingletonTask& task, std::span<const Vec3> starts, int budget,
    int replicates, std::uint64_t seed, unsigned threads) {
  std::vector<PositionedReport> out;
  out.reserve(starts.size());
  for (const Vec3& start : starts) {
    SingletonTask positioned = task;
    positioned.base_config.init_center = start;
    out.push_back(PositionedReport{
        start, shapley_values(positioned, budget, replicates, seed, threads)});
  }
  return out;
}

}  // namespace cylevo
