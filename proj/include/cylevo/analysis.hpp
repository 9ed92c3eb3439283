#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cylevo/evolution.hpp"
#include "cylevo/synthetic.hpp"

namespace cylevo {

/// Characteristic-function sample for one operator coalition.
struct CoalitionValue {
  OperatorSet coalition;
  double value = 0.0;   // mean final fitness over replicates; 0 for the empty set
  int runs = 0;
  double stderr_ = 0.0;
};

struct ShapleyReport {
  std::array<double, kOperatorCount> zeta{};
  std::array<double, kOperatorCount> zeta_stderr{};
  double grand_value = 0.0;  // v(M)
  int replicates = 0;
  int budget = 0;
  std::string task;
  /// How often each operator had the largest per-replicate Shapley value.
  std::array<int, kOperatorCount> argmax_count{};
  /// Operators ordered by decreasing mean Shapley value.
  std::array<OperatorId, kOperatorCount> ranking{};

  double zeta_sum() const;
  /// zeta_sum() - (v(M) - v(empty)); zero up to rounding by the efficiency
  /// axiom.
  double efficiency_residual() const { return zeta_sum() - grand_value; }
};

/// Exact Shapley values of an arbitrary m-player game given its full value
/// table (index = coalition bitmask, values.size() == 2^m).
std::vector<double> shapley_from_table(std::span<const double> values, int m);

/// Singleton-optimization task: the scene to fit plus the base config
/// (patch size, bounds, mutation settings, start overrides). The operator
/// set and seed are overridden per coalition run.
struct SingletonTask {
  SyntheticScene scene;
  EvolutionConfig base_config;
  std::string name = "singleton";
};

/// v(S): mean over replicates of the final potential fitness reached by the
/// singleton hill climber restricted to S within `budget` iterations.
/// Replicate seeds are shared across coalitions (common random numbers).
/// v(empty) = 0 by definition.
CoalitionValue coalition_value(OperatorSet coalition, const SingletonTask& task,
                               int budget, int replicates, std::uint64_t seed,
                               unsigned threads = 1);

/// Exact Shapley attribution over all 2^7 coalitions. Per-replicate value
/// tables are evaluated with common random numbers, per-replicate Shapley
/// vectors averaged into the report.
ShapleyReport shapley_values(const SingletonTask& task, int budget,
                             int replicates, std::uint64_t seed,
                             unsigned threads = 1);

struct PositionedReport {
  Vec3 start;
  ShapleyReport report;
};

/// One report per start position (the task's init_center override).
std::vector<PositionedReport> spatial_shapley_sweep(
    const SingletonTask& task, std::span<const Vec3> starts, int budget,
    int replicates, std::uint64_t seed, unsigned threads = 1);

}  // namespace cylevo
