#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cylevo/fitness.hpp"
#include "cylevo/geometry.hpp"
#include "cylevo/point_cloud.hpp"
#include "cylevo/rng.hpp"

namespace cylevo {

enum class OperatorId : int {
  Translation = 0,
  Rotation = 1,
  Elongation = 2,
  Dilation = 3,
  TargetedDilation = 4,
  TargetedFlip = 5,
  TargetedTranslation = 6,
};

inline constexpr int kOperatorCount = 7;

const char* operator_name(OperatorId id);
std::optional<OperatorId> operator_from_name(const std::string& name);

/// Subset of the mutation operators, as a bitmask.
struct OperatorSet {
  std::uint8_t mask = 0;

  static OperatorSet all() { return OperatorSet{(1u << kOperatorCount) - 1}; }
  static OperatorSet basic() { return OperatorSet{0b0001111}; }
  static OperatorSet of(std::initializer_list<OperatorId> ids) {
    OperatorSet s;
    for (OperatorId id : ids) s.insert(id);
    return s;
  }

  bool contains(OperatorId id) const {
    return mask & (1u << static_cast<int>(id));
  }
  void insert(OperatorId id) { mask |= (1u << static_cast<int>(id)); }
  int count() const { return std::popcount(mask); }
  bool empty() const { return mask == 0; }
  bool operator==(const OperatorSet&) const = default;
};

/// Search-space box for the genome: center coordinates, length and radius
/// ranges. Also the bounds fed to the bounded polynomial mutation.
struct ParameterBounds {
  Vec3 box_lo = Vec3::Zero();
  Vec3 box_hi = Vec3::Ones();
  double l_min = 1e-3, l_max = 1.0;
  double r_min = 1e-3, r_max = 1.0;

  /// Cloud bounding box inflated by 10%; r in [tau, diagonal/2],
  /// l in [tau, diagonal].
  static ParameterBounds infer(const PointCloud& cloud, double tau);
  void validate() const;
};

struct EvolutionConfig {
  double alpha = 0.5;        // acceptance threshold on realized fitness
  double k = 2.0;            // population growth factor
  int p_min = 50;            // minimum population size
  double tau = 0.1;          // patch edge length
  int max_generations = 500;
  std::uint64_t rng_seed = 1;
  OperatorSet operator_set = OperatorSet::all();
  double eta_m = 20.0;       // polynomial mutation distribution index
  double eta_c = 15.0;       // SBX distribution index
  double crossover_rate = 0.9;
  double radial_tolerance_factor = 1.0;
  std::optional<ParameterBounds> bounds;  // inferred from the cloud if absent
  unsigned threads = 1;

  // Singleton-study overrides: pin the initial solution, or only its center.
  std::optional<Cylinder> init_solution;
  std::optional<Vec3> init_center;

  void validate() const;  // throws std::invalid_argument
  ParameterBounds effective_bounds(const PointCloud& cloud) const;
};

struct GenerationReport {
  int generation = 0;
  int population_size = 0;
  double best_realized = 0.0;
  int accepted_count = 0;
  std::array<std::uint32_t, kOperatorCount> operator_applications{};
};

/// Target size for the next generation: max(ceil(k*n), p_min).
int next_population_size(double k, int n_accepted, int p_min);

/// Deb's bounded polynomial mutation; u is the uniform draw in [0, 1).
double polynomial_mutation(double v, double lo, double hi, double eta_m,
                           double u);
double polynomial_mutation(double v, double lo, double hi, double eta_m,
                           Rng& rng);

/// One SBX child pair for a single variable; u in [0, 1). Midpoint of the
/// children equals the midpoint of the parents; beta = 1 reproduces the
/// parents exactly.
std::pair<double, double> sbx_pair(double a, double b, double eta_c, double u);

/// Every random decision of one mutation step, drawn up front so the apply
/// step is pure. The rng cost per call is fixed regardless of which
/// operators fire.
struct MutationDraw {
  std::array<double, kOperatorCount> fire_u{};
  std::array<double, 8> value_u{};  // x y z | phi theta | l | r | r'
};

MutationDraw draw_mutation(Rng& rng);

/// Applies the drawn mutation step: each operator in the set fires when its
/// draw falls under 1/m, several can combine. Targeted operators use the
/// best contact from occ and are skipped when occ is null or empty.
/// The result is wrapped/clamped into bounds.
Cylinder apply_mutation(const Cylinder& c, const PatchOccupancy* occ,
                        const MutationDraw& draw, const EvolutionConfig& cfg,
                        const ParameterBounds& bounds,
                        std::array<std::uint32_t, kOperatorCount>* fired = nullptr);

Cylinder mutate(const Cylinder& c, const PatchOccupancy& occ,
                const EvolutionConfig& cfg, Rng& rng);

/// Random decisions of one crossover: whether it happens at all, which of
/// the four genome blocks ({x,y,z}, {phi,theta}, {l}, {r}) are exchanged,
/// and the per-variable SBX draws.
struct CrossoverDraw {
  bool enabled = true;
  std::array<bool, 4> swap_block{};
  std::array<double, 7> value_u{};  // x y z phi theta l r
};

CrossoverDraw draw_crossover(const EvolutionConfig& cfg, Rng& rng);

std::pair<Cylinder, Cylinder> apply_crossover(const Cylinder& a,
                                              const Cylinder& b,
                                              const CrossoverDraw& draw,
                                              const EvolutionConfig& cfg,
                                              const ParameterBounds& bounds);

std::pair<Cylinder, Cylinder> crossover(const Cylinder& a, const Cylinder& b,
                                        const EvolutionConfig& cfg, Rng& rng);

/// Wraps angles and clamps position/size into bounds.
Cylinder constrain(Cylinder c, const ParameterBounds& bounds);

Cylinder random_cylinder(const ParameterBounds& bounds, Rng& rng);

struct Population {
  // ranked: best realized fitness first
  std::vector<ScoredSolution> solutions;
};

struct EvolveResult {
  Population population;
  std::vector<GenerationReport> reports;
};

/// The full evolutionary loop: random init, tournament selection, block
/// crossover + mutation, realized-fitness scoring, (mu+lambda) truncation to
/// the adaptive size max(ceil(k*n), p_min). Reproducible from cfg.rng_seed;
/// parallel and serial runs produce identical results.
EvolveResult evolve(const PointCloud& cloud, const EvolutionConfig& cfg);

struct SingletonStep {
  Cylinder cylinder;
  double fitness = 0.0;  // potential fitness of the incumbent
};

/// Single-solution hill climber (no crossover): a mutant replaces the
/// incumbent iff its potential fitness is >= the incumbent's. Returns the
/// trajectory, entry 0 being the initial solution; one entry per step after.
std::vector<SingletonStep> evolve_singleton(const PointCloud& cloud,
                                            const EvolutionConfig& cfg);

}  // namespace cylevo
