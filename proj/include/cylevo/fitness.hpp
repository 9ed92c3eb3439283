#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cylevo/geometry.hpp"
#include "cylevo/point_cloud.hpp"

namespace cylevo {

/// Sparse patch occupancy of one cylinder against one cloud: which grid
/// cells contain points, which point ids each filled cell covers, and the
/// resulting potential fitness (filled cells / total cells).
///
/// Filled cells are kept sorted by linear id with a CSR layout for the
/// covered point ids; per-cell coordinate sums support best-contact
/// extraction without a cloud lookup.
struct PatchOccupancy {
  PatchGrid grid{};
  std::vector<std::int32_t> filled_cells;   // sorted linear ids
  std::vector<std::int32_t> entry_start;    // size filled_cells.size() + 1
  std::vector<std::int32_t> covered_ids;    // CSR payload, sorted per cell
  std::vector<Vec3> cell_sums;              // per filled cell
  double potential_fitness = 0.0;

  int filled_count() const { return static_cast<int>(filled_cells.size()); }
  bool filled(int i, int j) const;
  /// Index into filled_cells for a linear cell id, or -1.
  int slot_of(int linear_cell) const;
  std::span<const std::int32_t> covered(int slot) const {
    return {covered_ids.data() + entry_start[static_cast<std::size_t>(slot)],
            covered_ids.data() + entry_start[static_cast<std::size_t>(slot) + 1]};
  }

  bool operator==(const PatchOccupancy&) const = default;
};

/// Scores cylinders against a fixed cloud. Builds a uniform-grid index once
/// (cell size tau) and restricts the per-cylinder scan to the cylinder's
/// bounding box; results are identical to the brute-force scan.
/// evaluate() is const and safe to call from many threads.
class FitnessEvaluator {
 public:
  FitnessEvaluator(const PointCloud& cloud, double tau,
                   double radial_tolerance_factor = 1.0, bool use_index = true);

  PatchOccupancy evaluate(const Cylinder& c) const;

  const PointCloud& cloud() const { return *cloud_; }
  double tau() const { return tau_; }
  double radial_tolerance_factor() const { return radial_tol_; }

 private:
  const PointCloud* cloud_;
  double tau_;
  double radial_tol_;
  std::optional<UniformGridIndex> index_;
};

/// One-shot potential fitness per Eq.-style patch coverage.
PatchOccupancy potential_fitness(const Cylinder& c, const PointCloud& cloud,
                                 double tau,
                                 double radial_tolerance_factor = 1.0);

/// Direction from the cylinder center to the centroid of the most populated
/// patch; ties broken by lowest (i, j). Empty when no patch is filled.
std::optional<ContactVector> best_contact(const Cylinder& c,
                                          const PatchOccupancy& occ);

struct ScoredSolution {
  Cylinder cylinder;
  PatchOccupancy occupancy;
  double realized_fitness = 0.0;
  bool accepted = false;
};

/// Diversity-enforcing clearing pass: repeatedly the unmarked solution with
/// the highest remaining potential fitness is marked, that value becomes its
/// realized fitness, and every point it covers is withdrawn from all
/// still-unmarked solutions. Deterministic; argmax ties go to the lowest
/// input index. Output preserves input order.
///
/// point_assignment, when given, receives one entry per point id in
/// [0, n_points): the input index of the solution the point was assigned
/// to, or -1.
std::vector<double> realized_fitness_values(
    std::span<const PatchOccupancy* const> occupancies, std::size_t n_points,
    std::vector<std::int32_t>* point_assignment = nullptr);

std::vector<ScoredSolution> realized_fitness_pass(
    std::vector<std::pair<Cylinder, PatchOccupancy>> solutions,
    std::size_t n_points, double alpha);

}  // namespace cylevo
