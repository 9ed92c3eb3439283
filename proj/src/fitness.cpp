#include "cylevo/fitness.hpp"

#include <algorithm>
#include <cmath>

namespace cylevo {

bool PatchOccupancy::filled(int i, int j) const {
  return slot_of(grid.linear(i, j)) >= 0;
}

int PatchOccupancy::slot_of(int linear_cell) const {
  auto it = std::lower_bound(filled_cells.begin(), filled_cells.end(),
                             static_cast<std::int32_t>(linear_cell));
  if (it == filled_cells.end() || *it != linear_cell) return -1;
  return static_cast<int>(it - filled_cells.begin());
}

FitnessEvaluator::FitnessEvaluator(const PointCloud& cloud, double tau,
                                   double radial_tolerance_factor,
                                   bool use_index)
    : cloud_(&cloud), tau_(tau), radial_tol_(radial_tolerance_factor) {
  if (use_index && !cloud.empty()) index_.emplace(cloud, tau);
}

namespace {

// Conservative world-space box around every location that can satisfy the
// occupancy window: axial slack tau beyond the caps, radial shell r + tau.
void cylinder_slack_box(const Cylinder& c, double tau, Vec3& lo, Vec3& hi) {
  const Vec3 a = c.axis();
  const Vec3 ctr = c.center();
  const double half_l = c.l / 2.0 + tau;
  const double rad = c.r + tau;
  Vec3 ext;
  for (int k = 0; k < 3; ++k) {
    const double ak = std::abs(a[k]);
    const double trans = std::sqrt(std::max(0.0, 1.0 - ak * ak));
    ext[k] = ak * half_l + trans * rad + 1e-12;
  }
  lo = ctr - ext;
  hi = ctr + ext;
}

}  // namespace

PatchOccupancy FitnessEvaluator::evaluate(const Cylinder& c) const {
  PatchOccupancy occ;
  occ.grid = PatchGrid::build(c, tau_);
  if (cloud_->empty()) {
    occ.entry_start.push_back(0);
    return occ;
  }

  const CylinderFrame frame = CylinderFrame::of(c);
  std::vector<std::pair<std::int32_t, std::int32_t>> entries;  // (cell, point)

  auto visit = [&](std::int32_t id) {
    const LocalPoint lp = to_local(c, frame, (*cloud_)[std::size_t(id)]);
    const PatchCellSet cells = patch_index(occ.grid, lp, radial_tol_);
    for (const PatchCell& cell : cells)
      entries.emplace_back(occ.grid.linear(cell.i, cell.j), id);
  };

  if (index_) {
    Vec3 lo, hi;
    cylinder_slack_box(c, tau_ * std::max(1.0, radial_tol_), lo, hi);
    for (std::int32_t id : index_->candidates_aabb(lo, hi)) visit(id);
  } else {
    for (std::size_t id = 0; id < cloud_->size(); ++id)
      visit(static_cast<std::int32_t>(id));
  }

  std::sort(entries.begin(), entries.end());
  occ.entry_start.push_back(0);
  for (const auto& [cell, id] : entries) {
    if (occ.filled_cells.empty() || occ.filled_cells.back() != cell) {
      occ.filled_cells.push_back(cell);
      occ.entry_start.push_back(occ.entry_start.back());
      occ.cell_sums.push_back(Vec3::Zero());
    }
    occ.covered_ids.push_back(id);
    occ.entry_start.back() += 1;
    occ.cell_sums.back() += (*cloud_)[std::size_t(id)];
  }
  occ.potential_fitness =
      static_cast<double>(occ.filled_count()) / occ.grid.cells();
  return occ;
}

PatchOccupancy potential_fitness(const Cylinder& c, const PointCloud& cloud,
                                 double tau, double radial_tolerance_factor) {
  return FitnessEvaluator(cloud, tau, radial_tolerance_factor).evaluate(c);
}

std::optional<ContactVector> best_contact(const Cylinder& c,
                                          const PatchOccupancy& occ) {
  if (occ.filled_count() == 0) return std::nullopt;
  int best = 0;
  std::int32_t best_n = occ.entry_start[1] - occ.entry_start[0];
  for (int s = 1; s < occ.filled_count(); ++s) {
    const std::int32_t n = occ.entry_start[std::size_t(s) + 1] -
                           occ.entry_start[std::size_t(s)];
    // filled_cells is sorted by linear id, so the first maximum is the
    // lowest (i, j) tie-break
    if (n > best_n) {
      best = s;
      best_n = n;
    }
  }
  const Vec3 centroid = occ.cell_sums[std::size_t(best)] / double(best_n);
  Vec3 dir = centroid - c.center();
  const double norm = dir.norm();
  if (norm < 1e-12) {
    dir = CylinderFrame::of(c).u;  // degenerate: centroid at the center
  } else {
    dir /= norm;
  }
  return ContactVector{dir.x(), dir.y(), dir.z()};
}

std::vector<double> realized_fitness_values(
    std::span<const PatchOccupancy* const> occupancies, std::size_t n_points,
    std::vector<std::int32_t>* point_assignment) {
  const std::size_t n = occupancies.size();
  std::vector<double> realized(n, 0.0);
  if (point_assignment)
    point_assignment->assign(n_points, -1);
  if (n == 0) return realized;

  // Remaining unassigned-point count per filled cell of every solution, and
  // the number of cells still nonempty. Fitness comparisons stay in exact
  // integer arithmetic: filled/cells vs filled/cells by cross-multiplication.
  std::vector<std::vector<std::int32_t>> remaining(n);
  std::vector<std::int64_t> filled_left(n);
  std::vector<std::int64_t> total_cells(n);
  for (std::size_t s = 0; s < n; ++s) {
    const PatchOccupancy& occ = *occupancies[s];
    remaining[s].resize(occ.filled_cells.size());
    for (std::size_t k = 0; k < occ.filled_cells.size(); ++k)
      remaining[s][k] = occ.entry_start[k + 1] - occ.entry_start[k];
    filled_left[s] = occ.filled_count();
    total_cells[s] = occ.grid.cells();
  }

  // Reverse map point id -> (solution, cell slot) over all solutions, CSR.
  std::vector<std::int32_t> rev_count(n_points + 1, 0);
  for (std::size_t s = 0; s < n; ++s)
    for (std::int32_t id : occupancies[s]->covered_ids)
      rev_count[std::size_t(id) + 1] += 1;
  for (std::size_t i = 0; i < n_points; ++i) rev_count[i + 1] += rev_count[i];
  std::vector<std::pair<std::int32_t, std::int32_t>> rev(
      static_cast<std::size_t>(rev_count[n_points]));
  {
    std::vector<std::int32_t> cursor(rev_count.begin(), rev_count.end() - 1);
    for (std::size_t s = 0; s < n; ++s) {
      const PatchOccupancy& occ = *occupancies[s];
      for (std::size_t k = 0; k < occ.filled_cells.size(); ++k)
        for (std::int32_t id : occ.covered(static_cast<int>(k)))
          rev[std::size_t(cursor[std::size_t(id)]++)] = {
              static_cast<std::int32_t>(s), static_cast<std::int32_t>(k)};
    }
  }

  std::vector<char> marked(n, 0);
  std::vector<char> assigned(n_points, 0);
  for (std::size_t round = 0; round < n; ++round) {
    // argmax of filled_left/total_cells over unmarked, lowest index wins ties
    std::size_t best = n;
    for (std::size_t s = 0; s < n; ++s) {
      if (marked[s]) continue;
      if (best == n ||
          filled_left[s] * total_cells[best] > filled_left[best] * total_cells[s])
        best = s;
    }
    marked[best] = 1;
    realized[best] =
        static_cast<double>(filled_left[best]) / double(total_cells[best]);

    const PatchOccupancy& occ = *occupancies[best];
    for (std::int32_t id : occ.covered_ids) {
      if (assigned[std::size_t(id)]) continue;
      assigned[std::size_t(id)] = 1;
      if (point_assignment)
        (*point_assignment)[std::size_t(id)] = static_cast<std::int32_t>(best);
      for (std::int32_t e = rev_count[std::size_t(id)];
           e < rev_count[std::size_t(id) + 1]; ++e) {
        const auto [s2, slot] = rev[std::size_t(e)];
        if (marked[std::size_t(s2)]) continue;
        if (--remaining[std::size_t(s2)][std::size_t(slot)] == 0)
          filled_left[std::size_t(s2)] -= 1;
      }
    }
  }
  return realized;
}

std::vector<ScoredSolution> realized_fitness_pass(
    std::vector<std::pair<Cylinder, PatchOccupancy>> solutions,
    std::size_t n_points, double alpha) {
  std::vector<const PatchOccupancy*> occs;
  occs.reserve(solutions.size());
  for (const auto& [cyl, occ] : solutions) occs.push_back(&occ);
  const std::vector<double> realized = realized_fitness_values(occs, n_points);
  std::vector<ScoredSolution> out;
  out.reserve(solutions.size());
  for (std::size_t s = 0; s < solutions.size(); ++s) {
    out.push_back(ScoredSolution{std::move(solutions[s].first),
                                 std::move(solutions[s].second), realized[s],
                                 realized[s] >= alpha});
  }
  return out;
}

}  // namespace cylevo
