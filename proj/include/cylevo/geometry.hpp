#pragma once

#include <Eigen/Geometry>
#include <array>
#include <cmath>
#include <numbers>

#include "cylevo/point_cloud.hpp"

namespace cylevo {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps an azimuth into [0, 2*pi).
double wrap_azimuth(double phi);
/// Wraps an elevation into [-pi, pi).
double wrap_elevation(double theta);

/// The 7-parameter solution genome: center position, spherical orientation,
/// axial length and radius.
///
/// The axis direction is
///   (sin(phi) cos(theta'), cos(phi) cos(theta'), sin(theta'))
/// with theta' = theta - pi/2, so theta is an elevation in [-pi, pi] and phi
/// an azimuth in [0, 2*pi].
struct Cylinder {
  double x = 0.0, y = 0.0, z = 0.0;
  double theta = 0.0;
  double phi = 0.0;
  double l = 1.0;
  double r = 1.0;

  Vec3 center() const { return {x, y, z}; }
  Vec3 axis() const {
    const double tp = theta - std::numbers::pi / 2.0;
    const double ct = std::cos(tp);
    return {std::sin(phi) * ct, std::cos(phi) * ct, std::sin(tp)};
  }

  /// Builds the genome from an explicit center/axis; the axis need not be
  /// normalized. Inverse of center()/axis() up to angle wrapping.
  static Cylinder from_axis(const Vec3& center, const Vec3& axis, double l,
                            double r);

  bool operator==(const Cylinder&) const = default;
};

/// Orthonormal right-handed frame of a cylinder: u x v = axis.
/// The transverse pair (u, v) fixes the circumferential origin; it is a
/// gauge choice, stable under translations and under rotations that keep the
/// reference direction used to build it.
struct CylinderFrame {
  Vec3 origin;
  Vec3 axis;
  Vec3 u;
  Vec3 v;

  static CylinderFrame of(const Cylinder& c);
};

/// Cylinder-local coordinates of a world point.
///   gamma: arc length around the circumference, in [0, 2*pi*r)
///   rho:   distance from the axis
///   zeta:  axial coordinate measured from one cap; in [0, l] between caps
struct LocalPoint {
  double gamma;
  double rho;
  double zeta;
};

LocalPoint to_local(const Cylinder& c, const Vec3& p);
LocalPoint to_local(const Cylinder& c, const CylinderFrame& f, const Vec3& p);
Vec3 from_local(const Cylinder& c, const LocalPoint& lp);

/// Discretization of a cylinder's lateral surface into patches of edge
/// length ~tau: i_max rows along the axis, j_max columns around the
/// circumference, both rounded to nearest with a floor of one.
struct PatchGrid {
  double tau;
  double l;
  double r;
  int i_max;
  int j_max;

  static PatchGrid build(const Cylinder& c, double tau);

  int cells() const { return i_max * j_max; }
  int linear(int i, int j) const { return i * j_max + j; }
  int row_of(int cell) const { return cell / j_max; }
  int col_of(int cell) const { return cell % j_max; }

  double circumference() const { return kTwoPi * r; }
  bool operator==(const PatchGrid&) const = default;
  /// Window midpoints; i, j are zero-based cell indices.
  double axial_center(int i) const { return l * double(i + 1) / double(i_max); }
  double circ_center(int j) const {
    return circumference() * double(j + 1) / double(j_max);
  }
};

struct PatchCell {
  int i;
  int j;
  bool operator==(const PatchCell&) const = default;
  bool operator<(const PatchCell& o) const {
    return i != o.i ? i < o.i : j < o.j;
  }
};

/// A point can satisfy the +-tau membership window of several adjacent
/// cells per dimension; nine is an upper bound under the rounding rule.
struct PatchCellSet {
  int count = 0;
  std::array<PatchCell, 9> cells{};

  void push(PatchCell c) { cells[static_cast<std::size_t>(count++)] = c; }
  bool empty() const { return count == 0; }
  const PatchCell* begin() const { return cells.data(); }
  const PatchCell* end() const { return cells.data() + count; }
};

/// All grid cells whose occupancy window contains the local point: the
/// circumferential and axial membership tests use a strict +-tau window
/// around each cell midpoint (circular in gamma), the radial test keeps
/// |rho - r| < radial_tolerance_factor * tau.
PatchCellSet patch_index(const PatchGrid& g, const LocalPoint& lp,
                         double radial_tolerance_factor = 1.0);

/// Unit vector from a cylinder's center toward the point of best contact.
struct ContactVector {
  double cx;
  double cy;
  double cz;

  Vec3 vec() const { return {cx, cy, cz}; }
};

}  // namespace cylevo
