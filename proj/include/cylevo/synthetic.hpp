#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cylevo/geometry.hpp"
#include "cylevo/point_cloud.hpp"
#include "cylevo/rng.hpp"

namespace cylevo {

/// Generator name, flat parameter map and seed; enough to rebuild the scene
/// exactly.
struct SceneDescriptor {
  std::string generator;
  std::map<std::string, double> params;
  std::uint64_t seed = 0;

  std::string to_string() const;
};

struct SyntheticScene {
  PointCloud points;
  std::vector<Cylinder> ground_truth;  // empty for the cyclide
  SceneDescriptor descriptor;
};

/// axial_n x circ_n points regularly spaced on the lateral surface,
/// cell-centered in (zeta, gamma).
PointCloud sample_cylinder(const Cylinder& c, int axial_n, int circ_n);

/// Independent per-coordinate uniform displacement with magnitude up to
/// amplitude_fraction * r.
PointCloud add_jitter(const PointCloud& cloud, double amplitude_fraction,
                      double r, Rng& rng);

/// Displacement along the local radial direction only, up to
/// amplitude_fraction * c.r.
PointCloud add_radial_jitter(const PointCloud& cloud, const Cylinder& c,
                             double amplitude_fraction, Rng& rng);

/// Keeps points whose circumferential coordinate lies in
/// [0, completeness * 2*pi*r).
PointCloud truncate_arc(const PointCloud& cloud, const Cylinder& c,
                        double completeness);

/// Ring (non-self-intersecting) Dupin cyclide in the ellipto-hyperbolic
/// parameterization. The surface is the envelope of spheres centered on the
/// ellipse (a cos u, b sin u, 0), b = sqrt(a^2 - c^2), with radius
/// d - c cos u. Ring condition: 0 <= c < d < a. c = 0 gives a torus.
struct RingCyclideParams {
  double a = 3.0;   // ellipse semi-major axis (ring radius)
  double d = 1.0;   // mean tube radius
  double c = 0.35;  // focal offset

  double b() const;
  void validate() const;  // throws std::invalid_argument for non-ring params
};

Vec3 cyclide_point(const RingCyclideParams& p, double u, double v);
/// Residual of the implicit cyclide equation; zero on the surface.
double cyclide_implicit(const RingCyclideParams& p, const Vec3& q);
Vec3 cyclide_tube_center(const RingCyclideParams& p, double u);
Vec3 cyclide_tube_direction(const RingCyclideParams& p, double u);
double cyclide_tube_radius(const RingCyclideParams& p, double u);
/// Tube direction at the ellipse point nearest to q.
Vec3 cyclide_nearest_tube_direction(const RingCyclideParams& p, const Vec3& q);

/// res_u x res_v points sampled regularly in the (u, v) parameter square.
PointCloud sample_ring_cyclide(const RingCyclideParams& p, int res_u, int res_v);

enum class JitterMode { PerCoordinate, Radial };

struct CylinderSceneParams {
  Cylinder cylinder{0.0, 0.0, 0.0, std::numbers::pi / 2.0,
                    std::numbers::pi / 2.0, 10.0, 1.0};  // axis +x
  int axial_n = 100;
  int circ_n = 42;
  double jitter = 0.0;        // fraction of r
  JitterMode jitter_mode = JitterMode::PerCoordinate;
  double completeness = 1.0;  // fraction of the circumference retained
  std::uint64_t seed = 1;
};

SyntheticScene make_cylinder_scene(const CylinderSceneParams& p);
SyntheticScene make_cyclide_scene(const RingCyclideParams& p, int res_u,
                                  int res_v, std::uint64_t seed = 1);

/// Rebuilds a scene from its descriptor; bitwise-identical to the original.
SyntheticScene regenerate(const SceneDescriptor& descriptor);

}  // namespace cylevo
