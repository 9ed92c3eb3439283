#include "cylevo/geometry.hpp"

#include <algorithm>

namespace cylevo {

namespace {
constexpr double kPi = std::numbers::pi;
}

double wrap_azimuth(double phi) {
  if (phi >= 0.0 && phi < kTwoPi) return phi;  // bit-exact in range
  double w = std::fmod(phi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  return w >= kTwoPi ? 0.0 : w;
}

double wrap_elevation(double theta) {
  if (theta >= -kPi && theta < kPi) return theta;  // bit-exact in range
  double w = std::fmod(theta + kPi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  return w - kPi;
}

Cylinder Cylinder::from_axis(const Vec3& center, const Vec3& axis, double l,
                             double r) {
  const Vec3 a = axis.normalized();
  const double tp = std::asin(std::clamp(a.z(), -1.0, 1.0));
  const double ct = std::cos(tp);
  double phi = ct > 1e-12 ? std::atan2(a.x(), a.y()) : 0.0;
  if (phi < 0.0) phi += kTwoPi;
  return Cylinder{center.x(), center.y(), center.z(), tp + kPi / 2.0, phi, l, r};
}

CylinderFrame CylinderFrame::of(const Cylinder& c) {
  const Vec3 a = c.axis();
  const Vec3 ref = std::abs(a.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
  const Vec3 u = ref.cross(a).normalized();
  const Vec3 v = a.cross(u);
  return CylinderFrame{c.center(), a, u, v};
}

LocalPoint to_local(const Cylinder& c, const CylinderFrame& f, const Vec3& p) {
  const Vec3 d = p - f.origin;
  const double along = d.dot(f.axis);
  const Vec3 t = d - along * f.axis;
  const double rho = t.norm();
  double ang = std::atan2(t.dot(f.v), t.dot(f.u));
  if (ang < 0.0) ang += kTwoPi;
  if (ang >= kTwoPi) ang = 0.0;
  return LocalPoint{c.r * ang, rho, along + c.l / 2.0};
}

LocalPoint to_local(const Cylinder& c, const Vec3& p) {
  return to_local(c, CylinderFrame::of(c), p);
}

Vec3 from_local(const Cylinder& c, const LocalPoint& lp) {
  const CylinderFrame f = CylinderFrame::of(c);
  const double ang = lp.gamma / c.r;
  return f.origin + (lp.zeta - c.l / 2.0) * f.axis +
         lp.rho * (std::cos(ang) * f.u + std::sin(ang) * f.v);
}

PatchGrid PatchGrid::build(const Cylinder& c, double tau) {
  const int i_max = std::max(1, static_cast<int>(std::llround(c.l / tau)));
  const int j_max =
      std::max(1, static_cast<int>(std::llround(kTwoPi * c.r / tau)));
  return PatchGrid{tau, c.l, c.r, i_max, j_max};
}

PatchCellSet patch_index(const PatchGrid& g, const LocalPoint& lp,
                         double radial_tolerance_factor) {
  PatchCellSet out;
  const double rt = radial_tolerance_factor * g.tau;
  if (!(lp.rho > g.r - rt && lp.rho < g.r + rt)) return out;

  // Axial candidates: one-based rows i with |zeta - l*i/i_max| < tau.
  int rows[3];
  int n_rows = 0;
  {
    const double scale = double(g.i_max) / g.l;
    const int lo = std::max(1, int(std::floor((lp.zeta - g.tau) * scale)));
    const int hi = std::min(g.i_max, int(std::ceil((lp.zeta + g.tau) * scale)));
    for (int i = lo; i <= hi && n_rows < 3; ++i) {
      const double c = g.l * double(i) / double(g.i_max);
      if (lp.zeta > c - g.tau && lp.zeta < c + g.tau) rows[n_rows++] = i - 1;
    }
  }
  if (n_rows == 0) return out;

  // Circumferential candidates, circular: unwrapped one-based columns j with
  // |gamma - C*j/j_max| < tau, folded back into [0, j_max).
  int cols[3];
  int n_cols = 0;
  {
    const double circ = g.circumference();
    const double scale = double(g.j_max) / circ;
    const int lo = int(std::floor((lp.gamma - g.tau) * scale));
    const int hi = int(std::ceil((lp.gamma + g.tau) * scale));
    for (int j = lo; j <= hi && n_cols < 3; ++j) {
      const double c = circ * double(j) / double(g.j_max);
      if (!(lp.gamma > c - g.tau && lp.gamma < c + g.tau)) continue;
      int folded = (j - 1) % g.j_max;
      if (folded < 0) folded += g.j_max;
      bool seen = false;
      for (int k = 0; k < n_cols; ++k) seen = seen || cols[k] == folded;
      if (!seen) cols[n_cols++] = folded;
    }
  }

  for (int a = 0; a < n_rows; ++a)
    for (int b = 0; b < n_cols; ++b) out.push(PatchCell{rows[a], cols[b]});
  std::sort(out.cells.begin(), out.cells.begin() + out.count);
  return out;
}

}  // namespace cylevo
