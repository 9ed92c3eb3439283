#include "cylevo/synthetic.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace cylevo {

std::string SceneDescriptor::to_string() const {
  std::ostringstream os;
  os << generator << "(seed=" << seed;
  for (const auto& [k, v] : params) os << ", " << k << "=" << v;
  os << ")";
  return os.str();
}

PointCloud sample_cylinder(const Cylinder& c, int axial_n, int circ_n) {
  if (axial_n < 1 || circ_n < 1)
    throw std::invalid_argument("sample_cylinder: resolutions must be >= 1");
  const CylinderFrame f = CylinderFrame::of(c);
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(axial_n) * static_cast<std::size_t>(circ_n));
  for (int i = 0; i < axial_n; ++i) {
    const double zeta = c.l * (double(i) + 0.5) / double(axial_n);
    const Vec3 on_axis = f.origin + (zeta - c.l / 2.0) * f.axis;
    for (int j = 0; j < circ_n; ++j) {
      const double ang = kTwoPi * (double(j) + 0.5) / double(circ_n);
      pts.push_back(on_axis + c.r * (std::cos(ang) * f.u + std::sin(ang) * f.v));
    }
  }
  return PointCloud(std::move(pts));
}

PointCloud add_jitter(const PointCloud& cloud, double amplitude_fraction,
                      double r, Rng& rng) {
  if (!(amplitude_fraction >= 0.0 && amplitude_fraction <= 1.0))
    throw std::invalid_argument("add_jitter: amplitude fraction in [0, 1]");
  const double amp = amplitude_fraction * r;
  std::vector<Vec3> pts;
  pts.reserve(cloud.size());
  for (const Vec3& p : cloud) {
    const double dx = uniform_in(rng, -amp, amp);
    const double dy = uniform_in(rng, -amp, amp);
    const double dz = uniform_in(rng, -amp, amp);
    pts.push_back(p + Vec3(dx, dy, dz));
  }
  return PointCloud(std::move(pts));
}

PointCloud add_radial_jitter(const PointCloud& cloud, const Cylinder& c,
                             double amplitude_fraction, Rng& rng) {
  if (!(amplitude_fraction >= 0.0 && amplitude_fraction <= 1.0))
    throw std::invalid_argument("add_radial_jitter: amplitude fraction in [0, 1]");
  const double amp = amplitude_fraction * c.r;
  const CylinderFrame f = CylinderFrame::of(c);
  std::vector<Vec3> pts;
  pts.reserve(cloud.size());
  for (const Vec3& p : cloud) {
    const Vec3 d = p - f.origin;
    const Vec3 t = d - d.dot(f.axis) * f.axis;
    const double rho = t.norm();
    const Vec3 radial = rho > 1e-12 ? Vec3(t / rho) : f.u;
    pts.push_back(p + uniform_in(rng, -amp, amp) * radial);
  }
  return PointCloud(std::move(pts));
}

PointCloud truncate_arc(const PointCloud& cloud, const Cylinder& c,
                        double completeness) {
  if (!(completeness > 0.0 && completeness <= 1.0))
    throw std::invalid_argument("truncate_arc: completeness in (0, 1]");
  const CylinderFrame f = CylinderFrame::of(c);
  const double gamma_max = completeness * kTwoPi * c.r;
  std::vector<Vec3> pts;
  for (const Vec3& p : cloud) {
    if (to_local(c, f, p).gamma < gamma_max) pts.push_back(p);
  }
  return PointCloud(std::move(pts));
}

double RingCyclideParams::b() const { return std::sqrt(a * a - c * c); }

void RingCyclideParams::validate() const {
  if (!(a > 0.0) || !(c >= 0.0) || !(c < d) || !(d < a))
    throw std::invalid_argument(
        "ring cyclide requires 0 <= focal offset < tube radius < ring radius");
}

Vec3 cyclide_point(const RingCyclideParams& p, double u, double v) {
  const double bb = p.b();
  const double cu = std::cos(u), su = std::sin(u);
  const double cv = std::cos(v), sv = std::sin(v);
  const double den = p.a - p.c * cu * cv;
  return {(p.d * (p.c - p.a * cu * cv) + bb * bb * cu) / den,
          bb * su * (p.a - p.d * cv) / den,
          bb * sv * (p.c * cu - p.d) / den};
}

double cyclide_implicit(const RingCyclideParams& p, const Vec3& q) {
  const double bb = p.b();
  const double s = q.squaredNorm() + bb * bb - p.d * p.d;
  const double lhs = s * s;
  const double rhs = 4.0 * std::pow(p.a * q.x() - p.c * p.d, 2) +
                     4.0 * bb * bb * q.y() * q.y();
  return lhs - rhs;
}

Vec3 cyclide_tube_center(const RingCyclideParams& p, double u) {
  return {p.a * std::cos(u), p.b() * std::sin(u), 0.0};
}

Vec3 cyclide_tube_direction(const RingCyclideParams& p, double u) {
  return Vec3(-p.a * std::sin(u), p.b() * std::cos(u), 0.0).normalized();
}

double cyclide_tube_radius(const RingCyclideParams& p, double u) {
  return p.d - p.c * std::cos(u);
}

Vec3 cyclide_nearest_tube_direction(const RingCyclideParams& p, const Vec3& q) {
  // dense scan then a golden-section refinement; the ellipse is well behaved
  double best_u = 0.0;
  double best_d = std::numeric_limits<double>::max();
  constexpr int kScan = 720;
  for (int i = 0; i < kScan; ++i) {
    const double u = kTwoPi * double(i) / kScan;
    const double d2 = (cyclide_tube_center(p, u) - q).squaredNorm();
    if (d2 < best_d) {
      best_d = d2;
      best_u = u;
    }
  }
  double lo = best_u - kTwoPi / kScan;
  double hi = best_u + kTwoPi / kScan;
  constexpr double kGolden = 0.6180339887498949;
  for (int it = 0; it < 60; ++it) {
    const double m1 = hi - kGolden * (hi - lo);
    const double m2 = lo + kGolden * (hi - lo);
    if ((cyclide_tube_center(p, m1) - q).squaredNorm() <
        (cyclide_tube_center(p, m2) - q).squaredNorm())
      hi = m2;
    else
      lo = m1;
  }
  return cyclide_tube_direction(p, 0.5 * (lo + hi));
}

PointCloud sample_ring_cyclide(const RingCyclideParams& p, int res_u,
                               int res_v) {
  p.validate();
  if (res_u < 1 || res_v < 1)
    throw std::invalid_argument("sample_ring_cyclide: resolutions must be >= 1");
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(res_u) * static_cast<std::size_t>(res_v));
  for (int i = 0; i < res_u; ++i) {
    const double u = kTwoPi * (double(i) + 0.5) / double(res_u);
    for (int j = 0; j < res_v; ++j) {
      const double v = kTwoPi * (double(j) + 0.5) / double(res_v);
      pts.push_back(cyclide_point(p, u, v));
    }
  }
  return PointCloud(std::move(pts));
}

SyntheticScene make_cylinder_scene(const CylinderSceneParams& p) {
  SyntheticScene scene;
  PointCloud cloud = sample_cylinder(p.cylinder, p.axial_n, p.circ_n);
  if (p.completeness < 1.0)
    cloud = truncate_arc(cloud, p.cylinder, p.completeness);
  if (p.jitter > 0.0) {
    Rng rng = make_rng(p.seed, 0x7177u);
    cloud = p.jitter_mode == JitterMode::PerCoordinate
                ? add_jitter(cloud, p.jitter, p.cylinder.r, rng)
                : add_radial_jitter(cloud, p.cylinder, p.jitter, rng);
  }
  scene.points = std::move(cloud);
  scene.ground_truth = {p.cylinder};
  scene.descriptor.generator = "cylinder";
  scene.descriptor.seed = p.seed;
  scene.descriptor.params = {
      {"x", p.cylinder.x},         {"y", p.cylinder.y},
      {"z", p.cylinder.z},         {"theta", p.cylinder.theta},
      {"phi", p.cylinder.phi},     {"l", p.cylinder.l},
      {"r", p.cylinder.r},         {"axial_n", double(p.axial_n)},
      {"circ_n", double(p.circ_n)},{"jitter", p.jitter},
      {"jitter_mode", p.jitter_mode == JitterMode::PerCoordinate ? 0.0 : 1.0},
      {"completeness", p.completeness},
  };
  return scene;
}

SyntheticScene make_cyclide_scene(const RingCyclideParams& p, int res_u,
                                  int res_v, std::uint64_t seed) {
  SyntheticScene scene;
  scene.points = sample_ring_cyclide(p, res_u, res_v);
  scene.descriptor.generator = "cyclide";
  scene.descriptor.seed = seed;
  scene.descriptor.params = {
      {"ring_radius", p.a},   {"tube_radius", p.d}, {"focal_offset", p.c},
      {"res_u", double(res_u)}, {"res_v", double(res_v)},
  };
  return scene;
}

SyntheticScene regenerate(const SceneDescriptor& d) {
  auto get = [&](const std::string& key) {
    auto it = d.params.find(key);
    if (it == d.params.end())
      throw std::invalid_argument("descriptor missing parameter: " + key);
    return it->second;
  };
  if (d.generator == "cylinder") {
    CylinderSceneParams p;
    p.cylinder = Cylinder{get("x"),     get("y"), get("z"), get("theta"),
                          get("phi"),   get("l"), get("r")};
    p.axial_n = static_cast<int>(get("axial_n"));
    p.circ_n = static_cast<int>(get("circ_n"));
    p.jitter = get("jitter");
    p.jitter_mode = get("jitter_mode") == 0.0 ? JitterMode::PerCoordinate
                                              : JitterMode::Radial;
    p.completeness = get("completeness");
    p.seed = d.seed;
    return make_cylinder_scene(p);
  }
  if (d.generator == "cyclide") {
    RingCyclideParams p{get("ring_radius"), get("tube_radius"),
                        get("focal_offset")};
    return make_cyclide_scene(p, static_cast<int>(get("res_u")),
                              static_cast<int>(get("res_v")), d.seed);
  }
  throw std::invalid_argument("unknown generator: " + d.generator);
}

}  // namespace cylevo
