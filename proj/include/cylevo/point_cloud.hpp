#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace cylevo {

using Vec3 = Eigen::Vector3d;

struct Aabb {
  Vec3 lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
          std::numeric_limits<double>::max()};
  Vec3 hi{std::numeric_limits<double>::lowest(),
          std::numeric_limits<double>::lowest(),
          std::numeric_limits<double>::lowest()};

  bool empty() const { return lo.x() > hi.x(); }
  void expand(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
  double diagonal() const { return empty() ? 0.0 : (hi - lo).norm(); }
  Aabb inflated(double fraction) const {
    Aabb out = *this;
    if (empty()) return out;
    const Vec3 pad = 0.5 * fraction * (hi - lo);
    out.lo -= pad;
    out.hi += pad;
    return out;
  }
};

/// Immutable set of 3D points. Point identifiers are positions in file /
/// construction order. Safe to share across threads once built.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(std::vector<Vec3> points) : points_(std::move(points)) {
    for (const Vec3& p : points_) bounds_.expand(p);
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Vec3& operator[](std::size_t i) const { return points_[i]; }
  std::span<const Vec3> points() const { return points_; }
  const Aabb& bounds() const { return bounds_; }

  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }

 private:
  std::vector<Vec3> points_;
  Aabb bounds_;
};

/// Uniform-grid spatial index over a cloud. Queries are exact: they return
/// precisely the points a brute-force scan would.
class UniformGridIndex {
 public:
  UniformGridIndex(const PointCloud& cloud, double cell_size);

  /// Point ids whose coordinates lie inside [lo, hi] (inclusive), ascending.
  std::vector<std::int32_t> query_aabb(const Vec3& lo, const Vec3& hi) const;

  /// Point ids within euclidean distance radius of center, ascending.
  std::vector<std::int32_t> query_radius(const Vec3& center, double radius) const;

  /// Candidate ids for an AABB: a superset of query_aabb without the exact
  /// containment filter. Ascending order.
  std::vector<std::int32_t> candidates_aabb(const Vec3& lo, const Vec3& hi) const;

  double cell_size() const { return cell_; }

 private:
  struct CellKey {
    std::int32_t x, y, z;
    bool operator<(const CellKey& o) const {
      if (x != o.x) return x < o.x;
      if (y != o.y) return y < o.y;
      return z < o.z;
    }
    bool operator==(const CellKey& o) const {
      return x == o.x && y == o.y && z == o.z;
    }
  };

  CellKey key_of(const Vec3& p) const;
  template <typename Fn>
  void for_each_candidate(const Vec3& lo, const Vec3& hi, Fn&& fn) const;

  const PointCloud* cloud_;
  double cell_;
  Vec3 origin_;
  // cells sorted by key; ids[start[k] .. start[k+1]) are the members
  std::vector<CellKey> keys_;
  std::vector<std::int32_t> start_;
  std::vector<std::int32_t> ids_;
};

}  // namespace cylevo
