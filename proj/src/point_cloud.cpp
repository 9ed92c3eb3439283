#include "cylevo/point_cloud.hpp"

#include <algorithm>
#include <cmath>

namespace cylevo {

UniformGridIndex::UniformGridIndex(const PointCloud& cloud, double cell_size)
    : cloud_(&cloud), cell_(cell_size) {
  origin_ = cloud.bounds().empty() ? Vec3::Zero() : cloud.bounds().lo;
  const std::size_t n = cloud.size();
  std::vector<std::pair<CellKey, std::int32_t>> tagged;
  tagged.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    tagged.emplace_back(key_of(cloud[i]), static_cast<std::int32_t>(i));
  }
  std::sort(tagged.begin(), tagged.end(), [](const auto& a, const auto& b) {
    if (!(a.first == b.first)) return a.first < b.first;
    return a.second < b.second;
  });
  ids_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0 || !(tagged[i].first == keys_.back())) {
      keys_.push_back(tagged[i].first);
      start_.push_back(static_cast<std::int32_t>(i));
    }
    ids_[i] = tagged[i].second;
  }
  start_.push_back(static_cast<std::int32_t>(n));
}

UniformGridIndex::CellKey UniformGridIndex::key_of(const Vec3& p) const {
  return CellKey{static_cast<std::int32_t>(std::floor((p.x() - origin_.x()) / cell_)),
                 static_cast<std::int32_t>(std::floor((p.y() - origin_.y()) / cell_)),
                 static_cast<std::int32_t>(std::floor((p.z() - origin_.z()) / cell_))};
}

template <typename Fn>
void UniformGridIndex::for_each_candidate(const Vec3& lo, const Vec3& hi,
                                          Fn&& fn) const {
  if (keys_.empty() || (lo.array() > hi.array()).any()) return;
  const CellKey klo = key_of(lo);
  const CellKey khi = key_of(hi);
  const std::int64_t span_x = std::int64_t(khi.x) - klo.x + 1;
  const std::int64_t span_y = std::int64_t(khi.y) - klo.y + 1;
  const std::int64_t span_z = std::int64_t(khi.z) - klo.z + 1;
  const std::int64_t cell_count = span_x * span_y * span_z;
  if (cell_count >= static_cast<std::int64_t>(keys_.size())) {
    // The box covers more cells than exist; scanning the occupied cells wins.
    for (std::size_t k = 0; k < keys_.size(); ++k) {
      const CellKey& key = keys_[k];
      if (key.x < klo.x || key.x > khi.x || key.y < klo.y || key.y > khi.y ||
          key.z < klo.z || key.z > khi.z)
        continue;
      for (std::int32_t e = start_[k]; e < start_[k + 1]; ++e) fn(ids_[e]);
    }
    return;
  }
  for (std::int32_t cx = klo.x; cx <= khi.x; ++cx) {
    for (std::int32_t cy = klo.y; cy <= khi.y; ++cy) {
      // cells with equal (x, y) are contiguous in the sorted key array
      const CellKey a{cx, cy, klo.z};
      auto it = std::lower_bound(keys_.begin(), keys_.end(), a);
      for (; it != keys_.end() && it->x == cx && it->y == cy && it->z <= khi.z;
           ++it) {
        const std::size_t k = static_cast<std::size_t>(it - keys_.begin());
        for (std::int32_t e = start_[k]; e < start_[k + 1]; ++e) fn(ids_[e]);
      }
    }
  }
}

std::vector<std::int32_t> UniformGridIndex::candidates_aabb(const Vec3& lo,
                                                            const Vec3& hi) const {
  std::vector<std::int32_t> out;
  for_each_candidate(lo, hi, [&](std::int32_t id) { out.push_back(id); });
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::int32_t> UniformGridIndex::query_aabb(const Vec3& lo,
                                                       const Vec3& hi) const {
  std::vector<std::int32_t> out;
  for_each_candidate(lo, hi, [&](std::int32_t id) {
    const Vec3& p = (*cloud_)[static_cast<std::size_t>(id)];
    if ((p.array() >= lo.array()).all() && (p.array() <= hi.array()).all())
      out.push_back(id);
  });
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::int32_t> UniformGridIndex::query_radius(const Vec3& center,
                                                         double radius) const {
  const Vec3 pad(radius, radius, radius);
  std::vector<std::int32_t> out;
  const double r2 = radius * radius;
  for_each_candidate(center - pad, center + pad, [&](std::int32_t id) {
    if (((*cloud_)[static_cast<std::size_t>(id)] - center).squaredNorm() <= r2)
      out.push_back(id);
  });
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace cylevo
