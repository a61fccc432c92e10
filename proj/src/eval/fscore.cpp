#include "pointvet/eval/fscore.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "pointvet/core/rng.hpp"

namespace pvet::eval {

namespace {

// Hash grid over one cloud answering "any point within tau of q". Cell size
// is at least tau, so the 27-cell neighborhood always covers the query ball;
// hash collisions only add candidates, which the exact distance test rejects.
class NearGrid {
 public:
  NearGrid(const std::vector<Point>& pts, double tau) : pts_(pts), tau2_(tau * tau) {
    Box3 box = Box3::empty();
    for (const Point& p : pts) box.extend(p.position);
    const Vec3 ext = box.extent();
    const double max_ext = std::max({ext.x, ext.y, ext.z, 0.0});
    cell_ = std::max(tau, max_ext / (1 << 20));
    origin_ = box.min;
    cells_.reserve(pts.size());
    for (size_t i = 0; i < pts.size(); ++i)
      cells_[key(coord(pts[i].position))].push_back(uint32_t(i));
  }

  bool has_within_tau(const Vec3& q) const {
    const auto c = coord(q);
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const auto it = cells_.find(key({c[0] + dx, c[1] + dy, c[2] + dz}));
          if (it == cells_.end()) continue;
          for (uint32_t i : it->second) {
            const Vec3 d = pts_[i].position - q;
            if (d.dot(d) <= tau2_) return true;
          }
        }
    return false;
  }

 private:
  std::array<int64_t, 3> coord(const Vec3& p) const {
    return {int64_t(std::floor((p.x - origin_.x) / cell_)),
            int64_t(std::floor((p.y - origin_.y) / cell_)),
            int64_t(std::floor((p.z - origin_.z) / cell_))};
  }
  static uint64_t key(const std::array<int64_t, 3>& c) {
    return mix64(uint64_t(c[0])) ^ mix64(uint64_t(c[1]) * 0x9e3779b97f4a7c15ull) ^
           mix64(uint64_t(c[2]) * 0xc2b2ae3d27d4eb4full);
  }

  const std::vector<Point>& pts_;
  double tau2_;
  double cell_ = 1.0;
  Vec3 origin_;
  std::unordered_map<uint64_t, std::vector<uint32_t>> cells_;
};

double covered_fraction(const PointCloud& from, const PointCloud& against, double tau) {
  const NearGrid grid(against.points, tau);
  size_t hit = 0;
  for (const Point& p : from.points)
    if (grid.has_within_tau(p.position)) ++hit;
  return double(hit) / double(from.size());
}

}  // namespace

FScoreReport f_score(const PointCloud& reconstructed, const PointCloud& truth, double tau) {
  if (reconstructed.empty() || truth.empty())
    throw std::invalid_argument("f_score: clouds must be non-empty");
  if (!(tau > 0.0)) throw std::invalid_argument("f_score: tau must be positive");

  FScoreReport r;
  r.tau = tau;
  r.precision = covered_fraction(reconstructed, truth, tau);
  r.recall = covered_fraction(truth, reconstructed, tau);
  const double denom = r.precision + r.recall;
  r.f_score = denom > 0.0 ? 2.0 * r.precision * r.recall / denom : 0.0;
  return r;
}

}  // namespace pvet::eval
