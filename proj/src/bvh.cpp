#include "nbv/bvh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nbv {

int Aabb::longest_axis() const {
  const Vec3 ext = hi - lo;
  int axis = 0;
  if (ext.y() > ext[axis]) axis = 1;
  if (ext.z() > ext[axis]) axis = 2;
  return axis;
}

std::optional<double> intersect_triangle(const Vec3& origin, const Vec3& direction, const Vec3& a,
                                         const Vec3& b, const Vec3& c) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 p = direction.cross(e2);
  const double det = e1.dot(p);
  if (det == 0.0 || !std::isfinite(det)) return std::nullopt;  // parallel
  const double inv_det = 1.0 / det;
  const Vec3 s = origin - a;
  const double u = s.dot(p) * inv_det;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 q = s.cross(e1);
  const double v = direction.dot(q) * inv_det;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  return e2.dot(q) * inv_det;
}

namespace {

// Inclusive slab test against [t_lo, t_hi]. Boxes are padded at build time, so
// a triangle hit can never fall outside its leaf box by rounding.
bool ray_box(const Aabb& box, const Vec3& origin, const Vec3& inv_dir, const Vec3& direction,
             double t_lo, double t_hi) {
  for (int k = 0; k < 3; ++k) {
    if (direction[k] == 0.0) {
      if (origin[k] < box.lo[k] || origin[k] > box.hi[k]) return false;
      continue;
    }
    double t0 = (box.lo[k] - origin[k]) * inv_dir[k];
    double t1 = (box.hi[k] - origin[k]) * inv_dir[k];
    if (t0 > t1) std::swap(t0, t1);
    // Widen by a few ulps to stay conservative.
    constexpr double kWiden = 4.0 * std::numeric_limits<double>::epsilon();
    t0 -= std::abs(t0) * kWiden;
    t1 += std::abs(t1) * kWiden;
    t_lo = std::max(t_lo, t0);
    t_hi = std::min(t_hi, t1);
    if (t_lo > t_hi) return false;
  }
  return true;
}

}  // namespace

Bvh::Bvh(const TriangleMesh& mesh, std::uint32_t leaf_size)
    : mesh_(&mesh), leaf_size_(std::max<std::uint32_t>(1, leaf_size)) {
  const auto n = static_cast<std::uint32_t>(mesh.face_count());
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0u);
  centroids_.reserve(n);
  for (std::uint32_t f = 0; f < n; ++f) centroids_.push_back(mesh.face_barycenter(f));
  nodes_.reserve(2 * (n / leaf_size_ + 1));
  if (n > 0) build_node(0, n);
}

std::uint32_t Bvh::build_node(std::uint32_t first, std::uint32_t count) {
  Aabb box;
  for (std::uint32_t i = first; i < first + count; ++i) {
    for (auto idx : mesh_->face(order_[i])) box.expand(mesh_->vertex(idx));
  }
  const Vec3 pad = (box.hi - box.lo).cwiseAbs() * 1e-9 +
                   Vec3::Constant(1e-12) + (box.lo.cwiseAbs().cwiseMax(box.hi.cwiseAbs())) * 1e-12;
  box.lo -= pad;
  box.hi += pad;

  const auto index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back({});
  nodes_[index].box = box;
  if (count <= leaf_size_) {
    nodes_[index].first = first;
    nodes_[index].count = count;
    return index;
  }

  const int axis = box.longest_axis();
  std::sort(order_.begin() + first, order_.begin() + first + count,
            [&](std::uint32_t a, std::uint32_t b) {
              const double ca = centroids_[a][axis];
              const double cb = centroids_[b][axis];
              return ca < cb || (ca == cb && a < b);
            });
  const std::uint32_t half = count / 2;
  const std::uint32_t left = build_node(first, half);
  const std::uint32_t right = build_node(first + half, count - half);
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

std::size_t Bvh::depth() const {
  if (nodes_.empty()) return 0;
  std::size_t best = 0;
  std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0u, 0u}};
  while (!stack.empty()) {
    auto [node, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (!nodes_[node].is_leaf()) {
      stack.push_back({nodes_[node].left, d + 1});
      stack.push_back({nodes_[node].right, d + 1});
    }
  }
  return best;
}

std::optional<RayHit> Bvh::first_hit(const Vec3& origin, const Vec3& direction, double t_max) const {
  if (nodes_.empty()) return std::nullopt;
  const Vec3 inv_dir = direction.cwiseInverse();
  double best_t = t_max;
  std::optional<std::uint32_t> best_face;

  std::vector<std::uint32_t> stack;
  stack.reserve(64);
  stack.push_back(0);
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (!ray_box(node.box, origin, inv_dir, direction, kRayEpsilon, best_t)) continue;
    if (!node.is_leaf()) {
      stack.push_back(node.right);
      stack.push_back(node.left);
      continue;
    }
    for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
      const std::uint32_t f = order_[i];
      const Face& face = mesh_->face(f);
      auto t = intersect_triangle(origin, direction, mesh_->vertex(face[0]), mesh_->vertex(face[1]),
                                  mesh_->vertex(face[2]));
      if (!t || !(*t > kRayEpsilon)) continue;
      if (best_face) {
        if (*t < best_t || (*t == best_t && f < *best_face)) {
          best_t = *t;
          best_face = f;
        }
      } else if (*t < t_max) {
        best_t = *t;
        best_face = f;
      }
    }
  }
  if (!best_face) return std::nullopt;
  return RayHit{*best_face, best_t, origin + best_t * direction};
}

bool Bvh::any_hit(const Vec3& origin, const Vec3& direction, double t_min, double t_max,
                  const std::function<bool(std::uint32_t)>& accept) const {
  if (nodes_.empty()) return false;
  const Vec3 inv_dir = direction.cwiseInverse();
  std::vector<std::uint32_t> stack;
  stack.reserve(64);
  stack.push_back(0);
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (!ray_box(node.box, origin, inv_dir, direction, t_min, t_max)) continue;
    if (!node.is_leaf()) {
      stack.push_back(node.right);
      stack.push_back(node.left);
      continue;
    }
    for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
      const std::uint32_t f = order_[i];
      const Face& face = mesh_->face(f);
      auto t = intersect_triangle(origin, direction, mesh_->vertex(face[0]), mesh_->vertex(face[1]),
                                  mesh_->vertex(face[2]));
      if (t && *t > t_min && *t < t_max && accept(f)) return true;
    }
  }
  return false;
}

std::optional<RayHit> ray_first_hit(const Bvh& bvh, const Vec3& origin, const Vec3& direction, double t_max) {
  return bvh.first_hit(origin, direction, t_max);
}

bool segment_occluded(const Bvh& bvh, const Vec3& from, const Vec3& to,
                      std::span<const std::uint32_t> exclude_faces) {
  const bool swap = std::lexicographical_compare(to.data(), to.data() + 3, from.data(), from.data() + 3);
  const Vec3& start = swap ? to : from;
  const Vec3& end = swap ? from : to;
  const Vec3 dir = end - start;
  return bvh.any_hit(start, dir, kSegmentEpsilon, 1.0 - kSegmentEpsilon, [&](std::uint32_t f) {
    return std::find(exclude_faces.begin(), exclude_faces.end(), f) == exclude_faces.end();
  });
}

}  // namespace nbv
