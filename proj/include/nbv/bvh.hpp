#pragma once

#include "nbv/mesh.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace nbv {

/// Hits closer than this along the ray parameter are ignored.
constexpr double kRayEpsilon = 1e-9;
/// Relative margin at both ends of an occlusion segment.
constexpr double kSegmentEpsilon = 1e-6;

struct RayHit {
  std::uint32_t face_index = 0;
  double t = 0.0;
  Vec3 point = Vec3::Zero();
};

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void expand(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void expand(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  bool contains(const Aabb& b) const {
    return (lo.array() <= b.lo.array()).all() && (hi.array() >= b.hi.array()).all();
  }
  int longest_axis() const;
};

/// Möller–Trumbore with inclusive edges. Returns the ray parameter of the
/// intersection, if any, without any range filtering. Both the BVH traversal
/// and any exhaustive scan must go through this one routine so that their
/// answers agree bit-for-bit.
std::optional<double> intersect_triangle(const Vec3& origin, const Vec3& direction, const Vec3& a,
                                         const Vec3& b, const Vec3& c);

/// Axis-aligned bounding-volume hierarchy over the faces of a mesh. Nodes are
/// split at the median face centroid along the longest axis of their box.
/// The mesh must outlive the Bvh.
class Bvh {
 public:
  struct Node {
    Aabb box;
    // Internal node children.
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    // Leaf: faces order_[first, first + count).
    std::uint32_t first = 0;
    std::uint32_t count = 0;
    bool is_leaf() const { return count > 0; }
  };

  /// Keeps a reference to `mesh`, which must outlive the tree.
  explicit Bvh(const TriangleMesh& mesh, std::uint32_t leaf_size = 4);
  explicit Bvh(TriangleMesh&&, std::uint32_t = 4) = delete;

  const TriangleMesh& mesh() const { return *mesh_; }
  std::span<const Node> nodes() const { return nodes_; }
  /// Face indices in leaf order.
  std::span<const std::uint32_t> leaf_faces() const { return order_; }
  std::uint32_t leaf_size() const { return leaf_size_; }
  std::size_t depth() const;

  /// Closest hit with t in (kRayEpsilon, t_max); ties on t go to the lowest
  /// face index.
  std::optional<RayHit> first_hit(const Vec3& origin, const Vec3& direction, double t_max) const;

  /// True if any face accepted by `accept` intersects the ray with t in
  /// (t_min, t_max). Stops at the first such face.
  bool any_hit(const Vec3& origin, const Vec3& direction, double t_min, double t_max,
               const std::function<bool(std::uint32_t)>& accept) const;

 private:
  std::uint32_t build_node(std::uint32_t first, std::uint32_t count);

  const TriangleMesh* mesh_;
  std::uint32_t leaf_size_;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;
  std::vector<Vec3> centroids_;
};

std::optional<RayHit> ray_first_hit(const Bvh& bvh, const Vec3& origin, const Vec3& direction, double t_max);

/// True iff a face outside `exclude_faces` crosses the open segment
/// from -> to with parameter in (eps, 1 - eps), eps = kSegmentEpsilon.
/// The segment is always traced from the lexicographically smaller endpoint,
/// so the answer does not depend on argument order.
bool segment_occluded(const Bvh& bvh, const Vec3& from, const Vec3& to,
                      std::span<const std::uint32_t> exclude_faces);

}  // namespace nbv
