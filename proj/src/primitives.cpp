#include "nbv/error.hpp"
#include "nbv/simulator.hpp"

#include <map>
#include <tuple>

namespace nbv {

namespace {

// Flips faces whose normal points toward `inside`.
void orient_outward(std::vector<Vec3>& vertices, std::vector<Face>& faces, const Vec3& inside) {
  for (Face& f : faces) {
    const Vec3& a = vertices[f[0]];
    const Vec3 n = (vertices[f[1]] - a).cross(vertices[f[2]] - a);
    const Vec3 bary = (a + vertices[f[1]] + vertices[f[2]]) / 3.0;
    if (n.dot(bary - inside) < 0.0) std::swap(f[1], f[2]);
  }
}

}  // namespace

TriangleMesh make_icosphere(int subdivisions, double radius, const Vec3& center) {
  if (subdivisions < 0 || subdivisions > 7) throw InputError("icosphere subdivisions must lie in [0, 7]");
  if (!(radius > 0.0)) throw InputError("icosphere radius must be positive");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                             {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (Vec3& v : verts) v.normalize();
  std::vector<Face> faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                             {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                             {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};

  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoints;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      auto it = midpoints.find(key);
      if (it != midpoints.end()) return it->second;
      verts.push_back(((verts[a] + verts[b]) * 0.5).normalized());
      const auto idx = static_cast<std::uint32_t>(verts.size() - 1);
      midpoints.emplace(key, idx);
      return idx;
    };
    std::vector<Face> next;
    next.reserve(faces.size() * 4);
    for (const Face& f : faces) {
      const auto ab = midpoint(f[0], f[1]);
      const auto bc = midpoint(f[1], f[2]);
      const auto ca = midpoint(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
  orient_outward(verts, faces, Vec3::Zero());
  for (Vec3& v : verts) v = center + radius * v;
  return TriangleMesh::build(std::move(verts), std::move(faces));
}

TriangleMesh make_plane_grid(int cells, double size) {
  if (cells < 1) throw InputError("plane grid needs at least one cell");
  if (!(size > 0.0)) throw InputError("plane size must be positive");
  std::vector<Vec3> verts;
  std::vector<Face> faces;
  const double step = size / cells;
  for (int j = 0; j <= cells; ++j) {
    for (int i = 0; i <= cells; ++i) verts.emplace_back(-size / 2 + i * step, -size / 2 + j * step, 0.0);
  }
  auto id = [cells](int i, int j) { return static_cast<std::uint32_t>(j * (cells + 1) + i); };
  for (int j = 0; j < cells; ++j) {
    for (int i = 0; i < cells; ++i) {
      faces.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      faces.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return TriangleMesh::build(std::move(verts), std::move(faces));
}

TriangleMesh make_box(int cells, double size) {
  if (cells < 1) throw InputError("box needs at least one cell per side");
  if (!(size > 0.0)) throw InputError("box size must be positive");
  // Vertices live on an integer lattice [0, cells]^3 so shared edges weld exactly.
  std::map<std::tuple<int, int, int>, std::uint32_t> index;
  std::vector<Vec3> verts;
  std::vector<Face> faces;
  auto vertex = [&](int x, int y, int z) {
    const auto key = std::make_tuple(x, y, z);
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    const double s = size / cells;
    verts.emplace_back(x * s - size / 2, y * s - size / 2, z * s - size / 2);
    const auto idx = static_cast<std::uint32_t>(verts.size() - 1);
    index.emplace(key, idx);
    return idx;
  };
  for (int axis = 0; axis < 3; ++axis) {
    for (int side : {0, cells}) {
      for (int a = 0; a < cells; ++a) {
        for (int b = 0; b < cells; ++b) {
          std::array<std::uint32_t, 4> q{};
          const int corners[4][2] = {{a, b}, {a + 1, b}, {a + 1, b + 1}, {a, b + 1}};
          for (int c = 0; c < 4; ++c) {
            int p[3];
            p[axis] = side;
            p[(axis + 1) % 3] = corners[c][0];
            p[(axis + 2) % 3] = corners[c][1];
            q[c] = vertex(p[0], p[1], p[2]);
          }
          faces.push_back({q[0], q[1], q[2]});
          faces.push_back({q[0], q[2], q[3]});
        }
      }
    }
  }
  orient_outward(verts, faces, Vec3::Zero());
  return TriangleMesh::build(std::move(verts), std::move(faces));
}

}  // namespace nbv
