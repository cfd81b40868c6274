#pragma once

#include "nbv/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace nbv {

using Face = std::array<std::uint32_t, 3>;

/// Minimum triangle area (scene units squared) for a face to be kept.
constexpr double kMinFaceArea = 1e-12;

/// Indexed triangle surface with cached unit face normals and a
/// vertex -> incident-face lookup. Immutable once built.
class TriangleMesh {
 public:
  TriangleMesh() = default;

  /// Validates indices and coordinates, drops faces with area <= kMinFaceArea.
  /// Throws InputError on out-of-range indices, non-finite vertices or when no
  /// face survives. `dropped`, when given, receives the number of faces removed.
  static TriangleMesh build(std::vector<Vec3> vertices, std::vector<Face> faces,
                            std::size_t* dropped = nullptr);

  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t face_count() const { return faces_.size(); }

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Face>& faces() const { return faces_; }
  const std::vector<Vec3>& face_normals() const { return normals_; }

  const Vec3& vertex(std::size_t i) const { return vertices_.at(i); }
  const Face& face(std::size_t f) const { return faces_.at(f); }

  /// Unit normal, right-handed with respect to the vertex order.
  const Vec3& face_normal(std::size_t f) const { return normals_.at(f); }
  Vec3 face_barycenter(std::size_t f) const;
  double face_area(std::size_t f) const;

  /// Faces that reference vertex `v`, in ascending order.
  std::span<const std::uint32_t> incident_faces(std::size_t v) const;

  /// Area-weighted vertex normals (unit length; zero for isolated vertices).
  std::vector<Vec3> vertex_normals() const;

  Vec3 centroid() const;
  double bounding_radius(const Vec3& about) const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
  std::vector<Vec3> normals_;
  std::vector<std::uint32_t> incident_offsets_;
  std::vector<std::uint32_t> incident_faces_;
};

enum class MeshFormat { kObj, kPly };

struct MeshLoadResult {
  TriangleMesh mesh;
  std::size_t dropped_faces = 0;
};

/// Reads ASCII OBJ (v/f records, polygons fan-triangulated) or PLY
/// (ascii 1.0 / binary_little_endian 1.0).
MeshLoadResult load_mesh(const std::filesystem::path& path, MeshFormat format);
/// Picks the format from the file extension.
MeshLoadResult load_mesh(const std::filesystem::path& path);

MeshLoadResult parse_obj(const std::string& text);
MeshLoadResult parse_ply(const std::string& bytes);

void save_obj(const TriangleMesh& mesh, const std::filesystem::path& path);
std::string format_obj(const TriangleMesh& mesh);

/// Binary little-endian PLY with float64 coordinates and int32 indices.
void save_ply(const TriangleMesh& mesh, const std::filesystem::path& path);
std::string format_ply(const TriangleMesh& mesh);

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

/// ASCII PLY with per-face red/green/blue properties.
std::string format_colored_ply(const TriangleMesh& mesh, std::span<const Rgb> face_colors);

}  // namespace nbv
