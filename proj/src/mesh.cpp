#include "nbv/mesh.hpp"

#include "nbv/error.hpp"

#include <fmt/format.h>

namespace nbv {

TriangleMesh TriangleMesh::build(std::vector<Vec3> vertices, std::vector<Face> faces,
                                 std::size_t* dropped) {
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (!is_finite(vertices[i])) {
      throw InputError(fmt::format("vertex {} has a non-finite coordinate", i));
    }
  }

  TriangleMesh mesh;
  mesh.vertices_ = std::move(vertices);
  mesh.faces_.reserve(faces.size());
  mesh.normals_.reserve(faces.size());

  std::size_t removed = 0;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Face& face = faces[f];
    for (auto idx : face) {
      if (idx >= mesh.vertices_.size()) {
        throw InputError(fmt::format("face {} references vertex {} but the mesh has {} vertices",
                                     f, idx, mesh.vertices_.size()));
      }
    }
    const Vec3& a = mesh.vertices_[face[0]];
    const Vec3& b = mesh.vertices_[face[1]];
    const Vec3& c = mesh.vertices_[face[2]];
    const Vec3 cross = (b - a).cross(c - a);
    const double area = 0.5 * cross.norm();
    if (!(area > kMinFaceArea)) {
      ++removed;
      continue;
    }
    mesh.faces_.push_back(face);
    mesh.normals_.push_back(cross / cross.norm());
  }
  if (dropped != nullptr) *dropped = removed;
  if (mesh.faces_.empty()) {
    throw InputError("mesh has no non-degenerate faces");
  }

  // CSR vertex -> face table.
  mesh.incident_offsets_.assign(mesh.vertices_.size() + 1, 0);
  for (const Face& face : mesh.faces_) {
    for (auto idx : face) ++mesh.incident_offsets_[idx + 1];
  }
  for (std::size_t i = 1; i < mesh.incident_offsets_.size(); ++i) {
    mesh.incident_offsets_[i] += mesh.incident_offsets_[i - 1];
  }
  mesh.incident_faces_.resize(mesh.incident_offsets_.back());
  std::vector<std::uint32_t> cursor(mesh.incident_offsets_.begin(), mesh.incident_offsets_.end() - 1);
  for (std::uint32_t f = 0; f < mesh.faces_.size(); ++f) {
    for (auto idx : mesh.faces_[f]) {
      // A face listing the same vertex twice is degenerate and was dropped.
      mesh.incident_faces_[cursor[idx]++] = f;
    }
  }
  return mesh;
}

Vec3 TriangleMesh::face_barycenter(std::size_t f) const {
  const Face& face = faces_.at(f);
  return (vertices_[face[0]] + vertices_[face[1]] + vertices_[face[2]]) / 3.0;
}

double TriangleMesh::face_area(std::size_t f) const {
  const Face& face = faces_.at(f);
  const Vec3& a = vertices_[face[0]];
  return 0.5 * (vertices_[face[1]] - a).cross(vertices_[face[2]] - a).norm();
}

std::span<const std::uint32_t> TriangleMesh::incident_faces(std::size_t v) const {
  if (v >= vertices_.size()) {
    throw std::out_of_range(fmt::format("vertex index {} out of range", v));
  }
  const auto begin = incident_offsets_[v];
  const auto end = incident_offsets_[v + 1];
  return {incident_faces_.data() + begin, end - begin};
}

std::vector<Vec3> TriangleMesh::vertex_normals() const {
  std::vector<Vec3> normals(vertices_.size(), Vec3::Zero());
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    const Vec3 weighted = normals_[f] * face_area(f);
    for (auto idx : faces_[f]) normals[idx] += weighted;
  }
  for (Vec3& n : normals) {
    const double len = n.norm();
    if (len > 0.0) n /= len;
  }
  return normals;
}

Vec3 TriangleMesh::centroid() const {
  Vec3 sum = Vec3::Zero();
  for (const Vec3& v : vertices_) sum += v;
  return vertices_.empty() ? sum : Vec3(sum / static_cast<double>(vertices_.size()));
}

double TriangleMesh::bounding_radius(const Vec3& about) const {
  double r = 0.0;
  for (const Vec3& v : vertices_) r = std::max(r, (v - about).norm());
  return r;
}

}  // namespace nbv
