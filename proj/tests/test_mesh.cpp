#include "nbv/error.hpp"
#include "nbv/mesh.hpp"
#include "nbv/simulator.hpp"

#include <doctest.h>

#include <filesystem>
#include <random>

using namespace nbv;

namespace {

TriangleMesh one_triangle(const Vec3& a, const Vec3& b, const Vec3& c) {
  return TriangleMesh::build({a, b, c}, {Face{0, 1, 2}});
}

Vec3 random_vec(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  return {u(rng), u(rng), u(rng)};
}

}  // namespace

TEST_CASE("single-triangle OBJ") {
  const auto r = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  CHECK(r.mesh.face_count() == 1);
  CHECK(r.mesh.vertex_count() == 3);
  CHECK(r.dropped_faces == 0);
  const Vec3 expected = (Vec3(1, 0, 0) - Vec3(0, 0, 0)).cross(Vec3(0, 1, 0) - Vec3(0, 0, 0)).normalized();
  CHECK((r.mesh.face_normal(0) - expected).norm() < 1e-15);
}

TEST_CASE("OBJ zero-area face is dropped and counted") {
  const auto r = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 2 0 0\nf 1 2 3\nf 1 2 4\n");
  CHECK(r.mesh.face_count() == 1);
  CHECK(r.dropped_faces == 1);
}

TEST_CASE("OBJ quads, negative indices and slash tokens") {
  const auto r = parse_obj("# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nf 1/1 2/1 3/1 4/1\nf -4 -3 -2\n");
  CHECK(r.mesh.face_count() == 3);
  CHECK(r.mesh.face(2) == Face{0, 1, 2});
}

TEST_CASE("OBJ errors cite the line") {
  CHECK_THROWS_WITH_AS(parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n"), doctest::Contains("line 4"), FormatError);
  CHECK_THROWS_WITH_AS(parse_obj("v 0 zero 0\n"), doctest::Contains("line 1"), FormatError);
  CHECK_THROWS_AS(parse_obj("v 0 0 0\n"), FormatError);
}

TEST_CASE("all faces degenerate is an input error") {
  CHECK_THROWS_AS(parse_obj("v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3\n"), InputError);
}

TEST_CASE("non-finite vertex is rejected") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(TriangleMesh::build({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(nan, 1, 0)}, {Face{0, 1, 2}}), InputError);
}

TEST_CASE("round trip through OBJ and PLY keeps vertices and faces exactly") {
  std::mt19937_64 rng(11);
  std::vector<Vec3> verts;
  for (int i = 0; i < 60; ++i) verts.push_back(random_vec(rng));
  std::vector<Face> faces;
  std::uniform_int_distribution<std::uint32_t> pick(0, 59);
  while (faces.size() < 100) {
    const Face f{pick(rng), pick(rng), pick(rng)};
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) continue;
    faces.push_back(f);
  }
  const TriangleMesh mesh = TriangleMesh::build(verts, faces);
  REQUIRE(mesh.face_count() == 100);

  const auto dir = std::filesystem::temp_directory_path() / "nbv_mesh_roundtrip";
  std::filesystem::create_directories(dir);
  for (const char* name : {"m.obj", "m.ply"}) {
    save_obj(mesh, dir / "m.obj");
    save_ply(mesh, dir / "m.ply");
    const auto back = load_mesh(dir / name);
    CHECK(back.dropped_faces == 0);
    CHECK(back.mesh.vertices() == mesh.vertices());
    CHECK(back.mesh.faces() == mesh.faces());
  }
}

TEST_CASE("ascii PLY with extra properties and elements") {
  const std::string text =
      "ply\nformat ascii 1.0\ncomment hi\nelement vertex 4\nproperty float x\nproperty float y\nproperty float z\n"
      "property uchar red\nelement face 1\nproperty list uchar int vertex_indices\nelement edge 1\n"
      "property int a\nproperty int b\nend_header\n"
      "0 0 0 1\n1 0 0 2\n1 1 0 3\n0 1 0 4\n4 0 1 2 3\n0 1\n";
  const auto r = parse_ply(text);
  CHECK(r.mesh.face_count() == 2);
  CHECK(r.mesh.vertex(2) == Vec3(1, 1, 0));
}

TEST_CASE("truncated binary PLY reports a byte offset") {
  std::string bytes = format_ply(make_icosphere(0));
  bytes.resize(bytes.size() - 5);
  CHECK_THROWS_WITH_AS(parse_ply(bytes), doctest::Contains("byte offset"), FormatError);
}

TEST_CASE("face normal") {
  CHECK(one_triangle({0, 0, 0}, {1, 0, 0}, {0, 1, 0}).face_normal(0) == Vec3(0, 0, 1));
  CHECK(one_triangle({0, 0, 0}, {0, 1, 0}, {1, 0, 0}).face_normal(0) == Vec3(0, 0, -1));

  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const Vec3 a = random_vec(rng), b = random_vec(rng), c = random_vec(rng);
    const Vec3 n = one_triangle(a, b, c).face_normal(0);
    CHECK(std::abs(n.norm() - 1.0) < 1e-12);
    CHECK(std::abs(n.dot((b - a).normalized())) < 1e-9);
    CHECK(std::abs(n.dot((c - a).normalized())) < 1e-9);
  }
}

TEST_CASE("face barycenter") {
  CHECK(one_triangle({0, 0, 0}, {3, 0, 0}, {0, 3, 0}).face_barycenter(0) == Vec3(1, 1, 0));
  const double h = std::sqrt(3.0) / 2.0;
  const Vec3 bc = one_triangle({1, 0, 0}, {-0.5, h, 0}, {-0.5, -h, 0}).face_barycenter(0);
  CHECK(bc.norm() < 1e-15);

  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const Vec3 a = random_vec(rng), b = random_vec(rng), c = random_vec(rng);
    const Vec3 expected((a.x() + b.x() + c.x()) / 3.0, (a.y() + b.y() + c.y()) / 3.0, (a.z() + b.z() + c.z()) / 3.0);
    CHECK((one_triangle(a, b, c).face_barycenter(0) - expected).norm() < 1e-12);
  }
}

TEST_CASE("incident faces and vertex normals on an icosphere") {
  const TriangleMesh m = make_icosphere(2);
  CHECK(m.face_count() == 320);
  std::size_t total = 0;
  for (std::size_t v = 0; v < m.vertex_count(); ++v) {
    const auto inc = m.incident_faces(v);
    total += inc.size();
    CHECK(std::is_sorted(inc.begin(), inc.end()));
    for (auto f : inc) {
      const Face& face = m.face(f);
      CHECK((face[0] == v || face[1] == v || face[2] == v));
    }
  }
  CHECK(total == 3 * m.face_count());
  const auto normals = m.vertex_normals();
  for (std::size_t v = 0; v < m.vertex_count(); ++v) {
    CHECK(normals[v].dot(m.vertex(v).normalized()) > 0.99);
  }
}

TEST_CASE("primitive meshes are closed and outward") {
  for (const TriangleMesh& m : {make_icosphere(1), make_box(3, 2.0)}) {
    for (std::size_t f = 0; f < m.face_count(); ++f) {
      CHECK(m.face_normal(f).dot(m.face_barycenter(f) - m.centroid()) > 0.0);
    }
  }
  CHECK(make_icosphere(3).face_count() == 1280);
  CHECK(make_plane_grid(4, 2.0).face_count() == 32);
}
