#include "nbv/energy.hpp"
#include "nbv/error.hpp"
#include "nbv/simulator.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace nbv;

namespace {

const double pi = std::acos(-1.0);

Camera at(const std::string& id, const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitY()) {
  return {id, {300, 300, 150, 150, 300, 300}, look_at(eye, target, up)};
}

double i_max(double kappa) { return kappa - std::log(2.0 * pi * oracle::bessel_i0_series(kappa)); }

// Per-term recomputation that only shares the mesh and camera types.
double occlusion_oracle(const Camera& cam, const TriangleMesh& mesh, std::uint32_t v, double penalty) {
  const Vec3 p = mesh.vertex(v);
  if (cam.pose.to_camera(p).z() <= 0.0) return penalty;
  const auto inc = mesh.incident_faces(v);
  const Vec3 d = p - cam.pose.center;
  for (std::uint32_t f = 0; f < mesh.face_count(); ++f) {
    if (std::find(inc.begin(), inc.end(), f) != inc.end()) continue;
    const Face& face = mesh.face(f);
    const auto t = oracle::plane_hit(cam.pose.center, d, mesh.vertex(face[0]), mesh.vertex(face[1]), mesh.vertex(face[2]));
    if (t && *t > 1e-9 && *t < 1.0 - 1e-9) return penalty;
  }
  return 1.0;
}

double focus_oracle(const Camera& cam, const Vec3& p, double penalty) {
  const Vec3 c = cam.pose.to_camera(p);
  if (c.z() <= 0.0) return penalty;
  const auto& k = cam.intrinsics;
  const double u = k.fx * c.x() / c.z() + k.cx;
  const double w = k.fy * c.y() / c.z() + k.cy;
  if (u < 0 || w < 0 || u >= k.width || w >= k.height) return penalty;
  const double sx = k.width / 3.0, sy = k.height / 3.0;
  return -std::pow(u - k.cx, 2) / (2 * sx * sx) - std::pow(w - k.cy, 2) / (2 * sy * sy);
}

double incidence_oracle(const Camera& cam, const TriangleMesh& mesh, const std::vector<std::uint32_t>& faces,
                        const EnergyParams& p) {
  double sum = 0.0;
  for (auto f : faces) {
    const Face& face = mesh.face(f);
    const Vec3 a = mesh.vertex(face[0]), b = mesh.vertex(face[1]), c = mesh.vertex(face[2]);
    const Vec3 n = (b - a).cross(c - a).normalized();
    const Vec3 ray = (cam.pose.center - (a + b + c) / 3.0).normalized();
    const double x = std::acos(std::clamp(n.dot(ray), -1.0, 1.0));
    sum += p.kappa * std::cos(x - p.mu_angle_deg * pi / 180.0) - std::log(2 * pi * oracle::bessel_i0_series(p.kappa));
  }
  return sum / static_cast<double>(faces.size());
}

}  // namespace

TEST_CASE("occlusion term") {
  const TriangleMesh m = TriangleMesh::build(
      {Vec3(-1, -1, 0), Vec3(1, -1, 0), Vec3(0, 1, 0), Vec3(-2, -2, 1), Vec3(2, -2, 1), Vec3(0, 2, 1)},
      {Face{0, 1, 2}, Face{3, 4, 5}});
  const Bvh bvh(m);
  const EnergyParams params;
  // From above the blocker covers the lower triangle; from below the view is clear.
  const Camera above = at("a", {0, 0, 3}, {0, 0, 0});
  const Camera below = at("b", {0, 0, -3}, {0, 0, 0});
  CHECK(occlusion_term(below, bvh, 0, params) == 1.0);
  CHECK(occlusion_term(above, bvh, 0, params) == -10.0);
  // Vertex behind the camera.
  const Camera away = at("c", {0, 0, -3}, {0, 0, -6});
  CHECK(occlusion_term(away, bvh, 0, params) == -10.0);
}

TEST_CASE("focus term") {
  const EnergyParams params;
  const Camera cam{"c", {100, 100, 150, 150, 300, 300}, {}};
  CHECK(focus_term(cam, {0, 0, 1}, params) == 0.0);
  CHECK(focus_term(cam, {1, 0, 1}, params) == -0.5);
  CHECK(focus_term(cam, {0, 1, 1}, params) == -0.5);
  CHECK(focus_term(cam, {2, 0, 1}, params) == -10.0);
  CHECK(focus_term(cam, {0, 0, -1}, params) == -10.0);
}

TEST_CASE("parallax term") {
  const EnergyParams params;
  const Camera cand = at("c", {0, 0, 100}, {0, 0, 0});
  auto other_at = [](double x) { return at("o", {x, 0, 100}, {0, 0, 0}); };
  CHECK(parallax_term(cand, other_at(50), Vec3::Zero(), params) == 1.0);
  CHECK(parallax_term(cand, other_at(20), Vec3::Zero(), params) == -10.0);
  CHECK(parallax_term(cand, other_at(33), Vec3::Zero(), params) == -10.0);
  // Same pose as an existing camera: no baseline, penalty, no error.
  CHECK(parallax_term(cand, cand, Vec3::Zero(), params) == -10.0);
  CHECK_THROWS_AS(parallax_term(cand, other_at(50), Vec3(0, 0, 100), params), PreconditionError);
}

TEST_CASE("bessel I0") {
  CHECK(bessel_i0(0.0) == 1.0);
  CHECK(std::abs(bessel_i0(1.0) - 1.2660658777520082) < 1e-12);
  for (double k : {0.5, 1.0, 4.0, 8.0, 16.0, 40.0}) {
    CHECK(bessel_i0(k) == doctest::Approx(oracle::bessel_i0_series(k)).epsilon(1e-12));
    CHECK(std::abs(bessel_i0(k) - oracle::bessel_i0_quadrature(k)) / bessel_i0(k) < 1e-9);
  }
  double prev = bessel_i0(0.0);
  for (double k = 0.05; k < 30.0; k += 0.05) {
    const double v = bessel_i0(k);
    CHECK(v > prev);
    prev = v;
  }
  CHECK_THROWS_AS(bessel_i0(-1.0), PreconditionError);
}

TEST_CASE("von Mises log density") {
  const double mu = 55.0 * pi / 180.0;
  for (double kappa : {1.0, 4.0, 8.0, 16.0}) {
    const double mass = oracle::integrate([&](double x) { return std::exp(von_mises_log_density(x, 0.0, kappa)); },
                                          -pi, pi, 10000);
    CHECK(std::abs(mass - 1.0) < 1e-6);
  }
  CHECK(von_mises_log_density(mu, mu, 8.0) == doctest::Approx(i_max(8.0)).epsilon(1e-12));
  for (double a : {0.1, 0.5, 1.3, 2.9}) {
    CHECK(von_mises_log_density(mu + a, mu, 8.0) == doctest::Approx(von_mises_log_density(mu - a, mu, 8.0)).epsilon(1e-12));
    CHECK(von_mises_log_density(mu + a, mu, 8.0) ==
          doctest::Approx(von_mises_log_density(mu + a + 2 * pi, mu, 8.0)).epsilon(1e-12));
  }
  const double lo = von_mises_log_density(mu + pi, mu, 8.0);
  CHECK(von_mises_log_density(mu - pi, mu, 8.0) == doctest::Approx(lo).epsilon(1e-12));
  for (double x = -4.0; x < 4.0; x += 0.01) CHECK(von_mises_log_density(x, mu, 8.0) >= lo - 1e-12);
}

TEST_CASE("incidence term peaks at the preferred angle") {
  const TriangleMesh m = TriangleMesh::build({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)}, {Face{0, 1, 2}});
  const Vec3 b = m.face_barycenter(0);
  const EnergyParams params;
  const std::uint32_t faces[] = {0};
  auto eye_at = [&](double deg) {
    const double r = deg * pi / 180.0;
    return Camera{"c", {300, 300, 150, 150, 300, 300}, look_at(b + 2.0 * Vec3(std::sin(r), 0, std::cos(r)), b)};
  };
  CHECK(incidence_term(eye_at(55), m, faces, params) == doctest::Approx(i_max(8.0)).epsilon(1e-12));
  CHECK(incidence_term(eye_at(40), m, faces, params) == doctest::Approx(incidence_term(eye_at(70), m, faces, params)).epsilon(1e-9));
  CHECK(incidence_term(eye_at(10), m, faces, params) < incidence_term(eye_at(40), m, faces, params));
  CHECK(incidence_angle(m, 0, b + Vec3(0, 0, 1)) == doctest::Approx(0.0));
  CHECK_THROWS_AS(incidence_angle(m, 0, b), PreconditionError);
  CHECK_THROWS_AS(incidence_term(eye_at(55), m, {}, params), PreconditionError);
}

TEST_CASE("vertex score with every term at its best") {
  const double r = 55.0 * pi / 180.0;
  const TriangleMesh m = TriangleMesh::build({Vec3(0, 0, 0), Vec3(0.3, 0, 0), Vec3(0, 0.3, 0)}, {Face{0, 1, 2}});
  const Bvh bvh(m);
  const Vec3 b = m.face_barycenter(0);
  const Vec3 eye = b + 3.0 * Vec3(std::sin(r), 0, std::cos(r));
  const Camera cand = at("c", eye, m.vertex(0));
  const std::vector<Camera> existing = {at("e", {-3, 0, 3}, {0, 0, 0})};
  const std::uint32_t worst_f[] = {0};
  const std::uint32_t worst_v[] = {0, 1, 2};
  const NbvScene scene{&bvh, existing, worst_f, worst_v};
  const EnergyConfig config;
  const VertexEnergy e = nbv_score(cand, scene, 0, config);
  CHECK(e.occlusion == 1.0);
  CHECK(std::abs(e.focus) < 1e-20);
  CHECK(e.parallax_sum == 1.0);
  CHECK(e.incidence == doctest::Approx(i_max(8.0)).epsilon(1e-12));
  CHECK(std::abs(e.nbv - (0.6 * 1 + 1.6 * 0 + 2.1 * 1 + 0.6 * i_max(8.0))) < 1e-9);

  EnergyConfig literal = config;
  literal.incidence_sign = IncidenceSign::kPenalize;
  CHECK(std::abs(nbv_score(cand, scene, 0, literal).nbv - (0.6 + 2.1 - 0.6 * i_max(8.0))) < 1e-9);

  EnergyConfig zero;
  zero.weights = {0, 0, 0, 0};
  CHECK(nbv_score(cand, scene, 0, zero).nbv == 0.0);
}

TEST_CASE("occluded vertex costs six") {
  const TriangleMesh m = TriangleMesh::build(
      {Vec3(-1, -1, 0), Vec3(1, -1, 0), Vec3(0, 1, 0), Vec3(-2, -2, 1), Vec3(2, -2, 1), Vec3(0, 2, 1)},
      {Face{0, 1, 2}, Face{3, 4, 5}});
  const Bvh bvh(m);
  const std::uint32_t worst_f[] = {0};
  const std::uint32_t worst_v[] = {0, 1, 2};
  const NbvScene scene{&bvh, {}, worst_f, worst_v};
  EnergyConfig only_o;
  only_o.weights = {0.6, 0, 0, 0};
  const Camera above = at("a", {0, 0, 3}, {0, 0, 0});
  CHECK(nbv_score(above, scene, 0, only_o).nbv == doctest::Approx(-6.0).epsilon(1e-15));
}

TEST_CASE("recomposition and independent recomputation") {
  const TriangleMesh mesh = perturb(make_icosphere(2), {Vec3(0, 0, 1), 0.5, 0.1});
  const Bvh bvh(mesh);
  const std::vector<std::uint32_t> worst_f = {3, 17, 18, 40, 41, 200};
  std::vector<std::uint32_t> worst_v;
  for (auto f : worst_f)
    for (auto v : mesh.face(f)) worst_v.push_back(v);
  std::sort(worst_v.begin(), worst_v.end());
  worst_v.erase(std::unique(worst_v.begin(), worst_v.end()), worst_v.end());
  const auto existing = candidate_ring(Vec3::Zero(), 3.0, 3, 20.0, {300, 300, 150, 150, 300, 300}, "e");
  const NbvScene scene{&bvh, existing, worst_f, worst_v};
  const EnergyConfig config;
  const auto cands = candidate_ring(Vec3::Zero(), 3.2, 12, 35.0, {300, 300, 150, 150, 300, 300}, "c", 7.0);
  for (const Camera& cand : cands) {
    const CandidateEnergy total = total_energy(cand, scene, config);
    REQUIRE(total.per_vertex.size() == worst_v.size());
    double sum = 0.0;
    for (const VertexEnergy& e : total.per_vertex) {
      CHECK(std::abs(combine_terms(e, config) - e.nbv) < 1e-9);
      const std::uint32_t v = e.vertex;
      CHECK(e.occlusion == occlusion_oracle(cand, mesh, v, -10.0));
      CHECK(e.focus == doctest::Approx(focus_oracle(cand, mesh.vertex(v), -10.0)).epsilon(1e-12));
      double psum = 0.0;
      for (const Camera& c : existing) {
        const double bh = (cand.pose.center - c.pose.center).norm() / (cand.pose.center - mesh.vertex(v)).norm();
        psum += bh > 0.33 ? 1.0 : -10.0;
      }
      CHECK(e.parallax_sum == psum);
      CHECK(e.incidence == doctest::Approx(incidence_oracle(cand, mesh, scene.incident_worst_faces(v), config.params)).epsilon(1e-12));
      sum += 0.6 * e.occlusion + 1.6 * e.focus + 2.1 * e.parallax_sum + 0.6 * e.incidence;
    }
    CHECK(std::abs(total.total - sum) < 1e-9);
  }
}

TEST_CASE("worst vertices are a set") {
  const TriangleMesh mesh = make_icosphere(1);
  const Bvh bvh(mesh);
  const std::vector<std::uint32_t> worst_f = {0, 1, 2};
  std::vector<std::uint32_t> worst_v;
  for (auto f : worst_f)
    for (auto v : mesh.face(f)) worst_v.push_back(v);
  std::sort(worst_v.begin(), worst_v.end());
  worst_v.erase(std::unique(worst_v.begin(), worst_v.end()), worst_v.end());
  CHECK(worst_v.size() < 9);
  const NbvScene scene{&bvh, {}, worst_f, worst_v};
  const Camera cand = at("c", {0, 0, 3}, {0, 0, 0});
  const auto total = total_energy(cand, scene, EnergyConfig{});
  CHECK(total.per_vertex.size() == worst_v.size());
  const NbvScene empty{&bvh, {}, worst_f, {}};
  CHECK_THROWS_AS(total_energy(cand, empty, EnergyConfig{}), PreconditionError);
}

TEST_CASE("selection") {
  const TriangleMesh m = TriangleMesh::build(
      {Vec3(-1, -1, 0), Vec3(1, -1, 0), Vec3(0, 1, 0), Vec3(-2, -2, 1), Vec3(2, -2, 1), Vec3(0, 2, 1)},
      {Face{0, 1, 2}, Face{3, 4, 5}});
  const Bvh bvh(m);
  const std::uint32_t worst_f[] = {0};
  const std::uint32_t worst_v[] = {0, 1, 2};
  const NbvScene scene{&bvh, {}, worst_f, worst_v};
  const EnergyConfig config;

  const Camera blocked = at("blocked", {0.2, 0, 3}, {0, 0, 0});
  const Camera clear = at("clear", {0.2, 0, -3}, {0, 0, 0});
  const std::vector<Camera> only = {blocked};
  CHECK(select_best(only, scene, config).winner == "blocked");

  const std::vector<Camera> two = {blocked, clear};
  const Selection s = select_best(two, scene, config);
  const double e_blocked = total_energy(blocked, scene, config).total;
  const double e_clear = total_energy(clear, scene, config).total;
  for (const auto& v : total_energy(blocked, scene, config).per_vertex) CHECK(v.occlusion == -10.0);
  CHECK(e_clear > e_blocked);
  CHECK(s.winner == "clear");
  CHECK(s.ranking[0].rank == 1);
  CHECK(s.ranking[1].input_index == 0);

  Camera copy = clear;
  copy.id = "copy";
  const std::vector<Camera> same = {copy, clear};
  CHECK(select_best(same, scene, config).winner == "copy");
  CHECK_THROWS_AS(select_best(std::vector<Camera>{}, scene, config), PreconditionError);
}

TEST_CASE("scaling the weights keeps the ranking") {
  const TriangleMesh mesh = perturb(make_icosphere(2), {Vec3(1, 0, 0), 0.4, 0.08});
  const Bvh bvh(mesh);
  const std::vector<std::uint32_t> worst_f = {10, 11, 12, 13};
  std::vector<std::uint32_t> worst_v;
  for (auto f : worst_f)
    for (auto v : mesh.face(f)) worst_v.push_back(v);
  std::sort(worst_v.begin(), worst_v.end());
  worst_v.erase(std::unique(worst_v.begin(), worst_v.end()), worst_v.end());
  const auto existing = candidate_ring(Vec3::Zero(), 3.0, 2, 10.0, {300, 300, 150, 150, 300, 300}, "e");
  const auto cands = candidate_ring(Vec3::Zero(), 3.0, 24, 25.0, {300, 300, 150, 150, 300, 300});
  const NbvScene scene{&bvh, existing, worst_f, worst_v};
  EnergyConfig config;
  const Selection base = select_best(cands, scene, config);
  for (double lambda : {0.5, 2.0, 10.0}) {
    EnergyConfig scaled = config;
    scaled.weights = config.weights.scaled(lambda);
    const Selection s = select_best(cands, scene, scaled, 4);
    CHECK(s.winner == base.winner);
    for (std::size_t i = 0; i < cands.size(); ++i) {
      CHECK(s.ranking[i].id == base.ranking[i].id);
      CHECK(s.ranking[i].total == doctest::Approx(lambda * base.ranking[i].total).epsilon(1e-12));
    }
  }
}

TEST_CASE("an extra occluder never raises the energy") {
  std::vector<Vec3> verts = {Vec3(-1, -1, 0), Vec3(1, -1, 0), Vec3(0, 1, 0)};
  std::vector<Face> faces = {Face{0, 1, 2}};
  const TriangleMesh open = TriangleMesh::build(verts, faces);
  // Small blocker over vertex 1 only.
  for (const Vec3& d : {Vec3(0.9, -1.1, 1), Vec3(1.1, -1.1, 1), Vec3(1.0, -0.9, 1)}) verts.push_back(d);
  faces.push_back({3, 4, 5});
  const TriangleMesh closed = TriangleMesh::build(verts, faces);
  const Bvh a(open), b(closed);
  const std::uint32_t worst_f[] = {0};
  const std::uint32_t worst_v[] = {0, 1, 2};
  const Camera cand = at("c", {1, -1, 3}, {0, 0, 0});
  const double before = total_energy(cand, NbvScene{&a, {}, worst_f, worst_v}, EnergyConfig{}).total;
  const auto after = total_energy(cand, NbvScene{&b, {}, worst_f, worst_v}, EnergyConfig{});
  CHECK(after.per_vertex[1].occlusion == -10.0);
  CHECK(after.total <= before);
}

TEST_CASE("energy report JSON") {
  const TriangleMesh m = TriangleMesh::build({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)}, {Face{0, 1, 2}});
  const Bvh bvh(m);
  const std::uint32_t worst_f[] = {0};
  const std::uint32_t worst_v[] = {0, 1, 2};
  const std::vector<Camera> cands = {at("x", {0.3, 0.3, 3}, {0.3, 0.3, 0})};
  const Selection s = select_best(cands, NbvScene{&bvh, {}, worst_f, worst_v}, EnergyConfig{});
  const std::string json = format_energy_json(s, EnergyConfig{});
  CHECK(json.find("\"winner\": \"x\"") != std::string::npos);
  CHECK(json.find("\"Psum\"") != std::string::npos);
  CHECK(json.find("\"incidence_sign\": \"reward\"") != std::string::npos);
}

TEST_CASE("parameter validation") {
  EnergyParams p;
  p.validate();
  p.penalty = 1.0;
  CHECK_THROWS_AS(p.validate(), InputError);
  p = {};
  p.delta = 1.0;
  CHECK_THROWS_AS(p.validate(), InputError);
  p = {};
  p.kappa = 0.0;
  CHECK_THROWS_AS(p.validate(), InputError);
  EnergyWeights w{0.6, -1.0, 2.1, 0.6};
  CHECK_THROWS_AS(w.validate(), InputError);
  CHECK(parse_incidence_sign("penalize") == IncidenceSign::kPenalize);
  CHECK_THROWS_AS(parse_incidence_sign("minus"), InputError);
}
