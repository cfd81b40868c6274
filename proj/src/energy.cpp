#include "nbv/energy.hpp"

#include "nbv/error.hpp"
#include "nbv/parallel.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace nbv {

void EnergyParams::validate() const {
  if (!(penalty < 0.0)) throw InputError(fmt::format("penalty must be negative (got {})", penalty));
  if (!(delta > 0.0 && delta < 1.0)) throw InputError(fmt::format("delta must lie in (0, 1) (got {})", delta));
  if (!(mu_angle_deg > 0.0 && mu_angle_deg < 90.0)) {
    throw InputError(fmt::format("mu_angle_deg must lie in (0, 90) (got {})", mu_angle_deg));
  }
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw InputError(fmt::format("kappa must be positive (got {})", kappa));
}

void EnergyWeights::validate() const {
  for (double w : {mu1, mu2, mu3, mu4}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InputError(fmt::format("energy weights must be non-negative (got {})", w));
  }
}

std::string_view to_string(IncidenceSign sign) {
  return sign == IncidenceSign::kReward ? "reward" : "penalize";
}

IncidenceSign parse_incidence_sign(std::string_view name) {
  if (name == "reward") return IncidenceSign::kReward;
  if (name == "penalize") return IncidenceSign::kPenalize;
  throw InputError(fmt::format("unknown incidence sign '{}' (expected reward or penalize)", name));
}

std::vector<std::uint32_t> NbvScene::incident_worst_faces(std::uint32_t v) const {
  std::vector<std::uint32_t> out;
  for (auto f : mesh().incident_faces(v)) {
    if (std::find(worst_facets.begin(), worst_facets.end(), f) != worst_facets.end()) out.push_back(f);
  }
  return out;
}

double occlusion_term(const Camera& candidate, const Bvh& bvh, std::uint32_t v, const EnergyParams& params) {
  const Vec3& point = bvh.mesh().vertex(v);
  if (!project(candidate, point)) return params.penalty;
  if (segment_occluded(bvh, candidate.pose.center, point, bvh.mesh().incident_faces(v))) return params.penalty;
  return 1.0;
}

double focus_term(const Camera& candidate, const Vec3& v, const EnergyParams& params) {
  const auto p = project(candidate, v);
  const auto& k = candidate.intrinsics;
  if (!p || !in_image(k, *p)) return params.penalty;
  const double sx = k.width / 3.0;
  const double sy = k.height / 3.0;
  const double du = p->u - k.cx;
  const double dv = p->v - k.cy;
  return -(du * du) / (2.0 * sx * sx) - (dv * dv) / (2.0 * sy * sy);
}

double parallax_term(const Camera& candidate, const Camera& other, const Vec3& v, const EnergyParams& params) {
  const double height = (candidate.pose.center - v).norm();
  if (!(height > 0.0)) {
    throw PreconditionError(fmt::format("candidate '{}' coincides with the surface point", candidate.id));
  }
  const double base = (candidate.pose.center - other.pose.center).norm();
  return base / height > params.delta ? 1.0 : params.penalty;
}

double bessel_i0(double kappa) {
  if (!(kappa >= 0.0)) throw PreconditionError("bessel_i0 requires kappa >= 0");
  const double q = 0.25 * kappa * kappa;
  double term = 1.0;
  double sum = 1.0;
  for (int m = 1; m < 100000; ++m) {
    term *= q / (static_cast<double>(m) * m);
    sum += term;
    // Terms grow until m ~ kappa/2, then decay geometrically.
    if (m > kappa / 2.0 && term < 1e-17 * sum) break;
  }
  return sum;
}

double von_mises_log_density(double x, double mu, double kappa) {
  return kappa * std::cos(x - mu) - std::log(2.0 * kPi * bessel_i0(kappa));
}

double incidence_angle(const TriangleMesh& mesh, std::size_t face, const Vec3& eye) {
  const Vec3 ray = eye - mesh.face_barycenter(face);
  const double len = ray.norm();
  if (!(len > 0.0)) throw PreconditionError(fmt::format("camera sits on the barycenter of face {}", face));
  return std::acos(std::clamp(mesh.face_normal(face).dot(ray / len), -1.0, 1.0));
}

double incidence_term(const Camera& candidate, const TriangleMesh& mesh, std::span<const std::uint32_t> faces,
                      const EnergyParams& params) {
  if (faces.empty()) throw PreconditionError("incidence_term needs at least one facet");
  const double mu = deg_to_rad(params.mu_angle_deg);
  const double log_norm = std::log(2.0 * kPi * bessel_i0(params.kappa));
  double sum = 0.0;
  for (auto f : faces) {
    sum += params.kappa * std::cos(incidence_angle(mesh, f, candidate.pose.center) - mu) - log_norm;
  }
  return sum / static_cast<double>(faces.size());
}

double combine_terms(const VertexEnergy& terms, const EnergyConfig& config) {
  const auto& w = config.weights;
  const double sign = config.incidence_sign == IncidenceSign::kReward ? 1.0 : -1.0;
  return w.mu1 * terms.occlusion + w.mu2 * terms.focus + w.mu3 * terms.parallax_sum + sign * w.mu4 * terms.incidence;
}

VertexEnergy nbv_score(const Camera& candidate, const NbvScene& scene, std::uint32_t v, const EnergyConfig& config) {
  const TriangleMesh& mesh = scene.mesh();
  const Vec3& point = mesh.vertex(v);
  const auto faces = scene.incident_worst_faces(v);
  if (faces.empty()) throw PreconditionError(fmt::format("vertex {} is not on a worst facet", v));

  VertexEnergy e;
  e.vertex = v;
  e.occlusion = occlusion_term(candidate, *scene.bvh, v, config.params);
  e.focus = focus_term(candidate, point, config.params);
  for (const Camera& other : scene.existing) e.parallax_sum += parallax_term(candidate, other, point, config.params);
  e.incidence = incidence_term(candidate, mesh, faces, config.params);
  e.nbv = combine_terms(e, config);
  return e;
}

CandidateEnergy total_energy(const Camera& candidate, const NbvScene& scene, const EnergyConfig& config) {
  if (scene.worst_vertices.empty()) throw PreconditionError("the worst-vertex set is empty");
  CandidateEnergy out;
  out.id = candidate.id;
  out.per_vertex.reserve(scene.worst_vertices.size());
  for (auto v : scene.worst_vertices) {
    out.per_vertex.push_back(nbv_score(candidate, scene, v, config));
    out.total += out.per_vertex.back().nbv;
  }
  return out;
}

Selection select_best(std::span<const Camera> candidates, const NbvScene& scene, const EnergyConfig& config,
                      unsigned threads) {
  if (candidates.empty()) throw PreconditionError("no candidate poses to choose from");
  std::vector<CandidateEnergy> scored(candidates.size());
  parallel_for(candidates.size(), threads, [&](std::size_t i) {
    scored[i] = total_energy(candidates[i], scene, config);
    scored[i].input_index = i;
  });
  std::stable_sort(scored.begin(), scored.end(),
                   [](const CandidateEnergy& a, const CandidateEnergy& b) { return a.total > b.total; });
  for (std::size_t r = 0; r < scored.size(); ++r) scored[r].rank = r + 1;
  Selection out;
  out.winner = scored.front().id;
  out.ranking = std::move(scored);
  out.existing_cameras = scene.existing.size();
  return out;
}

std::string format_energy_json(const Selection& selection, const EnergyConfig& config) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["winner"] = selection.winner;
  ordered_json ranking = ordered_json::array();
  for (const auto& c : selection.ranking) {
    ordered_json entry;
    entry["id"] = c.id;
    entry["E"] = c.total;
    entry["rank"] = c.rank;
    ordered_json per_vertex = ordered_json::array();
    for (const auto& v : c.per_vertex) {
      per_vertex.push_back(ordered_json{{"vertex", v.vertex}, {"O", v.occlusion}, {"F", v.focus},
                                        {"Psum", v.parallax_sum}, {"I", v.incidence}, {"nbv", v.nbv}});
    }
    entry["per_vertex"] = std::move(per_vertex);
    ranking.push_back(std::move(entry));
  }
  doc["ranking"] = std::move(ranking);
  const auto& w = config.weights;
  doc["weights"] = ordered_json{{"mu1", w.mu1}, {"mu2", w.mu2}, {"mu3", w.mu3}, {"mu4", w.mu4}};
  const auto& p = config.params;
  doc["params"] = ordered_json{
      {"penalty", p.penalty}, {"delta", p.delta}, {"mu_angle_deg", p.mu_angle_deg}, {"kappa", p.kappa}};
  doc["incidence_sign"] = to_string(config.incidence_sign);
  doc["existing_cameras"] = selection.existing_cameras;
  return doc.dump(2) + "\n";
}

}  // namespace nbv
