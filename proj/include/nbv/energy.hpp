#pragma once

#include "nbv/bvh.hpp"
#include "nbv/camera.hpp"
#include "nbv/photoconsistency.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nbv {

struct EnergyParams {
  double penalty = -10.0;     // substituted when a hard requirement fails
  double delta = 0.33;        // base-to-height threshold
  double mu_angle_deg = 55.0; // preferred incidence angle, middle of 40..70 deg
  double kappa = 8.0;         // von Mises concentration

  /// Throws InputError unless penalty < 0, 0 < delta < 1, 0 < mu < 90, kappa > 0.
  void validate() const;
};

struct EnergyWeights {
  double mu1 = 0.6;  // occlusion
  double mu2 = 1.6;  // focus
  double mu3 = 2.1;  // parallax
  double mu4 = 0.6;  // incidence

  void validate() const;
  EnergyWeights scaled(double lambda) const { return {mu1 * lambda, mu2 * lambda, mu3 * lambda, mu4 * lambda}; }
};

/// How the incidence term enters the per-vertex score. kReward adds
/// mu4 * I (higher at the preferred angle); kPenalize subtracts it.
enum class IncidenceSign { kReward, kPenalize };

std::string_view to_string(IncidenceSign sign);
IncidenceSign parse_incidence_sign(std::string_view name);

struct EnergyConfig {
  EnergyWeights weights;
  EnergyParams params;
  IncidenceSign incidence_sign = IncidenceSign::kReward;
};

/// What the energy is evaluated against: the current surface, the cameras
/// already taken, and the worst facets selected from the PRI report.
struct NbvScene {
  const Bvh* bvh = nullptr;
  std::span<const Camera> existing;
  std::span<const std::uint32_t> worst_facets;
  std::span<const std::uint32_t> worst_vertices;

  const TriangleMesh& mesh() const { return bvh->mesh(); }
  /// Worst facets that contain vertex v, ascending.
  std::vector<std::uint32_t> incident_worst_faces(std::uint32_t v) const;
};

/// 1 when the vertex lies in front of the camera with a clear line of sight
/// (faces incident to v ignored), otherwise the penalty.
double occlusion_term(const Camera& candidate, const Bvh& bvh, std::uint32_t v, const EnergyParams& params);

/// Gaussian log-weight of the projection around the principal point with
/// sigma = (W/3, H/3); the penalty if v does not project inside the image.
double focus_term(const Camera& candidate, const Vec3& v, const EnergyParams& params);

/// 1 if baseline / distance-to-v exceeds delta, otherwise the penalty.
/// Throws PreconditionError when the candidate sits on v.
double parallax_term(const Camera& candidate, const Camera& other, const Vec3& v, const EnergyParams& params);

/// Modified Bessel function of the first kind, order zero, by power series.
double bessel_i0(double kappa);

/// log of the von Mises density at angle x (radians) with mean mu.
double von_mises_log_density(double x, double mu, double kappa);

/// Angle (radians) between the face normal and the ray from the face
/// barycenter to `eye`. Throws PreconditionError if eye is the barycenter.
double incidence_angle(const TriangleMesh& mesh, std::size_t face, const Vec3& eye);

/// Mean von Mises log-density of the incidence angle over `faces`.
double incidence_term(const Camera& candidate, const TriangleMesh& mesh, std::span<const std::uint32_t> faces,
                      const EnergyParams& params);

struct VertexEnergy {
  std::uint32_t vertex = 0;
  double occlusion = 0.0;
  double focus = 0.0;
  double parallax_sum = 0.0;
  double incidence = 0.0;
  double nbv = 0.0;
};

/// Weighted combination of the four stored terms.
double combine_terms(const VertexEnergy& terms, const EnergyConfig& config);

VertexEnergy nbv_score(const Camera& candidate, const NbvScene& scene, std::uint32_t v, const EnergyConfig& config);

struct CandidateEnergy {
  std::string id;
  std::size_t input_index = 0;
  std::size_t rank = 0;  // 1 = best
  double total = 0.0;
  std::vector<VertexEnergy> per_vertex;
};

/// Sum of nbv_score over the worst vertices. Throws PreconditionError when
/// there are none.
CandidateEnergy total_energy(const Camera& candidate, const NbvScene& scene, const EnergyConfig& config);

struct Selection {
  std::string winner;
  std::vector<CandidateEnergy> ranking;  // best first
  std::size_t existing_cameras = 0;
};

/// Scores every candidate and returns them by descending energy; equal
/// energies keep input order. Throws PreconditionError on an empty list.
Selection select_best(std::span<const Camera> candidates, const NbvScene& scene, const EnergyConfig& config,
                      unsigned threads = 1);

/// { "winner", "ranking": [ {"id","E","rank","per_vertex":[{"vertex","O","F","Psum","I","nbv"}]} ],
///   "weights", "params", "incidence_sign", "existing_cameras" }
std::string format_energy_json(const Selection& selection, const EnergyConfig& config);

}  // namespace nbv
