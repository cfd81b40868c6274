#pragma once

#include "nbv/bvh.hpp"
#include "nbv/camera.hpp"
#include "nbv/config.hpp"
#include "nbv/energy.hpp"
#include "nbv/image.hpp"
#include "nbv/mesh.hpp"
#include "nbv/photoconsistency.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace nbv {

// --- procedural geometry ---------------------------------------------------

/// Subdivided icosahedron projected onto a sphere; 20 * 4^subdivisions faces,
/// outward normals.
TriangleMesh make_icosphere(int subdivisions, double radius = 1.0, const Vec3& center = Vec3::Zero());
/// Square grid in the z = 0 plane centered at the origin, normals along +z.
TriangleMesh make_plane_grid(int cells, double size);
/// Axis-aligned cube centered at the origin, each side split into cells x cells quads.
TriangleMesh make_box(int cells, double size);

// --- scene description -----------------------------------------------------

struct MeshSource {
  enum class Kind { kIcosphere, kPlane, kBox, kFile };
  Kind kind = Kind::kIcosphere;
  int subdivisions = 3;  // icosphere levels, or cells per side for plane/box
  double size = 1.0;     // radius for the sphere, edge length otherwise
  std::filesystem::path file;
};

struct TextureSpec {
  enum class Kind { kChecker, kValueNoise };
  Kind kind = Kind::kValueNoise;
  double scale = 0.08;  // checker cell size or noise lattice spacing, scene units
  std::uint64_t seed = 0;
};

struct LightSpec {
  Vec3 direction = Vec3(0.3, 0.2, 1.0).normalized();  // toward the light
  double ambient = 0.3;
};

/// Smooth bump along vertex normals: amplitude * (1 + cos(pi d / radius)) / 2
/// for vertices closer than radius to the center.
struct Perturbation {
  Vec3 center = Vec3::Zero();
  double radius = 0.1;
  double amplitude = 0.0;
};

struct RingSpec {
  Vec3 center = Vec3::Zero();
  double radius = 3.0;
  int count = 48;
  double elevation_deg = 0.0;
  double azimuth_offset_deg = 0.0;
  /// When set, odd cameras use -elevation_deg (a zig-zag ring).
  bool alternate_elevation = false;
};

struct ImageSpec {
  int width = 256;
  int height = 256;
  double fx = 400.0;
  double fy = 400.0;
  int supersample = 3;

  Intrinsics intrinsics() const { return {fx, fy, width / 2.0, height / 2.0, width, height}; }
};

struct SceneSpec {
  MeshSource mesh;
  TextureSpec texture;
  LightSpec light;
  std::vector<Perturbation> perturbations;
  ImageSpec image;
  RingSpec candidates;
  /// Rings of cameras that bootstrap the loop. When empty, initial views are
  /// taken evenly from the candidate ring.
  std::vector<RingSpec> initial;

  void validate() const;
};

SceneSpec parse_scene_json(const std::string& text, const std::filesystem::path& base_dir = {});
SceneSpec load_scene(const std::filesystem::path& path);

// --- operations ------------------------------------------------------------

/// Ground-truth surface of the scene (no perturbation).
TriangleMesh scene_mesh(const SceneSpec& scene);

/// Applies `p` to every vertex within its radius; other vertices are copied bit-for-bit.
TriangleMesh perturb(const TriangleMesh& mesh, const Perturbation& p);
/// The "reconstruction": the ground truth with every perturbation applied.
TriangleMesh reconstructed_mesh(const SceneSpec& scene, const TriangleMesh& truth);

/// Solid texture intensity in [0.1, 0.9] at a world point.
double texture_value(const TextureSpec& texture, const Vec3& p);

/// Deterministic ray-cast render of `bvh`'s mesh: texture times
/// (ambient + (1 - ambient) max(0, n.l)), background 0, box-filtered over
/// supersample x supersample stratified rays per pixel, quantized to 8 bits.
GrayImage render(const Bvh& bvh, const TextureSpec& texture, const LightSpec& light, const Camera& camera,
                 unsigned threads = 1, int supersample = 1);
GrayImage render(const SceneSpec& scene, const Camera& camera, unsigned threads = 1);

/// `count` look-at cameras evenly spaced in azimuth (degrees from +x toward
/// +y) at the given elevation, all facing `center`. Ids are prefix + index.
std::vector<Camera> candidate_ring(const Vec3& center, double radius, int count, double elevation_deg,
                                   const Intrinsics& intrinsics, const std::string& id_prefix = "cand_",
                                   double azimuth_offset_deg = 0.0, bool alternate_elevation = false);
std::vector<Camera> candidate_ring(const RingSpec& ring, const Intrinsics& intrinsics, const std::string& id_prefix);

struct IterationRecord {
  int iteration = 0;
  std::size_t views = 0;  // views available when the selection was made
  std::string winner;
  double energy = 0.0;
  std::optional<double> mean_pri;  // over defined facets; empty when none is defined
  std::optional<double> min_pri;
  std::size_t defined_facets = 0;
  std::vector<std::uint32_t> worst_facets;
  std::vector<Vec3> worst_facet_centers;
  /// Mean PRI of the defined members of the first iteration's worst facets,
  /// before and after the winner of this iteration was added.
  std::optional<double> tracked_mean_pri_before;
  std::optional<double> tracked_mean_pri_after;
};

struct ClosedLoopOptions {
  int initial_views = 3;
  int iterations = 1;
};

struct ClosedLoopResult {
  std::vector<IterationRecord> log;
  bool pool_exhausted = false;
  TriangleMesh truth;
  TriangleMesh reconstruction;
  std::vector<View> views;  // rendered views of the ground truth, in acquisition order
  std::vector<Camera> candidates;  // the full candidate ring
  PriReport final_report;
};

/// Bootstraps from the initial views, then repeats: PRI on the reconstruction
/// -> worst facets -> best remaining candidate -> render it and add it.
/// Throws InputError if iterations < 1.
ClosedLoopResult closed_loop(const SceneSpec& scene, const ClosedLoopOptions& options, const RunConfig& config);

std::string format_iteration_json(const IterationRecord& record);

/// Texture seed actually used for a run: the scene's seed mixed with the run seed.
std::uint64_t effective_texture_seed(const SceneSpec& scene, std::uint64_t run_seed);

}  // namespace nbv
