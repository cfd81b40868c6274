#include "nbv/simulator.hpp"

#include "nbv/error.hpp"
#include "nbv/parallel.hpp"

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <cmath>
#include <fstream>
#include <sstream>

namespace nbv {

using nlohmann::json;

// --- texture ---------------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double lattice_value(std::int64_t ix, std::int64_t iy, std::int64_t iz, std::uint64_t seed) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(ix));
  h = splitmix64(h ^ static_cast<std::uint64_t>(iy));
  h = splitmix64(h ^ static_cast<std::uint64_t>(iz));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(const Vec3& p, std::uint64_t seed) {
  const double fx = std::floor(p.x()), fy = std::floor(p.y()), fz = std::floor(p.z());
  const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy), iz = static_cast<std::int64_t>(fz);
  const double tx = smooth(p.x() - fx), ty = smooth(p.y() - fy), tz = smooth(p.z() - fz);
  double c[2][2][2];
  for (int dz = 0; dz < 2; ++dz) {
    for (int dy = 0; dy < 2; ++dy) {
      for (int dx = 0; dx < 2; ++dx) c[dz][dy][dx] = lattice_value(ix + dx, iy + dy, iz + dz, seed);
    }
  }
  auto lerp = [](double a, double b, double t) { return a + (b - a) * t; };
  const double y0 = lerp(lerp(c[0][0][0], c[0][0][1], tx), lerp(c[0][1][0], c[0][1][1], tx), ty);
  const double y1 = lerp(lerp(c[1][0][0], c[1][0][1], tx), lerp(c[1][1][0], c[1][1][1], tx), ty);
  return lerp(y0, y1, tz);
}

}  // namespace

double texture_value(const TextureSpec& texture, const Vec3& p) {
  const Vec3 q = p / texture.scale;
  if (texture.kind == TextureSpec::Kind::kChecker) {
    const auto parity = static_cast<std::int64_t>(std::floor(q.x()) + std::floor(q.y()) + std::floor(q.z()));
    return (parity % 2 == 0) ? 0.8 : 0.2;
  }
  // Two octaves; the second is decorrelated through the seed.
  const double n = 0.7 * value_noise(q, texture.seed) + 0.3 * value_noise(2.0 * q, texture.seed ^ 0x5bd1e995ULL);
  return 0.1 + 0.8 * n;
}

// --- rendering -------------------------------------------------------------

GrayImage render(const Bvh& bvh, const TextureSpec& texture, const LightSpec& light, const Camera& camera,
                 unsigned threads, int supersample) {
  if (supersample < 1) throw InputError("supersample must be >= 1");
  const auto& k = camera.intrinsics;
  const TriangleMesh& mesh = bvh.mesh();
  const Mat3 to_world = camera.pose.rotation.transpose();
  const Vec3 l = light.direction.normalized();
  const double step = 1.0 / supersample;
  const double norm = 1.0 / (supersample * supersample);
  GrayImage image(k.width, k.height, 0.0);
  parallel_for(static_cast<std::size_t>(k.height), threads, [&](std::size_t row) {
    for (int col = 0; col < k.width; ++col) {
      double acc = 0.0;
      for (int sy = 0; sy < supersample; ++sy) {
        const double v = static_cast<double>(row) + (sy + 0.5) * step;
        for (int sx = 0; sx < supersample; ++sx) {
          const double u = col + (sx + 0.5) * step;
          const Vec3 dir = to_world * Vec3((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
          const auto hit = bvh.first_hit(camera.pose.center, dir, std::numeric_limits<double>::infinity());
          if (!hit) continue;
          Vec3 n = mesh.face_normal(hit->face_index);
          if (n.dot(dir) > 0.0) n = -n;
          const double shade = light.ambient + (1.0 - light.ambient) * std::max(0.0, n.dot(l));
          acc += std::clamp(texture_value(texture, hit->point) * shade, 0.0, 1.0);
        }
      }
      image.at(col, static_cast<int>(row)) = acc * norm;
    }
  });
  return quantize8(std::move(image));
}

GrayImage render(const SceneSpec& scene, const Camera& camera, unsigned threads) {
  const TriangleMesh mesh = scene_mesh(scene);
  const Bvh bvh(mesh);
  return render(bvh, scene.texture, scene.light, camera, threads, scene.image.supersample);
}

// --- geometry --------------------------------------------------------------

TriangleMesh scene_mesh(const SceneSpec& scene) {
  switch (scene.mesh.kind) {
    case MeshSource::Kind::kIcosphere: return make_icosphere(scene.mesh.subdivisions, scene.mesh.size);
    case MeshSource::Kind::kPlane: return make_plane_grid(scene.mesh.subdivisions, scene.mesh.size);
    case MeshSource::Kind::kBox: return make_box(scene.mesh.subdivisions, scene.mesh.size);
    case MeshSource::Kind::kFile: {
      auto loaded = load_mesh(scene.mesh.file);
      if (loaded.dropped_faces > 0) spdlog::warn("dropped {} degenerate faces from {}", loaded.dropped_faces, scene.mesh.file.string());
      return std::move(loaded.mesh);
    }
  }
  throw InputError("unknown mesh source");
}

TriangleMesh perturb(const TriangleMesh& mesh, const Perturbation& p) {
  if (!(p.radius > 0.0)) throw InputError("perturbation radius must be positive");
  std::vector<Vec3> verts = mesh.vertices();
  const std::vector<Vec3> normals = mesh.vertex_normals();
  for (std::size_t i = 0; i < verts.size(); ++i) {
    const double d = (mesh.vertex(i) - p.center).norm();
    if (!(d < p.radius)) continue;
    const double falloff = 0.5 * (1.0 + std::cos(kPi * d / p.radius));
    verts[i] = mesh.vertex(i) + normals[i] * (p.amplitude * falloff);
  }
  return TriangleMesh::build(std::move(verts), mesh.faces());
}

TriangleMesh reconstructed_mesh(const SceneSpec& scene, const TriangleMesh& truth) {
  TriangleMesh out = truth;
  for (const auto& p : scene.perturbations) out = perturb(out, p);
  return out;
}

std::vector<Camera> candidate_ring(const Vec3& center, double radius, int count, double elevation_deg,
                                   const Intrinsics& intrinsics, const std::string& id_prefix,
                                   double azimuth_offset_deg, bool alternate_elevation) {
  if (count < 1) throw InputError("ring count must be >= 1");
  if (!(radius > 0.0)) throw InputError("ring radius must be positive");
  intrinsics.validate();
  std::vector<Camera> cams;
  cams.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double az = deg_to_rad(azimuth_offset_deg + 360.0 * i / count);
    const double el = deg_to_rad(alternate_elevation && (i % 2 == 1) ? -elevation_deg : elevation_deg);
    const Vec3 eye = center + radius * Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
    Camera cam;
    cam.id = fmt::format("{}{:03d}", id_prefix, i);
    cam.intrinsics = intrinsics;
    cam.pose = look_at(eye, center);
    cams.push_back(std::move(cam));
  }
  return cams;
}

std::vector<Camera> candidate_ring(const RingSpec& ring, const Intrinsics& intrinsics, const std::string& id_prefix) {
  return candidate_ring(ring.center, ring.radius, ring.count, ring.elevation_deg, intrinsics, id_prefix,
                        ring.azimuth_offset_deg, ring.alternate_elevation);
}

std::uint64_t effective_texture_seed(const SceneSpec& scene, std::uint64_t run_seed) {
  return run_seed == 0 ? scene.texture.seed : splitmix64(scene.texture.seed ^ splitmix64(run_seed));
}

// --- closed loop -----------------------------------------------------------

namespace {

std::optional<double> tracked_mean(const std::vector<FacetPri>& facets, const std::vector<std::uint32_t>& tracked) {
  double sum = 0.0;
  std::size_t n = 0;
  for (auto f : tracked) {
    if (!facets[f].defined) continue;
    sum += facets[f].value;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace

ClosedLoopResult closed_loop(const SceneSpec& scene, const ClosedLoopOptions& options, const RunConfig& config) {
  if (options.iterations < 1) throw InputError("iterations must be >= 1");
  if (options.initial_views < 1 && scene.initial.empty()) throw InputError("initial_views must be >= 1");
  scene.validate();
  config.validate();

  ClosedLoopResult result;
  result.truth = scene_mesh(scene);
  result.reconstruction = reconstructed_mesh(scene, result.truth);
  const Bvh truth_bvh(result.truth);
  const Bvh recon_bvh(result.reconstruction);
  TextureSpec texture = scene.texture;
  texture.seed = effective_texture_seed(scene, config.seed);
  const Intrinsics intrinsics = scene.image.intrinsics();
  const unsigned threads = config.thread_count();

  result.candidates = candidate_ring(scene.candidates, intrinsics, "cand_");
  std::vector<bool> taken(result.candidates.size(), false);

  std::vector<Camera> initial;
  if (!scene.initial.empty()) {
    for (std::size_t r = 0; r < scene.initial.size(); ++r) {
      const auto ring = candidate_ring(scene.initial[r], intrinsics, fmt::format("init{}_", r));
      initial.insert(initial.end(), ring.begin(), ring.end());
    }
  } else {
    const auto count = static_cast<std::size_t>(options.initial_views);
    if (count > result.candidates.size()) throw InputError("more initial views than ring candidates");
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t idx = i * result.candidates.size() / count;
      taken[idx] = true;
      initial.push_back(result.candidates[idx]);
    }
  }

  PriEstimator estimator(recon_bvh, config.pri_options());
  std::vector<View> initial_views;
  for (const Camera& cam : initial) initial_views.push_back({cam, render(truth_bvh, texture, scene.light, cam, threads, scene.image.supersample)});
  estimator.add_views(initial_views);

  std::vector<std::uint32_t> tracked;
  for (int it = 1; it <= options.iterations; ++it) {
    const PriReport report = estimator.report();
    if (it == 1) tracked = report.worst_facets;

    std::vector<Camera> remaining;
    for (std::size_t i = 0; i < result.candidates.size(); ++i) {
      if (!taken[i]) remaining.push_back(result.candidates[i]);
    }
    if (remaining.empty()) {
      spdlog::info("candidate pool exhausted after {} iterations", it - 1);
      result.pool_exhausted = true;
      break;
    }

    std::vector<Camera> existing;
    for (const View& v : estimator.views()) existing.push_back(v.camera);
    const NbvScene nbv_scene{&recon_bvh, existing, report.worst_facets, report.worst_vertices};
    const Selection selection = select_best(remaining, nbv_scene, config.energy, threads);

    IterationRecord rec;
    rec.iteration = it;
    rec.views = existing.size();
    rec.winner = selection.winner;
    rec.energy = selection.ranking.front().total;
    double sum = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& f : report.facets) {
      if (!f.defined) continue;
      sum += f.value;
      lo = std::min(lo, f.value);
      ++rec.defined_facets;
    }
    if (rec.defined_facets > 0) {
      rec.mean_pri = sum / static_cast<double>(rec.defined_facets);
      rec.min_pri = lo;
    }
    rec.worst_facets = report.worst_facets;
    for (auto f : report.worst_facets) rec.worst_facet_centers.push_back(result.reconstruction.face_barycenter(f));
    rec.tracked_mean_pri_before = tracked_mean(report.facets, tracked);

    const std::size_t winner_index = selection.ranking.front().input_index;
    const Camera& winner = remaining[winner_index];
    for (std::size_t i = 0; i < result.candidates.size(); ++i) {
      if (result.candidates[i].id == winner.id) taken[i] = true;
    }
    const View added{winner, render(truth_bvh, texture, scene.light, winner, threads, scene.image.supersample)};
    estimator.add_views(std::span<const View>(&added, 1));
    rec.tracked_mean_pri_after = tracked_mean(estimator.facets(), tracked);
    spdlog::info("iteration {}: winner {} E={:.4f} defined facets {}", it, rec.winner, rec.energy, rec.defined_facets);
    result.log.push_back(std::move(rec));
  }
  result.views = estimator.views();
  result.final_report = estimator.report();
  return result;
}

namespace {

nlohmann::ordered_json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::string format_iteration_json(const IterationRecord& record) {
  nlohmann::ordered_json doc;
  doc["iteration"] = record.iteration;
  doc["views"] = record.views;
  doc["winner"] = record.winner;
  doc["E"] = record.energy;
  doc["mean_pri"] = optional_number(record.mean_pri);
  doc["min_pri"] = optional_number(record.min_pri);
  doc["defined_facets"] = record.defined_facets;
  doc["worst_facets"] = record.worst_facets;
  nlohmann::ordered_json centers = nlohmann::ordered_json::array();
  for (const Vec3& c : record.worst_facet_centers) centers.push_back({c.x(), c.y(), c.z()});
  doc["worst_facet_centers"] = std::move(centers);
  doc["tracked_mean_pri_before"] = optional_number(record.tracked_mean_pri_before);
  doc["tracked_mean_pri_after"] = optional_number(record.tracked_mean_pri_after);
  return doc.dump();
}

// --- scene files -----------------------------------------------------------

void SceneSpec::validate() const {
  if (!(texture.scale > 0.0)) throw InputError("texture scale must be positive");
  if (!(light.ambient >= 0.0 && light.ambient <= 1.0)) throw InputError("ambient must lie in [0, 1]");
  if (!(light.direction.norm() > 0.0)) throw InputError("light direction must be non-zero");
  for (const auto& p : perturbations) {
    if (!(p.radius > 0.0)) throw InputError("perturbation radius must be positive");
  }
  image.intrinsics().validate();
  if (candidates.count < 1 || !(candidates.radius > 0.0)) throw InputError("candidate ring needs count >= 1 and radius > 0");
  for (const auto& ring : initial) {
    if (ring.count < 1 || !(ring.radius > 0.0)) throw InputError("initial ring needs count >= 1 and radius > 0");
  }
}

namespace {

Vec3 vec3_field(const json& obj, const char* key, const Vec3& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number()) {
    throw FormatError(fmt::format("scene: '{}' must be an array of 3 numbers", key));
  }
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

template <typename T>
T field(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw FormatError(fmt::format("scene: field '{}' has the wrong type", key));
  }
}

RingSpec parse_ring(const json& r) {
  if (!r.is_object()) throw FormatError("scene: ring must be an object");
  RingSpec ring;
  ring.center = vec3_field(r, "center", ring.center);
  ring.radius = field(r, "radius", ring.radius);
  ring.count = field(r, "count", ring.count);
  ring.elevation_deg = field(r, "elevation_deg", ring.elevation_deg);
  ring.azimuth_offset_deg = field(r, "azimuth_offset_deg", ring.azimuth_offset_deg);
  ring.alternate_elevation = field(r, "alternate_elevation", ring.alternate_elevation);
  return ring;
}

}  // namespace

SceneSpec parse_scene_json(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(fmt::format("scene: {}", e.what()));
  }
  if (!doc.is_object()) throw FormatError("scene: expected a JSON object");
  SceneSpec scene;
  if (doc.contains("mesh")) {
    const json& m = doc["mesh"];
    if (m.contains("file")) {
      scene.mesh.kind = MeshSource::Kind::kFile;
      std::filesystem::path p = field<std::string>(m, "file", "");
      scene.mesh.file = p.is_relative() ? base_dir / p : p;
    } else {
      const std::string type = field<std::string>(m, "type", "icosphere");
      if (type == "icosphere") {
        scene.mesh.kind = MeshSource::Kind::kIcosphere;
        scene.mesh.subdivisions = field(m, "subdivisions", 3);
        scene.mesh.size = field(m, "radius", 1.0);
      } else if (type == "plane" || type == "box") {
        scene.mesh.kind = type == "plane" ? MeshSource::Kind::kPlane : MeshSource::Kind::kBox;
        scene.mesh.subdivisions = field(m, "cells", 16);
        scene.mesh.size = field(m, "size", 2.0);
      } else {
        throw FormatError(fmt::format("scene: unknown mesh type '{}'", type));
      }
    }
  }
  if (doc.contains("texture")) {
    const json& t = doc["texture"];
    const std::string type = field<std::string>(t, "type", "value_noise");
    if (type == "checker") {
      scene.texture.kind = TextureSpec::Kind::kChecker;
    } else if (type == "value_noise") {
      scene.texture.kind = TextureSpec::Kind::kValueNoise;
    } else {
      throw FormatError(fmt::format("scene: unknown texture type '{}'", type));
    }
    scene.texture.scale = field(t, "scale", scene.texture.scale);
    scene.texture.seed = field<std::uint64_t>(t, "seed", scene.texture.seed);
  }
  if (doc.contains("light")) {
    const json& l = doc["light"];
    scene.light.direction = vec3_field(l, "direction", scene.light.direction);
    if (scene.light.direction.norm() > 0.0) scene.light.direction.normalize();
    scene.light.ambient = field(l, "ambient", scene.light.ambient);
  }
  if (doc.contains("perturbations")) {
    for (const json& p : doc["perturbations"]) {
      Perturbation pert;
      pert.center = vec3_field(p, "center", pert.center);
      pert.radius = field(p, "radius", pert.radius);
      pert.amplitude = field(p, "amplitude", pert.amplitude);
      scene.perturbations.push_back(pert);
    }
  }
  if (doc.contains("image")) {
    const json& im = doc["image"];
    scene.image.width = field(im, "width", scene.image.width);
    scene.image.height = field(im, "height", scene.image.height);
    scene.image.fx = field(im, "fx", scene.image.fx);
    scene.image.fy = field(im, "fy", scene.image.fy);
    scene.image.supersample = field(im, "supersample", scene.image.supersample);
  }
  if (doc.contains("candidates")) scene.candidates = parse_ring(doc["candidates"]);
  if (doc.contains("initial")) {
    const json& init = doc["initial"];
    if (init.is_array()) {
      for (const json& r : init) scene.initial.push_back(parse_ring(r));
    } else {
      scene.initial.push_back(parse_ring(init));
    }
  }
  scene.validate();
  return scene;
}

SceneSpec load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open scene '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_scene_json(ss.str(), path.parent_path());
  } catch (const InputError& e) {
    throw InputError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace nbv
