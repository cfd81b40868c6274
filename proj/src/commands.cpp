#include "nbv/commands.hpp"

#include "nbv/error.hpp"
#include "nbv/image.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <set>

namespace nbv {

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw InputError(fmt::format("failed writing '{}'", path.string()));
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError(fmt::format("cannot create directory '{}': {}", dir.string(), ec.message()));
}

TriangleMesh load_checked_mesh(const fs::path& path) {
  auto loaded = load_mesh(path);
  if (loaded.dropped_faces > 0) spdlog::warn("{}: dropped {} degenerate faces", path.string(), loaded.dropped_faces);
  return std::move(loaded.mesh);
}

PriReport evaluate_pri(const Bvh& bvh, std::span<const View> views, const RunConfig& config) {
  const PriReport report = worst_facets(bvh, views, config.pri_options());
  const auto defined = std::count_if(report.facets.begin(), report.facets.end(), [](const FacetPri& f) { return f.defined; });
  if (defined == 0) spdlog::warn("no facet is seen by two usable views; every PRI is undefined");
  spdlog::info("PRI defined for {} of {} facets", defined, report.facets.size());
  return report;
}

void write_pri_outputs(const TriangleMesh& mesh, const PriReport& report, const fs::path& out_dir) {
  write_text(out_dir / "pri.json", format_pri_json(report));
  const auto colors = pri_colors(report);
  write_text(out_dir / "pri_colored.ply", format_colored_ply(mesh, colors));
}

}  // namespace

GrayImage load_camera_image(const Camera& camera, const fs::path& dir) {
  for (const char* ext : {".pgm", ".ppm", ".png"}) {
    const fs::path path = dir / (camera.id + ext);
    if (!fs::exists(path)) continue;
    GrayImage image = read_image(path);
    if (image.width() != camera.intrinsics.width || image.height() != camera.intrinsics.height) {
      throw InputError(fmt::format("camera '{}': image '{}' is {}x{}, intrinsics say {}x{}", camera.id, path.string(),
                                   image.width(), image.height(), camera.intrinsics.width, camera.intrinsics.height));
    }
    return image;
  }
  throw InputError(fmt::format("camera '{}': no image {}.pgm, .ppm or .png in '{}'", camera.id, camera.id, dir.string()));
}

std::vector<View> load_views(const fs::path& cameras, const fs::path& images) {
  std::vector<View> views;
  for (Camera& cam : load_cameras(cameras)) {
    GrayImage image = load_camera_image(cam, images);
    views.push_back({std::move(cam), std::move(image)});
  }
  return views;
}

PriReport cmd_pri(const PriCommand& cmd) {
  cmd.config.validate();
  const TriangleMesh mesh = load_checked_mesh(cmd.mesh);
  const auto views = load_views(cmd.cameras, cmd.images);
  const Bvh bvh(mesh);
  const PriReport report = evaluate_pri(bvh, views, cmd.config);
  ensure_dir(cmd.out_dir);
  write_pri_outputs(mesh, report, cmd.out_dir);
  return report;
}

Selection cmd_nbv(const NbvCommand& cmd) {
  cmd.config.validate();
  const TriangleMesh mesh = load_checked_mesh(cmd.mesh);
  const auto views = load_views(cmd.cameras, cmd.images);
  const auto candidates = load_cameras(cmd.candidates);
  if (candidates.empty()) throw InputError(fmt::format("{}: no candidate cameras", cmd.candidates.string()));
  const Bvh bvh(mesh);
  const PriReport report = evaluate_pri(bvh, views, cmd.config);
  std::vector<Camera> existing;
  for (const View& v : views) existing.push_back(v.camera);
  const NbvScene scene{&bvh, existing, report.worst_facets, report.worst_vertices};
  Selection selection = select_best(candidates, scene, cmd.config.energy, cmd.config.thread_count());
  ensure_dir(cmd.out_dir);
  write_text(cmd.out_dir / "nbv.json", format_energy_json(selection, cmd.config.energy));
  return selection;
}

ClosedLoopResult cmd_simulate(const SimulateCommand& cmd) {
  const SceneSpec scene = load_scene(cmd.scene);
  ClosedLoopOptions options;
  options.iterations = cmd.iterations;
  options.initial_views = cmd.initial_views;
  ClosedLoopResult result = closed_loop(scene, options, cmd.config);

  ensure_dir(cmd.out_dir / "images");
  std::vector<Camera> cameras;
  std::set<std::string> used;
  for (const View& v : result.views) {
    cameras.push_back(v.camera);
    used.insert(v.camera.id);
    write_pgm(v.image, cmd.out_dir / "images" / (v.camera.id + ".pgm"));
  }
  std::vector<Camera> unused;
  for (const Camera& c : result.candidates) {
    if (used.count(c.id) == 0) unused.push_back(c);
  }
  save_cameras(cameras, cmd.out_dir / "cameras.json");
  save_cameras(unused, cmd.out_dir / "candidates.json");
  save_ply(result.reconstruction, cmd.out_dir / "mesh.ply");
  save_ply(result.truth, cmd.out_dir / "truth.ply");
  std::string log;
  for (const auto& rec : result.log) log += format_iteration_json(rec) + "\n";
  write_text(cmd.out_dir / "log.jsonl", log);
  write_pri_outputs(result.reconstruction, result.final_report, cmd.out_dir);
  write_text(cmd.out_dir / "config.json", format_config_json(cmd.config));
  return result;
}

GrayImage cmd_render(const RenderCommand& cmd) {
  cmd.config.validate();
  SceneSpec scene = load_scene(cmd.scene);
  const Intrinsics intrinsics = scene.image.intrinsics();
  std::vector<Camera> pool;
  if (cmd.cameras) {
    pool = load_cameras(*cmd.cameras);
  } else {
    pool = candidate_ring(scene.candidates, intrinsics, "cand_");
    for (std::size_t r = 0; r < scene.initial.size(); ++r) {
      const auto ring = candidate_ring(scene.initial[r], intrinsics, fmt::format("init{}_", r));
      pool.insert(pool.end(), ring.begin(), ring.end());
    }
  }
  const auto it = std::find_if(pool.begin(), pool.end(), [&](const Camera& c) { return c.id == cmd.camera_id; });
  if (it == pool.end()) throw InputError(fmt::format("unknown camera id '{}'", cmd.camera_id));

  scene.texture.seed = effective_texture_seed(scene, cmd.config.seed);
  const TriangleMesh mesh = scene_mesh(scene);
  const Bvh bvh(mesh);
  GrayImage image = render(bvh, scene.texture, scene.light, *it, cmd.config.thread_count(), scene.image.supersample);
  const auto parent = cmd.out.parent_path();
  if (!parent.empty()) ensure_dir(parent);
  const std::string ext = cmd.out.extension().string();
  if (ext == ".png") {
    write_png(image, cmd.out);
  } else if (ext == ".pgm") {
    write_pgm(image, cmd.out);
  } else {
    throw InputError(fmt::format("output '{}': expected a .pgm or .png extension", cmd.out.string()));
  }
  return image;
}

}  // namespace nbv
