// nbvplan: photo-consistency estimation and next-best-view selection on meshes.

#include "nbv/commands.hpp"
#include "nbv/error.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

namespace {

struct ConfigFlags {
  std::optional<std::string> config;
  nbv::ConfigOverrides overrides;
  bool undefined_first = false;

  void add(CLI::App& app) {
    app.add_option("--config", config, "JSON run configuration");
    app.add_option("--metric", overrides.metric, "ssd or ncc");
    app.add_option("--k", overrides.k, "number of worst facets");
    app.add_option("--weights", overrides.weights, "energy weights m1,m2,m3,m4");
    app.add_option("--kappa", overrides.kappa, "von Mises concentration");
    app.add_option("--delta", overrides.delta, "parallax threshold on B/H");
    app.add_option("--penalty", overrides.penalty, "penalty value for failed terms");
    app.add_option("--incidence-sign", overrides.incidence_sign, "reward or penalize");
    app.add_option("--max-incidence", overrides.max_incidence_deg, "grazing cutoff for PRI views, degrees");
    app.add_flag("--undefined-first", undefined_first, "rank facets without a PRI ahead of all others");
    app.add_option("--seed", overrides.seed, "run seed");
    app.add_option("--threads", overrides.threads, "worker threads");
  }

  nbv::RunConfig resolve() {
    if (undefined_first) overrides.undefined_first = true;
    std::optional<std::filesystem::path> file;
    if (config) file = *config;
    return nbv::resolve_config(file, overrides);
  }
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("nbvplan");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("NBV_LOG")) {
    const std::string name = env;
    if (name == "error" || name == "warn" || name == "info" || name == "debug") {
      spdlog::set_level(spdlog::level::from_str(name));
    } else {
      spdlog::warn("ignoring NBV_LOG='{}' (expected error, warn, info or debug)", name);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"Photo-consistency driven next-best-view planning on triangle meshes"};
  app.require_subcommand(1);

  auto* pri = app.add_subcommand("pri", "per-facet photo-consistency report");
  nbv::PriCommand pri_cmd;
  ConfigFlags pri_flags;
  pri->add_option("--mesh", pri_cmd.mesh, "mesh (.obj or .ply)")->required();
  pri->add_option("--cameras", pri_cmd.cameras, "cameras JSON")->required();
  pri->add_option("--images", pri_cmd.images, "directory with <camera id>.pgm/.ppm/.png")->required();
  pri->add_option("--out-dir", pri_cmd.out_dir, "output directory");
  pri_flags.add(*pri);

  auto* nbv = app.add_subcommand("nbv", "select the next best view among candidates");
  nbv::NbvCommand nbv_cmd;
  ConfigFlags nbv_flags;
  nbv->add_option("--mesh", nbv_cmd.mesh, "mesh (.obj or .ply)")->required();
  nbv->add_option("--cameras", nbv_cmd.cameras, "cameras JSON of the existing views")->required();
  nbv->add_option("--images", nbv_cmd.images, "directory with <camera id>.pgm/.ppm/.png")->required();
  nbv->add_option("--candidates", nbv_cmd.candidates, "candidate cameras JSON")->required();
  nbv->add_option("--out-dir", nbv_cmd.out_dir, "output directory");
  nbv_flags.add(*nbv);

  auto* sim = app.add_subcommand("simulate", "closed-loop run on a synthetic scene; writes a dataset");
  nbv::SimulateCommand sim_cmd;
  ConfigFlags sim_flags;
  sim->add_option("--scene", sim_cmd.scene, "scene JSON")->required();
  sim->add_option("--iterations", sim_cmd.iterations, "views to add");
  sim->add_option("--initial-views", sim_cmd.initial_views, "bootstrap views taken from the candidate ring");
  sim->add_option("--out-dir", sim_cmd.out_dir, "output directory");
  sim_flags.add(*sim);

  auto* ren = app.add_subcommand("render", "render one camera of a scene");
  nbv::RenderCommand ren_cmd;
  ConfigFlags ren_flags;
  std::optional<std::string> ren_cameras;
  ren->add_option("--scene", ren_cmd.scene, "scene JSON")->required();
  ren->add_option("--camera-id", ren_cmd.camera_id, "camera id")->required();
  ren->add_option("--cameras", ren_cameras, "cameras JSON to look the id up in (default: the scene's rings)");
  ren->add_option("--out", ren_cmd.out, "output image (.pgm or .png)")->required();
  ren_flags.add(*ren);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (pri->parsed()) {
      pri_cmd.config = pri_flags.resolve();
      const auto report = nbv::cmd_pri(pri_cmd);
      fmt::print("worst facets:");
      for (auto f : report.worst_facets) fmt::print(" {}", f);
      fmt::print("\n");
    } else if (nbv->parsed()) {
      nbv_cmd.config = nbv_flags.resolve();
      const auto selection = nbv::cmd_nbv(nbv_cmd);
      fmt::print("{}\n", selection.winner);
    } else if (sim->parsed()) {
      sim_cmd.config = sim_flags.resolve();
      const auto result = nbv::cmd_simulate(sim_cmd);
      for (const auto& rec : result.log) fmt::print("{}\n", rec.winner);
    } else if (ren->parsed()) {
      ren_cmd.config = ren_flags.resolve();
      if (ren_cameras) ren_cmd.cameras = *ren_cameras;
      nbv::cmd_render(ren_cmd);
    }
  } catch (const nbv::InputError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return 1;
  }
  return 0;
}
