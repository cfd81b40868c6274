#pragma once

#include "nbv/config.hpp"
#include "nbv/energy.hpp"
#include "nbv/photoconsistency.hpp"
#include "nbv/simulator.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace nbv {

namespace fs = std::filesystem;

/// Image for camera `id` inside `dir`: id.pgm, id.ppm or id.png, first found.
/// Throws InputError naming the camera when none exists or the size is wrong.
GrayImage load_camera_image(const Camera& camera, const fs::path& dir);

/// Cameras from a JSON file paired with their images.
std::vector<View> load_views(const fs::path& cameras, const fs::path& images);

struct PriCommand {
  fs::path mesh;
  fs::path cameras;
  fs::path images;
  fs::path out_dir = ".";
  RunConfig config;
};

/// Writes pri.json and pri_colored.ply into out_dir.
PriReport cmd_pri(const PriCommand& cmd);

struct NbvCommand {
  fs::path mesh;
  fs::path cameras;
  fs::path images;
  fs::path candidates;
  fs::path out_dir = ".";
  RunConfig config;
};

/// Writes nbv.json into out_dir. Throws InputError on an empty candidate file.
Selection cmd_nbv(const NbvCommand& cmd);

struct SimulateCommand {
  fs::path scene;
  fs::path out_dir = ".";
  int iterations = 1;
  int initial_views = 3;
  RunConfig config;
};

/// Runs the closed loop and writes a dataset the other commands can read:
/// cameras.json, images/<id>.pgm, mesh.ply (the evaluated reconstruction),
/// truth.ply, candidates.json (the unused candidates), log.jsonl, pri.json,
/// pri_colored.ply and config.json.
ClosedLoopResult cmd_simulate(const SimulateCommand& cmd);

struct RenderCommand {
  fs::path scene;
  std::string camera_id;
  /// Camera file to look the id up in; the scene's candidate and initial
  /// rings are searched when empty.
  std::optional<fs::path> cameras;
  fs::path out;  // .pgm or .png
  RunConfig config;
};

GrayImage cmd_render(const RenderCommand& cmd);

}  // namespace nbv
