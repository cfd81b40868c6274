#pragma once

#include "nbv/bvh.hpp"
#include "nbv/mesh.hpp"
#include "nbv/types.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace nbv {

constexpr double kDefaultZNear = 1e-6;

struct Intrinsics {
  double fx = 0, fy = 0;
  double cx = 0, cy = 0;
  int width = 0, height = 0;

  /// Throws InputError unless fx, fy > 0, 0 < cx < W and 0 < cy < H.
  void validate() const;
};

/// World-to-camera rotation and camera center: x_cam = R (x_world - C).
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 center = Vec3::Zero();

  /// Throws InputError unless R is orthonormal with det +1 (tolerance 1e-9).
  void validate() const;

  Vec3 to_camera(const Vec3& world) const { return rotation * (world - center); }
  Vec3 to_world(const Vec3& cam) const { return rotation.transpose() * cam + center; }
  /// Optical axis (camera +z) in world coordinates.
  Vec3 forward() const { return rotation.row(2).transpose(); }
};

struct Camera {
  std::string id;
  Intrinsics intrinsics;
  Pose pose;

  void validate() const {
    intrinsics.validate();
    pose.validate();
  }
};

/// Image coordinates: u right, v down, origin at the top-left image corner.
/// Pixel (i, j) covers [i, i+1) x [j, j+1).
struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
};

std::optional<PixelCoord> project(const Camera& camera, const Vec3& point, double z_near = kDefaultZNear);
bool in_image(const Intrinsics& intrinsics, const PixelCoord& p);
/// Inverse of project for a given camera-frame depth.
Vec3 back_project(const Camera& camera, const PixelCoord& p, double depth);

/// Rotation for a camera at `eye` whose optical axis points at `target`.
/// Image "up" (-v) follows `up` as closely as possible.
Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitZ());

/// All three vertices project inside the image, none is occluded (faces
/// incident to the tested vertex are ignored), and the face points toward the
/// camera.
bool facet_visible(const Camera& camera, const Bvh& bvh, std::size_t face);

/// Camera JSON: { "cameras": [ { "id", "width", "height", "fx", "fy", "cx",
/// "cy", "rotation": [9 row-major], "center": [3] } ] }.
std::vector<Camera> parse_cameras(const std::string& json_text);
std::vector<Camera> load_cameras(const std::filesystem::path& path);
std::string format_cameras(const std::vector<Camera>& cameras);
void save_cameras(const std::vector<Camera>& cameras, const std::filesystem::path& path);

}  // namespace nbv
