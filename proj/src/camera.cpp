#include "nbv/camera.hpp"

#include "nbv/error.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <Eigen/Dense>

#include <array>
#include <fstream>
#include <set>
#include <sstream>

namespace nbv {

using nlohmann::json;

void Intrinsics::validate() const {
  if (width <= 0 || height <= 0) {
    throw InputError(fmt::format("image size must be positive (got {}x{})", width, height));
  }
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    throw InputError(fmt::format("focal lengths must be positive (fx={}, fy={})", fx, fy));
  }
  if (!(cx > 0.0 && cx < width) || !(cy > 0.0 && cy < height)) {
    throw InputError(fmt::format("principal point ({}, {}) must lie strictly inside the {}x{} image",
                                 cx, cy, width, height));
  }
}

void Pose::validate() const {
  if (!rotation.allFinite() || !is_finite(center)) throw InputError("pose has non-finite entries");
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > 1e-9) throw InputError(fmt::format("rotation is not orthonormal (max |R^T R - I| = {:g})", ortho));
  const double det = rotation.determinant();
  if (std::abs(det - 1.0) > 1e-9) throw InputError(fmt::format("rotation determinant is {} (expected +1)", det));
}

std::optional<PixelCoord> project(const Camera& camera, const Vec3& point, double z_near) {
  const Vec3 c = camera.pose.to_camera(point);
  if (!(c.z() > z_near)) return std::nullopt;
  const auto& k = camera.intrinsics;
  return PixelCoord{k.fx * c.x() / c.z() + k.cx, k.fy * c.y() / c.z() + k.cy};
}

bool in_image(const Intrinsics& intrinsics, const PixelCoord& p) {
  return p.u >= 0.0 && p.u < intrinsics.width && p.v >= 0.0 && p.v < intrinsics.height;
}

Vec3 back_project(const Camera& camera, const PixelCoord& p, double depth) {
  const auto& k = camera.intrinsics;
  const Vec3 c((p.u - k.cx) / k.fx * depth, (p.v - k.cy) / k.fy * depth, depth);
  return camera.pose.to_world(c);
}

Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 ref = up;
  if (forward.cross(ref).norm() < 1e-9) {
    ref = std::abs(forward.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  }
  // Camera axes: x right, y down, z forward.
  const Vec3 right = forward.cross(ref).normalized();
  const Vec3 down = forward.cross(right);
  Pose pose;
  pose.rotation.row(0) = right.transpose();
  pose.rotation.row(1) = down.transpose();
  pose.rotation.row(2) = forward.transpose();
  pose.center = eye;
  return pose;
}

bool facet_visible(const Camera& camera, const Bvh& bvh, std::size_t face) {
  const TriangleMesh& mesh = bvh.mesh();
  const Face& tri = mesh.face(face);
  const Vec3 to_camera = camera.pose.center - mesh.face_barycenter(face);
  if (!(mesh.face_normal(face).dot(to_camera) > 0.0)) return false;
  for (auto idx : tri) {
    const auto p = project(camera, mesh.vertex(idx));
    if (!p || !in_image(camera.intrinsics, *p)) return false;
  }
  for (auto idx : tri) {
    if (segment_occluded(bvh, camera.pose.center, mesh.vertex(idx), mesh.incident_faces(idx))) return false;
  }
  return true;
}

namespace {

double number_field(const json& obj, const char* key, std::size_t index) {
  if (!obj.contains(key)) throw FormatError(fmt::format("camera {}: missing field '{}'", index, key));
  const json& v = obj.at(key);
  if (!v.is_number()) throw FormatError(fmt::format("camera {}: field '{}' must be a number", index, key));
  return v.get<double>();
}

int int_field(const json& obj, const char* key, std::size_t index) {
  const double v = number_field(obj, key, index);
  if (v != std::floor(v)) throw FormatError(fmt::format("camera {}: field '{}' must be an integer", index, key));
  return static_cast<int>(v);
}

template <std::size_t N>
std::array<double, N> array_field(const json& obj, const char* key, std::size_t index) {
  if (!obj.contains(key)) throw FormatError(fmt::format("camera {}: missing field '{}'", index, key));
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != N) {
    throw FormatError(fmt::format("camera {}: field '{}' must be an array of {} numbers", index, key, N));
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!v[i].is_number()) {
      throw FormatError(fmt::format("camera {}: field '{}' must be an array of {} numbers", index, key, N));
    }
    out[i] = v[i].get<double>();
  }
  return out;
}

const std::set<std::string>& distortion_keys() {
  static const std::set<std::string> keys = {"distortion", "dist", "k1", "k2", "k3", "k4", "p1", "p2"};
  return keys;
}

}  // namespace

std::vector<Camera> parse_cameras(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw FormatError(fmt::format("camera file: {}", e.what()));
  }
  if (!doc.is_object() || !doc.contains("cameras") || !doc["cameras"].is_array()) {
    throw FormatError("camera file: expected an object with a 'cameras' array");
  }
  std::vector<Camera> cameras;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < doc["cameras"].size(); ++i) {
    const json& c = doc["cameras"][i];
    if (!c.is_object()) throw FormatError(fmt::format("camera {}: expected an object", i));
    for (const auto& [key, value] : c.items()) {
      if (distortion_keys().count(key) != 0) {
        throw InputError(fmt::format(
            "camera {}: field '{}' describes lens distortion, which is not supported; undistort the images first",
            i, key));
      }
    }
    Camera cam;
    if (!c.contains("id") || !c["id"].is_string()) throw FormatError(fmt::format("camera {}: field 'id' must be a string", i));
    cam.id = c["id"].get<std::string>();
    if (!seen.insert(cam.id).second) throw InputError(fmt::format("camera {}: duplicate id '{}'", i, cam.id));
    cam.intrinsics.width = int_field(c, "width", i);
    cam.intrinsics.height = int_field(c, "height", i);
    cam.intrinsics.fx = number_field(c, "fx", i);
    cam.intrinsics.fy = number_field(c, "fy", i);
    cam.intrinsics.cx = number_field(c, "cx", i);
    cam.intrinsics.cy = number_field(c, "cy", i);
    const auto r = array_field<9>(c, "rotation", i);
    const auto t = array_field<3>(c, "center", i);
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) cam.pose.rotation(row, col) = r[3 * row + col];
    }
    cam.pose.center = Vec3(t[0], t[1], t[2]);
    try {
      cam.validate();
    } catch (const InputError& e) {
      throw InputError(fmt::format("camera {} ('{}'): {}", i, cam.id, e.what()));
    }
    cameras.push_back(std::move(cam));
  }
  return cameras;
}

std::vector<Camera> load_cameras(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open camera file '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_cameras(ss.str());
  } catch (const FormatError& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  } catch (const InputError& e) {
    throw InputError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::string format_cameras(const std::vector<Camera>& cameras) {
  json list = json::array();
  for (const Camera& cam : cameras) {
    json c;
    c["id"] = cam.id;
    c["width"] = cam.intrinsics.width;
    c["height"] = cam.intrinsics.height;
    c["fx"] = cam.intrinsics.fx;
    c["fy"] = cam.intrinsics.fy;
    c["cx"] = cam.intrinsics.cx;
    c["cy"] = cam.intrinsics.cy;
    json r = json::array();
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) r.push_back(cam.pose.rotation(row, col));
    }
    c["rotation"] = r;
    c["center"] = {cam.pose.center.x(), cam.pose.center.y(), cam.pose.center.z()};
    list.push_back(c);
  }
  return json{{"cameras", list}}.dump(2) + "\n";
}

void save_cameras(const std::vector<Camera>& cameras, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(fmt::format("cannot write '{}'", path.string()));
  out << format_cameras(cameras);
}

}  // namespace nbv
