#include "nbv/mesh.hpp"

#include "nbv/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>

namespace nbv {

static_assert(std::endian::native == std::endian::little, "binary PLY I/O assumes a little-endian host");

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(fmt::format("cannot write '{}'", path.string()));
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

std::optional<double> to_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<long long> to_int(std::string_view s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

void fan_triangulate(const std::vector<std::uint32_t>& poly, std::vector<Face>& faces) {
  for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
    faces.push_back({poly[0], poly[k], poly[k + 1]});
  }
}

MeshLoadResult finish(std::vector<Vec3> vertices, std::vector<Face> faces) {
  if (faces.empty()) throw FormatError("mesh file contains no faces");
  MeshLoadResult result;
  result.mesh = TriangleMesh::build(std::move(vertices), std::move(faces), &result.dropped_faces);
  return result;
}

// --- PLY -------------------------------------------------------------------

enum class PlyType { kInt8, kUint8, kInt16, kUint16, kInt32, kUint32, kFloat32, kFloat64 };

std::optional<PlyType> ply_type(std::string_view name) {
  if (name == "char" || name == "int8") return PlyType::kInt8;
  if (name == "uchar" || name == "uint8") return PlyType::kUint8;
  if (name == "short" || name == "int16") return PlyType::kInt16;
  if (name == "ushort" || name == "uint16") return PlyType::kUint16;
  if (name == "int" || name == "int32") return PlyType::kInt32;
  if (name == "uint" || name == "uint32") return PlyType::kUint32;
  if (name == "float" || name == "float32") return PlyType::kFloat32;
  if (name == "double" || name == "float64") return PlyType::kFloat64;
  return std::nullopt;
}

std::size_t ply_size(PlyType t) {
  switch (t) {
    case PlyType::kInt8:
    case PlyType::kUint8: return 1;
    case PlyType::kInt16:
    case PlyType::kUint16: return 2;
    case PlyType::kInt32:
    case PlyType::kUint32:
    case PlyType::kFloat32: return 4;
    case PlyType::kFloat64: return 8;
  }
  return 0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::kFloat32;
  bool is_list = false;
  PlyType count_type = PlyType::kUint8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

template <typename T>
T load_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

class BinaryCursor {
 public:
  BinaryCursor(const std::string& data, std::size_t pos) : data_(data), pos_(pos) {}

  double read(PlyType t) {
    const std::size_t n = ply_size(t);
    if (pos_ + n > data_.size()) {
      throw FormatError(fmt::format("ply: unexpected end of data at byte offset {}", pos_));
    }
    const char* p = data_.data() + pos_;
    pos_ += n;
    switch (t) {
      case PlyType::kInt8: return load_le<std::int8_t>(p);
      case PlyType::kUint8: return load_le<std::uint8_t>(p);
      case PlyType::kInt16: return load_le<std::int16_t>(p);
      case PlyType::kUint16: return load_le<std::uint16_t>(p);
      case PlyType::kInt32: return load_le<std::int32_t>(p);
      case PlyType::kUint32: return load_le<std::uint32_t>(p);
      case PlyType::kFloat32: return load_le<float>(p);
      case PlyType::kFloat64: return load_le<double>(p);
    }
    return 0.0;
  }

  std::size_t offset() const { return pos_; }

 private:
  const std::string& data_;
  std::size_t pos_;
};

class AsciiCursor {
 public:
  AsciiCursor(const std::string& data, std::size_t pos, std::size_t line)
      : data_(data), pos_(pos), line_(line) {}

  double read() {
    while (pos_ < data_.size() && std::isspace(static_cast<unsigned char>(data_[pos_]))) {
      if (data_[pos_] == '\n') ++line_;
      ++pos_;
    }
    std::size_t end = pos_;
    while (end < data_.size() && !std::isspace(static_cast<unsigned char>(data_[end]))) ++end;
    if (end == pos_) throw FormatError(fmt::format("ply: unexpected end of data at line {}", line_));
    auto value = to_double(std::string_view(data_).substr(pos_, end - pos_));
    if (!value) {
      throw FormatError(fmt::format("ply: bad number '{}' at line {}",
                                    data_.substr(pos_, end - pos_), line_));
    }
    pos_ = end;
    return *value;
  }

  std::size_t line() const { return line_; }

 private:
  const std::string& data_;
  std::size_t pos_;
  std::size_t line_;
};

}  // namespace

MeshLoadResult parse_obj(const std::string& text) {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<std::uint32_t> poly;

  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;

    if (tokens[0] == "v") {
      if (tokens.size() < 4) throw FormatError(fmt::format("obj: line {}: vertex needs 3 coordinates", line_no));
      Vec3 v;
      for (int k = 0; k < 3; ++k) {
        auto value = to_double(tokens[1 + k]);
        if (!value) {
          throw FormatError(fmt::format("obj: line {}: bad coordinate '{}'", line_no, tokens[1 + k]));
        }
        v[k] = *value;
      }
      vertices.push_back(v);
    } else if (tokens[0] == "f") {
      if (tokens.size() < 4) throw FormatError(fmt::format("obj: line {}: face needs at least 3 vertices", line_no));
      poly.clear();
      for (std::size_t k = 1; k < tokens.size(); ++k) {
        // "7", "7/1", "7//3", "7/1/3": only the position index matters.
        const auto slash = tokens[k].find('/');
        const auto index = to_int(tokens[k].substr(0, slash));
        if (!index || *index == 0) {
          throw FormatError(fmt::format("obj: line {}: bad face index '{}'", line_no, tokens[k]));
        }
        const long long resolved = *index > 0 ? *index - 1 : static_cast<long long>(vertices.size()) + *index;
        if (resolved < 0 || resolved >= static_cast<long long>(vertices.size())) {
          throw FormatError(fmt::format("obj: line {}: face index {} out of range", line_no, *index));
        }
        poly.push_back(static_cast<std::uint32_t>(resolved));
      }
      fan_triangulate(poly, faces);
    }
    // vn, vt, g, o, s, usemtl, mtllib: ignored.
  }
  return finish(std::move(vertices), std::move(faces));
}

MeshLoadResult parse_ply(const std::string& bytes) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto next_line = [&]() -> std::string {
    if (pos >= bytes.size()) throw FormatError(fmt::format("ply: header truncated at line {}", line_no));
    auto end = bytes.find('\n', pos);
    if (end == std::string::npos) end = bytes.size();
    std::string line = bytes.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = std::min(end + 1, bytes.size() + 1);
    ++line_no;
    return line;
  };

  if (next_line() != "ply") throw FormatError("ply: line 1: missing 'ply' magic");
  bool binary = false;
  bool have_format = false;
  std::vector<PlyElement> elements;
  for (;;) {
    const std::string line = next_line();
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens[0] == "end_header") break;
    if (tokens[0] == "comment" || tokens[0] == "obj_info") continue;
    if (tokens[0] == "format") {
      if (tokens.size() < 3 || tokens[2] != "1.0") {
        throw FormatError(fmt::format("ply: line {}: unsupported format line", line_no));
      }
      if (tokens[1] == "ascii") {
        binary = false;
      } else if (tokens[1] == "binary_little_endian") {
        binary = true;
      } else {
        throw FormatError(fmt::format("ply: line {}: unsupported encoding '{}'", line_no, tokens[1]));
      }
      have_format = true;
    } else if (tokens[0] == "element") {
      const auto count = tokens.size() == 3 ? to_int(tokens[2]) : std::nullopt;
      if (!count || *count < 0) throw FormatError(fmt::format("ply: line {}: bad element line", line_no));
      elements.push_back({std::string(tokens[1]), static_cast<std::size_t>(*count), {}});
    } else if (tokens[0] == "property") {
      if (elements.empty()) throw FormatError(fmt::format("ply: line {}: property before element", line_no));
      PlyProperty prop;
      if (tokens.size() == 5 && tokens[1] == "list") {
        auto ct = ply_type(tokens[2]);
        auto it = ply_type(tokens[3]);
        if (!ct || !it) throw FormatError(fmt::format("ply: line {}: unknown list type", line_no));
        prop.is_list = true;
        prop.count_type = *ct;
        prop.type = *it;
        prop.name = std::string(tokens[4]);
      } else if (tokens.size() == 3) {
        auto t = ply_type(tokens[1]);
        if (!t) throw FormatError(fmt::format("ply: line {}: unknown type '{}'", line_no, tokens[1]));
        prop.type = *t;
        prop.name = std::string(tokens[2]);
      } else {
        throw FormatError(fmt::format("ply: line {}: bad property line", line_no));
      }
      elements.back().properties.push_back(prop);
    } else {
      throw FormatError(fmt::format("ply: line {}: unexpected header keyword '{}'", line_no, tokens[0]));
    }
  }
  if (!have_format) throw FormatError("ply: header has no format line");

  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<std::uint32_t> poly;

  BinaryCursor bin(bytes, pos);
  AsciiCursor ascii(bytes, pos, line_no + 1);
  auto read_scalar = [&](PlyType t) { return binary ? bin.read(t) : ascii.read(); };
  auto where = [&]() {
    return binary ? fmt::format("byte offset {}", bin.offset()) : fmt::format("line {}", ascii.line());
  };

  for (const PlyElement& element : elements) {
    const bool is_vertex = element.name == "vertex";
    const bool is_face = element.name == "face";
    int xyz[3] = {-1, -1, -1};
    int index_prop = -1;
    for (int p = 0; p < static_cast<int>(element.properties.size()); ++p) {
      const auto& prop = element.properties[p];
      if (is_vertex && !prop.is_list) {
        if (prop.name == "x") xyz[0] = p;
        if (prop.name == "y") xyz[1] = p;
        if (prop.name == "z") xyz[2] = p;
      }
      if (is_face && prop.is_list && (prop.name == "vertex_indices" || prop.name == "vertex_index")) {
        index_prop = p;
      }
    }
    if (is_vertex && (xyz[0] < 0 || xyz[1] < 0 || xyz[2] < 0)) {
      throw FormatError("ply: vertex element lacks x/y/z properties");
    }
    if (is_face && index_prop < 0) throw FormatError("ply: face element lacks vertex_indices");

    for (std::size_t i = 0; i < element.count; ++i) {
      Vec3 v = Vec3::Zero();
      for (int p = 0; p < static_cast<int>(element.properties.size()); ++p) {
        const auto& prop = element.properties[p];
        if (!prop.is_list) {
          const double value = read_scalar(prop.type);
          if (is_vertex) {
            for (int k = 0; k < 3; ++k) {
              if (xyz[k] == p) v[k] = value;
            }
          }
          continue;
        }
        const double count = read_scalar(prop.count_type);
        if (count < 0 || count != std::floor(count)) {
          throw FormatError(fmt::format("ply: bad list length at {}", where()));
        }
        const bool keep = is_face && p == index_prop;
        if (keep) poly.clear();
        for (std::size_t k = 0; k < static_cast<std::size_t>(count); ++k) {
          const double idx = read_scalar(prop.type);
          if (keep) {
            if (idx < 0 || idx != std::floor(idx)) {
              throw FormatError(fmt::format("ply: bad vertex index at {}", where()));
            }
            poly.push_back(static_cast<std::uint32_t>(idx));
          }
        }
        if (keep) {
          if (poly.size() < 3) throw FormatError(fmt::format("ply: face with fewer than 3 vertices at {}", where()));
          for (auto idx : poly) {
            // Vertex elements precede faces in every file we accept.
            if (idx >= vertices.size()) {
              throw FormatError(fmt::format("ply: face index {} out of range at {}", idx, where()));
            }
          }
          fan_triangulate(poly, faces);
        }
      }
      if (is_vertex) vertices.push_back(v);
    }
  }
  return finish(std::move(vertices), std::move(faces));
}

MeshLoadResult load_mesh(const std::filesystem::path& path, MeshFormat format) {
  const std::string data = read_file(path);
  try {
    return format == MeshFormat::kObj ? parse_obj(data) : parse_ply(data);
  } catch (const FormatError& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

MeshLoadResult load_mesh(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".obj") return load_mesh(path, MeshFormat::kObj);
  if (ext == ".ply") return load_mesh(path, MeshFormat::kPly);
  throw InputError(fmt::format("cannot infer mesh format from '{}'", path.string()));
}

std::string format_obj(const TriangleMesh& mesh) {
  std::string out;
  for (const Vec3& v : mesh.vertices()) {
    out += fmt::format("v {} {} {}\n", v.x(), v.y(), v.z());
  }
  for (const Face& f : mesh.faces()) {
    out += fmt::format("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1);
  }
  return out;
}

void save_obj(const TriangleMesh& mesh, const std::filesystem::path& path) {
  write_file(path, format_obj(mesh));
}

std::string format_ply(const TriangleMesh& mesh) {
  std::string out = fmt::format(
      "ply\nformat binary_little_endian 1.0\nelement vertex {}\n"
      "property double x\nproperty double y\nproperty double z\n"
      "element face {}\nproperty list uchar int vertex_indices\nend_header\n",
      mesh.vertex_count(), mesh.face_count());
  auto put = [&out](const auto& value) {
    char buf[sizeof(value)];
    std::memcpy(buf, &value, sizeof(value));
    out.append(buf, sizeof(value));
  };
  for (const Vec3& v : mesh.vertices()) {
    for (int k = 0; k < 3; ++k) put(v[k]);
  }
  for (const Face& f : mesh.faces()) {
    put(static_cast<std::uint8_t>(3));
    for (auto idx : f) put(static_cast<std::int32_t>(idx));
  }
  return out;
}

void save_ply(const TriangleMesh& mesh, const std::filesystem::path& path) {
  write_file(path, format_ply(mesh));
}

std::string format_colored_ply(const TriangleMesh& mesh, std::span<const Rgb> face_colors) {
  if (face_colors.size() != mesh.face_count()) {
    throw PreconditionError("format_colored_ply: one color per face required");
  }
  std::string out = fmt::format(
      "ply\nformat ascii 1.0\nelement vertex {}\n"
      "property float x\nproperty float y\nproperty float z\n"
      "element face {}\nproperty list uchar int vertex_indices\n"
      "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n",
      mesh.vertex_count(), mesh.face_count());
  for (const Vec3& v : mesh.vertices()) {
    out += fmt::format("{} {} {}\n", static_cast<float>(v.x()), static_cast<float>(v.y()),
                       static_cast<float>(v.z()));
  }
  for (std::size_t f = 0; f < mesh.face_count(); ++f) {
    const Face& face = mesh.face(f);
    const Rgb& c = face_colors[f];
    out += fmt::format("3 {} {} {} {} {} {}\n", face[0], face[1], face[2], c.r, c.g, c.b);
  }
  return out;
}

}  // namespace nbv
