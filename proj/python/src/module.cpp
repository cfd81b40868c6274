#include "nbv/commands.hpp"
#include "nbv/error.hpp"

#include <fmt/format.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>

namespace py = pybind11;
using namespace nbv;

namespace {

// Mesh plus its BVH, built on first use.
class PyMesh {
 public:
  explicit PyMesh(TriangleMesh mesh) : mesh_(std::move(mesh)) {}

  const TriangleMesh& mesh() const { return mesh_; }
  const Bvh& bvh() const {
    if (!bvh_) bvh_ = std::make_unique<Bvh>(mesh_);
    return *bvh_;
  }

 private:
  TriangleMesh mesh_;
  mutable std::unique_ptr<Bvh> bvh_;
};

PyMesh mesh_from_arrays(const py::array_t<double, py::array::c_style | py::array::forcecast>& vertices,
                        const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& faces) {
  if (vertices.ndim() != 2 || vertices.shape(1) != 3) throw InputError("vertices must have shape (N, 3)");
  if (faces.ndim() != 2 || faces.shape(1) != 3) throw InputError("faces must have shape (M, 3)");
  std::vector<Vec3> verts(static_cast<std::size_t>(vertices.shape(0)));
  auto v = vertices.unchecked<2>();
  for (py::ssize_t i = 0; i < vertices.shape(0); ++i) verts[static_cast<std::size_t>(i)] = Vec3(v(i, 0), v(i, 1), v(i, 2));
  std::vector<Face> fs(static_cast<std::size_t>(faces.shape(0)));
  auto f = faces.unchecked<2>();
  for (py::ssize_t i = 0; i < faces.shape(0); ++i) {
    for (int j = 0; j < 3; ++j) {
      if (f(i, j) < 0) throw InputError(fmt::format("face {} has a negative index", i));
      fs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = static_cast<std::uint32_t>(f(i, j));
    }
  }
  return PyMesh(TriangleMesh::build(std::move(verts), std::move(fs)));
}

py::array_t<double> vertex_array(const TriangleMesh& mesh) {
  py::array_t<double> out({static_cast<py::ssize_t>(mesh.vertex_count()), py::ssize_t{3}});
  auto o = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < mesh.vertex_count(); ++i) {
    for (int j = 0; j < 3; ++j) o(static_cast<py::ssize_t>(i), j) = mesh.vertex(i)[j];
  }
  return out;
}

py::array_t<std::uint32_t> face_array(const TriangleMesh& mesh) {
  py::array_t<std::uint32_t> out({static_cast<py::ssize_t>(mesh.face_count()), py::ssize_t{3}});
  auto o = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < mesh.face_count(); ++i) {
    for (int j = 0; j < 3; ++j) o(static_cast<py::ssize_t>(i), j) = mesh.face(i)[static_cast<std::size_t>(j)];
  }
  return out;
}

GrayImage image_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw InputError("image must be a 2-D array (height, width)");
  const auto* data = a.data();
  std::vector<double> pixels(data, data + a.size());
  return GrayImage(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), std::move(pixels));
}

py::array_t<double> image_to_array(const GrayImage& image) {
  py::array_t<double> out({static_cast<py::ssize_t>(image.height()), static_cast<py::ssize_t>(image.width())});
  std::copy(image.pixels().begin(), image.pixels().end(), out.mutable_data());
  return out;
}

std::vector<View> make_views(const std::vector<Camera>& cameras, const std::vector<GrayImage>& images) {
  if (cameras.size() != images.size()) throw InputError("cameras and images differ in length");
  std::vector<View> views;
  for (std::size_t i = 0; i < cameras.size(); ++i) views.push_back({cameras[i], images[i]});
  return views;
}

RunConfig config_from(const std::optional<std::filesystem::path>& config_file, const py::kwargs& kwargs) {
  ConfigOverrides o;
  for (const auto& [key, value] : kwargs) {
    const auto name = key.cast<std::string>();
    if (name == "metric") o.metric = value.cast<std::string>();
    else if (name == "k") o.k = value.cast<std::size_t>();
    else if (name == "weights") o.weights = value.cast<std::string>();
    else if (name == "kappa") o.kappa = value.cast<double>();
    else if (name == "delta") o.delta = value.cast<double>();
    else if (name == "penalty") o.penalty = value.cast<double>();
    else if (name == "incidence_sign") o.incidence_sign = value.cast<std::string>();
    else if (name == "max_incidence_deg") o.max_incidence_deg = value.cast<double>();
    else if (name == "undefined_first") o.undefined_first = value.cast<bool>();
    else if (name == "seed") o.seed = value.cast<std::uint64_t>();
    else if (name == "threads") o.threads = value.cast<unsigned>();
    else throw InputError(fmt::format("unknown option '{}'", name));
  }
  return resolve_config(config_file, o);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Photo-consistency estimation and next-best-view selection on triangle meshes.";

  static py::exception<InputError> input_error(m, "InputError", PyExc_ValueError);
  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InputError& e) {
      py::set_error(input_error, e.what());
    }
  });

  py::class_<PyMesh>(m, "Mesh")
      .def(py::init(&mesh_from_arrays), py::arg("vertices"), py::arg("faces"))
      .def_property_readonly("vertices", [](const PyMesh& p) { return vertex_array(p.mesh()); })
      .def_property_readonly("faces", [](const PyMesh& p) { return face_array(p.mesh()); })
      .def_property_readonly("vertex_count", [](const PyMesh& p) { return p.mesh().vertex_count(); })
      .def_property_readonly("face_count", [](const PyMesh& p) { return p.mesh().face_count(); })
      .def("face_normal", [](const PyMesh& p, std::size_t f) { return Vec3(p.mesh().face_normal(f)); })
      .def("face_barycenter", [](const PyMesh& p, std::size_t f) { return p.mesh().face_barycenter(f); })
      .def("incident_faces",
           [](const PyMesh& p, std::size_t v) {
             const auto s = p.mesh().incident_faces(v);
             return std::vector<std::uint32_t>(s.begin(), s.end());
           })
      .def(
          "first_hit",
          [](const PyMesh& p, const Vec3& origin, const Vec3& direction) -> py::object {
            const auto hit = p.bvh().first_hit(origin, direction, std::numeric_limits<double>::infinity());
            if (!hit) return py::none();
            return py::make_tuple(hit->face_index, hit->t);
          },
          py::arg("origin"), py::arg("direction"), "(face, t) of the closest hit, or None")
      .def("save", [](const PyMesh& p, const std::filesystem::path& path) {
        if (path.extension() == ".obj") save_obj(p.mesh(), path);
        else save_ply(p.mesh(), path);
      });

  m.def("load_mesh", [](const std::filesystem::path& path) { return PyMesh(load_mesh(path).mesh); });
  m.def("icosphere", [](int subdivisions, double radius) { return PyMesh(make_icosphere(subdivisions, radius)); },
        py::arg("subdivisions") = 3, py::arg("radius") = 1.0);
  m.def(
      "perturb",
      [](const PyMesh& mesh, const Vec3& center, double radius, double amplitude) {
        return PyMesh(perturb(mesh.mesh(), {center, radius, amplitude}));
      },
      py::arg("mesh"), py::arg("center"), py::arg("radius"), py::arg("amplitude"));

  py::class_<Intrinsics>(m, "Intrinsics")
      .def(py::init([](double fx, double fy, double cx, double cy, int width, int height) {
             Intrinsics k{fx, fy, cx, cy, width, height};
             k.validate();
             return k;
           }),
           py::arg("fx"), py::arg("fy"), py::arg("cx"), py::arg("cy"), py::arg("width"), py::arg("height"))
      .def_readonly("fx", &Intrinsics::fx)
      .def_readonly("fy", &Intrinsics::fy)
      .def_readonly("cx", &Intrinsics::cx)
      .def_readonly("cy", &Intrinsics::cy)
      .def_readonly("width", &Intrinsics::width)
      .def_readonly("height", &Intrinsics::height);

  py::class_<Camera>(m, "Camera")
      .def(py::init([](std::string id, const Intrinsics& k, const Mat3& rotation, const Vec3& center) {
             Camera c{std::move(id), k, {rotation, center}};
             c.validate();
             return c;
           }),
           py::arg("id"), py::arg("intrinsics"), py::arg("rotation"), py::arg("center"))
      .def_readonly("id", &Camera::id)
      .def_readonly("intrinsics", &Camera::intrinsics)
      .def_property_readonly("rotation", [](const Camera& c) { return c.pose.rotation; })
      .def_property_readonly("center", [](const Camera& c) { return c.pose.center; })
      .def_property_readonly("forward", [](const Camera& c) { return c.pose.forward(); })
      .def("project", [](const Camera& c, const Vec3& x) -> py::object {
        const auto p = project(c, x);
        if (!p) return py::none();
        return py::make_tuple(p->u, p->v);
      });

  m.def(
      "look_at",
      [](std::string id, const Intrinsics& k, const Vec3& eye, const Vec3& target) {
        return Camera{std::move(id), k, look_at(eye, target)};
      },
      py::arg("id"), py::arg("intrinsics"), py::arg("eye"), py::arg("target"));
  m.def(
      "candidate_ring",
      [](const Vec3& center, double radius, int count, double elevation_deg, const Intrinsics& k) {
        return candidate_ring(center, radius, count, elevation_deg, k);
      },
      py::arg("center"), py::arg("radius"), py::arg("count"), py::arg("elevation_deg"), py::arg("intrinsics"));
  m.def("load_cameras", &load_cameras);
  m.def("save_cameras", &save_cameras);
  m.def("facet_visible", [](const Camera& c, const PyMesh& mesh, std::size_t face) {
    return facet_visible(c, mesh.bvh(), face);
  });

  m.def("read_image", [](const std::filesystem::path& path) { return image_to_array(read_image(path)); });
  m.def("write_pgm", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
                        const std::filesystem::path& path) { write_pgm(image_from_array(a), path); });

  m.def(
      "render",
      [](const PyMesh& mesh, const Camera& camera, double texture_scale, std::uint64_t texture_seed, int supersample,
         unsigned threads) {
        TextureSpec tex;
        tex.scale = texture_scale;
        tex.seed = texture_seed;
        return image_to_array(render(mesh.bvh(), tex, LightSpec{}, camera, threads, supersample));
      },
      py::arg("mesh"), py::arg("camera"), py::arg("texture_scale") = 0.08, py::arg("texture_seed") = 0,
      py::arg("supersample") = 3, py::arg("threads") = 1, "Value-noise textured render, pixels in [0, 1].");

  py::class_<FacetPri>(m, "FacetPri")
      .def_readonly("value", &FacetPri::value)
      .def_readonly("view_count", &FacetPri::view_count)
      .def_readonly("defined", &FacetPri::defined);

  py::class_<PriReport>(m, "PriReport")
      .def_property_readonly("metric", [](const PriReport& r) { return std::string(to_string(r.metric)); })
      .def_readonly("k", &PriReport::k)
      .def_readonly("facets", &PriReport::facets)
      .def_readonly("worst_facets", &PriReport::worst_facets)
      .def_readonly("worst_vertices", &PriReport::worst_vertices)
      .def("to_json", &format_pri_json);

  py::class_<RunConfig>(m, "RunConfig")
      .def_property_readonly("metric", [](const RunConfig& c) { return std::string(to_string(c.metric)); })
      .def_readonly("k", &RunConfig::k)
      .def_readonly("seed", &RunConfig::seed)
      .def_readonly("max_incidence_deg", &RunConfig::max_incidence_deg)
      .def_readonly("undefined_first", &RunConfig::undefined_first)
      .def_property_readonly("weights",
                             [](const RunConfig& c) {
                               const auto& w = c.energy.weights;
                               return py::make_tuple(w.mu1, w.mu2, w.mu3, w.mu4);
                             })
      .def("to_json", &format_config_json);

  m.def(
      "config",
      [](const std::optional<std::filesystem::path>& file, const py::kwargs& kwargs) { return config_from(file, kwargs); },
      py::arg("file") = py::none(),
      "Run configuration: defaults, then the JSON file, then keyword overrides "
      "(metric, k, weights='m1,m2,m3,m4', kappa, delta, penalty, incidence_sign, "
      "max_incidence_deg, undefined_first, seed, threads).");

  m.def(
      "worst_facets",
      [](const PyMesh& mesh, const std::vector<Camera>& cameras, const std::vector<py::array_t<double>>& images,
         const RunConfig& config) {
        std::vector<GrayImage> imgs;
        for (const auto& a : images) imgs.push_back(image_from_array(a));
        const auto views = make_views(cameras, imgs);
        py::gil_scoped_release release;
        return worst_facets(mesh.bvh(), views, config.pri_options());
      },
      py::arg("mesh"), py::arg("cameras"), py::arg("images"), py::arg("config") = RunConfig{});

  py::class_<VertexEnergy>(m, "VertexEnergy")
      .def_readonly("vertex", &VertexEnergy::vertex)
      .def_readonly("occlusion", &VertexEnergy::occlusion)
      .def_readonly("focus", &VertexEnergy::focus)
      .def_readonly("parallax_sum", &VertexEnergy::parallax_sum)
      .def_readonly("incidence", &VertexEnergy::incidence)
      .def_readonly("nbv", &VertexEnergy::nbv);

  py::class_<CandidateEnergy>(m, "CandidateEnergy")
      .def_readonly("id", &CandidateEnergy::id)
      .def_readonly("rank", &CandidateEnergy::rank)
      .def_readonly("total", &CandidateEnergy::total)
      .def_readonly("per_vertex", &CandidateEnergy::per_vertex);

  py::class_<Selection>(m, "Selection")
      .def_readonly("winner", &Selection::winner)
      .def_readonly("ranking", &Selection::ranking);

  m.def(
      "select_best",
      [](const PyMesh& mesh, const std::vector<Camera>& existing, const PriReport& report,
         const std::vector<Camera>& candidates, const RunConfig& config) {
        const NbvScene scene{&mesh.bvh(), existing, report.worst_facets, report.worst_vertices};
        py::gil_scoped_release release;
        return select_best(candidates, scene, config.energy, config.thread_count());
      },
      py::arg("mesh"), py::arg("existing"), py::arg("report"), py::arg("candidates"), py::arg("config") = RunConfig{});

  m.def("bessel_i0", &bessel_i0, py::arg("kappa"));
  m.def("von_mises_log_density", &von_mises_log_density, py::arg("x"), py::arg("mu"), py::arg("kappa"));

  m.def(
      "pri",
      [](const std::filesystem::path& mesh, const std::filesystem::path& cameras, const std::filesystem::path& images,
         const std::filesystem::path& out_dir, const RunConfig& config) {
        py::gil_scoped_release release;
        return cmd_pri({mesh, cameras, images, out_dir, config});
      },
      py::arg("mesh"), py::arg("cameras"), py::arg("images"), py::arg("out_dir"), py::arg("config") = RunConfig{},
      "Same as `nbvplan pri`: writes pri.json and pri_colored.ply.");
  m.def(
      "nbv",
      [](const std::filesystem::path& mesh, const std::filesystem::path& cameras, const std::filesystem::path& images,
         const std::filesystem::path& candidates, const std::filesystem::path& out_dir, const RunConfig& config) {
        py::gil_scoped_release release;
        return cmd_nbv({mesh, cameras, images, candidates, out_dir, config});
      },
      py::arg("mesh"), py::arg("cameras"), py::arg("images"), py::arg("candidates"), py::arg("out_dir"),
      py::arg("config") = RunConfig{}, "Same as `nbvplan nbv`: writes nbv.json.");
  m.def(
      "simulate",
      [](const std::filesystem::path& scene, const std::filesystem::path& out_dir, int iterations, int initial_views,
         const RunConfig& config) {
        ClosedLoopResult result;
        {
          py::gil_scoped_release release;
          result = cmd_simulate({scene, out_dir, iterations, initial_views, config});
        }
        std::vector<std::string> log;
        for (const auto& rec : result.log) log.push_back(format_iteration_json(rec));
        return log;
      },
      py::arg("scene"), py::arg("out_dir"), py::arg("iterations") = 1, py::arg("initial_views") = 3,
      py::arg("config") = RunConfig{}, "Same as `nbvplan simulate`; returns the iteration log as JSON lines.");
}
