#include "nbv/photoconsistency.hpp"

#include "nbv/error.hpp"
#include "nbv/parallel.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace nbv {

std::string_view to_string(Metric metric) { return metric == Metric::kSsd ? "ssd" : "ncc"; }

Metric parse_metric(std::string_view name) {
  if (name == "ssd") return Metric::kSsd;
  if (name == "ncc") return Metric::kNcc;
  throw InputError(fmt::format("unknown metric '{}' (expected ssd or ncc)", name));
}

std::vector<std::array<double, 3>> barycentric_grid(int n) {
  if (n < 1) throw PreconditionError("patch subdivision must be >= 1");
  std::vector<std::array<double, 3>> grid;
  grid.reserve(CanonicalPatch::sample_count(n));
  const double inv = 1.0 / n;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n - i; ++j) {
      grid.push_back({(n - i - j) * inv, j * inv, i * inv});
    }
  }
  return grid;
}

namespace {

CanonicalPatch sample_unchecked(const GrayImage& image, const Camera& camera, const TriangleMesh& mesh,
                                std::size_t face, const std::vector<std::array<double, 3>>& grid, int n) {
  const Face& tri = mesh.face(face);
  const Vec3& a = mesh.vertex(tri[0]);
  const Vec3& b = mesh.vertex(tri[1]);
  const Vec3& c = mesh.vertex(tri[2]);
  CanonicalPatch patch;
  patch.subdivision = n;
  patch.samples.reserve(grid.size());
  for (const auto& w : grid) {
    const Vec3 p = w[0] * a + w[1] * b + w[2] * c;
    // Interior points of a visible facet always project; fall back to clamping otherwise.
    const auto px = project(camera, p).value_or(PixelCoord{camera.intrinsics.cx, camera.intrinsics.cy});
    patch.samples.push_back(image.sample_bilinear(px.u, px.v));
  }
  return patch;
}

void check_grids(const CanonicalPatch& a, const CanonicalPatch& b) {
  if (a.subdivision != b.subdivision || a.samples.size() != b.samples.size()) {
    throw PreconditionError(fmt::format("patch grids differ (subdivision {} vs {})", a.subdivision, b.subdivision));
  }
}

FacetPri evaluate(const TriangleMesh& mesh, std::span<const View> views,
                  const std::vector<std::uint32_t>& visible, std::size_t face, Metric metric, int n,
                  const std::vector<std::array<double, 3>>& grid) {
  FacetPri out;
  out.view_count = static_cast<std::uint32_t>(visible.size());
  if (visible.size() < 2) return out;
  std::vector<CanonicalPatch> patches;
  patches.reserve(visible.size());
  for (auto w : visible) {
    patches.push_back(sample_unchecked(views[w].image, views[w].camera, mesh, face, grid, n));
  }
  const PairMean m = pairwise_mean(std::span<const CanonicalPatch>(patches),
                                   [metric](const CanonicalPatch& x, const CanonicalPatch& y) {
                                     return similarity(metric, x, y);
                                   });
  out.value = m.mean;
  out.defined = true;
  return out;
}

}  // namespace

CanonicalPatch sample_patch(const GrayImage& image, const Camera& camera, const Bvh& bvh, std::size_t face, int n) {
  if (!facet_visible(camera, bvh, face)) {
    throw PreconditionError(fmt::format("facet {} is not visible from camera '{}'", face, camera.id));
  }
  return sample_unchecked(image, camera, bvh.mesh(), face, barycentric_grid(n), n);
}

double ssd(const CanonicalPatch& a, const CanonicalPatch& b) {
  check_grids(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const double d = a.samples[i] - b.samples[i];
    sum += d * d;
  }
  return sum;
}

double ncc(const CanonicalPatch& a, const CanonicalPatch& b) {
  check_grids(a, b);
  const std::size_t n = a.samples.size();
  if (n == 0) return 0.0;
  const double mean_a = std::accumulate(a.samples.begin(), a.samples.end(), 0.0) / n;
  const double mean_b = std::accumulate(b.samples.begin(), b.samples.end(), 0.0) / n;
  double cross = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a.samples[i] - mean_a;
    const double db = b.samples[i] - mean_b;
    cross += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a / n < 1e-12 || var_b / n < 1e-12) return 0.0;
  return std::clamp(cross / std::sqrt(var_a * var_b), -1.0, 1.0);
}

double similarity(Metric metric, const CanonicalPatch& a, const CanonicalPatch& b) {
  return metric == Metric::kSsd ? -ssd(a, b) : ncc(a, b);
}

bool facet_observed(const Camera& camera, const Bvh& bvh, std::size_t face, double max_incidence_deg) {
  const TriangleMesh& mesh = bvh.mesh();
  const Vec3 ray = (camera.pose.center - mesh.face_barycenter(face)).normalized();
  if (mesh.face_normal(face).dot(ray) < std::cos(deg_to_rad(max_incidence_deg))) return false;
  return facet_visible(camera, bvh, face);
}

FacetPri pri(const Bvh& bvh, std::span<const View> views, std::size_t face, Metric metric, int n,
             double max_incidence_deg) {
  std::vector<std::uint32_t> visible;
  for (std::uint32_t w = 0; w < views.size(); ++w) {
    if (facet_observed(views[w].camera, bvh, face, max_incidence_deg)) visible.push_back(w);
  }
  return evaluate(bvh.mesh(), views, visible, face, metric, n, barycentric_grid(n));
}

std::vector<std::uint32_t> rank_facets(std::span<const FacetPri> facets, bool undefined_first) {
  std::vector<std::uint32_t> order(facets.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    const FacetPri& fa = facets[a];
    const FacetPri& fb = facets[b];
    if (fa.defined != fb.defined) return undefined_first ? !fa.defined : fa.defined;
    if (fa.defined && fa.value != fb.value) return fa.value < fb.value;
    return a < b;
  });
  return order;
}

PriReport make_pri_report(const TriangleMesh& mesh, std::vector<FacetPri> facets, Metric metric, std::size_t k,
                          bool undefined_first) {
  if (k == 0) throw PreconditionError("K must be >= 1");
  if (facets.empty()) throw PreconditionError("mesh has no facets");
  if (facets.size() != mesh.face_count()) throw PreconditionError("PRI table does not match the mesh");
  PriReport report;
  report.metric = metric;
  report.k = k;
  const auto order = rank_facets(facets, undefined_first);
  report.worst_facets.assign(order.begin(), order.begin() + std::min(k, order.size()));
  std::set<std::uint32_t> verts;
  for (auto f : report.worst_facets) {
    for (auto v : mesh.face(f)) verts.insert(v);
  }
  report.worst_vertices.assign(verts.begin(), verts.end());
  report.facets = std::move(facets);
  return report;
}

PriReport worst_facets(const Bvh& bvh, std::span<const View> views, const PriOptions& options) {
  PriEstimator estimator(bvh, options);
  estimator.add_views(views);
  return estimator.report();
}

PriEstimator::PriEstimator(const Bvh& bvh, PriOptions options) : bvh_(&bvh), options_(options) {
  if (options_.k == 0) throw PreconditionError("K must be >= 1");
  if (options_.subdivision < 1) throw PreconditionError("patch subdivision must be >= 1");
  if (!(options_.max_incidence_deg > 0.0 && options_.max_incidence_deg <= 90.0)) {
    throw PreconditionError("max incidence angle must lie in (0, 90] degrees");
  }
  visible_.resize(bvh.mesh().face_count());
  facets_.resize(bvh.mesh().face_count());
}

std::size_t PriEstimator::add_views(std::span<const View> views) {
  const auto first_new = static_cast<std::uint32_t>(views_.size());
  views_.insert(views_.end(), views.begin(), views.end());
  const std::size_t faces = facets_.size();
  std::vector<char> dirty(faces, 0);
  parallel_for(faces, options_.threads, [&](std::size_t f) {
    for (auto w = first_new; w < views_.size(); ++w) {
      if (facet_observed(views_[w].camera, *bvh_, f, options_.max_incidence_deg)) {
        visible_[f].push_back(w);
        dirty[f] = 1;
      }
    }
  });
  const auto grid = barycentric_grid(options_.subdivision);
  parallel_for(faces, options_.threads, [&](std::size_t f) {
    if (dirty[f]) {
      facets_[f] = evaluate(bvh_->mesh(), views_, visible_[f], f, options_.metric, options_.subdivision, grid);
    }
  });
  return static_cast<std::size_t>(std::count(dirty.begin(), dirty.end(), 1));
}

PriReport PriEstimator::report() const {
  return make_pri_report(bvh_->mesh(), facets_, options_.metric, options_.k, options_.undefined_first);
}

std::vector<Rgb> pri_colors(const PriReport& report) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& f : report.facets) {
    if (!f.defined) continue;
    lo = std::min(lo, f.value);
    hi = std::max(hi, f.value);
  }
  std::vector<Rgb> colors;
  colors.reserve(report.facets.size());
  for (const auto& f : report.facets) {
    if (!f.defined) {
      colors.push_back({128, 128, 128});
      continue;
    }
    const double t = hi > lo ? (f.value - lo) / (hi - lo) : 1.0;
    // Hue 0 deg (red) .. 120 deg (green) at full saturation and value.
    const double hue = 120.0 * t;
    const double r = hue < 60.0 ? 1.0 : (120.0 - hue) / 60.0;
    const double g = hue < 60.0 ? hue / 60.0 : 1.0;
    colors.push_back({static_cast<std::uint8_t>(std::lround(255.0 * r)),
                      static_cast<std::uint8_t>(std::lround(255.0 * g)), 0});
  }
  return colors;
}

std::string format_pri_json(const PriReport& report) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["metric"] = to_string(report.metric);
  doc["K"] = report.k;
  ordered_json facets = ordered_json::array();
  for (std::size_t f = 0; f < report.facets.size(); ++f) {
    const auto& entry = report.facets[f];
    ordered_json item;
    item["face"] = f;
    item["pri"] = entry.defined ? ordered_json(entry.value) : ordered_json(nullptr);
    item["views"] = entry.view_count;
    item["defined"] = entry.defined;
    facets.push_back(std::move(item));
  }
  doc["facets"] = std::move(facets);
  doc["worst_facets"] = report.worst_facets;
  doc["worst_vertices"] = report.worst_vertices;
  return doc.dump(2) + "\n";
}

PriReport parse_pri_json(const std::string& text) {
  using nlohmann::json;
  try {
    const json doc = json::parse(text);
    PriReport report;
    report.metric = parse_metric(doc.at("metric").get<std::string>());
    report.k = doc.at("K").get<std::size_t>();
    for (const auto& item : doc.at("facets")) {
      FacetPri f;
      f.defined = item.at("defined").get<bool>();
      f.value = f.defined ? item.at("pri").get<double>() : 0.0;
      f.view_count = item.at("views").get<std::uint32_t>();
      report.facets.push_back(f);
    }
    report.worst_facets = doc.at("worst_facets").get<std::vector<std::uint32_t>>();
    report.worst_vertices = doc.at("worst_vertices").get<std::vector<std::uint32_t>>();
    return report;
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("PRI report: {}", e.what()));
  }
}

}  // namespace nbv
