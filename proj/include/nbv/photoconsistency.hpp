#pragma once

#include "nbv/bvh.hpp"
#include "nbv/camera.hpp"
#include "nbv/image.hpp"
#include "nbv/mesh.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nbv {

enum class Metric { kSsd, kNcc };

std::string_view to_string(Metric metric);
/// "ssd" or "ncc"; throws InputError otherwise.
Metric parse_metric(std::string_view name);

/// Intensities of a facet resampled on a regular barycentric grid of the unit
/// equilateral triangle.
///
/// Grid order: for i = 0..n (rows from the v0-v1 edge toward v2), for
/// j = 0..n-i, the sample has barycentric weights
/// (w0, w1, w2) = ((n - i - j) / n, j / n, i / n) on the facet vertices
/// (v0, v1, v2). Sample k of two patches of the same facet therefore refers
/// to the same surface point.
struct CanonicalPatch {
  int subdivision = 0;
  std::vector<double> samples;

  static std::size_t sample_count(int n) { return static_cast<std::size_t>(n + 1) * (n + 2) / 2; }
};

constexpr int kDefaultSubdivision = 8;

/// Views that see a facet at a larger angle between its normal and the ray
/// to the camera are left out of its PRI. 90 keeps every front-facing view.
constexpr double kDefaultMaxIncidenceDeg = 70.0;

std::vector<std::array<double, 3>> barycentric_grid(int n);

struct View {
  Camera camera;
  GrayImage image;
};

/// Projects each grid point of `face` into `image` and samples bilinearly.
/// Throws PreconditionError if the facet is not visible from `camera`.
CanonicalPatch sample_patch(const GrayImage& image, const Camera& camera, const Bvh& bvh, std::size_t face,
                            int n = kDefaultSubdivision);

/// Sum of squared differences. Throws PreconditionError on mismatched grids.
double ssd(const CanonicalPatch& a, const CanonicalPatch& b);
/// Zero-mean normalized cross-correlation clamped to [-1, 1]; 0 when either
/// patch has variance below 1e-12.
double ncc(const CanonicalPatch& a, const CanonicalPatch& b);
/// Higher is more consistent for both metrics: ncc, or -ssd.
double similarity(Metric metric, const CanonicalPatch& a, const CanonicalPatch& b);

struct PairMean {
  double mean = 0.0;
  std::size_t pairs = 0;
};

/// Mean of sim(p_i, p_j) over all unordered pairs i < j.
template <typename Sim>
PairMean pairwise_mean(std::span<const CanonicalPatch> patches, Sim&& sim) {
  PairMean out;
  double sum = 0.0;
  for (std::size_t i = 0; i < patches.size(); ++i) {
    for (std::size_t j = i + 1; j < patches.size(); ++j) {
      sum += sim(patches[i], patches[j]);
      ++out.pairs;
    }
  }
  if (out.pairs > 0) out.mean = sum / static_cast<double>(out.pairs);
  return out;
}

struct FacetPri {
  double value = 0.0;
  std::uint32_t view_count = 0;
  bool defined = false;
};

/// Photo-consistency reconstruction index of one facet: the average pairwise
/// similarity of its patches over the views that see it. Undefined with fewer
/// than two views.
FacetPri pri(const Bvh& bvh, std::span<const View> views, std::size_t face, Metric metric,
             int n = kDefaultSubdivision, double max_incidence_deg = kDefaultMaxIncidenceDeg);

struct PriOptions {
  Metric metric = Metric::kSsd;
  std::size_t k = 10;
  int subdivision = kDefaultSubdivision;
  unsigned threads = 1;
  double max_incidence_deg = kDefaultMaxIncidenceDeg;
  /// Rank facets with fewer than two usable views ahead of all defined ones.
  bool undefined_first = false;
};

/// facet_visible plus the grazing-angle cutoff used for PRI.
bool facet_observed(const Camera& camera, const Bvh& bvh, std::size_t face, double max_incidence_deg);

struct PriReport {
  Metric metric = Metric::kSsd;
  std::size_t k = 10;
  std::vector<FacetPri> facets;
  std::vector<std::uint32_t> worst_facets;
  std::vector<std::uint32_t> worst_vertices;
};

/// Total order used to pick the worst facets: ascending PRI with undefined
/// facets after the defined ones (or before them), ties by face index.
std::vector<std::uint32_t> rank_facets(std::span<const FacetPri> facets, bool undefined_first = false);

/// Builds the report (worst-K facets and their vertex union) from a per-facet table.
PriReport make_pri_report(const TriangleMesh& mesh, std::vector<FacetPri> facets, Metric metric, std::size_t k,
                          bool undefined_first = false);

/// PRI of every facet, then the K worst. Throws PreconditionError if k == 0.
PriReport worst_facets(const Bvh& bvh, std::span<const View> views, const PriOptions& options);

/// Incremental PRI table for an append-only view set: when views are added,
/// only facets seen by a new view are re-evaluated.
class PriEstimator {
 public:
  PriEstimator(const Bvh& bvh, PriOptions options);

  /// Appends views and refreshes affected facets. Returns the number of
  /// facets whose PRI was recomputed.
  std::size_t add_views(std::span<const View> views);

  PriReport report() const;
  const std::vector<View>& views() const { return views_; }
  const std::vector<FacetPri>& facets() const { return facets_; }

 private:
  const Bvh* bvh_;
  PriOptions options_;
  std::vector<View> views_;
  std::vector<std::vector<std::uint32_t>> visible_;  // per facet: indices into views_
  std::vector<FacetPri> facets_;
};

/// Heat-map colors: green for the most consistent facet, red for the least,
/// interpolated in hue over the defined PRI range of this mesh. Undefined
/// facets are gray.
std::vector<Rgb> pri_colors(const PriReport& report);

/// { "metric", "K", "facets": [ {"face","pri","views","defined"} ],
///   "worst_facets": [...], "worst_vertices": [...] }. Undefined PRI is null.
std::string format_pri_json(const PriReport& report);
/// Parses the JSON above (used to feed a saved report into the planner).
PriReport parse_pri_json(const std::string& text);

}  // namespace nbv
