#pragma once

#include "nbv/energy.hpp"
#include "nbv/photoconsistency.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace nbv {

/// Everything a pipeline run needs besides its input data.
struct RunConfig {
  Metric metric = Metric::kSsd;
  std::size_t k = 10;
  int patch_subdivision = kDefaultSubdivision;
  double max_incidence_deg = kDefaultMaxIncidenceDeg;
  bool undefined_first = false;
  EnergyConfig energy;
  std::uint64_t seed = 0;
  std::optional<unsigned> threads;

  void validate() const;
  PriOptions pri_options() const {
    return {metric, k, patch_subdivision, threads.value_or(1), max_incidence_deg, undefined_first};
  }
  unsigned thread_count() const { return threads.value_or(1); }
};

/// Applies the keys present in a JSON config document on top of `base`:
/// weights.{mu1..mu4}, params.{penalty,delta,mu_angle_deg,kappa},
/// incidence_sign, metric, K, patch_subdivision, max_incidence_deg,
/// undefined_first, seed, threads.
/// Unknown keys are rejected.
RunConfig apply_config_json(RunConfig base, const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

std::string format_config_json(const RunConfig& config);

/// Values given on the command line; they win over the config file.
struct ConfigOverrides {
  std::optional<std::string> metric;
  std::optional<std::size_t> k;
  std::optional<std::string> weights;  // "m1,m2,m3,m4"
  std::optional<double> kappa;
  std::optional<double> delta;
  std::optional<double> penalty;
  std::optional<std::string> incidence_sign;
  std::optional<double> max_incidence_deg;
  std::optional<bool> undefined_first;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

/// Parses "m1,m2,m3,m4".
EnergyWeights parse_weights(const std::string& text);

/// Built-in defaults, then the config file (if any), then the overrides.
RunConfig resolve_config(const std::optional<std::filesystem::path>& config_file, const ConfigOverrides& overrides);

}  // namespace nbv
