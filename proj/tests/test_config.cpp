#include "nbv/config.hpp"
#include "nbv/error.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace nbv;

namespace {

std::filesystem::path write_config(const std::string& name, const std::string& text) {
  const auto dir = std::filesystem::temp_directory_path() / "nbv_config_tests";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path) << text;
  return path;
}

const char* kFull = R"({
  "metric": "ncc", "K": 7, "patch_subdivision": 5, "max_incidence_deg": 80, "undefined_first": true,
  "weights": {"mu1": 1, "mu2": 2, "mu3": 3, "mu4": 4},
  "params": {"penalty": -5, "delta": 0.4, "mu_angle_deg": 50, "kappa": 4},
  "incidence_sign": "penalize", "seed": 11, "threads": 2
})";

}  // namespace

TEST_CASE("defaults") {
  const RunConfig c = resolve_config(std::nullopt, {});
  CHECK(c.metric == Metric::kSsd);
  CHECK(c.k == 10);
  CHECK(c.patch_subdivision == 8);
  CHECK(c.energy.weights.mu1 == 0.6);
  CHECK(c.energy.weights.mu2 == 1.6);
  CHECK(c.energy.weights.mu3 == 2.1);
  CHECK(c.energy.weights.mu4 == 0.6);
  CHECK(c.energy.params.penalty == -10.0);
  CHECK(c.energy.params.delta == 0.33);
  CHECK(c.energy.params.mu_angle_deg == 55.0);
  CHECK(c.energy.params.kappa == 8.0);
  CHECK(c.energy.incidence_sign == IncidenceSign::kReward);
  CHECK(c.seed == 0);
  CHECK_FALSE(c.threads);
  CHECK_FALSE(c.undefined_first);
}

TEST_CASE("config file overrides defaults") {
  const RunConfig c = resolve_config(write_config("full.json", kFull), {});
  CHECK(c.metric == Metric::kNcc);
  CHECK(c.k == 7);
  CHECK(c.patch_subdivision == 5);
  CHECK(c.max_incidence_deg == 80.0);
  CHECK(c.undefined_first);
  CHECK(c.energy.weights.mu3 == 3.0);
  CHECK(c.energy.params.penalty == -5.0);
  CHECK(c.energy.params.delta == 0.4);
  CHECK(c.energy.params.mu_angle_deg == 50.0);
  CHECK(c.energy.params.kappa == 4.0);
  CHECK(c.energy.incidence_sign == IncidenceSign::kPenalize);
  CHECK(c.seed == 11);
  CHECK(c.threads == 2u);
}

TEST_CASE("flags override the config file key by key") {
  const auto file = write_config("full.json", kFull);
  auto check_only = [&](const ConfigOverrides& o, auto&& check) {
    const RunConfig c = resolve_config(file, o);
    check(c);
  };
  check_only({.metric = "ssd"}, [](const RunConfig& c) {
    CHECK(c.metric == Metric::kSsd);
    CHECK(c.k == 7);
  });
  check_only({.k = 3}, [](const RunConfig& c) {
    CHECK(c.k == 3);
    CHECK(c.metric == Metric::kNcc);
  });
  check_only({.weights = "0.6,1.6,2.1,0.6"}, [](const RunConfig& c) {
    CHECK(c.energy.weights.mu1 == 0.6);
    CHECK(c.energy.weights.mu4 == 0.6);
    CHECK(c.energy.params.kappa == 4.0);
  });
  check_only({.kappa = 9.0}, [](const RunConfig& c) {
    CHECK(c.energy.params.kappa == 9.0);
    CHECK(c.energy.params.delta == 0.4);
  });
  check_only({.delta = 0.2}, [](const RunConfig& c) { CHECK(c.energy.params.delta == 0.2); });
  check_only({.penalty = -3.0}, [](const RunConfig& c) { CHECK(c.energy.params.penalty == -3.0); });
  check_only({.incidence_sign = "reward"},
             [](const RunConfig& c) { CHECK(c.energy.incidence_sign == IncidenceSign::kReward); });
  check_only({.max_incidence_deg = 60.0}, [](const RunConfig& c) { CHECK(c.max_incidence_deg == 60.0); });
  check_only({.undefined_first = false}, [](const RunConfig& c) { CHECK_FALSE(c.undefined_first); });
  check_only({.seed = 7}, [](const RunConfig& c) {
    CHECK(c.seed == 7);
    CHECK(c.threads == 2u);
  });
  check_only({.threads = 8u}, [](const RunConfig& c) { CHECK(c.threads == 8u); });
}

TEST_CASE("partial config keeps defaults for missing keys") {
  const RunConfig c = resolve_config(write_config("partial.json", R"({"weights": {"mu2": 5}})"), {});
  CHECK(c.energy.weights.mu1 == 0.6);
  CHECK(c.energy.weights.mu2 == 5.0);
  CHECK(c.k == 10);
}

TEST_CASE("bad config files") {
  CHECK_THROWS_WITH_AS(resolve_config(write_config("u.json", R"({"gamma": 1})"), {}), doctest::Contains("gamma"),
                       FormatError);
  CHECK_THROWS_WITH_AS(resolve_config(write_config("w.json", R"({"weights": {"mu5": 1}})"), {}),
                       doctest::Contains("mu5"), FormatError);
  CHECK_THROWS_AS(resolve_config(write_config("t.json", R"({"K": "ten"})"), {}), FormatError);
  CHECK_THROWS_AS(resolve_config(write_config("s.json", "{"), {}), FormatError);
  CHECK_THROWS_AS(resolve_config(write_config("k.json", R"({"K": 0})"), {}), InputError);
  CHECK_THROWS_AS(resolve_config(std::filesystem::path("/nonexistent/config.json"), {}), InputError);
  CHECK_THROWS_AS(resolve_config(std::nullopt, {.metric = "sad"}), InputError);
  CHECK_THROWS_AS(resolve_config(std::nullopt, {.max_incidence_deg = 95.0}), InputError);
}

TEST_CASE("weights flag") {
  const EnergyWeights w = parse_weights("0.6,1.6,2.1,0.6");
  CHECK(w.mu1 == 0.6);
  CHECK(w.mu2 == 1.6);
  CHECK(w.mu3 == 2.1);
  CHECK(w.mu4 == 0.6);
  CHECK(parse_weights("1,2,3,4").mu2 == 2.0);
  CHECK_THROWS_AS(parse_weights("1,2,3"), InputError);
  CHECK_THROWS_AS(parse_weights("1,2,3,4,5"), InputError);
  CHECK_THROWS_AS(parse_weights("1,x,3,4"), InputError);
  CHECK_THROWS_AS(resolve_config(std::nullopt, {.weights = "1,-2,3,4"}), InputError);
}

TEST_CASE("config JSON round trip") {
  const RunConfig c = resolve_config(write_config("full.json", kFull), {});
  const std::string text = format_config_json(c);
  const RunConfig back = apply_config_json(RunConfig{}, text);
  CHECK(format_config_json(back) == text);
}
