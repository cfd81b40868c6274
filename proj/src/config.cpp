#include "nbv/config.hpp"

#include "nbv/error.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>
#include <vector>

namespace nbv {

using nlohmann::json;

void RunConfig::validate() const {
  if (k == 0) throw InputError("K must be >= 1");
  if (patch_subdivision < 1) throw InputError("patch_subdivision must be >= 1");
  if (!(max_incidence_deg > 0.0 && max_incidence_deg <= 90.0)) {
    throw InputError("max_incidence_deg must lie in (0, 90]");
  }
  if (threads && *threads == 0) throw InputError("threads must be >= 1");
  energy.weights.validate();
  energy.params.validate();
}

namespace {

double number(const json& obj, const std::string& key, const std::string& path) {
  const json& v = obj.at(key);
  if (!v.is_number()) throw FormatError(fmt::format("config: '{}' must be a number", path));
  return v.get<double>();
}

std::uint64_t non_negative_int(const json& obj, const std::string& key) {
  const json& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw FormatError(fmt::format("config: '{}' must be a non-negative integer", key));
  }
  return v.get<std::uint64_t>();
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw FormatError(fmt::format("config: '{}' must be an object", where));
  for (const auto& [key, value] : obj.items()) {
    if (allowed.count(key) == 0) throw FormatError(fmt::format("config: unknown key '{}{}'", where, key));
  }
}

}  // namespace

RunConfig apply_config_json(RunConfig base, const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw FormatError(fmt::format("config: {}", e.what()));
  }
  reject_unknown(doc, {"weights", "params", "incidence_sign", "metric", "K", "patch_subdivision",
                      "max_incidence_deg", "undefined_first", "seed", "threads"},
                 "");

  if (doc.contains("weights")) {
    const json& w = doc["weights"];
    reject_unknown(w, {"mu1", "mu2", "mu3", "mu4"}, "weights.");
    auto& dst = base.energy.weights;
    if (w.contains("mu1")) dst.mu1 = number(w, "mu1", "weights.mu1");
    if (w.contains("mu2")) dst.mu2 = number(w, "mu2", "weights.mu2");
    if (w.contains("mu3")) dst.mu3 = number(w, "mu3", "weights.mu3");
    if (w.contains("mu4")) dst.mu4 = number(w, "mu4", "weights.mu4");
  }
  if (doc.contains("params")) {
    const json& p = doc["params"];
    reject_unknown(p, {"penalty", "delta", "mu_angle_deg", "kappa"}, "params.");
    auto& dst = base.energy.params;
    if (p.contains("penalty")) dst.penalty = number(p, "penalty", "params.penalty");
    if (p.contains("delta")) dst.delta = number(p, "delta", "params.delta");
    if (p.contains("mu_angle_deg")) dst.mu_angle_deg = number(p, "mu_angle_deg", "params.mu_angle_deg");
    if (p.contains("kappa")) dst.kappa = number(p, "kappa", "params.kappa");
  }
  if (doc.contains("incidence_sign")) {
    if (!doc["incidence_sign"].is_string()) throw FormatError("config: 'incidence_sign' must be a string");
    base.energy.incidence_sign = parse_incidence_sign(doc["incidence_sign"].get<std::string>());
  }
  if (doc.contains("metric")) {
    if (!doc["metric"].is_string()) throw FormatError("config: 'metric' must be a string");
    base.metric = parse_metric(doc["metric"].get<std::string>());
  }
  if (doc.contains("K")) base.k = non_negative_int(doc, "K");
  if (doc.contains("patch_subdivision")) base.patch_subdivision = static_cast<int>(non_negative_int(doc, "patch_subdivision"));
  if (doc.contains("max_incidence_deg")) base.max_incidence_deg = number(doc, "max_incidence_deg", "max_incidence_deg");
  if (doc.contains("undefined_first")) {
    if (!doc["undefined_first"].is_boolean()) throw FormatError("config: 'undefined_first' must be a boolean");
    base.undefined_first = doc["undefined_first"].get<bool>();
  }
  if (doc.contains("seed")) base.seed = non_negative_int(doc, "seed");
  if (doc.contains("threads")) base.threads = static_cast<unsigned>(non_negative_int(doc, "threads"));
  base.validate();
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open config '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return apply_config_json(std::move(base), ss.str());
  } catch (const FormatError& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  } catch (const InputError& e) {
    throw InputError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::string format_config_json(const RunConfig& config) {
  nlohmann::ordered_json doc;
  const auto& w = config.energy.weights;
  const auto& p = config.energy.params;
  doc["weights"] = {{"mu1", w.mu1}, {"mu2", w.mu2}, {"mu3", w.mu3}, {"mu4", w.mu4}};
  doc["params"] = {{"penalty", p.penalty}, {"delta", p.delta}, {"mu_angle_deg", p.mu_angle_deg}, {"kappa", p.kappa}};
  doc["incidence_sign"] = to_string(config.energy.incidence_sign);
  doc["metric"] = to_string(config.metric);
  doc["K"] = config.k;
  doc["patch_subdivision"] = config.patch_subdivision;
  doc["max_incidence_deg"] = config.max_incidence_deg;
  doc["undefined_first"] = config.undefined_first;
  doc["seed"] = config.seed;
  return doc.dump(2) + "\n";
}

EnergyWeights parse_weights(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw InputError(fmt::format("weights: '{}' is not a number", item));
    values.push_back(v);
  }
  if (values.size() != 4) throw InputError(fmt::format("weights: expected 4 comma-separated values, got '{}'", text));
  EnergyWeights w{values[0], values[1], values[2], values[3]};
  w.validate();
  return w;
}

RunConfig resolve_config(const std::optional<std::filesystem::path>& config_file, const ConfigOverrides& o) {
  RunConfig config;
  if (config_file) config = load_config(*config_file, config);
  if (o.metric) config.metric = parse_metric(*o.metric);
  if (o.k) config.k = *o.k;
  if (o.weights) config.energy.weights = parse_weights(*o.weights);
  if (o.kappa) config.energy.params.kappa = *o.kappa;
  if (o.delta) config.energy.params.delta = *o.delta;
  if (o.penalty) config.energy.params.penalty = *o.penalty;
  if (o.incidence_sign) config.energy.incidence_sign = parse_incidence_sign(*o.incidence_sign);
  if (o.max_incidence_deg) config.max_incidence_deg = *o.max_incidence_deg;
  if (o.undefined_first) config.undefined_first = *o.undefined_first;
  if (o.seed) config.seed = *o.seed;
  if (o.threads) config.threads = *o.threads;
  config.validate();
  return config;
}

}  // namespace nbv
