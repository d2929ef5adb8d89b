#include "urlflow/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "urlflow/error.hpp"

namespace urlflow {

using nlohmann::json;

LagKernelGrid RunConfig::grid() const {
  return lag_edges.empty() ? LagKernelGrid::default_for(delta_t_max)
                           : LagKernelGrid(lag_edges);
}

GroupMap RunConfig::group_map() const { return GroupMap(groups, communities); }

GapSchedule RunConfig::gap_schedule() const { return GapSchedule(gaps); }

void RunConfig::validate() const {
  if (communities.empty()) throw ConfigError("config lists no communities");
  if (delta_t <= 0) throw ConfigError("delta_t must be positive");
  if (delta_t_max < 1) throw ConfigError("delta_t_max must be >= 1");
  if (max_bins < 1) throw ConfigError("max_bins must be >= 1");
  try {
    auto g = grid();
    if (g.max_lag() != delta_t_max) {
      throw ConfigError("last lag edge must equal delta_t_max + 1");
    }
    priors.validate();
    schedule.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  std::set<std::string> req(required.begin(), required.end());
  for (const auto& n : required) communities.at(n);
  for (const auto& n : any_of) {
    communities.at(n);
    if (req.count(n)) {
      throw ConfigError("community '" + n + "' is in both required and any_of");
    }
  }
  if (!(drop_fraction >= 0.0 && drop_fraction <= 1.0)) {
    throw ConfigError("drop_fraction must lie in [0, 1]");
  }
  if (workers < 1) throw ConfigError("workers must be >= 1");
  gap_schedule();
  group_map();
}

namespace {

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (auto k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (auto it = obj.find(key); it != obj.end()) out = it->get<T>();
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  try {
    const json doc = json::parse(text);
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown(doc, {"communities", "groups", "binning", "filter", "priors",
                         "gibbs", "seed", "workers", "paths"},
                   "config");

    for (const auto& n : doc.at("communities")) {
      cfg.communities.add(n.get<std::string>());
    }
    if (auto it = doc.find("groups"); it != doc.end()) {
      for (const auto& g : *it) {
        cfg.groups.push_back({g.at("name").get<std::string>(),
                              g.at("communities").get<std::vector<std::string>>()});
      }
    }
    if (auto it = doc.find("binning"); it != doc.end()) {
      reject_unknown(*it, {"delta_t", "delta_t_max", "lag_edges", "max_bins"}, "binning");
      read(*it, "delta_t", cfg.delta_t);
      read(*it, "delta_t_max", cfg.delta_t_max);
      read(*it, "max_bins", cfg.max_bins);
      read(*it, "lag_edges", cfg.lag_edges);
    }
    if (auto it = doc.find("filter"); it != doc.end()) {
      reject_unknown(*it, {"required", "any_of", "drop_fraction", "gaps"}, "filter");
      read(*it, "required", cfg.required);
      read(*it, "any_of", cfg.any_of);
      read(*it, "drop_fraction", cfg.drop_fraction);
      if (auto gaps = it->find("gaps"); gaps != it->end()) {
        for (const auto& g : *gaps) {
          cfg.gaps.push_back({cfg.communities.at(g.at("community").get<std::string>()),
                              g.at("start").get<std::int64_t>(),
                              g.at("end").get<std::int64_t>()});
        }
      }
    }
    if (auto it = doc.find("priors"); it != doc.end()) {
      reject_unknown(*it, {"lambda0_shape", "lambda0_rate", "weight_shape",
                           "weight_rate", "pmf_concentration"},
                     "priors");
      read(*it, "lambda0_shape", cfg.priors.lambda0_shape);
      read(*it, "lambda0_rate", cfg.priors.lambda0_rate);
      read(*it, "weight_shape", cfg.priors.weight_shape);
      read(*it, "weight_rate", cfg.priors.weight_rate);
      read(*it, "pmf_concentration", cfg.priors.pmf_concentration);
    }
    if (auto it = doc.find("gibbs"); it != doc.end()) {
      reject_unknown(*it, {"burn_in", "samples", "thin"}, "gibbs");
      read(*it, "burn_in", cfg.schedule.burn_in);
      read(*it, "samples", cfg.schedule.samples);
      read(*it, "thin", cfg.schedule.thin);
    }
    read(doc, "seed", cfg.seed);
    read(doc, "workers", cfg.workers);
    if (auto it = doc.find("paths"); it != doc.end()) {
      reject_unknown(*it, {"input", "store", "posteriors", "params", "out"}, "paths");
      auto path = [&](const char* key, auto& slot) {
        if (auto p = it->find(key); p != it->end()) slot = p->template get<std::string>();
      };
      path("input", cfg.input);
      path("store", cfg.store);
      path("posteriors", cfg.posteriors);
      path("params", cfg.params);
      path("out", cfg.out);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig cfg;
  try {
    cfg = parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  // Relative paths are relative to the config file.
  const auto base = path.parent_path();
  for (auto* p : {&cfg.input, &cfg.store, &cfg.posteriors, &cfg.params, &cfg.out}) {
    if (*p && p->value().is_relative()) *p = base / p->value();
  }
  return cfg;
}

}  // namespace urlflow
