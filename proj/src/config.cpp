#include "sobolrf/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "sobolrf/errors.hpp"

namespace sobolrf {

ForestConfig ForestConfig::resolve(std::size_t n, std::size_t p) const {
  ForestConfig c = *this;
  if (c.n_trees == 0) throw ConfigError("n_trees must be positive");
  if (c.subsample_size == 0) {
    c.subsample_size = static_cast<std::size_t>(std::ceil(0.632 * static_cast<double>(n)));
  }
  if (c.subsample_size > n) {
    throw ConfigError("subsample_size " + std::to_string(c.subsample_size) +
                      " exceeds number of observations " + std::to_string(n));
  }
  if (c.max_leaves == 0) c.max_leaves = std::numeric_limits<std::size_t>::max();
  if (c.max_leaves < 2) throw ConfigError("max_leaves must be at least 2");
  if (c.min_node_size == 0) throw ConfigError("min_node_size must be positive");
  if (c.mtry == 0) {
    c.mtry = std::max<std::size_t>(
        static_cast<std::size_t>(std::ceil(static_cast<double>(p) / 3.0)), 1);
  }
  if (c.mtry > p) {
    throw ConfigError("mtry " + std::to_string(c.mtry) + " exceeds number of covariates " +
                      std::to_string(p));
  }
  if (!(c.gamma >= 0.0 && c.gamma < 0.5)) throw ConfigError("gamma must lie in [0, 0.5)");
  if (!(c.delta >= 0.0 && c.delta <= 1.0)) throw ConfigError("delta must lie in [0, 1]");
  return c;
}

void ForestConfig::require_oob(std::size_t n) const {
  if (subsample_size + 2 > n) {
    throw ConfigError("out-of-bag estimates need subsample_size <= n - 2 (subsample_size = " +
                       std::to_string(subsample_size) + ", n = " + std::to_string(n) + ")");
  }
}

void to_json(nlohmann::json& j, const ForestConfig& c) {
  const bool unlimited = c.max_leaves == std::numeric_limits<std::size_t>::max();
  j = nlohmann::json{{"n_trees", c.n_trees},
                     {"subsample_size", c.subsample_size},
                     {"max_leaves", unlimited ? 0 : c.max_leaves},
                     {"min_node_size", c.min_node_size},
                     {"mtry", c.mtry},
                     {"gamma", c.gamma},
                     {"delta", c.delta},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, ForestConfig& c) {
  static const char* known[] = {"n_trees", "subsample_size", "max_leaves", "min_node_size",
                                "mtry",    "gamma",          "delta",      "seed"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      throw ConfigError("unknown forest config field '" + key + "'");
    }
  }
  ForestConfig d;
  c.n_trees = j.value("n_trees", d.n_trees);
  c.subsample_size = j.value("subsample_size", d.subsample_size);
  c.max_leaves = j.value("max_leaves", d.max_leaves);
  c.min_node_size = j.value("min_node_size", d.min_node_size);
  c.mtry = j.value("mtry", d.mtry);
  c.gamma = j.value("gamma", d.gamma);
  c.delta = j.value("delta", d.delta);
  c.seed = j.value("seed", d.seed);
}

ForestConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return nlohmann::json::parse(in).get<ForestConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad config " + path.string() + ": " + e.what());
  }
}

}  // namespace sobolrf
