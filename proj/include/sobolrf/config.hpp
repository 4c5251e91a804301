#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

namespace sobolrf {

// Forest growing parameters. Zero in subsample_size, max_leaves or mtry means
// "use the default for this dataset", resolved by resolve().
struct ForestConfig {
  std::size_t n_trees = 300;
  std::size_t subsample_size = 0;  // default ceil(0.632 n), without replacement
  std::size_t max_leaves = 0;      // default unlimited
  std::size_t min_node_size = 5;   // minimum in-bag count of every child
  std::size_t mtry = 0;            // default max(ceil(p / 3), 1)
  double gamma = 0.0;              // minimum child fraction, 0 disables
  double delta = 0.0;              // probability of mtry = 1 at a node, 0 disables
  std::uint64_t seed = 1;

  // Copy with defaults filled in for a dataset of shape n x p. Throws
  // ConfigError on out-of-range values.
  ForestConfig resolve(std::size_t n, std::size_t p) const;

  // Additionally requires two out-of-bag observations per tree.
  void require_oob(std::size_t n) const;
};

void to_json(nlohmann::json& j, const ForestConfig& c);
void from_json(const nlohmann::json& j, ForestConfig& c);

ForestConfig load_config(const std::filesystem::path& path);

}  // namespace sobolrf
