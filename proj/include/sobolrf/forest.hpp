#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "sobolrf/config.hpp"
#include "sobolrf/dataset.hpp"
#include "sobolrf/tree.hpp"

namespace sobolrf {

// M trees, each grown on its own without-replacement subsample, plus the
// out-of-bag tree sets: oob_trees(i) lists the trees that did not see row i.
class Forest {
 public:
  Forest() = default;
  Forest(std::vector<Tree> trees, ForestConfig config);

  const std::vector<Tree>& trees() const { return trees_; }
  const Tree& tree(std::size_t l) const { return trees_[l]; }
  std::size_t size() const { return trees_.size(); }
  const ForestConfig& config() const { return config_; }
  std::size_t n_obs() const { return oob_trees_.size(); }
  std::size_t p() const { return trees_.empty() ? 0 : trees_.front().p(); }

  const std::vector<std::size_t>& oob_trees(std::size_t i) const { return oob_trees_[i]; }

 private:
  std::vector<Tree> trees_;
  ForestConfig config_;
  std::vector<std::vector<std::size_t>> oob_trees_;
};

// Tree l is grown with Rng(config.seed).stream(l).
Forest fit_forest(const Dataset& data, const ForestConfig& config);

double predict_forest(const Forest& forest, std::span<const double> x);
std::vector<double> predict_forest(const Forest& forest, const Dataset& data);

struct OobPrediction {
  double value = 0.0;
  bool defined = false;
};

OobPrediction oob_predict(const Forest& forest, const Dataset& data, std::size_t i);
std::vector<OobPrediction> oob_predict_all(const Forest& forest, const Dataset& data);

struct OobError {
  double mse = 0.0;
  std::size_t n_defined = 0;  // observations with a non-empty out-of-bag tree set
};

// Mean squared out-of-bag error over observations with at least one
// out-of-bag tree. Throws ComputeError when there are none.
OobError oob_error(const Forest& forest, const Dataset& data);

double mean_squared_error(const Forest& forest, const Dataset& test);

void to_json(nlohmann::json& j, const Forest& forest);
void from_json(const nlohmann::json& j, Forest& forest);
void save_forest(const Forest& forest, const std::filesystem::path& path);
Forest load_forest(const std::filesystem::path& path);

}  // namespace sobolrf
