#include "sobolrf/forest.hpp"

#include <fstream>
#include <limits>

#include "sobolrf/errors.hpp"
#include "sobolrf/parallel.hpp"

namespace sobolrf {

Forest::Forest(std::vector<Tree> trees, ForestConfig config)
    : trees_(std::move(trees)), config_(config) {
  if (trees_.empty()) return;
  oob_trees_.assign(trees_.front().n_obs(), {});
  for (std::size_t l = 0; l < trees_.size(); ++l) {
    for (std::size_t i : trees_[l].oob_rows()) oob_trees_[i].push_back(l);
  }
}

Forest fit_forest(const Dataset& data, const ForestConfig& config) {
  const ForestConfig resolved = config.resolve(data.n(), data.p());
  const Rng root(resolved.seed);
  std::vector<Tree> trees(resolved.n_trees);
  parallel_for(trees.size(), [&](std::size_t l) {
    Rng rng = root.stream(l);
    trees[l] = fit_tree(data, resolved, rng);
  });
  return Forest(std::move(trees), resolved);
}

double predict_forest(const Forest& forest, std::span<const double> x) {
  double sum = 0.0;
  for (const Tree& t : forest.trees()) sum += t.predict(x);
  return sum / static_cast<double>(forest.size());
}

std::vector<double> predict_forest(const Forest& forest, const Dataset& data) {
  std::vector<double> out(data.n());
  parallel_for(data.n(), [&](std::size_t i) {
    double sum = 0.0;
    for (const Tree& t : forest.trees()) sum += t.predict_row(data, i);
    out[i] = sum / static_cast<double>(forest.size());
  });
  return out;
}

OobPrediction oob_predict(const Forest& forest, const Dataset& data, std::size_t i) {
  const auto& trees = forest.oob_trees(i);
  if (trees.empty()) return {};
  double sum = 0.0;
  for (std::size_t l : trees) sum += forest.tree(l).predict_row(data, i);
  return {sum / static_cast<double>(trees.size()), true};
}

std::vector<OobPrediction> oob_predict_all(const Forest& forest, const Dataset& data) {
  std::vector<OobPrediction> out(data.n());
  parallel_for(data.n(), [&](std::size_t i) { out[i] = oob_predict(forest, data, i); });
  return out;
}

OobError oob_error(const Forest& forest, const Dataset& data) {
  if (data.n() != forest.n_obs()) {
    throw ComputeError("out-of-bag error needs the training dataset");
  }
  const auto preds = oob_predict_all(forest, data);
  OobError err;
  double sum = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (!preds[i].defined) continue;
    const double r = data.y(i) - preds[i].value;
    sum += r * r;
    ++err.n_defined;
  }
  if (err.n_defined == 0) throw ComputeError("no observation has an out-of-bag tree");
  err.mse = sum / static_cast<double>(err.n_defined);
  return err;
}

double mean_squared_error(const Forest& forest, const Dataset& test) {
  const auto preds = predict_forest(forest, test);
  double sum = 0.0;
  for (std::size_t i = 0; i < test.n(); ++i) {
    const double r = test.y(i) - preds[i];
    sum += r * r;
  }
  return sum / static_cast<double>(test.n());
}

void to_json(nlohmann::json& j, const Forest& forest) {
  j = nlohmann::json{{"config", forest.config()}, {"trees", forest.trees()}};
}

void from_json(const nlohmann::json& j, Forest& forest) {
  ForestConfig config = j.at("config").get<ForestConfig>();
  if (config.max_leaves == 0) config.max_leaves = std::numeric_limits<std::size_t>::max();
  forest = Forest(j.at("trees").get<std::vector<Tree>>(), config);
}

void save_forest(const Forest& forest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << nlohmann::json(forest).dump();
}

Forest load_forest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in).get<Forest>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad forest file " + path.string() + ": " + e.what());
  }
}

}  // namespace sobolrf
