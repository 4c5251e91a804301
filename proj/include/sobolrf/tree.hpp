#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "sobolrf/config.hpp"
#include "sobolrf/dataset.hpp"
#include "sobolrf/rng.hpp"

namespace sobolrf {

struct Node {
  static constexpr int kLeaf = -1;

  int feature = kLeaf;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int depth = 0;
  std::size_t count = 0;       // in-bag observations reaching the node
  double value = 0.0;          // in-bag response mean
  double left_fraction = 0.0;  // count(left) / count, splits only

  bool is_leaf() const { return feature == kLeaf; }
};

// A fitted regression tree. Node 0 is the root; x goes left iff
// x[feature] <= threshold.
class Tree {
 public:
  Tree() = default;
  Tree(std::vector<Node> nodes, std::vector<std::size_t> in_bag, std::size_t n_obs,
       std::size_t p);

  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(std::size_t id) const { return nodes_[id]; }
  // Sorted, duplicate-free training rows of this tree.
  const std::vector<std::size_t>& in_bag() const { return in_bag_; }
  // Rows of the training set not in in_bag(), ascending.
  std::vector<std::size_t> oob_rows() const;
  std::size_t n_obs() const { return n_obs_; }
  std::size_t p() const { return p_; }
  std::size_t leaf_count() const;
  int max_depth() const;
  // Distinct covariates used by at least one split, ascending.
  std::vector<std::size_t> split_features() const;
  bool splits_on(std::size_t feature) const;

  // Routes through the tree reading covariate j via value_of(j).
  template <typename ValueOf>
  std::size_t leaf_index(ValueOf&& value_of) const {
    std::size_t id = 0;
    while (!nodes_[id].is_leaf()) {
      const Node& nd = nodes_[id];
      id = value_of(static_cast<std::size_t>(nd.feature)) <= nd.threshold
               ? static_cast<std::size_t>(nd.left)
               : static_cast<std::size_t>(nd.right);
    }
    return id;
  }

  double predict(std::span<const double> x) const {
    return nodes_[leaf_index([&](std::size_t j) { return x[j]; })].value;
  }
  double predict_row(const Dataset& data, std::size_t i) const {
    return nodes_[leaf_index([&](std::size_t j) { return data.x(i, j); })].value;
  }

 private:
  std::vector<Node> nodes_;
  std::vector<std::size_t> in_bag_;
  std::size_t n_obs_ = 0;
  std::size_t p_ = 0;
  std::vector<bool> uses_feature_;
};

// Grows a randomized CART tree on a subsample of `config.subsample_size` rows
// drawn without replacement from `data` with `rng`. `config` must already be
// resolved for the dataset shape.
Tree fit_tree(const Dataset& data, const ForestConfig& config, Rng& rng);

// Grows the tree on an explicit set of training rows.
//
// Growth is best-first: the leaf whose best admissible split has the largest
// decrease of in-bag squared error is split next, until max_leaves leaves
// exist or no leaf has an admissible split. At each node the candidate count
// is 1 with probability delta and mtry otherwise; thresholds are midpoints
// between consecutive distinct in-bag values. Ties go to the lowest feature
// index, then the lowest threshold.
Tree grow_tree(const Dataset& data, std::vector<std::size_t> in_bag,
               const ForestConfig& config, Rng& rng);

double predict_tree(const Tree& tree, std::span<const double> x);

void to_json(nlohmann::json& j, const Tree& tree);
void from_json(const nlohmann::json& j, Tree& tree);

}  // namespace sobolrf
