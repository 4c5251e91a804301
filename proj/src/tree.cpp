#include "sobolrf/tree.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "sobolrf/errors.hpp"

namespace sobolrf {

Tree::Tree(std::vector<Node> nodes, std::vector<std::size_t> in_bag, std::size_t n_obs,
           std::size_t p)
    : nodes_(std::move(nodes)), in_bag_(std::move(in_bag)), n_obs_(n_obs), p_(p),
      uses_feature_(p, false) {
  for (const Node& nd : nodes_) {
    if (!nd.is_leaf()) uses_feature_[static_cast<std::size_t>(nd.feature)] = true;
  }
}

std::vector<std::size_t> Tree::oob_rows() const {
  std::vector<std::size_t> out;
  out.reserve(n_obs_ - in_bag_.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < n_obs_; ++i) {
    if (k < in_bag_.size() && in_bag_[k] == i) {
      ++k;
    } else {
      out.push_back(i);
    }
  }
  return out;
}

std::size_t Tree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& nd) { return nd.is_leaf(); }));
}

int Tree::max_depth() const {
  int d = 0;
  for (const Node& nd : nodes_) d = std::max(d, nd.depth);
  return d;
}

std::vector<std::size_t> Tree::split_features() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < p_; ++j)
    if (uses_feature_[j]) out.push_back(j);
  return out;
}

bool Tree::splits_on(std::size_t feature) const {
  return feature < p_ && uses_feature_[feature];
}

namespace {

struct SplitCandidate {
  bool valid = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double decrease = 0.0;
};

struct Pending {
  std::size_t node;
  std::size_t begin;
  std::size_t end;
  SplitCandidate split;
};

class Grower {
 public:
  Grower(const Dataset& data, const ForestConfig& config, Rng& rng)
      : data_(data), config_(config), rng_(rng) {}

  SplitCandidate best_split(std::span<const std::size_t> rows) {
    SplitCandidate best;
    const std::size_t count = rows.size();
    std::size_t min_child = config_.min_node_size;
    if (config_.gamma > 0.0) {
      min_child = std::max(min_child, static_cast<std::size_t>(
                                          std::ceil(config_.gamma * static_cast<double>(count))));
    }
    min_child = std::max<std::size_t>(min_child, 1);
    if (count < 2 * min_child) return best;

    double sum = 0.0;
    for (std::size_t r : rows) sum += data_.y(r);
    const double mean = sum / static_cast<double>(count);
    double sse = 0.0;
    bool pure = true;
    const double y0 = data_.y(rows[0]);
    for (std::size_t r : rows) {
      const double d = data_.y(r) - mean;
      sse += d * d;
      pure = pure && data_.y(r) == y0;
    }
    if (pure) return best;

    std::size_t tries = config_.mtry;
    if (config_.delta > 0.0 && rng_.uniform() < config_.delta) tries = 1;
    std::vector<std::size_t> features = rng_.sample_without_replacement(data_.p(), tries);
    std::sort(features.begin(), features.end());

    // Centred responses make the decrease exactly zero for constant y.
    const double total = [&] {
      double t = 0.0;
      for (std::size_t r : rows) t += data_.y(r) - mean;
      return t;
    }();
    const double base = total * total / static_cast<double>(count);
    const double tolerance = 1e-12 * sse;

    buffer_.resize(count);
    for (std::size_t j : features) {
      auto col = data_.column(j);
      for (std::size_t k = 0; k < count; ++k) {
        buffer_[k] = {col[rows[k]], data_.y(rows[k]) - mean};
      }
      std::sort(buffer_.begin(), buffer_.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (buffer_.front().first == buffer_.back().first) continue;
      double left_sum = 0.0;
      for (std::size_t k = 0; k + 1 < count; ++k) {
        left_sum += buffer_[k].second;
        const std::size_t n_left = k + 1;
        const std::size_t n_right = count - n_left;
        if (n_left < min_child) continue;
        if (n_right < min_child) break;
        const double lo = buffer_[k].first;
        const double hi = buffer_[k + 1].first;
        if (!(lo < hi)) continue;
        const double right_sum = total - left_sum;
        const double decrease = left_sum * left_sum / static_cast<double>(n_left) +
                                right_sum * right_sum / static_cast<double>(n_right) - base;
        if (decrease > tolerance && decrease > 0.0 && (!best.valid || decrease > best.decrease)) {
          double threshold = lo + (hi - lo) / 2.0;
          if (!(threshold < hi)) threshold = lo;
          best = {true, j, threshold, decrease};
        }
      }
    }
    return best;
  }

 private:
  const Dataset& data_;
  const ForestConfig& config_;
  Rng& rng_;
  std::vector<std::pair<double, double>> buffer_;
};

struct QueueOrder {
  bool operator()(const Pending& a, const Pending& b) const {
    if (a.split.decrease != b.split.decrease) return a.split.decrease < b.split.decrease;
    return a.node > b.node;
  }
};

}  // namespace

Tree grow_tree(const Dataset& data, std::vector<std::size_t> in_bag, const ForestConfig& config,
               Rng& rng) {
  std::sort(in_bag.begin(), in_bag.end());
  if (std::adjacent_find(in_bag.begin(), in_bag.end()) != in_bag.end()) {
    throw ConfigError("in-bag rows must be distinct");
  }
  if (in_bag.empty()) throw ConfigError("a tree needs at least one in-bag row");
  if (in_bag.back() >= data.n()) throw ConfigError("in-bag row out of range");

  std::vector<std::size_t> rows = in_bag;
  std::vector<Node> nodes(1);
  nodes[0].count = rows.size();

  Grower grower(data, config, rng);
  std::priority_queue<Pending, std::vector<Pending>, QueueOrder> queue;
  auto consider = [&](std::size_t node, std::size_t begin, std::size_t end) {
    SplitCandidate s = grower.best_split(std::span<const std::size_t>(rows).subspan(begin, end - begin));
    if (s.valid) queue.push({node, begin, end, s});
  };
  consider(0, 0, rows.size());

  std::size_t leaves = 1;
  while (!queue.empty() && leaves < config.max_leaves) {
    Pending top = queue.top();
    queue.pop();
    const std::size_t j = top.split.feature;
    const double thr = top.split.threshold;
    auto col = data.column(j);
    auto mid = std::stable_partition(rows.begin() + static_cast<std::ptrdiff_t>(top.begin),
                                     rows.begin() + static_cast<std::ptrdiff_t>(top.end),
                                     [&](std::size_t r) { return col[r] <= thr; });
    const std::size_t split_at = static_cast<std::size_t>(mid - rows.begin());

    const std::size_t left = nodes.size();
    const std::size_t right = left + 1;
    nodes.resize(nodes.size() + 2);
    Node& parent = nodes[top.node];
    parent.feature = static_cast<int>(j);
    parent.threshold = thr;
    parent.left = static_cast<int>(left);
    parent.right = static_cast<int>(right);
    nodes[left].depth = nodes[right].depth = parent.depth + 1;
    nodes[left].count = split_at - top.begin;
    nodes[right].count = top.end - split_at;
    parent.left_fraction =
        static_cast<double>(nodes[left].count) / static_cast<double>(parent.count);
    ++leaves;

    consider(left, top.begin, split_at);
    consider(right, split_at, top.end);
  }

  // Node means summed over in-bag rows in ascending row order.
  std::vector<double> sums(nodes.size(), 0.0);
  for (std::size_t r : in_bag) {
    std::size_t id = 0;
    for (;;) {
      sums[id] += data.y(r);
      const Node& nd = nodes[id];
      if (nd.is_leaf()) break;
      id = data.x(r, static_cast<std::size_t>(nd.feature)) <= nd.threshold
               ? static_cast<std::size_t>(nd.left)
               : static_cast<std::size_t>(nd.right);
    }
  }
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    nodes[id].value = sums[id] / static_cast<double>(nodes[id].count);
  }
  return Tree(std::move(nodes), std::move(in_bag), data.n(), data.p());
}

Tree fit_tree(const Dataset& data, const ForestConfig& config, Rng& rng) {
  if (config.subsample_size > data.n() || config.subsample_size == 0) {
    throw ConfigError("subsample_size must lie in [1, n]");
  }
  std::vector<std::size_t> in_bag = rng.sample_without_replacement(data.n(), config.subsample_size);
  return grow_tree(data, std::move(in_bag), config, rng);
}

double predict_tree(const Tree& tree, std::span<const double> x) { return tree.predict(x); }

void to_json(nlohmann::json& j, const Tree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const Node& nd : tree.nodes()) {
    nlohmann::json o{{"depth", nd.depth}, {"count", nd.count}, {"value", nd.value}};
    if (!nd.is_leaf()) {
      o["feature"] = nd.feature;
      o["threshold"] = nd.threshold;
      o["left"] = nd.left;
      o["right"] = nd.right;
      o["left_fraction"] = nd.left_fraction;
    }
    nodes.push_back(std::move(o));
  }
  j = nlohmann::json{{"n_obs", tree.n_obs()},
                     {"p", tree.p()},
                     {"in_bag", tree.in_bag()},
                     {"nodes", std::move(nodes)}};
}

void from_json(const nlohmann::json& j, Tree& tree) {
  std::vector<Node> nodes;
  for (const auto& o : j.at("nodes")) {
    Node nd;
    nd.depth = o.at("depth").get<int>();
    nd.count = o.at("count").get<std::size_t>();
    nd.value = o.at("value").get<double>();
    if (o.contains("feature")) {
      nd.feature = o.at("feature").get<int>();
      nd.threshold = o.at("threshold").get<double>();
      nd.left = o.at("left").get<int>();
      nd.right = o.at("right").get<int>();
      nd.left_fraction = o.at("left_fraction").get<double>();
    }
    nodes.push_back(nd);
  }
  tree = Tree(std::move(nodes), j.at("in_bag").get<std::vector<std::size_t>>(),
              j.at("n_obs").get<std::size_t>(), j.at("p").get<std::size_t>());
}

}  // namespace sobolrf
