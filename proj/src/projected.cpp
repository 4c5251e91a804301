#include "sobolrf/projected.hpp"

#include <algorithm>
#include <functional>
#include <unordered_map>

#include "sobolrf/errors.hpp"
#include "sobolrf/parallel.hpp"

namespace sobolrf {

namespace {

using Collection = std::vector<int>;

struct CollectionHash {
  std::size_t operator()(const Collection& c) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (int id : c) {
      h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(id));
      h *= 0x100000001b3ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

struct CellStats {
  double sum = 0.0;
  std::size_t count = 0;
};

using LevelCells = std::unordered_map<Collection, CellStats, CollectionHash>;

// Follows the normal routing until the first split on j or a leaf.
template <typename ValueOf>
int descend_until_split_on(const Tree& tree, std::size_t j, ValueOf&& value_of) {
  int id = 0;
  for (;;) {
    const Node& nd = tree.node(static_cast<std::size_t>(id));
    if (nd.is_leaf() || static_cast<std::size_t>(nd.feature) == j) return id;
    id = value_of(static_cast<std::size_t>(nd.feature)) <= nd.threshold ? nd.left : nd.right;
  }
}

// Collection one level deeper. Returns true when every node of `next` is a leaf.
template <typename ValueOf>
bool advance(const Tree& tree, std::size_t j, const Collection& current, Collection& next,
             ValueOf&& value_of) {
  next.clear();
  bool terminal = true;
  for (int id : current) {
    const Node& nd = tree.node(static_cast<std::size_t>(id));
    if (nd.is_leaf()) {
      next.push_back(id);
      continue;
    }
    if (static_cast<std::size_t>(nd.feature) == j) {
      next.push_back(nd.left);
      next.push_back(nd.right);
    } else {
      next.push_back(value_of(static_cast<std::size_t>(nd.feature)) <= nd.threshold ? nd.left
                                                                                   : nd.right);
    }
  }
  std::sort(next.begin(), next.end());
  for (int id : next) terminal = terminal && tree.node(static_cast<std::size_t>(id)).is_leaf();
  return terminal;
}

// Projected cells of the in-bag rows, per level. Only rows whose path meets a
// split on j are bucketed: every other row has a single-node collection,
// which never equals a fanned-out query collection.
std::vector<LevelCells> bucket_in_bag(const Tree& tree, const Dataset& train, std::size_t j) {
  std::vector<LevelCells> levels(static_cast<std::size_t>(tree.max_depth()) + 1);
  Collection current, next;
  for (std::size_t r : tree.in_bag()) {
    auto value_of = [&](std::size_t f) { return train.x(r, f); };
    const int start = descend_until_split_on(tree, j, value_of);
    const Node& first = tree.node(static_cast<std::size_t>(start));
    if (first.is_leaf()) continue;
    current.assign(1, start);
    int level = first.depth;
    bool terminal = false;
    while (!terminal) {
      terminal = advance(tree, j, current, next, value_of);
      ++level;
      CellStats& cell = levels[static_cast<std::size_t>(level)][next];
      cell.sum += train.y(r);
      ++cell.count;
      std::swap(current, next);
    }
  }
  return levels;
}

struct QueryPath {
  int start = 0;
  std::vector<Collection> collections;  // levels depth(start)+1 ... terminal level
};

template <typename ValueOf>
QueryPath trace_query(const Tree& tree, std::size_t j, ValueOf&& value_of) {
  QueryPath path;
  path.start = descend_until_split_on(tree, j, value_of);
  if (tree.node(static_cast<std::size_t>(path.start)).is_leaf()) return path;
  Collection current{path.start}, next;
  bool terminal = false;
  while (!terminal) {
    terminal = advance(tree, j, current, next, value_of);
    path.collections.push_back(next);
    std::swap(current, next);
  }
  return path;
}

ProjectedPrediction resolve(const Tree& tree, const std::vector<LevelCells>& levels,
                            const QueryPath& path) {
  const Node& start = tree.node(static_cast<std::size_t>(path.start));
  for (std::size_t k = path.collections.size(); k-- > 0;) {
    const int level = start.depth + 1 + static_cast<int>(k);
    const auto& cells = levels[static_cast<std::size_t>(level)];
    auto it = cells.find(path.collections[k]);
    if (it != cells.end() && it->second.count > 0) {
      return {it->second.sum / static_cast<double>(it->second.count), level};
    }
  }
  // At and above the first split on j the collection is the single node on
  // the query's path, whose in-bag cell is never empty.
  return {start.value, start.depth};
}

void check_query_data(const Tree& tree, const Dataset& train, const Dataset& query_data,
                      std::size_t j) {
  if (train.p() != tree.p() || query_data.p() != tree.p()) {
    throw ConfigError("tree and datasets have different widths");
  }
  if (j >= tree.p()) throw ConfigError("covariate index out of range");
  if (train.n() != tree.n_obs()) throw ConfigError("projection needs the training dataset");
}

// Error-difference estimator shared by the projected and weighted-traversal
// variants. alt(l, rows) returns tree l's modified predictions on rows, or an
// empty vector when they equal the original predictions.
double oob_error_difference(
    const Forest& forest, const Dataset& data, std::size_t j, const OobCache* cache,
    const std::function<std::vector<double>(std::size_t, std::span<const std::size_t>)>& alt) {
  if (j >= data.p()) throw ConfigError("covariate index out of range");
  if (forest.n_obs() != data.n() || forest.p() != data.p()) {
    throw ComputeError("out-of-bag importance needs the training dataset");
  }
  const double var_y = data.response_variance();
  if (!(var_y > 0.0)) throw ComputeError("response variance is zero");
  OobCache local;
  if (cache == nullptr) {
    local = build_oob_cache(forest, data);
    cache = &local;
  }
  const std::size_t m = forest.size();
  std::vector<std::vector<double>> modified(m);
  parallel_for(m, [&](std::size_t l) {
    if (forest.tree(l).splits_on(j)) modified[l] = alt(l, cache->rows[l]);
  });

  const std::size_t n = data.n();
  std::vector<double> mod_sum(n, 0.0), base_sum(n, 0.0);
  std::vector<std::size_t> count(n, 0);
  for (std::size_t l = 0; l < m; ++l) {
    const auto& rows = cache->rows[l];
    const auto& base = cache->predictions[l];
    const auto& mod = modified[l].empty() ? base : modified[l];
    for (std::size_t k = 0; k < rows.size(); ++k) {
      mod_sum[rows[k]] += mod[k];
      base_sum[rows[k]] += base[k];
      ++count[rows[k]];
    }
  }
  double sum = 0.0;
  std::size_t defined = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (count[i] == 0) continue;
    const double c = static_cast<double>(count[i]);
    const double y = data.y(i);
    const double a = y - mod_sum[i] / c;
    const double b = y - base_sum[i] / c;
    sum += a * a - b * b;
    ++defined;
  }
  if (defined == 0) throw ComputeError("no observation has an out-of-bag tree");
  return sum / static_cast<double>(n) / var_y;
}

double lundberg_walk(const Tree& tree, std::size_t j, std::span<const double> x, int id,
                     double weight, double& weight_sum) {
  const Node& nd = tree.node(static_cast<std::size_t>(id));
  if (nd.is_leaf()) {
    weight_sum += weight;
    return weight * nd.value;
  }
  const auto f = static_cast<std::size_t>(nd.feature);
  if (f == j) {
    return lundberg_walk(tree, j, x, nd.left, weight * nd.left_fraction, weight_sum) +
           lundberg_walk(tree, j, x, nd.right, weight * (1.0 - nd.left_fraction), weight_sum);
  }
  return lundberg_walk(tree, j, x, x[f] <= nd.threshold ? nd.left : nd.right, weight,
                       weight_sum);
}

}  // namespace

std::vector<ProjectedPrediction> projected_tree_predict(const Tree& tree, const Dataset& train,
                                                        std::size_t j,
                                                        const Dataset& query_data,
                                                        std::span<const std::size_t> queries) {
  check_query_data(tree, train, query_data, j);
  std::vector<ProjectedPrediction> out(queries.size());
  if (!tree.splits_on(j)) {
    for (std::size_t q = 0; q < queries.size(); ++q) {
      const std::size_t i = queries[q];
      const Node& leaf =
          tree.node(tree.leaf_index([&](std::size_t f) { return query_data.x(i, f); }));
      out[q] = {leaf.value, leaf.depth};
    }
    return out;
  }
  const auto levels = bucket_in_bag(tree, train, j);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const std::size_t i = queries[q];
    const QueryPath path =
        trace_query(tree, j, [&](std::size_t f) { return query_data.x(i, f); });
    out[q] = resolve(tree, levels, path);
  }
  return out;
}

std::vector<ProjectedPrediction> projected_tree_predict(const Tree& tree, const Dataset& data,
                                                        std::size_t j,
                                                        std::span<const std::size_t> queries) {
  return projected_tree_predict(tree, data, j, data, queries);
}

static std::size_t used_cell_size(const nlohmann::json& trace, int level) {
  for (const auto& entry : trace)
    if (entry["level"] == level) return entry["cell_size"].get<std::size_t>();
  return 0;
}

nlohmann::json projected_trace(const Tree& tree, const Dataset& data, std::size_t j,
                               std::size_t query) {
  check_query_data(tree, data, data, j);
  auto value_of = [&](std::size_t f) { return data.x(query, f); };
  const auto levels = bucket_in_bag(tree, data, j);
  const QueryPath path = trace_query(tree, j, value_of);
  const ProjectedPrediction pred = resolve(tree, levels, path);
  const Node& start = tree.node(static_cast<std::size_t>(path.start));

  nlohmann::json trace = nlohmann::json::array();
  // Levels above the first split on j: the single node on the routed path.
  int id = 0;
  for (int level = 0; level <= start.depth; ++level) {
    trace.push_back({{"level", level},
                     {"collection", nlohmann::json::array({id})},
                     {"cell_size", tree.node(static_cast<std::size_t>(id)).count}});
    const Node& nd = tree.node(static_cast<std::size_t>(id));
    if (nd.is_leaf()) break;
    id = value_of(static_cast<std::size_t>(nd.feature)) <= nd.threshold ? nd.left : nd.right;
  }
  for (std::size_t k = 0; k < path.collections.size(); ++k) {
    const int level = start.depth + 1 + static_cast<int>(k);
    const auto& cells = levels[static_cast<std::size_t>(level)];
    auto it = cells.find(path.collections[k]);
    trace.push_back({{"level", level},
                     {"collection", path.collections[k]},
                     {"cell_size", it == cells.end() ? 0 : it->second.count}});
  }
  return {{"query", query},
          {"covariate", j},
          {"levels", std::move(trace)},
          {"level_used", pred.level_used},
          {"cell_size", used_cell_size(trace, pred.level_used)},
          {"value", pred.value}};
}

double sobol_mda(const Forest& forest, const Dataset& data, std::size_t j,
                 const OobCache* cache) {
  return oob_error_difference(forest, data, j, cache,
                              [&](std::size_t l, std::span<const std::size_t> rows) {
                                const auto preds =
                                    projected_tree_predict(forest.tree(l), data, j, rows);
                                std::vector<double> out(preds.size());
                                for (std::size_t k = 0; k < preds.size(); ++k)
                                  out[k] = preds[k].value;
                                return out;
                              });
}

std::vector<double> sobol_mda_all(const Forest& forest, const Dataset& data) {
  const OobCache cache = build_oob_cache(forest, data);
  std::vector<double> out(data.p());
  for (std::size_t j = 0; j < data.p(); ++j) out[j] = sobol_mda(forest, data, j, &cache);
  return out;
}

double lundberg_predict(const Tree& tree, std::size_t j, std::span<const double> x) {
  double weight_sum = 0.0;
  const double total = lundberg_walk(tree, j, x, 0, 1.0, weight_sum);
  return total / weight_sum;
}

double sobol_mda_lundberg(const Forest& forest, const Dataset& data, std::size_t j,
                          const OobCache* cache) {
  return oob_error_difference(forest, data, j, cache,
                              [&](std::size_t l, std::span<const std::size_t> rows) {
                                std::vector<double> out(rows.size());
                                for (std::size_t k = 0; k < rows.size(); ++k) {
                                  const auto x = data.row(rows[k]);
                                  out[k] = lundberg_predict(forest.tree(l), j, x);
                                }
                                return out;
                              });
}

std::vector<double> sobol_mda_lundberg_all(const Forest& forest, const Dataset& data) {
  const OobCache cache = build_oob_cache(forest, data);
  std::vector<double> out(data.p());
  for (std::size_t j = 0; j < data.p(); ++j) {
    out[j] = sobol_mda_lundberg(forest, data, j, &cache);
  }
  return out;
}

}  // namespace sobolrf
