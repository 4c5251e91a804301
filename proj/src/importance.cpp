#include "sobolrf/importance.hpp"

#include <cmath>

#include "sobolrf/errors.hpp"
#include "sobolrf/parallel.hpp"

namespace sobolrf {

namespace {

constexpr std::pair<Method, const char*> kMethodNames[] = {
    {Method::tt, "tt"},         {Method::bc, "bc"},
    {Method::bc_normalized, "bc_normalized"},
    {Method::ik, "ik"},         {Method::sobol, "sobol"},
    {Method::lundberg, "lundberg"}, {Method::retrain, "retrain"},
};

void check_covariate(const Forest& forest, const Dataset& data, std::size_t j) {
  if (j >= data.p()) throw ConfigError("covariate index " + std::to_string(j) + " out of range");
  if (forest.p() != data.p()) throw ConfigError("forest and dataset have different widths");
}

void check_training_data(const Forest& forest, const Dataset& data) {
  if (forest.n_obs() != data.n()) {
    throw ComputeError("out-of-bag importance needs the training dataset");
  }
  for (const Tree& t : forest.trees()) {
    if (t.n_obs() - t.in_bag().size() < 2) {
      throw ComputeError("every tree needs at least 2 out-of-bag observations");
    }
  }
}

// Tree predictions on its out-of-bag rows with column j permuted among them.
std::vector<double> permuted_predictions(const Tree& tree, const Dataset& data, std::size_t j,
                                         std::span<const std::size_t> rows, Rng rng) {
  std::vector<std::size_t> perm(rows.begin(), rows.end());
  rng.shuffle(perm);
  auto col = data.column(j);
  std::vector<double> out(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::size_t i = rows[k];
    const double permuted = col[perm[k]];
    out[k] = tree.node(tree.leaf_index([&](std::size_t f) {
                           return f == j ? permuted : data.x(i, f);
                         })).value;
  }
  return out;
}

}  // namespace

std::string to_string(Method m) {
  for (const auto& [method, name] : kMethodNames)
    if (method == m) return name;
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (const auto& [method, text] : kMethodNames)
    if (name == text) return method;
  throw ConfigError("unknown importance method '" + name + "'");
}

OobCache build_oob_cache(const Forest& forest, const Dataset& data) {
  OobCache cache;
  cache.rows.resize(forest.size());
  cache.predictions.resize(forest.size());
  parallel_for(forest.size(), [&](std::size_t l) {
    const Tree& tree = forest.tree(l);
    cache.rows[l] = tree.oob_rows();
    auto& preds = cache.predictions[l];
    preds.reserve(cache.rows[l].size());
    for (std::size_t i : cache.rows[l]) preds.push_back(tree.predict_row(data, i));
  });
  return cache;
}

double tt_mda(const Forest& forest, const Dataset& test, std::size_t j,
              std::span<const std::size_t> perm) {
  check_covariate(forest, test, j);
  if (test.n() < 2) throw ComputeError("Train/Test MDA needs at least 2 test rows");
  if (perm.size() != test.n()) throw ConfigError("permutation length must equal test size");
  auto col = test.column(j);
  std::vector<double> diffs(test.n());
  parallel_for(test.n(), [&](std::size_t i) {
    std::vector<double> x = test.row(i);
    const double base = predict_forest(forest, x);
    x[j] = col[perm[i]];
    const double permuted = predict_forest(forest, x);
    const double y = test.y(i);
    diffs[i] = (y - permuted) * (y - permuted) - (y - base) * (y - base);
  });
  double sum = 0.0;
  for (double d : diffs) sum += d;
  return sum / static_cast<double>(test.n());
}

double tt_mda(const Forest& forest, const Dataset& test, std::size_t j, Rng& rng) {
  std::vector<std::size_t> perm(test.n());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  rng.shuffle(perm);
  return tt_mda(forest, test, j, perm);
}

BcMda bc_mda_detailed(const Forest& forest, const Dataset& data, std::size_t j, const Rng& rng,
                      bool normalized, const OobCache* cache) {
  check_covariate(forest, data, j);
  check_training_data(forest, data);
  OobCache local;
  if (cache == nullptr) {
    local = build_oob_cache(forest, data);
    cache = &local;
  }
  std::vector<double> per_tree(forest.size(), 0.0);
  parallel_for(forest.size(), [&](std::size_t l) {
    const Tree& tree = forest.tree(l);
    if (!tree.splits_on(j)) return;  // permuted predictions equal the originals
    const auto& rows = cache->rows[l];
    const auto& base = cache->predictions[l];
    const auto permuted = permuted_predictions(tree, data, j, rows, rng.stream(l));
    double sum = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const double y = data.y(rows[k]);
      sum += (y - permuted[k]) * (y - permuted[k]) - (y - base[k]) * (y - base[k]);
    }
    per_tree[l] = sum / static_cast<double>(rows.size());
  });

  BcMda out;
  double sum = 0.0;
  for (double v : per_tree) sum += v;
  out.unnormalized = sum / static_cast<double>(forest.size());
  out.per_tree_sd = std::sqrt(sample_variance(per_tree));
  out.value = out.unnormalized;
  if (normalized) {
    if (out.per_tree_sd > 0.0) {
      out.value = out.unnormalized / out.per_tree_sd;
    } else {
      out.normalization_skipped = true;
    }
  }
  return out;
}

double bc_mda(const Forest& forest, const Dataset& data, std::size_t j, const Rng& rng,
              bool normalized) {
  return bc_mda_detailed(forest, data, j, rng, normalized).value;
}

double ik_mda(const Forest& forest, const Dataset& data, std::size_t j, const Rng& rng,
              std::size_t block_size, const OobCache* cache) {
  check_covariate(forest, data, j);
  check_training_data(forest, data);
  if (block_size == 0) throw ConfigError("block_size must be positive");
  OobCache local;
  if (cache == nullptr) {
    local = build_oob_cache(forest, data);
    cache = &local;
  }
  const std::size_t m = forest.size();
  const std::size_t n_blocks = (m + block_size - 1) / block_size;

  // Permuted predictions per tree, computed in parallel and reduced in tree order.
  std::vector<std::vector<double>> permuted(m);
  parallel_for(m, [&](std::size_t l) {
    const Tree& tree = forest.tree(l);
    if (tree.splits_on(j)) {
      permuted[l] = permuted_predictions(tree, data, j, cache->rows[l], rng.stream(l));
    }
  });

  const std::size_t n = data.n();
  double total = 0.0;
  std::vector<double> perm_sum(n), base_sum(n);
  std::vector<std::size_t> count(n);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    std::fill(perm_sum.begin(), perm_sum.end(), 0.0);
    std::fill(base_sum.begin(), base_sum.end(), 0.0);
    std::fill(count.begin(), count.end(), 0);
    const std::size_t first = b * block_size;
    const std::size_t last = std::min(m, first + block_size);
    for (std::size_t l = first; l < last; ++l) {
      const auto& rows = cache->rows[l];
      const auto& base = cache->predictions[l];
      const auto& perm = permuted[l].empty() ? base : permuted[l];
      for (std::size_t k = 0; k < rows.size(); ++k) {
        perm_sum[rows[k]] += perm[k];
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
      const double mp = perm_sum[i] / c;
      const double mb = base_sum[i] / c;
      sum += (y - mp) * (y - mp) - (y - mb) * (y - mb);
      ++defined;
    }
    if (defined == 0) {
      throw ComputeError("block " + std::to_string(b) + " has no out-of-bag observation");
    }
    total += sum / static_cast<double>(defined);
  }
  return total / static_cast<double>(n_blocks);
}

}  // namespace sobolrf
