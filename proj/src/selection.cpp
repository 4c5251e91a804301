#include "sobolrf/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>

#include "sobolrf/analytic.hpp"
#include "sobolrf/errors.hpp"
#include "sobolrf/projected.hpp"

namespace sobolrf {

namespace {

struct EliminationStep {
  std::size_t n_features = 0;
  std::vector<std::size_t> removed;
  double held_mse = 0.0;
};

struct HeldOut {
  const Dataset* data;
  std::vector<std::size_t> rows;
};

std::vector<double> importance_for(const Forest& forest, const Dataset& data,
                                   const ForestConfig& config, Method method, const Rng& rng,
                                   const RfeOptions& options) {
  if (options.importance_override) return options.importance_override(forest, data);
  const std::size_t p = data.p();
  std::vector<double> values(p);
  switch (method) {
    case Method::sobol:
      return sobol_mda_all(forest, data);
    case Method::retrain:
      if (p < 2) return values;
      return retrain_sobol_all(data, config);
    case Method::bc:
    case Method::ik: {
      const OobCache cache = build_oob_cache(forest, data);
      for (std::size_t j = 0; j < p; ++j) {
        values[j] = method == Method::bc
                        ? bc_mda_detailed(forest, data, j, rng.stream(j), false, &cache).value
                        : ik_mda(forest, data, j, rng.stream(j), forest.size(), &cache);
      }
      return values;
    }
    default:
      throw ConfigError("RFE supports the bc, ik, sobol and retrain methods");
  }
}

ForestConfig config_for_width(const ForestConfig& config, std::size_t p, const Rng& rng) {
  ForestConfig c = config;
  if (c.mtry > p) c.mtry = p;
  c.seed = rng.key();
  return c;
}

// One full elimination path on `train`. `train_rows` maps train rows back to
// rows of the original dataset for the observer.
std::vector<EliminationStep> eliminate(const Dataset& train,
                                       const std::vector<std::size_t>& train_rows,
                                       const std::optional<HeldOut>& held,
                                       const ForestConfig& config, Method method, const Rng& rng,
                                       const RfeOptions& options) {
  std::vector<std::size_t> features(train.p());
  std::iota(features.begin(), features.end(), std::size_t{0});
  std::vector<EliminationStep> steps;
  std::size_t step = 0;
  while (!features.empty()) {
    const Rng step_rng = rng.stream(step);
    const Dataset current = train.select_columns(features);
    const ForestConfig cfg = config_for_width(config, features.size(), step_rng.stream(0));
    const Forest forest = fit_forest(current, cfg);

    EliminationStep record;
    record.n_features = features.size();
    if (held) {
      const Dataset held_data = held->data->select_columns(features);
      record.held_mse = mean_squared_error(forest, held_data);
    }
    if (options.observer) {
      options.observer({train_rows, held ? held->rows : std::vector<std::size_t>{}, features});
    }

    std::size_t remove = options.batched
                             ? static_cast<std::size_t>(
                                   std::ceil(0.05 * static_cast<double>(features.size())))
                             : 1;
    remove = std::clamp<std::size_t>(remove, 1, features.size());
    std::vector<std::size_t> order(features.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (features.size() > 1) {
      const auto values =
          importance_for(forest, current, cfg, method, step_rng.stream(1), options);
      // Ascending importance; ties keep the lowest original index first.
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    }
    order.resize(remove);
    for (std::size_t k : order) record.removed.push_back(features[k]);
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < features.size(); ++k) {
      if (std::find(order.begin(), order.end(), k) == order.end()) keep.push_back(features[k]);
    }
    features = std::move(keep);
    steps.push_back(std::move(record));
    ++step;
  }
  return steps;
}

}  // namespace

RfeTrace rfe(const Dataset& data, const ForestConfig& config, Method method, std::size_t folds,
             std::size_t repeats, const Rng& rng, const RfeOptions& options) {
  if (!options.importance_override && method != Method::bc && method != Method::ik &&
      method != Method::sobol && method != Method::retrain) {
    throw ConfigError("RFE supports the bc, ik, sobol and retrain methods");
  }
  if (folds < 2) throw ConfigError("RFE needs at least 2 folds");
  if (repeats < 1) throw ConfigError("RFE needs at least 1 repeat");
  const std::size_t n = data.n();
  if (n / folds < 2) throw ConfigError("every fold needs at least 2 rows");

  RfeTrace trace;
  trace.importance_method = method;
  trace.folds = folds;
  trace.repeats = repeats;

  std::vector<std::size_t> all_rows(n);
  std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
  const auto path = eliminate(data, all_rows, std::nullopt, config, method, rng.stream(0), options);
  for (const auto& s : path) {
    trace.elimination_order.insert(trace.elimination_order.end(), s.removed.begin(),
                                   s.removed.end());
    RfeStep step;
    step.n_features = s.n_features;
    step.removed = s.removed;
    trace.steps.push_back(step);
  }

  std::vector<std::vector<double>> mse(path.size());
  for (std::size_t r = 0; r < repeats; ++r) {
    Rng shuffle_rng = rng.stream(r + 1);
    std::vector<std::size_t> perm = all_rows;
    shuffle_rng.shuffle(perm);
    for (std::size_t f = 0; f < folds; ++f) {
      const std::size_t lo = f * n / folds;
      const std::size_t hi = (f + 1) * n / folds;
      std::vector<std::size_t> held_rows(perm.begin() + static_cast<std::ptrdiff_t>(lo),
                                         perm.begin() + static_cast<std::ptrdiff_t>(hi));
      std::vector<std::size_t> train_rows(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(lo));
      train_rows.insert(train_rows.end(), perm.begin() + static_cast<std::ptrdiff_t>(hi), perm.end());
      std::sort(held_rows.begin(), held_rows.end());
      std::sort(train_rows.begin(), train_rows.end());
      const Dataset train = data.select_rows(train_rows);
      const Dataset held = data.select_rows(held_rows);
      const auto fold_path = eliminate(train, train_rows, HeldOut{&held, held_rows}, config,
                                       method, shuffle_rng.stream(f + 1), options);
      for (std::size_t s = 0; s < fold_path.size(); ++s) mse[s].push_back(fold_path[s].held_mse);
    }
  }

  const double var_y = data.response_variance();
  for (std::size_t s = 0; s < trace.steps.size(); ++s) {
    double mean = 0.0;
    for (double v : mse[s]) mean += v;
    mean /= static_cast<double>(mse[s].size());
    trace.steps[s].cv_mse_mean = mean;
    trace.steps[s].cv_mse_std = std::sqrt(sample_variance(mse[s]));
    trace.steps[s].cv_explained_variance = var_y > 0.0 ? 1.0 - mean / var_y : 0.0;
  }
  return trace;
}

std::string to_csv(const RfeTrace& trace, const std::vector<std::string>& names, bool header) {
  std::ostringstream out;
  out.precision(17);
  if (header) {
    out << "method,step,removed_feature,n_features,cv_mse_mean,cv_mse_std,cv_explained_variance\n";
  }
  for (std::size_t s = 0; s < trace.steps.size(); ++s) {
    const auto& st = trace.steps[s];
    std::string removed;
    for (std::size_t k = 0; k < st.removed.size(); ++k) {
      if (k) removed += ';';
      removed += names[st.removed[k]];
    }
    out << to_string(trace.importance_method) << ',' << s << ',' << removed << ','
        << st.n_features << ',' << st.cv_mse_mean << ',' << st.cv_mse_std << ','
        << st.cv_explained_variance << '\n';
  }
  return out.str();
}

nlohmann::json to_json(const RfeTrace& trace, const std::vector<std::string>& names) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& st : trace.steps) {
    std::vector<std::string> removed;
    for (std::size_t k : st.removed) removed.push_back(names[k]);
    steps.push_back({{"n_features", st.n_features},
                     {"removed", removed},
                     {"cv_mse_mean", st.cv_mse_mean},
                     {"cv_mse_std", st.cv_mse_std},
                     {"cv_explained_variance", st.cv_explained_variance}});
  }
  std::vector<std::string> order;
  for (std::size_t k : trace.elimination_order) order.push_back(names[k]);
  return {{"method", to_string(trace.importance_method)},
          {"folds", trace.folds},
          {"repeats", trace.repeats},
          {"elimination_order", order},
          {"steps", steps}};
}

}  // namespace sobolrf
