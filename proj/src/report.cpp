#include "sobolrf/report.hpp"

#include <cmath>
#include <sstream>

#include "sobolrf/analytic.hpp"
#include "sobolrf/errors.hpp"
#include "sobolrf/parallel.hpp"
#include "sobolrf/projected.hpp"

namespace sobolrf {

namespace {

bool is_deterministic(Method m) {
  return m == Method::sobol || m == Method::lundberg || m == Method::retrain;
}

}  // namespace

ImportanceReport compute_importance(const Forest& forest, const Dataset& data, Method method,
                                    const ImportanceOptions& options, const Rng& rng) {
  if (options.repetitions == 0) throw ConfigError("repetitions must be positive");
  if (method == Method::tt && options.test == nullptr) {
    throw ConfigError("Train/Test MDA needs a test dataset");
  }
  if (method != Method::tt) forest.config().resolve(data.n(), data.p()).require_oob(data.n());
  const std::size_t p = data.p();
  const double var_y = data.response_variance();

  ImportanceReport report;
  report.method = method;
  report.feature_names = data.feature_names();
  switch (method) {
    case Method::bc:
    case Method::tt:
      report.normalizer = options.normalized ? 2.0 * var_y : 1.0;
      break;
    case Method::ik:
      report.normalizer = options.normalized ? var_y : 1.0;
      break;
    case Method::bc_normalized:
    case Method::sobol:
    case Method::lundberg:
    case Method::retrain:
      // already divided by V̂[Y] inside the estimator
      report.normalizer = 1.0;
      break;
  }
  if (!(report.normalizer > 0.0)) throw ComputeError("response variance is zero");

  const std::size_t reps = is_deterministic(method) ? 1 : options.repetitions;
  report.repetitions = options.repetitions;
  std::vector<std::vector<double>> per_rep(reps, std::vector<double>(p, 0.0));

  if (method == Method::sobol) {
    per_rep[0] = sobol_mda_all(forest, data);
  } else if (method == Method::lundberg) {
    per_rep[0] = sobol_mda_lundberg_all(forest, data);
  } else if (method == Method::retrain) {
    per_rep[0] = retrain_sobol_all(data, forest.config());
  } else {
    const OobCache cache =
        method == Method::tt ? OobCache{} : build_oob_cache(forest, data);
    const std::size_t block = options.block_size == 0 ? forest.size() : options.block_size;
    for (std::size_t r = 0; r < reps; ++r) {
      const Rng rep_rng = rng.stream(r);
      for (std::size_t j = 0; j < p; ++j) {
        const Rng cov_rng = rep_rng.stream(j);
        double v = 0.0;
        switch (method) {
          case Method::tt: {
            Rng local = cov_rng;
            v = tt_mda(forest, *options.test, j, local);
            break;
          }
          case Method::bc:
            v = bc_mda_detailed(forest, data, j, cov_rng, false, &cache).value;
            break;
          case Method::bc_normalized: {
            const BcMda bc = bc_mda_detailed(forest, data, j, cov_rng, true, &cache);
            if (bc.normalization_skipped) {
              report.warnings.push_back("repetition " + std::to_string(r) + ", " +
                                        report.feature_names[j] +
                                        ": per-tree standard deviation is zero, value left unnormalized");
            }
            v = bc.value;
            break;
          }
          case Method::ik:
            v = ik_mda(forest, data, j, cov_rng, block, &cache);
            break;
          default:
            break;
        }
        per_rep[r][j] = v / report.normalizer;
      }
    }
  }
  if (is_deterministic(method)) {
    for (double& v : per_rep[0]) v /= report.normalizer;
  }

  report.values.assign(p, 0.0);
  report.std_devs.assign(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    std::vector<double> column(reps);
    for (std::size_t r = 0; r < reps; ++r) column[r] = per_rep[r][j];
    double mean = 0.0;
    for (double v : column) mean += v;
    report.values[j] = mean / static_cast<double>(reps);
    report.std_devs[j] = std::sqrt(sample_variance(column));
  }
  report.per_rep_values = std::move(per_rep);
  return report;
}

nlohmann::json to_json(const ImportanceReport& report) {
  nlohmann::json features = nlohmann::json::array();
  for (std::size_t j = 0; j < report.values.size(); ++j) {
    features.push_back({{"feature", report.feature_names[j]},
                        {"value", report.values[j]},
                        {"std", report.std_devs[j]}});
  }
  return {{"method", to_string(report.method)},
          {"normalizer", report.normalizer},
          {"repetitions", report.repetitions},
          {"features", std::move(features)},
          {"per_rep_values", report.per_rep_values},
          {"warnings", report.warnings}};
}

std::string to_csv(const ImportanceReport& report, bool header) {
  std::ostringstream out;
  out.precision(17);
  if (header) out << "method,feature,value,std\n";
  for (std::size_t j = 0; j < report.values.size(); ++j) {
    out << to_string(report.method) << ',' << report.feature_names[j] << ','
        << report.values[j] << ',' << report.std_devs[j] << '\n';
  }
  return out.str();
}

}  // namespace sobolrf
