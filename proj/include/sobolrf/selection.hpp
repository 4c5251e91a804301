#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sobolrf/config.hpp"
#include "sobolrf/dataset.hpp"
#include "sobolrf/forest.hpp"
#include "sobolrf/importance.hpp"
#include "sobolrf/rng.hpp"

namespace sobolrf {

struct RfeStep {
  std::size_t n_features = 0;          // model size evaluated at this step
  std::vector<std::size_t> removed;    // covariates dropped after this step
  double cv_mse_mean = 0.0;
  double cv_mse_std = 0.0;
  double cv_explained_variance = 0.0;  // 1 - cv_mse_mean / V̂[Y]
};

struct RfeTrace {
  Method importance_method = Method::sobol;
  std::size_t folds = 0;
  std::size_t repeats = 0;
  std::vector<std::size_t> elimination_order;  // original column indices, first removed first
  std::vector<RfeStep> steps;
};

// Observed by tests: every forest fit (and the importance computed on it)
// reports the rows it trained on and the held-out rows of its fold, if any.
struct RfeFitEvent {
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> held_rows;
  std::vector<std::size_t> features;
};

struct RfeOptions {
  // Remove ceil(5% of the remaining covariates) per step instead of one.
  bool batched = false;
  std::function<void(const RfeFitEvent&)> observer;
  // Replaces the importance computation; receives the forest and its training data.
  std::function<std::vector<double>(const Forest&, const Dataset&)> importance_override;
};

// Recursive feature elimination. The elimination order is computed on the
// full dataset. The error curve follows repeated k-fold cross-validation: for
// each shuffle and fold the whole elimination is rerun on the training folds
// only, and the held fold's MSE is recorded at every model size.
RfeTrace rfe(const Dataset& data, const ForestConfig& config, Method method, std::size_t folds,
             std::size_t repeats, const Rng& rng, const RfeOptions& options = {});

std::string to_csv(const RfeTrace& trace, const std::vector<std::string>& feature_names,
                   bool header = true);
nlohmann::json to_json(const RfeTrace& trace, const std::vector<std::string>& feature_names);

}  // namespace sobolrf
