#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sobolrf/config.hpp"
#include "sobolrf/dataset.hpp"
#include "sobolrf/rng.hpp"

namespace sobolrf {

// Regression function of a Gaussian simulation.
struct RegressionFn {
  enum class Kind { example1, example2, linear, custom };

  Kind kind = Kind::linear;
  double alpha = 1.0;                // example1
  double beta = 1.0;                 // example1
  std::vector<double> coefs;         // linear / example2
  std::function<double(std::span<const double>)> custom;

  double operator()(std::span<const double> x) const;
};

// Centred Gaussian covariates X ~ N(0, cov) with Y = m(X) + eps,
// V[eps] / V[Y] = noise_ratio.
struct GaussianSpec {
  std::size_t p = 0;
  Eigen::MatrixXd cov;
  RegressionFn regression;
  double noise_ratio = 0.1;

  // Throws ConfigError if cov is not symmetric positive-definite, the shape is
  // inconsistent, or noise_ratio is outside [0, 1).
  void validate() const;
};

// m(X) = alpha X1 X2 1{X3 > 0} + beta X4 X5 1{X3 < 0}; unit correlations are
// zero except rho12 and rho45.
GaussianSpec example1_spec(double alpha = 1.5, double beta = 1.0,
                           std::span<const double> sigma = {}, double rho12 = 0.9,
                           double rho45 = 0.6, double noise_ratio = 0.1);
// p = 200 in 5 independent blocks of 40 unit-variance covariates with
// within-block correlation 0.8; m(X) = 2 X1 + X41 + X81 + X121 + X161.
GaussianSpec example2_spec(double noise_ratio = 0.1);
GaussianSpec linear_spec(std::vector<double> coefs, Eigen::MatrixXd cov,
                         double noise_ratio = 0.1);

// Closed-form V[m(X)] when available (example1 with the block covariance,
// linear, example2); nullopt for custom functions.
std::optional<double> analytic_variance(const GaussianSpec& spec);

// V[m(X)] from the closed form when available, otherwise a 1e5-point
// plug-in estimate on a fixed pilot stream.
double regression_variance(const GaussianSpec& spec);

Dataset sample_gaussian(const GaussianSpec& spec, std::size_t n, Rng& rng);

void to_json(nlohmann::json& j, const GaussianSpec& spec);
void from_json(const nlohmann::json& j, GaussianSpec& spec);

// Limits of the permutation importances split into their three components.
struct CovariateTerms {
  double mda_star = 0.0;  // Breiman-Cutler / Train-Test limit
  double mda1 = 0.0;      // V[Y] * total Sobol index
  double mda2 = 0.0;      // V[Y] * marginal total Sobol index
  double mda3 = 0.0;      // dependence term
  double st = 0.0;
  double st_mg = 0.0;

  double ik_star() const { return mda1 + mda3; }
};

struct AnalyticDecomposition {
  std::vector<CovariateTerms> covariates;
  double var_m = 0.0;
  double var_y = 0.0;

  double bc_normalized(std::size_t j) const { return covariates[j].mda_star / (2.0 * var_y); }
  double ik_normalized(std::size_t j) const { return covariates[j].ik_star() / var_y; }
};

AnalyticDecomposition analytic_example1(double alpha, double beta, std::span<const double> sigma,
                                        double rho12, double rho45, double noise_ratio);
// Linear m(X) = sum_k c_k X_k with Gaussian covariates.
AnalyticDecomposition analytic_linear(std::span<const double> coefs, const Eigen::MatrixXd& cov,
                                      double noise_ratio);

nlohmann::json to_json(const AnalyticDecomposition& d);

// Total Sobol index of covariate j by refitting without it:
// (OOB error without j - OOB error with all covariates) / V̂[Y].
double retrain_sobol(const Dataset& data, const ForestConfig& config, std::size_t j);
std::vector<double> retrain_sobol_all(const Dataset& data, const ForestConfig& config);

}  // namespace sobolrf
