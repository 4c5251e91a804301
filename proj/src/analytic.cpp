#include "sobolrf/analytic.hpp"

#include <cmath>

#include "sobolrf/errors.hpp"
#include "sobolrf/forest.hpp"

namespace sobolrf {

double RegressionFn::operator()(std::span<const double> x) const {
  switch (kind) {
    case Kind::example1:
      return alpha * x[0] * x[1] * (x[2] > 0.0 ? 1.0 : 0.0) +
             beta * x[3] * x[4] * (x[2] < 0.0 ? 1.0 : 0.0);
    case Kind::example2:
    case Kind::linear: {
      double s = 0.0;
      for (std::size_t k = 0; k < coefs.size(); ++k) s += coefs[k] * x[k];
      return s;
    }
    case Kind::custom:
      return custom(x);
  }
  return 0.0;
}

void GaussianSpec::validate() const {
  if (p == 0) throw ConfigError("simulation dimension must be positive");
  if (static_cast<std::size_t>(cov.rows()) != p || static_cast<std::size_t>(cov.cols()) != p) {
    throw ConfigError("covariance must be p x p");
  }
  if (!cov.isApprox(cov.transpose(), 1e-12)) throw ConfigError("covariance must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw ConfigError("covariance is not positive-definite");
  }
  if (!(noise_ratio >= 0.0 && noise_ratio < 1.0)) {
    throw ConfigError("noise_ratio must lie in [0, 1)");
  }
  switch (regression.kind) {
    case RegressionFn::Kind::example1:
      if (p < 5) throw ConfigError("example1 needs p >= 5");
      break;
    case RegressionFn::Kind::example2:
    case RegressionFn::Kind::linear:
      if (regression.coefs.size() != p) throw ConfigError("linear coefficients must have length p");
      break;
    case RegressionFn::Kind::custom:
      if (!regression.custom) throw ConfigError("custom regression function is empty");
      break;
  }
}

GaussianSpec example1_spec(double alpha, double beta, std::span<const double> sigma,
                           double rho12, double rho45, double noise_ratio) {
  std::vector<double> s(5, 1.0);
  if (!sigma.empty()) {
    if (sigma.size() != 5) throw ConfigError("example1 needs 5 standard deviations");
    s.assign(sigma.begin(), sigma.end());
  }
  GaussianSpec spec;
  spec.p = 5;
  spec.cov = Eigen::MatrixXd::Zero(5, 5);
  for (int k = 0; k < 5; ++k) spec.cov(k, k) = s[static_cast<std::size_t>(k)] * s[static_cast<std::size_t>(k)];
  spec.cov(0, 1) = spec.cov(1, 0) = rho12 * s[0] * s[1];
  spec.cov(3, 4) = spec.cov(4, 3) = rho45 * s[3] * s[4];
  spec.regression.kind = RegressionFn::Kind::example1;
  spec.regression.alpha = alpha;
  spec.regression.beta = beta;
  spec.noise_ratio = noise_ratio;
  spec.validate();
  return spec;
}

GaussianSpec example2_spec(double noise_ratio) {
  constexpr std::size_t kBlocks = 5, kBlockSize = 40;
  GaussianSpec spec;
  spec.p = kBlocks * kBlockSize;
  spec.cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(spec.p),
                                   static_cast<Eigen::Index>(spec.p));
  for (std::size_t b = 0; b < kBlocks; ++b) {
    for (std::size_t u = 0; u < kBlockSize; ++u) {
      for (std::size_t v = 0; v < kBlockSize; ++v) {
        const auto r = static_cast<Eigen::Index>(b * kBlockSize + u);
        const auto c = static_cast<Eigen::Index>(b * kBlockSize + v);
        spec.cov(r, c) = u == v ? 1.0 : 0.8;
      }
    }
  }
  spec.regression.kind = RegressionFn::Kind::example2;
  spec.regression.coefs.assign(spec.p, 0.0);
  spec.regression.coefs[0] = 2.0;
  for (std::size_t b = 1; b < kBlocks; ++b) spec.regression.coefs[b * kBlockSize] = 1.0;
  spec.noise_ratio = noise_ratio;
  spec.validate();
  return spec;
}

GaussianSpec linear_spec(std::vector<double> coefs, Eigen::MatrixXd cov, double noise_ratio) {
  GaussianSpec spec;
  spec.p = coefs.size();
  spec.cov = std::move(cov);
  spec.regression.kind = RegressionFn::Kind::linear;
  spec.regression.coefs = std::move(coefs);
  spec.noise_ratio = noise_ratio;
  spec.validate();
  return spec;
}

namespace {

struct Example1Params {
  double sigma[5];
  double rho12;
  double rho45;
};

// Recovers (sigma, rho12, rho45) when cov has the example-1 block structure.
std::optional<Example1Params> example1_params(const Eigen::MatrixXd& cov) {
  if (cov.rows() != 5) return std::nullopt;
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 5; ++c) {
      const bool allowed = r == c || (std::min(r, c) == 0 && std::max(r, c) == 1) ||
                           (std::min(r, c) == 3 && std::max(r, c) == 4);
      if (!allowed && cov(r, c) != 0.0) return std::nullopt;
    }
  }
  Example1Params e{};
  for (int k = 0; k < 5; ++k) e.sigma[k] = std::sqrt(cov(k, k));
  e.rho12 = cov(0, 1) / (e.sigma[0] * e.sigma[1]);
  e.rho45 = cov(3, 4) / (e.sigma[3] * e.sigma[4]);
  return e;
}

double example1_var_m(double alpha, double beta, const double* s, double rho12, double rho45) {
  const double a = s[0] * s[1];
  const double b = s[3] * s[4];
  return alpha * alpha / 2.0 * (1.0 + 1.5 * rho12 * rho12) * a * a +
         beta * beta / 2.0 * (1.0 + 1.5 * rho45 * rho45) * b * b -
         0.5 * alpha * beta * rho12 * a * rho45 * b;
}

double quadratic_form(std::span<const double> c, const Eigen::MatrixXd& cov) {
  Eigen::Map<const Eigen::VectorXd> v(c.data(), static_cast<Eigen::Index>(c.size()));
  return v.dot(cov * v);
}

}  // namespace

std::optional<double> analytic_variance(const GaussianSpec& spec) {
  switch (spec.regression.kind) {
    case RegressionFn::Kind::example1: {
      if (spec.p != 5) return std::nullopt;
      auto e = example1_params(spec.cov);
      if (!e) return std::nullopt;
      return example1_var_m(spec.regression.alpha, spec.regression.beta, e->sigma, e->rho12,
                            e->rho45);
    }
    case RegressionFn::Kind::example2:
    case RegressionFn::Kind::linear:
      return quadratic_form(spec.regression.coefs, spec.cov);
    case RegressionFn::Kind::custom:
      return std::nullopt;
  }
  return std::nullopt;
}

namespace {

// Draws covariate rows; calls sink(i, x) for each.
template <typename Sink>
void draw_covariates(const GaussianSpec& spec, const Eigen::MatrixXd& lower, std::size_t n,
                     Rng& rng, Sink&& sink) {
  const auto p = static_cast<Eigen::Index>(spec.p);
  Eigen::VectorXd z(p);
  std::vector<double> x(spec.p);
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < p; ++k) z(k) = rng.normal();
    Eigen::Map<Eigen::VectorXd>(x.data(), p) = lower.triangularView<Eigen::Lower>() * z;
    sink(i, std::span<const double>(x));
  }
}

}  // namespace

double regression_variance(const GaussianSpec& spec) {
  if (auto v = analytic_variance(spec)) return *v;
  constexpr std::size_t kPilot = 100000;
  const Eigen::MatrixXd lower = Eigen::LLT<Eigen::MatrixXd>(spec.cov).matrixL();
  Rng pilot(0x70696c6f74ULL);
  std::vector<double> values(kPilot);
  draw_covariates(spec, lower, kPilot, pilot,
                  [&](std::size_t i, std::span<const double> x) { values[i] = spec.regression(x); });
  return sample_variance(values);
}

Dataset sample_gaussian(const GaussianSpec& spec, std::size_t n, Rng& rng) {
  spec.validate();
  if (n < 2) throw ConfigError("sample size must be at least 2");
  const Eigen::MatrixXd lower = Eigen::LLT<Eigen::MatrixXd>(spec.cov).matrixL();
  const double var_m = regression_variance(spec);
  const double noise_sd = std::sqrt(spec.noise_ratio / (1.0 - spec.noise_ratio) * var_m);

  std::vector<std::vector<double>> cols(spec.p, std::vector<double>(n));
  std::vector<double> y(n);
  draw_covariates(spec, lower, n, rng, [&](std::size_t i, std::span<const double> x) {
    for (std::size_t k = 0; k < spec.p; ++k) cols[k][i] = x[k];
    y[i] = spec.regression(x) + noise_sd * rng.normal();
  });
  return Dataset(std::move(cols), std::move(y));
}

void to_json(nlohmann::json& j, const GaussianSpec& spec) {
  nlohmann::json cov = nlohmann::json::array();
  for (Eigen::Index r = 0; r < spec.cov.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(spec.cov.cols()));
    for (Eigen::Index c = 0; c < spec.cov.cols(); ++c) row[static_cast<std::size_t>(c)] = spec.cov(r, c);
    cov.push_back(row);
  }
  nlohmann::json reg;
  switch (spec.regression.kind) {
    case RegressionFn::Kind::example1:
      reg = {{"kind", "example1"}, {"alpha", spec.regression.alpha}, {"beta", spec.regression.beta}};
      break;
    case RegressionFn::Kind::example2:
      reg = {{"kind", "example2"}, {"coefs", spec.regression.coefs}};
      break;
    case RegressionFn::Kind::linear:
      reg = {{"kind", "linear"}, {"coefs", spec.regression.coefs}};
      break;
    case RegressionFn::Kind::custom:
      reg = {{"kind", "custom"}};
      break;
  }
  j = {{"p", spec.p}, {"cov", cov}, {"regression", reg}, {"noise_ratio", spec.noise_ratio}};
}

void from_json(const nlohmann::json& j, GaussianSpec& spec) {
  spec = GaussianSpec{};
  spec.p = j.at("p").get<std::size_t>();
  const auto rows = j.at("cov").get<std::vector<std::vector<double>>>();
  spec.cov.resize(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(rows.empty() ? 0 : rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.size()) throw ConfigError("covariance must be square");
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      spec.cov(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  const auto& reg = j.at("regression");
  const std::string kind = reg.at("kind").get<std::string>();
  if (kind == "example1") {
    spec.regression.kind = RegressionFn::Kind::example1;
    spec.regression.alpha = reg.value("alpha", 1.5);
    spec.regression.beta = reg.value("beta", 1.0);
  } else if (kind == "example2" || kind == "linear") {
    spec.regression.kind =
        kind == "linear" ? RegressionFn::Kind::linear : RegressionFn::Kind::example2;
    spec.regression.coefs = reg.at("coefs").get<std::vector<double>>();
  } else {
    throw ConfigError("unsupported regression kind '" + kind + "'");
  }
  spec.noise_ratio = j.value("noise_ratio", 0.1);
  spec.validate();
}

AnalyticDecomposition analytic_example1(double alpha, double beta, std::span<const double> sigma,
                                        double rho12, double rho45, double noise_ratio) {
  if (!(std::abs(rho12) < 1.0 && std::abs(rho45) < 1.0)) {
    throw ConfigError("correlations must lie in (-1, 1)");
  }
  if (!(noise_ratio >= 0.0 && noise_ratio < 1.0)) {
    throw ConfigError("noise_ratio must lie in [0, 1)");
  }
  double s[5] = {1, 1, 1, 1, 1};
  if (!sigma.empty()) {
    if (sigma.size() != 5) throw ConfigError("example1 needs 5 standard deviations");
    for (int k = 0; k < 5; ++k) s[k] = sigma[static_cast<std::size_t>(k)];
  }
  AnalyticDecomposition d;
  d.var_m = example1_var_m(alpha, beta, s, rho12, rho45);
  d.var_y = d.var_m / (1.0 - noise_ratio);
  d.covariates.resize(5);

  // Covariates 1, 2 (and symmetrically 4, 5) enter through one product term.
  auto product_pair = [](double coef, double sa, double sb, double rho) {
    const double scale = (coef * sa * sb) * (coef * sa * sb);
    CovariateTerms t;
    t.mda1 = 0.5 * scale * (1.0 - rho * rho);
    t.mda2 = 0.5 * scale;
    t.mda3 = 1.5 * rho * rho * scale;
    t.mda_star = scale * (1.0 + rho * rho);
    return t;
  };
  d.covariates[0] = d.covariates[1] = product_pair(alpha, s[0], s[1], rho12);
  d.covariates[3] = d.covariates[4] = product_pair(beta, s[3], s[4], rho45);

  // Covariate 3 is independent of the others: MDA* = 2 E[V(m | X^(-3))].
  const double a = alpha * s[0] * s[1];
  const double b = beta * s[3] * s[4];
  CovariateTerms& t3 = d.covariates[2];
  t3.mda_star = 0.5 * a * a * (1.0 + rho12 * rho12) + 0.5 * b * b * (1.0 + rho45 * rho45) +
                0.5 * (rho12 * a - rho45 * b) * (rho12 * a - rho45 * b);
  t3.mda1 = t3.mda_star / 2.0;
  t3.mda2 = t3.mda_star / 2.0;
  t3.mda3 = 0.0;

  for (auto& t : d.covariates) {
    t.st = t.mda1 / d.var_y;
    t.st_mg = t.mda2 / d.var_y;
  }
  return d;
}

AnalyticDecomposition analytic_linear(std::span<const double> coefs, const Eigen::MatrixXd& cov,
                                      double noise_ratio) {
  const auto p = static_cast<Eigen::Index>(coefs.size());
  if (cov.rows() != p || cov.cols() != p) throw ConfigError("covariance must be p x p");
  if (!(noise_ratio >= 0.0 && noise_ratio < 1.0)) {
    throw ConfigError("noise_ratio must lie in [0, 1)");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw ConfigError("covariance is not positive-definite");
  const Eigen::MatrixXd precision = llt.solve(Eigen::MatrixXd::Identity(p, p));

  AnalyticDecomposition d;
  d.var_m = quadratic_form(coefs, cov);
  d.var_y = d.var_m / (1.0 - noise_ratio);
  d.covariates.resize(coefs.size());
  for (Eigen::Index j = 0; j < p; ++j) {
    const double c2 = coefs[static_cast<std::size_t>(j)] * coefs[static_cast<std::size_t>(j)];
    const double conditional_var = 1.0 / precision(j, j);  // V[X_j | X_-j]
    CovariateTerms& t = d.covariates[static_cast<std::size_t>(j)];
    t.mda1 = c2 * conditional_var;
    t.mda2 = c2 * cov(j, j);
    t.mda3 = c2 * (cov(j, j) - conditional_var);
    t.mda_star = 2.0 * c2 * cov(j, j);
    t.st = t.mda1 / d.var_y;
    t.st_mg = t.mda2 / d.var_y;
  }
  return d;
}

nlohmann::json to_json(const AnalyticDecomposition& d) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t j = 0; j < d.covariates.size(); ++j) {
    const auto& t = d.covariates[j];
    rows.push_back({{"covariate", "X" + std::to_string(j + 1)},
                    {"mda_star", t.mda_star},
                    {"mda1", t.mda1},
                    {"mda2", t.mda2},
                    {"mda3", t.mda3},
                    {"st", t.st},
                    {"st_mg", t.st_mg},
                    {"bc_star_normalized", d.bc_normalized(j)},
                    {"ik_star_normalized", d.ik_normalized(j)}});
  }
  return {{"var_m", d.var_m}, {"var_y", d.var_y}, {"covariates", rows}};
}

namespace {

ForestConfig reduced_config(const ForestConfig& config, std::size_t j, std::size_t p_reduced) {
  ForestConfig c = config;
  if (c.mtry > p_reduced) c.mtry = p_reduced;
  c.seed = Rng(config.seed).stream(j + 1).key();
  return c;
}

}  // namespace

double retrain_sobol(const Dataset& data, const ForestConfig& config, std::size_t j) {
  if (data.p() < 2) throw ConfigError("retraining without a covariate needs p >= 2");
  if (j >= data.p()) throw ConfigError("covariate index out of range");
  const double var_y = data.response_variance();
  if (!(var_y > 0.0)) throw ComputeError("response variance is zero");
  const double with = oob_error(fit_forest(data, config), data).mse;
  const Dataset reduced = data.drop_column(j);
  const double without =
      oob_error(fit_forest(reduced, reduced_config(config, j, reduced.p())), reduced).mse;
  return (without - with) / var_y;
}

std::vector<double> retrain_sobol_all(const Dataset& data, const ForestConfig& config) {
  if (data.p() < 2) throw ConfigError("retraining without a covariate needs p >= 2");
  const double var_y = data.response_variance();
  if (!(var_y > 0.0)) throw ComputeError("response variance is zero");
  const double with = oob_error(fit_forest(data, config), data).mse;
  std::vector<double> out(data.p());
  for (std::size_t j = 0; j < data.p(); ++j) {
    const Dataset reduced = data.drop_column(j);
    const double without =
        oob_error(fit_forest(reduced, reduced_config(config, j, reduced.p())), reduced).mse;
    out[j] = (without - with) / var_y;
  }
  return out;
}

}  // namespace sobolrf
