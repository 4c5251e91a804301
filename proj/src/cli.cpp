#include "sobolrf/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "sobolrf/analytic.hpp"
#include "sobolrf/config.hpp"
#include "sobolrf/dataset.hpp"
#include "sobolrf/errors.hpp"
#include "sobolrf/forest.hpp"
#include "sobolrf/parallel.hpp"
#include "sobolrf/report.hpp"
#include "sobolrf/selection.hpp"

namespace sobolrf {

namespace {

struct Common {
  std::uint64_t seed = 1;
  std::size_t threads = 0;
  std::string format = "csv";
  std::string out;
};

struct ForestFlags {
  std::string config_path;
  std::optional<std::size_t> trees, subsample, max_leaves, min_node_size, mtry;
  std::optional<double> gamma, delta;
};

struct DataFlags {
  std::string path;
  std::string target = "y";
};

void add_common(CLI::App* cmd, Common& c, bool with_out = true) {
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--threads", c.threads, "worker threads (default: SOBOLRF_THREADS or all cores)");
  cmd->add_option("--format", c.format, "output format")->check(CLI::IsMember({"csv", "json"}));
  if (with_out) cmd->add_option("--out", c.out, "output file (default: stdout)");
}

void add_forest(CLI::App* cmd, ForestFlags& f) {
  cmd->add_option("--config", f.config_path, "forest config JSON");
  cmd->add_option("--trees", f.trees, "number of trees M");
  cmd->add_option("--subsample", f.subsample, "subsample size a_n (0 = auto)");
  cmd->add_option("--max-leaves", f.max_leaves, "leaf budget t_n (0 = unlimited)");
  cmd->add_option("--min-node-size", f.min_node_size, "minimum child size");
  cmd->add_option("--mtry", f.mtry, "candidate covariates per node (0 = auto)");
  cmd->add_option("--gamma", f.gamma, "minimum child fraction");
  cmd->add_option("--delta", f.delta, "probability of mtry = 1");
}

void add_data(CLI::App* cmd, DataFlags& d, bool required = true) {
  auto* opt = cmd->add_option("--data", d.path, "CSV dataset");
  if (required) opt->required();
  cmd->add_option("--target", d.target, "response column name or 0-based index");
}

ForestConfig build_config(const ForestFlags& f, std::uint64_t seed) {
  ForestConfig c = f.config_path.empty() ? ForestConfig{} : load_config(f.config_path);
  if (f.trees) c.n_trees = *f.trees;
  if (f.subsample) c.subsample_size = *f.subsample;
  if (f.max_leaves) c.max_leaves = *f.max_leaves;
  if (f.min_node_size) c.min_node_size = *f.min_node_size;
  if (f.mtry) c.mtry = *f.mtry;
  if (f.gamma) c.gamma = *f.gamma;
  if (f.delta) c.delta = *f.delta;
  c.seed = seed;
  return c;
}

ColumnRef target_ref(const std::string& t) {
  if (!t.empty() && std::all_of(t.begin(), t.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
    return static_cast<std::size_t>(std::stoull(t));
  }
  return t;
}

Dataset load(const DataFlags& d) { return load_csv(d.path, target_ref(d.target)); }

void emit(const Common& c, const std::string& text, std::ostream& out) {
  if (c.out.empty()) {
    out << text;
    return;
  }
  std::ofstream file(c.out, std::ios::binary);
  if (!file) throw DataError("cannot write " + c.out);
  file << text;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Random forests with permutation and Sobol importance"};
  app.require_subcommand(1);

  // fit
  Common fit_c;
  ForestFlags fit_f;
  DataFlags fit_d;
  auto* fit = app.add_subcommand("fit", "train a forest and save it as JSON");
  add_common(fit, fit_c, false);
  add_forest(fit, fit_f);
  add_data(fit, fit_d);
  fit->add_option("--out", fit_c.out, "forest JSON path")->required();

  // predict
  Common pred_c;
  DataFlags pred_d;
  std::string pred_forest;
  auto* pred = app.add_subcommand("predict", "predict with a saved forest");
  add_common(pred, pred_c);
  add_data(pred, pred_d);
  pred->add_option("--forest", pred_forest, "forest JSON")->required();

  // importance
  Common imp_c;
  ForestFlags imp_f;
  DataFlags imp_d;
  std::string imp_methods = "sobol", imp_forest, imp_test;
  std::size_t imp_reps = 1, imp_block = 0;
  bool imp_norm = false;
  auto* imp = app.add_subcommand("importance", "variable importance for every covariate");
  add_common(imp, imp_c);
  add_forest(imp, imp_f);
  add_data(imp, imp_d);
  imp->add_option("--methods", imp_methods, "comma list of tt,bc,bc_normalized,ik,sobol,lundberg,retrain");
  imp->add_option("--reps", imp_reps, "repetitions of the permutation methods");
  imp->add_option("--block-size", imp_block, "ik tree block size (0 = all trees)");
  imp->add_flag("--normalized", imp_norm, "divide bc by 2 V[Y] and ik by V[Y]");
  imp->add_option("--forest", imp_forest, "use a saved forest instead of fitting");
  imp->add_option("--test", imp_test, "held-out CSV for tt");

  // simulate
  Common sim_c;
  int sim_example = 1;
  std::size_t sim_n = 1000;
  std::string sim_spec, sim_sidecar;
  double sim_alpha = 1.5, sim_beta = 1.0, sim_rho12 = 0.9, sim_rho45 = 0.6;
  std::optional<double> sim_noise;
  auto* sim = app.add_subcommand("simulate", "draw a Gaussian simulation dataset");
  sim->add_option("--seed", sim_c.seed, "random seed");
  sim->add_option("--threads", sim_c.threads, "ignored");
  sim->add_option("--format", sim_c.format, "sidecar format")->check(CLI::IsMember({"csv", "json"}));
  sim->add_option("--out", sim_c.out, "CSV path (default: stdout, no sidecar)");
  sim->add_option("--example", sim_example, "1 or 2")->check(CLI::IsMember({1, 2}));
  sim->add_option("--spec", sim_spec, "GaussianSpec JSON instead of an example");
  sim->add_option("--n", sim_n, "sample size");
  sim->add_option("--noise", sim_noise, "noise share of V[Y]");
  sim->add_option("--alpha", sim_alpha);
  sim->add_option("--beta", sim_beta);
  sim->add_option("--rho12", sim_rho12);
  sim->add_option("--rho45", sim_rho45);
  sim->add_option("--sidecar", sim_sidecar, "sidecar path (default: <out>.json)");

  // rfe
  Common rfe_c;
  ForestFlags rfe_f;
  DataFlags rfe_d;
  std::string rfe_method = "sobol";
  std::size_t rfe_folds = 10, rfe_repeats = 1;
  bool rfe_batched = false;
  auto* rfe_cmd = app.add_subcommand("rfe", "recursive feature elimination with repeated k-fold CV");
  add_common(rfe_cmd, rfe_c);
  add_forest(rfe_cmd, rfe_f);
  add_data(rfe_cmd, rfe_d);
  rfe_cmd->add_option("--methods,--method", rfe_method, "bc, ik, sobol or retrain");
  rfe_cmd->add_option("--folds", rfe_folds);
  rfe_cmd->add_option("--repeats", rfe_repeats);
  rfe_cmd->add_flag("--batched", rfe_batched, "remove ceil(5%) of the covariates per step");

  // analytic
  Common ana_c;
  double ana_alpha = 1.5, ana_beta = 1.0, ana_rho12 = 0.9, ana_rho45 = 0.6, ana_noise = 0.1;
  std::vector<double> ana_sigma;
  auto* ana = app.add_subcommand("analytic", "closed-form importance limits for example 1");
  add_common(ana, ana_c);
  ana->add_option("--alpha", ana_alpha);
  ana->add_option("--beta", ana_beta);
  ana->add_option("--rho12", ana_rho12);
  ana->add_option("--rho45", ana_rho45);
  ana->add_option("--noise", ana_noise);
  ana->add_option("--sigma", ana_sigma, "five standard deviations")->expected(5);

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  auto threads = [](const Common& c) {
    if (c.threads > 0) set_thread_count(c.threads);
  };

  try {
    if (*fit) {
      threads(fit_c);
      const Dataset data = load(fit_d);
      const ForestConfig cfg = build_config(fit_f, fit_c.seed);
      const Forest forest = fit_forest(data, cfg);
      save_forest(forest, fit_c.out);
      const OobError e = oob_error(forest, data);
      nlohmann::json summary{{"trees", forest.size()},
                             {"oob_mse", e.mse},
                             {"n_oob_defined", e.n_defined},
                             {"n", data.n()},
                             {"p", data.p()}};
      if (fit_c.format == "json") {
        out << summary.dump(2) << '\n';
      } else {
        out << "trees,n,p,oob_mse,n_oob_defined\n"
            << forest.size() << ',' << data.n() << ',' << data.p() << ',' << fmt(e.mse) << ','
            << e.n_defined << '\n';
      }
    } else if (*pred) {
      threads(pred_c);
      const Forest forest = load_forest(pred_forest);
      const Dataset data = load(pred_d);
      if (data.p() != forest.p()) {
        throw ConfigError("dataset has " + std::to_string(data.p()) + " covariates, forest expects " +
                          std::to_string(forest.p()));
      }
      const auto yhat = predict_forest(forest, data);
      std::string text;
      if (pred_c.format == "json") {
        text = nlohmann::json{{"predictions", yhat}}.dump(2) + "\n";
      } else {
        text = "prediction\n";
        for (double v : yhat) text += fmt(v) + "\n";
      }
      emit(pred_c, text, out);
    } else if (*imp) {
      threads(imp_c);
      std::vector<Method> methods;
      for (const auto& m : split_list(imp_methods)) methods.push_back(parse_method(m));
      if (methods.empty()) throw ConfigError("no importance method given");
      if (imp_reps < 1) throw ConfigError("--reps must be at least 1");
      const bool needs_test = std::find(methods.begin(), methods.end(), Method::tt) != methods.end();
      if (needs_test && imp_test.empty()) throw ConfigError("method tt needs --test");
      const ForestConfig cfg = build_config(imp_f, imp_c.seed);
      const Dataset data = load(imp_d);
      std::optional<Dataset> test;
      if (!imp_test.empty()) test = load_csv(imp_test, target_ref(imp_d.target));
      const Forest forest = imp_forest.empty() ? fit_forest(data, cfg) : load_forest(imp_forest);
      if (forest.p() != data.p()) throw ConfigError("forest and dataset covariate counts differ");

      ImportanceOptions options;
      options.repetitions = imp_reps;
      options.normalized = imp_norm;
      options.block_size = imp_block;
      options.test = test ? &*test : nullptr;
      const Rng rng(imp_c.seed);
      std::string text;
      nlohmann::json reports = nlohmann::json::array();
      for (std::size_t k = 0; k < methods.size(); ++k) {
        const auto report = compute_importance(forest, data, methods[k], options, rng.stream(k));
        for (const auto& w : report.warnings) err << "warning: " << w << '\n';
        if (imp_c.format == "json") {
          reports.push_back(to_json(report));
        } else {
          text += to_csv(report, k == 0);
        }
      }
      if (imp_c.format == "json") text = nlohmann::json{{"reports", reports}}.dump(2) + "\n";
      emit(imp_c, text, out);
    } else if (*sim) {
      GaussianSpec spec;
      if (!sim_spec.empty()) {
        std::ifstream in(sim_spec);
        if (!in) throw DataError("cannot read " + sim_spec);
        nlohmann::json j;
        try {
          j = nlohmann::json::parse(in);
          spec = j.get<GaussianSpec>();
        } catch (const nlohmann::json::exception& e) {
          throw ConfigError(std::string("bad spec: ") + e.what());
        }
        if (sim_noise) spec.noise_ratio = *sim_noise;
      } else if (sim_example == 1) {
        spec = example1_spec(sim_alpha, sim_beta, {}, sim_rho12, sim_rho45, sim_noise.value_or(0.1));
      } else {
        spec = example2_spec(sim_noise.value_or(0.1));
      }
      spec.validate();
      if (sim_n < 2) throw ConfigError("--n must be at least 2");
      Rng rng(sim_c.seed);
      const Dataset data = sample_gaussian(spec, sim_n, rng);
      emit(sim_c, to_csv(data), out);
      if (!sim_c.out.empty()) {
        nlohmann::json side{{"spec", spec}, {"n", sim_n}, {"seed", sim_c.seed}};
        side["var_m"] = regression_variance(spec);
        if (sim_spec.empty() && sim_example == 1) {
          side["oracle"] = to_json(analytic_example1(sim_alpha, sim_beta, {}, sim_rho12, sim_rho45,
                                                     spec.noise_ratio));
        }
        const std::string path = sim_sidecar.empty() ? sim_c.out + ".json" : sim_sidecar;
        std::ofstream file(path, std::ios::binary);
        if (!file) throw DataError("cannot write " + path);
        file << side.dump(2) << '\n';
      }
    } else if (*rfe_cmd) {
      threads(rfe_c);
      const Method method = parse_method(rfe_method);
      const ForestConfig cfg = build_config(rfe_f, rfe_c.seed);
      const Dataset data = load(rfe_d);
      RfeOptions options;
      options.batched = rfe_batched;
      const RfeTrace trace = rfe(data, cfg, method, rfe_folds, rfe_repeats, Rng(rfe_c.seed), options);
      emit(rfe_c,
           rfe_c.format == "json" ? to_json(trace, data.feature_names()).dump(2) + "\n"
                                  : to_csv(trace, data.feature_names()),
           out);
    } else if (*ana) {
      if (!ana_sigma.empty() && ana_sigma.size() != 5) throw ConfigError("--sigma needs 5 values");
      const auto d = analytic_example1(ana_alpha, ana_beta, ana_sigma, ana_rho12, ana_rho45, ana_noise);
      std::string text;
      if (ana_c.format == "json") {
        text = to_json(d).dump(2) + "\n";
      } else {
        text = "feature,mda_star,mda1,mda2,mda3,bc_normalized,ik_normalized,st,st_mg\n";
        for (std::size_t j = 0; j < d.covariates.size(); ++j) {
          const auto& c = d.covariates[j];
          text += "X" + std::to_string(j + 1) + ',' + fmt(c.mda_star) + ',' + fmt(c.mda1) + ',' +
                  fmt(c.mda2) + ',' + fmt(c.mda3) + ',' + fmt(d.bc_normalized(j)) + ',' +
                  fmt(d.ik_normalized(j)) + ',' + fmt(c.st) + ',' + fmt(c.st_mg) + '\n';
        }
      }
      emit(ana_c, text, out);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace sobolrf
