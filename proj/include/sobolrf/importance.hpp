#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sobolrf/dataset.hpp"
#include "sobolrf/forest.hpp"
#include "sobolrf/rng.hpp"

namespace sobolrf {

enum class Method { tt, bc, bc_normalized, ik, sobol, lundberg, retrain };

std::string to_string(Method m);
// Throws ConfigError on an unknown name.
Method parse_method(const std::string& name);

// Per-covariate importance values for one method.
struct ImportanceReport {
  Method method = Method::bc;
  std::vector<std::string> feature_names;
  std::vector<double> values;     // mean over repetitions
  std::vector<double> std_devs;   // across repetitions, 0 for a single one
  double normalizer = 1.0;        // divisor already applied to values
  std::size_t repetitions = 1;
  std::vector<std::vector<double>> per_rep_values;  // [repetition][covariate]
  std::vector<std::string> warnings;
};

// Out-of-bag rows of every tree with the unpermuted tree predictions, shared
// by the estimators below so that each covariate does not re-predict them.
struct OobCache {
  std::vector<std::vector<std::size_t>> rows;    // [tree] ascending rows
  std::vector<std::vector<double>> predictions;  // [tree][k] for rows[tree][k]
};
OobCache build_oob_cache(const Forest& forest, const Dataset& data);

// Train/Test MDA with one uniform permutation of the test rows drawn from rng.
double tt_mda(const Forest& forest, const Dataset& test, std::size_t j, Rng& rng);
// Same with an explicit permutation: row i takes column j from row perm[i].
double tt_mda(const Forest& forest, const Dataset& test, std::size_t j,
              std::span<const std::size_t> perm);

struct BcMda {
  double value = 0.0;          // mean over trees, divided by per_tree_sd if normalized
  double unnormalized = 0.0;   // mean over trees
  double per_tree_sd = 0.0;    // sample standard deviation across trees
  bool normalization_skipped = false;  // requested but per_tree_sd == 0
};

// Breiman-Cutler MDA. The permutation of tree l's out-of-bag rows is drawn
// from rng.stream(l), so each (covariate, tree) pair has its own stream when
// rng is itself specific to the covariate.
BcMda bc_mda_detailed(const Forest& forest, const Dataset& data, std::size_t j,
                      const Rng& rng, bool normalized, const OobCache* cache = nullptr);
double bc_mda(const Forest& forest, const Dataset& data, std::size_t j, const Rng& rng,
              bool normalized = false);

// Ishwaran-Kogalur MDA over consecutive blocks of block_size trees. Uses the
// same per-tree permutation streams as bc_mda, hence block_size == 1
// reproduces bc_mda bit for bit and block_size == M is the single-block form.
double ik_mda(const Forest& forest, const Dataset& data, std::size_t j, const Rng& rng,
              std::size_t block_size, const OobCache* cache = nullptr);

}  // namespace sobolrf
