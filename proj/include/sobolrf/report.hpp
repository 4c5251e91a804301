#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "sobolrf/config.hpp"
#include "sobolrf/dataset.hpp"
#include "sobolrf/forest.hpp"
#include "sobolrf/importance.hpp"
#include "sobolrf/rng.hpp"

namespace sobolrf {

struct ImportanceOptions {
  std::size_t repetitions = 1;
  // Divide bc and tt by 2 V̂[Y] and ik by V̂[Y]. sobol, lundberg and retrain
  // come out of their estimators already divided by V̂[Y].
  bool normalized = false;
  std::size_t block_size = 0;        // ik block size, 0 means one block of all trees
  const Dataset* test = nullptr;     // required for tt
};

// Runs `method` for every covariate. Repetition r draws its permutations from
// rng.stream(r).stream(j) for covariate j. Deterministic methods (sobol,
// lundberg, retrain) are computed once and reported with zero spread.
// `data` must be the forest's training set; retrain also needs `config`.
ImportanceReport compute_importance(const Forest& forest, const Dataset& data, Method method,
                                    const ImportanceOptions& options, const Rng& rng);

nlohmann::json to_json(const ImportanceReport& report);
// Rows "method,feature,value,std"; header included when `header` is set.
std::string to_csv(const ImportanceReport& report, bool header = true);

}  // namespace sobolrf
