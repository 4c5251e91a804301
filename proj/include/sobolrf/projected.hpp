#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "sobolrf/dataset.hpp"
#include "sobolrf/forest.hpp"
#include "sobolrf/importance.hpp"
#include "sobolrf/tree.hpp"

namespace sobolrf {

struct ProjectedPrediction {
  double value = 0.0;
  int level_used = 0;  // tree depth whose projected cell produced the value
};

// Projected-CART: predictions of `tree` with every split on covariate j
// ignored, cell outputs recomputed from the tree's in-bag rows of `train`.
//
// In-bag and query points are dropped level by level; a split on j sends a
// point to both children, any other split routes it normally, and leaves
// reached early stay in place for the deeper levels. The set of nodes a point
// occupies at a level is its node collection; the projected cell of a query is
// the set of in-bag rows with the same collection. A query is answered at the
// first level where its whole collection is terminal, falling back one level
// at a time while its projected cell is empty.
//
// `queries` index rows of `query_data`, which must have the same columns as
// `train`. Queries are meant to be out-of-bag for the tree.
std::vector<ProjectedPrediction> projected_tree_predict(const Tree& tree, const Dataset& train,
                                                        std::size_t j,
                                                        const Dataset& query_data,
                                                        std::span<const std::size_t> queries);
std::vector<ProjectedPrediction> projected_tree_predict(const Tree& tree, const Dataset& data,
                                                        std::size_t j,
                                                        std::span<const std::size_t> queries);

// Per-level node collections of one query, the level used and the size of the
// projected cell there.
nlohmann::json projected_trace(const Tree& tree, const Dataset& data, std::size_t j,
                               std::size_t query);

// Sobol-MDA: out-of-bag squared error of the projected forest minus that of
// the original forest, averaged over all n rows (rows without out-of-bag trees
// contribute zero) and divided by the sample variance of the response.
double sobol_mda(const Forest& forest, const Dataset& data, std::size_t j,
                 const OobCache* cache = nullptr);
std::vector<double> sobol_mda_all(const Forest& forest, const Dataset& data);

// Weighted traversal: both children are followed at splits on j, each weighted
// by its in-bag fraction of the parent; returns the weighted mean of the
// leaf outputs reached.
double lundberg_predict(const Tree& tree, std::size_t j, std::span<const double> x);

// sobol_mda with lundberg_predict in place of the projected prediction.
double sobol_mda_lundberg(const Forest& forest, const Dataset& data, std::size_t j,
                          const OobCache* cache = nullptr);
std::vector<double> sobol_mda_lundberg_all(const Forest& forest, const Dataset& data);

}  // namespace sobolrf
