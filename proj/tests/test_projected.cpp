#include <gtest/gtest.h>

#include <map>
#include <numeric>
#include <set>

#include "projection_oracle.hpp"
#include "sobolrf/forest.hpp"
#include "sobolrf/projected.hpp"
#include "test_util.hpp"

using namespace sobolrf;

namespace {

Node split(int feature, double thr, int left, int right, int depth, std::size_t count,
           double value, double left_fraction) {
  Node n;
  n.feature = feature;
  n.threshold = thr;
  n.left = left;
  n.right = right;
  n.depth = depth;
  n.count = count;
  n.value = value;
  n.left_fraction = left_fraction;
  return n;
}

Node leaf(int depth, std::size_t count, double value) {
  Node n;
  n.depth = depth;
  n.count = count;
  n.value = value;
  return n;
}

struct Instance {
  Dataset data;
  Tree tree;
  std::size_t j;
};

Instance random_instance(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t p = 1 + rng.uniform_index(3);
  const std::size_t n = 12 + rng.uniform_index(39);
  // Coarse grid values create ties and empty projected cells.
  std::vector<std::vector<double>> rows(n, std::vector<double>(p));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < p; ++k) rows[i][k] = static_cast<double>(rng.uniform_index(7)) / 6.0;
    y[i] = rows[i][0] - (p > 1 ? rows[i][1] : 0.0) + rng.normal();
  }
  Dataset data = Dataset::from_rows(rows, y);
  ForestConfig c;
  c.subsample_size = std::max<std::size_t>(2, n * 2 / 3);
  c.max_leaves = 2 + rng.uniform_index(7);
  c.min_node_size = 1;
  c.mtry = p;
  c.seed = seed;
  Rng tree_rng = rng.stream(1);
  Tree tree = fit_tree(data, c.resolve(n, p), tree_rng);
  return {std::move(data), std::move(tree), rng.uniform_index(p)};
}

}  // namespace

TEST(Projected, MatchesIntersectionOracleOnRandomTrees) {
  std::size_t checked = 0, with_split = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const Instance inst = random_instance(seed);
    ASSERT_LE(inst.tree.leaf_count(), 8u);
    const auto oob = inst.tree.oob_rows();
    const auto got = projected_tree_predict(inst.tree, inst.data, inst.j, oob);
    with_split += inst.tree.splits_on(inst.j);
    for (std::size_t k = 0; k < oob.size(); ++k) {
      const auto want = fixtures::projected_oracle(inst.tree, inst.data, inst.j, oob[k]);
      ASSERT_EQ(got[k].value, want.value) << "seed " << seed << " query " << oob[k];
      ASSERT_EQ(got[k].level_used, want.level) << "seed " << seed << " query " << oob[k];
      ++checked;
    }
  }
  EXPECT_GT(with_split, 100u);
  EXPECT_GT(checked, 1000u);
}

TEST(Projected, HandBuiltSixLeafTree) {
  // x1 splits at the root and again deeper; x2 splits cut the strips.
  //            0: x1<=0.5
  //     1: x2<=0.5        2: x2<=0.3
  //   3:leaf  4:x1<=0.25  5:leaf  6:x1<=0.8
  //          7:l  8:l            9:l  10:l
  const std::vector<std::vector<double>> rows{
      {0.1, 0.2}, {0.3, 0.4}, {0.2, 0.7}, {0.4, 0.9}, {0.6, 0.1}, {0.9, 0.2},
      {0.7, 0.6}, {0.9, 0.8}, {0.1, 0.9}, {0.3, 0.1}, {0.85, 0.5}, {0.6, 0.4}};
  const std::vector<double> y{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  const Dataset d = Dataset::from_rows(rows, y);
  const std::vector<std::size_t> in_bag{0, 1, 2, 3, 4, 5, 6, 7};
  std::vector<Node> nodes{
      split(0, 0.5, 1, 2, 0, 8, 4.5, 0.5),  split(1, 0.5, 3, 4, 1, 4, 2.5, 0.5),
      split(1, 0.3, 5, 6, 1, 4, 6.5, 0.5),  leaf(2, 2, 1.5),
      split(0, 0.25, 7, 8, 2, 2, 3.5, 0.5), leaf(2, 2, 5.5),
      split(0, 0.8, 9, 10, 2, 2, 7.5, 0.5), leaf(3, 1, 3.0),
      leaf(3, 1, 4.0),                      leaf(3, 1, 7.0),
      leaf(3, 1, 8.0)};
  const Tree t(nodes, in_bag, d.n(), 2);
  const std::vector<std::size_t> queries{8, 9, 10, 11};
  for (std::size_t j = 0; j < 2; ++j) {
    const auto got = projected_tree_predict(t, d, j, queries);
    for (std::size_t k = 0; k < queries.size(); ++k) {
      const auto want = fixtures::projected_oracle(t, d, j, queries[k]);
      EXPECT_EQ(got[k].value, want.value) << "j=" << j << " q=" << queries[k];
      EXPECT_EQ(got[k].level_used, want.level);
    }
  }
  // Projecting out x1: query (0.1, 0.9) lies in the upper strip x2 > 0.5 on
  // the left and x2 > 0.3 on the right; in-bag rows sharing that collection
  // are rows 2, 3 (x2 > 0.5) and 6, 7, so the cell mean is (3+4+7+8)/4.
  const auto q = projected_tree_predict(t, d, 0, std::vector<std::size_t>{8});
  EXPECT_EQ(q[0].value, 5.5);
}

TEST(Projected, DepthOneSplitOnJGivesRootMean) {
  const Dataset d({{0.1, 0.4, 0.6, 0.9, 0.2}}, {1, 2, 3, 6, 8});
  const Tree t({split(0, 0.5, 1, 2, 0, 4, 3.0, 0.5), leaf(1, 2, 1.5), leaf(1, 2, 4.5)},
               {0, 1, 2, 3}, 5, 1);
  const auto got = projected_tree_predict(t, d, 0, std::vector<std::size_t>{4});
  EXPECT_EQ(got[0].value, 3.0);
  EXPECT_EQ(got[0].level_used, 1);
}

TEST(Projected, IdentityWhenTreeIgnoresJ) {
  const Dataset d = fixtures::uniform_data(200, 4, 5, [](const auto& r) { return r[0] + r[1]; }, 0.1);
  ForestConfig c;
  c.n_trees = 40;
  c.max_leaves = 6;
  const Forest f = fit_forest(d, c);
  std::size_t trees_checked = 0;
  for (const auto& t : f.trees()) {
    for (std::size_t j = 0; j < d.p(); ++j) {
      if (t.splits_on(j)) continue;
      ++trees_checked;
      const auto oob = t.oob_rows();
      const auto got = projected_tree_predict(t, d, j, oob);
      for (std::size_t k = 0; k < oob.size(); ++k) {
        ASSERT_EQ(got[k].value, t.predict_row(d, oob[k]));
        ASSERT_GE(got[k].level_used, 1);
      }
    }
  }
  EXPECT_GT(trees_checked, 0u);
}

TEST(Projected, LevelUsedIsAtLeastOne) {
  for (std::uint64_t seed = 300; seed < 340; ++seed) {
    const Instance inst = random_instance(seed);
    if (inst.tree.leaf_count() < 2) continue;
    const auto oob = inst.tree.oob_rows();
    for (const auto& r : projected_tree_predict(inst.tree, inst.data, inst.j, oob)) {
      EXPECT_GE(r.level_used, 1);
      EXPECT_TRUE(std::isfinite(r.value));
    }
  }
}

TEST(Projected, DeeperLevelsRefineShallowerOnes) {
  // Over the in-bag rows, rows sharing a node collection at some level share
  // it at every shallower level, so the count of distinct collections never
  // drops going down.
  std::size_t checked = 0;
  for (std::uint64_t seed = 400; seed < 460; ++seed) {
    const Instance inst = random_instance(seed);
    if (!inst.tree.splits_on(inst.j)) continue;
    const int depth = inst.tree.max_depth();
    std::vector<std::vector<std::string>> keys(static_cast<std::size_t>(depth) + 1);
    for (std::size_t i : inst.tree.in_bag()) {
      const auto tr = projected_trace(inst.tree, inst.data, inst.j, i);
      const auto& levels = tr["levels"];
      for (int d = 0; d <= depth; ++d) {
        const auto idx = std::min<std::size_t>(static_cast<std::size_t>(d), levels.size() - 1);
        keys[static_cast<std::size_t>(d)].push_back(levels[idx]["collection"].dump());
      }
    }
    for (int d = 1; d <= depth; ++d) {
      std::map<std::string, std::string> parent;
      for (std::size_t r = 0; r < keys[0].size(); ++r) {
        const auto [it, fresh] = parent.emplace(keys[static_cast<std::size_t>(d)][r],
                                                keys[static_cast<std::size_t>(d - 1)][r]);
        EXPECT_TRUE(fresh || it->second == keys[static_cast<std::size_t>(d - 1)][r]);
      }
      const std::set<std::string> deep(keys[static_cast<std::size_t>(d)].begin(), keys[static_cast<std::size_t>(d)].end());
      const std::set<std::string> shallow(keys[static_cast<std::size_t>(d - 1)].begin(), keys[static_cast<std::size_t>(d - 1)].end());
      EXPECT_GE(deep.size(), shallow.size());
    }
    ++checked;
  }
  EXPECT_GT(checked, 10u);
}

TEST(Projected, TraceDump) {
  const Instance inst = random_instance(7);
  const auto oob = inst.tree.oob_rows();
  const auto tr = projected_trace(inst.tree, inst.data, inst.j, oob[0]);
  EXPECT_TRUE(tr.contains("levels"));
  EXPECT_TRUE(tr.contains("level_used"));
  EXPECT_TRUE(tr.contains("cell_size"));
}

TEST(Lundberg, WeightedChildren) {
  const Tree t({split(0, 0.5, 1, 2, 0, 10, 0.7, 0.3), leaf(1, 3, 0.0), leaf(1, 7, 1.0)},
               {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, 12, 2);
  EXPECT_DOUBLE_EQ(lundberg_predict(t, 0, std::vector<double>{0.1, 0.0}), 0.7);
  EXPECT_EQ(lundberg_predict(t, 1, std::vector<double>{0.1, 0.0}), 0.0);
  EXPECT_EQ(lundberg_predict(t, 1, std::vector<double>{0.9, 0.0}), 1.0);
}

TEST(Lundberg, IndependentCovariatesAgreeWithSobol) {
  const Dataset d = fixtures::uniform_data(1500, 3, 9, [](const auto& r) { return 2 * r[0] + r[1]; }, 0.2);
  ForestConfig c;
  c.n_trees = 60;
  const Forest f = fit_forest(d, c);
  for (std::size_t j = 0; j < 2; ++j) {
    const double s = sobol_mda(f, d, j);
    const double l = sobol_mda_lundberg(f, d, j);
    EXPECT_NEAR(s, l, 0.05 + 0.2 * s) << "j=" << j;
  }
}
