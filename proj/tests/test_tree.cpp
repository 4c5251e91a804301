#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "sobolrf/config.hpp"
#include "sobolrf/tree.hpp"
#include "test_util.hpp"

using namespace sobolrf;

namespace {

ForestConfig exact_config(std::size_t n, std::size_t p, std::size_t min_node = 1) {
  ForestConfig c;
  c.min_node_size = min_node;
  c.mtry = p;
  c.subsample_size = n;
  return c.resolve(n, p);
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> r(n);
  std::iota(r.begin(), r.end(), std::size_t{0});
  return r;
}

// Rows of `in_bag` reaching node `id`.
void rows_at(const Tree& t, const Dataset& d, int id, std::vector<std::size_t> rows,
             std::map<int, std::vector<std::size_t>>& out) {
  out[id] = rows;
  const Node& nd = t.node(static_cast<std::size_t>(id));
  if (nd.is_leaf()) return;
  std::vector<std::size_t> l, r;
  for (auto i : rows) (d.x(i, static_cast<std::size_t>(nd.feature)) <= nd.threshold ? l : r).push_back(i);
  rows_at(t, d, nd.left, l, out);
  rows_at(t, d, nd.right, r, out);
}

}  // namespace

TEST(Cart, FourPointSplit) {
  const Dataset d({{0.1, 0.2, 0.8, 0.9}}, {0, 0, 1, 1});
  Rng rng(1);
  const Tree t = grow_tree(d, all_rows(4), exact_config(4, 1), rng);
  ASSERT_EQ(t.leaf_count(), 2u);
  EXPECT_EQ(t.node(0).feature, 0);
  EXPECT_DOUBLE_EQ(t.node(0).threshold, 0.5);
  const std::vector<double> q{0.3};
  EXPECT_EQ(t.predict(q), 0.0);
  EXPECT_EQ(predict_tree(t, std::vector<double>{0.85}), 1.0);
  EXPECT_EQ(predict_tree(t, std::vector<double>{0.5}), 0.0);  // ties go left
}

TEST(Cart, ExhaustiveMidpointSearchAgrees) {
  // Independent search over the three midpoints of the four-point example.
  const std::vector<double> x{0.1, 0.2, 0.8, 0.9}, y{0, 0, 1, 1};
  double best = -1.0, best_t = 0.0;
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    const double thr = 0.5 * (x[k] + x[k + 1]);
    double sl = 0, sr = 0, nl = 0, nr = 0, total = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      total += y[i];
      if (x[i] <= thr) sl += y[i], ++nl; else sr += y[i], ++nr;
    }
    const double gain = sl * sl / nl + sr * sr / nr - total * total / 4.0;
    if (gain > best) best = gain, best_t = thr;
  }
  EXPECT_DOUBLE_EQ(best_t, 0.5);
}

TEST(Cart, SingleRowAndConstantResponseGiveOneLeaf) {
  const Dataset d({{0.1, 0.2, 0.3, 0.4}}, {2, 2, 2, 2});
  Rng rng(1);
  const Tree t = grow_tree(d, all_rows(4), exact_config(4, 1), rng);
  EXPECT_EQ(t.leaf_count(), 1u);
  EXPECT_EQ(t.predict(std::vector<double>{9.0}), 2.0);

  const Dataset e({{0.1, 0.2, 0.3, 0.4}}, {1, 5, 2, 7});
  const Tree one = grow_tree(e, {2}, exact_config(4, 1), rng);
  EXPECT_EQ(one.leaf_count(), 1u);
  EXPECT_EQ(one.predict(std::vector<double>{0.9}), 2.0);
}

TEST(Cart, StructuralInvariants) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Dataset d = fixtures::uniform_data(120, 3, seed, [](const auto& r) { return r[0] + 2 * r[1] * r[2]; }, 0.3);
    ForestConfig c;
    c.min_node_size = 1 + seed % 5;
    c.max_leaves = 4 + seed % 11;
    c.gamma = (seed % 3 == 0) ? 0.2 : 0.0;
    c.delta = (seed % 4 == 0) ? 0.5 : 0.0;
    c.seed = seed;
    const ForestConfig rc = c.resolve(d.n(), d.p());
    Rng rng(seed);
    const Tree t = fit_tree(d, rc, rng);
    EXPECT_LE(t.leaf_count(), rc.max_leaves);
    std::map<int, std::vector<std::size_t>> rows;
    rows_at(t, d, 0, t.in_bag(), rows);
    for (std::size_t id = 0; id < t.nodes().size(); ++id) {
      const Node& nd = t.node(id);
      const auto& r = rows[static_cast<int>(id)];
      ASSERT_EQ(r.size(), nd.count);
      ASSERT_GE(r.size(), 1u);
      double sum = 0.0;
      for (auto i : r) sum += d.y(i);
      EXPECT_NEAR(nd.value, sum / static_cast<double>(r.size()), 1e-12);
      if (nd.is_leaf()) continue;
      const auto& l = rows[nd.left];
      const auto& rr = rows[nd.right];
      EXPECT_GE(l.size(), rc.min_node_size);
      EXPECT_GE(rr.size(), rc.min_node_size);
      const auto floor_child = static_cast<std::size_t>(std::ceil(rc.gamma * static_cast<double>(nd.count)));
      EXPECT_GE(l.size(), floor_child);
      EXPECT_GE(rr.size(), floor_child);
      // Threshold strictly between observed values of the split feature.
      const auto f = static_cast<std::size_t>(nd.feature);
      double lmax = -INFINITY, rmin = INFINITY;
      for (auto i : l) lmax = std::max(lmax, d.x(i, f));
      for (auto i : rr) rmin = std::min(rmin, d.x(i, f));
      EXPECT_LT(lmax, nd.threshold);
      EXPECT_GT(rmin, nd.threshold);
      EXPECT_DOUBLE_EQ(nd.threshold, 0.5 * (lmax + rmin));
      EXPECT_DOUBLE_EQ(nd.left_fraction, static_cast<double>(l.size()) / static_cast<double>(nd.count));
    }
  }
}

TEST(Cart, MaxLeavesBudgetIsBestFirst) {
  const Dataset d = fixtures::uniform_data(200, 2, 3, [](const auto& r) { return r[0] > 0.5 ? 10.0 : 0.0; }, 0.1);
  ForestConfig c = exact_config(200, 2);
  c.max_leaves = 2;
  Rng rng(1);
  const Tree t = grow_tree(d, all_rows(200), c, rng);
  EXPECT_EQ(t.leaf_count(), 2u);
  EXPECT_EQ(t.node(0).feature, 0);
  EXPECT_NEAR(t.node(0).threshold, 0.5, 0.02);
}

TEST(Cart, DeterministicAndJsonRoundTrip) {
  const Dataset d = fixtures::uniform_data(80, 3, 2, [](const auto& r) { return r[1]; }, 0.1);
  const ForestConfig c = ForestConfig{}.resolve(80, 3);
  Rng a(5), b(5);
  const Tree t1 = fit_tree(d, c, a);
  const Tree t2 = fit_tree(d, c, b);
  const nlohmann::json j1 = t1, j2 = t2;
  EXPECT_EQ(j1.dump(), j2.dump());
  const Tree back = j1.get<Tree>();
  for (std::size_t i = 0; i < d.n(); ++i) EXPECT_EQ(back.predict(d.row(i)), t1.predict(d.row(i)));
  EXPECT_EQ(back.in_bag(), t1.in_bag());
}
