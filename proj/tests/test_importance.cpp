#include <gtest/gtest.h>

#include <numeric>

#include "sobolrf/errors.hpp"
#include "sobolrf/forest.hpp"
#include "sobolrf/importance.hpp"
#include "sobolrf/projected.hpp"
#include "sobolrf/report.hpp"
#include "test_util.hpp"

using namespace sobolrf;

namespace {

Dataset with_constant_column(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> rows(n, std::vector<double>(3));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    rows[i] = {rng.uniform(), 0.25, rng.uniform()};
    y[i] = 2 * rows[i][0] - rows[i][2] + 0.1 * rng.normal();
  }
  return Dataset::from_rows(rows, y);
}

Forest small_forest(const Dataset& d, std::size_t trees = 30, std::uint64_t seed = 3) {
  ForestConfig c;
  c.n_trees = trees;
  c.seed = seed;
  return fit_forest(d, c);
}

}  // namespace

TEST(Importance, ConstantColumnIsExactlyZero) {
  const Dataset d = with_constant_column(150, 1);
  const Dataset test = with_constant_column(60, 2);
  const Forest f = small_forest(d);
  Rng rng(4);
  EXPECT_EQ(tt_mda(f, test, 1, rng), 0.0);
  EXPECT_EQ(bc_mda(f, d, 1, Rng(5)), 0.0);
  EXPECT_EQ(ik_mda(f, d, 1, Rng(5), f.size()), 0.0);
  EXPECT_EQ(ik_mda(f, d, 1, Rng(5), 7), 0.0);
  EXPECT_EQ(sobol_mda(f, d, 1), 0.0);
  EXPECT_EQ(sobol_mda_lundberg(f, d, 1), 0.0);
}

TEST(Importance, IdentityPermutationIsZero) {
  const Dataset d = with_constant_column(100, 3);
  const Forest f = small_forest(d);
  std::vector<std::size_t> perm(d.n());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  EXPECT_EQ(tt_mda(f, d, 0, perm), 0.0);
}

TEST(Importance, IkWithUnitBlocksIsBc) {
  const Dataset d = fixtures::uniform_data(120, 4, 7, [](const auto& r) { return r[0] * r[1] + r[3]; }, 0.1);
  const Forest f = small_forest(d, 40);
  for (std::size_t j = 0; j < d.p(); ++j) {
    const Rng rng = Rng(99).stream(j);
    EXPECT_EQ(ik_mda(f, d, j, rng, 1), bc_mda(f, d, j, rng, false)) << "j=" << j;
  }
}

TEST(Importance, SingleTreeBcByHand) {
  const Dataset d = fixtures::uniform_data(60, 2, 8, [](const auto& r) { return r[0]; }, 0.05);
  const Forest f = small_forest(d, 1);
  const Tree& t = f.tree(0);
  const Rng rng(21);
  const auto oob = t.oob_rows();
  // Reproduce the documented permutation stream: tree 0 draws from rng.stream(0).
  Rng tree_rng = rng.stream(0);
  std::vector<std::size_t> perm = oob;
  tree_rng.shuffle(perm);
  double diff = 0.0;
  for (std::size_t k = 0; k < oob.size(); ++k) {
    auto x = d.row(oob[k]);
    const double base = d.y(oob[k]) - t.predict(x);
    x[0] = d.x(perm[k], 0);
    const double moved = d.y(oob[k]) - t.predict(x);
    diff += moved * moved - base * base;
  }
  EXPECT_NEAR(bc_mda(f, d, 0, rng), diff / static_cast<double>(oob.size()), 1e-12);
}

TEST(Importance, NoiseCovariateTakesBothSigns) {
  const Dataset d = fixtures::uniform_data(200, 3, 10, [](const auto& r) { return 4 * r[0]; }, 0.5);
  const Forest f = small_forest(d, 30);
  bool pos = false, neg = false;
  for (std::uint64_t r = 0; r < 30 && !(pos && neg); ++r) {
    const double v = bc_mda(f, d, 2, Rng(r));
    pos |= v > 0;
    neg |= v < 0;
  }
  EXPECT_TRUE(pos && neg);
}

TEST(Importance, ReportShapeDeterminismAndWarnings) {
  const Dataset d = with_constant_column(120, 11);
  const Forest f = small_forest(d, 20);
  ImportanceOptions o;
  o.repetitions = 3;
  const auto a = compute_importance(f, d, Method::bc, o, Rng(1));
  const auto b = compute_importance(f, d, Method::bc, o, Rng(1));
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.per_rep_values.size(), 3u);
  EXPECT_EQ(a.values.size(), d.p());
  EXPECT_GT(a.std_devs[0], 0.0);
  const auto n = compute_importance(f, d, Method::bc_normalized, o, Rng(1));
  EXPECT_FALSE(n.warnings.empty());  // constant column: per-tree sd is zero
  EXPECT_EQ(n.values[1], 0.0);
  const auto s = compute_importance(f, d, Method::sobol, o, Rng(1));
  EXPECT_EQ(s.std_devs, std::vector<double>(3, 0.0));
  EXPECT_EQ(s.values[0], sobol_mda(f, d, 0));
  EXPECT_THROW(parse_method("mdi"), ConfigError);
  EXPECT_THROW(compute_importance(f, d, Method::tt, o, Rng(1)), ConfigError);
}

TEST(Importance, NormalizedConventions) {
  const Dataset d = fixtures::uniform_data(150, 2, 12, [](const auto& r) { return r[0] + r[1]; }, 0.1);
  const Forest f = small_forest(d, 20);
  ImportanceOptions raw, norm;
  norm.normalized = true;
  const double v = d.response_variance();
  const auto br = compute_importance(f, d, Method::bc, raw, Rng(2));
  const auto bn = compute_importance(f, d, Method::bc, norm, Rng(2));
  const auto ir = compute_importance(f, d, Method::ik, raw, Rng(2));
  const auto in = compute_importance(f, d, Method::ik, norm, Rng(2));
  for (std::size_t j = 0; j < 2; ++j) {
    EXPECT_DOUBLE_EQ(bn.values[j], br.values[j] / (2 * v));
    EXPECT_DOUBLE_EQ(in.values[j], ir.values[j] / v);
  }
}

TEST(Importance, AdditiveModelBcAndIkAgree) {
  // Additive correlated model: both normalized estimators target the same
  // marginal index.
  Rng rng(31);
  const std::size_t n = 3000;
  std::vector<std::vector<double>> rows(n, std::vector<double>(2));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = rng.normal(), b = rng.normal();
    rows[i] = {a, 0.5 * a + std::sqrt(0.75) * b};
    y[i] = rows[i][0] + rows[i][1] + 0.3 * rng.normal();
  }
  const Dataset d = Dataset::from_rows(rows, y);
  ForestConfig c;
  c.n_trees = 100;
  c.seed = 4;
  const Forest f = fit_forest(d, c);
  const double v = d.response_variance();
  for (std::size_t j = 0; j < 2; ++j) {
    const Rng r = Rng(8).stream(j);
    const double bc = bc_mda(f, d, j, r) / (2 * v);
    const double ik = ik_mda(f, d, j, r, f.size()) / v;
    EXPECT_NEAR(bc, ik, 0.25 * std::max(bc, ik)) << "j=" << j;
  }
}
