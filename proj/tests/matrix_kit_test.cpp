#include <gtest/gtest.h>

#include "klstm/errors.hpp"
#include "klstm/matrix_kit.hpp"
#include "test_support.hpp"

namespace klstm {
namespace {

MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
  MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
  Index r = 0;
  for (const auto& row : rows) {
    Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

TEST(SpdSolve, IdentitySolve) {
  const MatrixXd x = spd_solve(MatrixXd::Identity(2, 2), mat({{3}, {4}}));
  EXPECT_EQ(x, mat({{3}, {4}}));
}

TEST(SpdSolve, ScalarDivision) { EXPECT_DOUBLE_EQ(spd_solve(mat({{4}}), mat({{2}}))(0, 0), 0.5); }

TEST(SpdSolve, HandElimination) {
  const MatrixXd x = spd_solve(mat({{2, 1}, {1, 2}}), mat({{1}, {1}}));
  EXPECT_NEAR(x(0, 0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(x(1, 0), 1.0 / 3.0, 1e-15);
}

TEST(SpdSolve, RejectsShapeMismatch) {
  EXPECT_THROW(spd_solve(MatrixXd::Identity(2, 2), MatrixXd::Ones(3, 1)), DimensionMismatch);
  EXPECT_THROW(spd_solve(MatrixXd::Ones(2, 3), MatrixXd::Ones(2, 1)), DimensionMismatch);
}

TEST(SpdSolve, ResidualBoundOnRandomSpd) {
  testing::Gen gen(101);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = gen.integer(1, 12);
    const Index m = gen.integer(1, 4);
    const MatrixXd a = gen.spd(n);
    const MatrixXd b = gen.matrix(n, m);
    const MatrixXd x = spd_solve(a, b);
    EXPECT_LE((a * x - b).cwiseAbs().maxCoeff(), 1e-9 * b.cwiseAbs().maxCoeff()) << "trial " << trial;
    EXPECT_TRUE(all_finite(x));
  }
}

TEST(Symmetrize, Examples) {
  EXPECT_EQ(symmetrize(mat({{1, 2}, {0, 1}})), mat({{1, 1}, {1, 1}}));
  EXPECT_EQ(symmetrize(mat({{0, 4}, {2, 0}})), mat({{0, 3}, {3, 0}}));
  const MatrixXd s = mat({{2, -1}, {-1, 5}});
  EXPECT_EQ(symmetrize(s), s);
}

TEST(Symmetrize, RejectsNonSquare) { EXPECT_THROW(symmetrize(MatrixXd::Ones(2, 3)), DimensionMismatch); }

TEST(Symmetrize, IdempotentAndSymmetric) {
  testing::Gen gen(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = gen.integer(1, 9);
    const MatrixXd once = symmetrize(gen.matrix(n, n));
    EXPECT_EQ(symmetrize(once), once);
    EXPECT_TRUE(is_symmetric(once));
  }
}

TEST(Trace, Examples) {
  EXPECT_EQ(trace(MatrixXd::Identity(3, 3)), 3.0);
  EXPECT_EQ(trace(mat({{2, 9}, {9, 5}})), 7.0);
  EXPECT_EQ(trace(MatrixXd::Zero(4, 4)), 0.0);
  EXPECT_THROW(trace(MatrixXd::Ones(2, 3)), DimensionMismatch);
}

TEST(Trace, CyclicProperty) {
  testing::Gen gen(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = gen.integer(1, 8);
    const Index m = gen.integer(1, 8);
    const MatrixXd a = gen.matrix(n, m);
    const MatrixXd b = gen.matrix(m, n);
    const double ab = trace(a * b);
    EXPECT_NEAR(ab, trace(b * a), 1e-12 * std::max(1.0, std::abs(ab)));
  }
}

TEST(EnsureSpd, SpdInputUnchanged) {
  const MatrixXd a = mat({{2, 1}, {1, 2}});
  SpdRepair repair;
  EXPECT_EQ(ensure_spd(a, default_jitter(a), &repair), a);
  EXPECT_EQ(repair.jitter, 0.0);
  EXPECT_EQ(repair.doublings, -1);
}

TEST(EnsureSpd, TinyPositiveNeedsNoJitter) {
  // A 1×1 Cholesky of 1e-30 succeeds, so the smallest sufficient jitter is zero.
  const MatrixXd a = mat({{1e-30}});
  SpdRepair repair;
  const MatrixXd out = ensure_spd(a, 1e-12, &repair);
  EXPECT_EQ(out(0, 0), 1e-30);
  EXPECT_EQ(repair.jitter, 0.0);
}

TEST(EnsureSpd, SmallNegativeEigenvalueIsRepaired) {
  const MatrixXd a = mat({{1, 0}, {0, -1e-13}});
  SpdRepair repair;
  const MatrixXd out = ensure_spd(a, 1e-12, &repair);
  EXPECT_GE(repair.doublings, 0);
  EXPECT_GT(repair.jitter, 1e-13);
  EXPECT_LE(repair.jitter, 1e-12 * 1024);
  EXPECT_NEAR(out(1, 1), -1e-13 + repair.jitter, 1e-28);
}

TEST(EnsureSpd, LargeNegativityFails) { EXPECT_THROW(ensure_spd(mat({{-1}}), 1e-12), NotPositiveDefinite); }

TEST(EnsureSpd, NonFiniteFails) {
  EXPECT_THROW(ensure_spd(mat({{std::numeric_limits<double>::quiet_NaN()}}), 1e-12), NotPositiveDefinite);
}

TEST(DefaultJitter, ScalesWithMeanDiagonal) {
  EXPECT_DOUBLE_EQ(default_jitter(mat({{2, 0}, {0, 4}})), 3e-12);
}

}  // namespace
}  // namespace klstm
