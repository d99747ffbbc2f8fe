#include <cmath>

#include <gtest/gtest.h>

#include "klstm/errors.hpp"
#include "klstm/lstm_model.hpp"
#include "test_support.hpp"

namespace klstm {
namespace {

TEST(ModelDims, CountsFollowTheParameterFormula) {
  const ModelDims d{9, 16, 1};
  EXPECT_EQ(d.param_count(), 1616);
  EXPECT_EQ(d.node_count(), 65);
  EXPECT_THROW((ModelDims{0, 1, 1}.validate()), std::invalid_argument);
  EXPECT_THROW((ModelDims{1, 1, 0}.validate()), std::invalid_argument);
}

TEST(InitParams, ZeroStdGivesZeros) {
  const auto p = init_params({3, 4, 2}, 0.0, 5);
  EXPECT_TRUE(p.flat().isZero(0.0));
}

TEST(InitParams, SampleMeanWithinClt) {
  const auto p = init_params({9, 16, 1}, 0.1, 3);
  const double n = static_cast<double>(p.flat().size());
  ASSERT_GE(n, 1000);
  EXPECT_LE(std::abs(p.flat().mean()), 4.0 * 0.1 / std::sqrt(n));
}

TEST(InitParams, Deterministic) {
  EXPECT_EQ(init_params({3, 5, 2}, 0.1, 42).flat(), init_params({3, 5, 2}, 0.1, 42).flat());
  EXPECT_NE(init_params({3, 5, 2}, 0.1, 42).flat(), init_params({3, 5, 2}, 0.1, 43).flat());
  EXPECT_THROW(init_params({3, 5, 2}, -1.0, 1), std::invalid_argument);
}

TEST(LstmParams, StructuredViewsFollowFlatLayout) {
  const ModelDims d{2, 3, 2};
  LstmParams<double> p(d);
  for (Index k = 0; k < p.flat().size(); ++k) p.flat()[k] = static_cast<double>(k);
  const Index row = d.concat();
  EXPECT_EQ(p.gate(Gate::kCandidate)(0, 0), 0.0);
  EXPECT_EQ(p.gate(Gate::kCandidate)(1, 0), static_cast<double>(row));
  EXPECT_EQ(p.gate(Gate::kInput)(0, 1), static_cast<double>(d.gate_params() + 1));
  EXPECT_EQ(p.gate(Gate::kOutput)(2, 4), static_cast<double>(3 * d.gate_params() + 2 * row + 4));
  EXPECT_EQ(p.output()(1, 2), static_cast<double>(4 * d.gate_params() + d.n_s + 2));

  // round trip through the structured views is exact
  LstmParams<double> q(d);
  for (Gate g : {Gate::kCandidate, Gate::kInput, Gate::kForget, Gate::kOutput}) q.gate(g) = p.gate(g);
  q.output() = p.output();
  EXPECT_EQ(q.flat(), p.flat());
  EXPECT_THROW(LstmParams<double>(d, VectorXd::Zero(3)), DimensionMismatch);
}

TEST(ForwardCell, ZeroWeightsZeroState) {
  const LstmParams<double> p({3, 2, 1});
  const auto tr = forward_cell_traced(p, VectorXd::Ones(3), LstmState<double>::zeros(2));
  EXPECT_TRUE(tr.z.isZero(0.0));
  EXPECT_EQ(tr.i, VectorXd::Constant(2, 0.5));
  EXPECT_EQ(tr.f, VectorXd::Constant(2, 0.5));
  EXPECT_EQ(tr.o, VectorXd::Constant(2, 0.5));
  EXPECT_TRUE(tr.c.isZero(0.0));
  EXPECT_TRUE(tr.y.isZero(0.0));
}

TEST(ForwardCell, ForgetGateHalvesCarry) {
  const LstmParams<double> p({1, 1, 1});
  const LstmState<double> prev{VectorXd::Constant(1, 2.0), VectorXd::Zero(1)};
  const auto next = forward_cell(p, VectorXd::Ones(1), prev);
  EXPECT_DOUBLE_EQ(next.c[0], 1.0);
  EXPECT_DOUBLE_EQ(next.y[0], 0.5 * std::tanh(1.0));
  EXPECT_NEAR(next.y[0], 0.38079, 1e-5);
}

TEST(ForwardCell, UnitWeightsHandEvaluation) {
  LstmParams<double> p({1, 1, 1});
  p.flat().setOnes();
  const auto tr = forward_cell_traced(p, VectorXd::Ones(1), LstmState<double>::zeros(1));
  const double s1 = 1.0 / (1.0 + std::exp(-1.0));
  EXPECT_DOUBLE_EQ(tr.z[0], std::tanh(1.0));
  EXPECT_DOUBLE_EQ(tr.i[0], s1);
  EXPECT_DOUBLE_EQ(tr.f[0], s1);
  EXPECT_DOUBLE_EQ(tr.o[0], s1);
  EXPECT_DOUBLE_EQ(tr.c[0], s1 * std::tanh(1.0));
  EXPECT_DOUBLE_EQ(tr.y[0], s1 * std::tanh(s1 * std::tanh(1.0)));
}

TEST(ForwardCell, ConcatenationOrderIsInputThenHidden) {
  // Only the weight on y_prev is nonzero in the candidate gate.
  LstmParams<double> p({1, 1, 1});
  p.gate(Gate::kCandidate)(0, 1) = 1.0;
  const LstmState<double> prev{VectorXd::Zero(1), VectorXd::Constant(1, 0.5)};
  const auto tr = forward_cell_traced(p, VectorXd::Constant(1, 3.0), prev);
  EXPECT_DOUBLE_EQ(tr.z[0], std::tanh(0.5));
  EXPECT_EQ(tr.input, (VectorXd(2) << 3.0, 0.5).finished());
}

TEST(ForwardCell, DimensionMismatch) {
  const LstmParams<double> p({3, 2, 1});
  EXPECT_THROW(forward_cell(p, VectorXd::Ones(2), LstmState<double>::zeros(2)), DimensionMismatch);
  EXPECT_THROW(forward_cell(p, VectorXd::Ones(3), LstmState<double>::zeros(3)), DimensionMismatch);
}

TEST(ForwardCell, ActivationBoundsHoldForRandomModels) {
  testing::Gen gen(17);
  for (int trial = 0; trial < 50; ++trial) {
    const ModelDims d{gen.integer(1, 5), gen.integer(1, 6), gen.integer(1, 3)};
    const auto p = init_params(d, gen.uniform(0.1, 3.0), static_cast<std::uint64_t>(trial));
    LstmState<double> s = LstmState<double>::zeros(d.n_s);
    for (int t = 0; t < 20; ++t) {
      const auto tr = forward_cell_traced(p, gen.input(d.n_x) * 5.0, s);
      for (const VectorXd* g : {&tr.i, &tr.f, &tr.o}) {
        EXPECT_GE(g->minCoeff(), 0.0);
        EXPECT_LE(g->maxCoeff(), 1.0);
      }
      EXPECT_LE(tr.y.cwiseAbs().maxCoeff(), 1.0);
      EXPECT_TRUE(tr.c.allFinite());
      s = {tr.c, tr.y};
    }
  }
}

TEST(OutputLayer, Examples) {
  LstmParams<double> p({1, 1, 1});
  EXPECT_EQ(output_layer(p, VectorXd::Ones(1))[0], 0.0);
  p.output()(0, 0) = 1.0;
  EXPECT_EQ(output_layer(p, VectorXd::Zero(1))[0], 0.0);
  EXPECT_NEAR(output_layer(p, VectorXd::Ones(1))[0], 0.7615941559557649, 1e-15);
  EXPECT_THROW(output_layer(p, VectorXd::Ones(2)), DimensionMismatch);
}

TEST(PredictStep, ZeroWeights) {
  const LstmParams<double> p({2, 3, 2});
  const auto out = predict_step(p, VectorXd::Ones(2), LstmState<double>::zeros(3));
  EXPECT_TRUE(out.d_hat.isZero(0.0));
  EXPECT_TRUE(out.next.c.isZero(0.0));
  EXPECT_TRUE(out.next.y.isZero(0.0));
}

TEST(PredictStep, ComposesCellAndOutputAndMatchesUnfolding) {
  testing::Gen gen(23);
  const ModelDims d{3, 4, 2};
  const auto p = init_params(d, 0.5, 9);
  const auto xs = gen.inputs(d.n_x, 12);
  LstmState<double> s = LstmState<double>::zeros(d.n_s);
  VectorXd last;
  for (const VectorXd& x : xs) {
    const auto step = predict_step(p, x, s);
    const auto cell = forward_cell(p, x, s);
    EXPECT_EQ(step.d_hat, output_layer(p, cell.y));
    s = step.next;
    last = step.d_hat;
  }
  EXPECT_EQ(last, unfolded_output(p, xs));
}

TEST(PredictStep, VanishingWeightsGiveVanishingOutput) {
  testing::Gen gen(29);
  const ModelDims d{3, 4, 1};
  const auto xs = gen.inputs(d.n_x, 10);
  double prev = 1.0;
  for (double scale : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const auto p = init_params(d, scale, 1);
    const double out = unfolded_output(p, xs).cwiseAbs().maxCoeff();
    EXPECT_LT(out, prev);
    prev = out;
  }
  EXPECT_LT(prev, 1e-6);
}

TEST(NodePartition, TinyModel) {
  const auto parts = node_partition({1, 1, 1});
  ASSERT_EQ(parts.size(), 5u);
  const Index offsets[] = {0, 2, 4, 6, 8};
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(parts[k].flat_offset, offsets[k]);
    EXPECT_EQ(parts[k].length, 2);
    EXPECT_EQ(parts[k].node_index, static_cast<Index>(k + 1));
  }
  EXPECT_EQ(parts[4].flat_offset, 8);
  EXPECT_EQ(parts[4].length, 1);
  EXPECT_EQ(ModelDims({1, 1, 1}).param_count(), 9);
}

TEST(NodePartition, PaperScaleModel) {
  const ModelDims d{9, 16, 1};
  const auto parts = node_partition(d);
  EXPECT_EQ(parts.size(), 65u);
  EXPECT_EQ(d.param_count(), 1616);
}

TEST(NodePartition, DisjointCoverForRandomDims) {
  testing::Gen gen(31);
  for (int trial = 0; trial < 100; ++trial) {
    const ModelDims d{gen.integer(1, 10), gen.integer(1, 10), gen.integer(1, 4)};
    const auto parts = node_partition(d);
    ASSERT_EQ(static_cast<Index>(parts.size()), d.node_count());
    Index next = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      EXPECT_EQ(parts[k].flat_offset, next);
      EXPECT_EQ(parts[k].length, static_cast<Index>(k) < 4 * d.n_s ? d.concat() : d.n_s);
      next += parts[k].length;
    }
    EXPECT_EQ(next, d.param_count());

    // slices reassemble θ exactly
    const auto p = init_params(d, 1.0, static_cast<std::uint64_t>(trial));
    VectorXd rebuilt(d.param_count());
    for (const NodeSlice& s : parts) rebuilt.segment(s.flat_offset, s.length) = p.flat().segment(s.flat_offset, s.length);
    EXPECT_EQ(rebuilt, p.flat());
  }
}

TEST(NodePartition, SingleNodeCoversEverything) {
  const auto parts = single_node_partition({2, 3, 1});
  ASSERT_EQ(parts.size(), 1u);
  EXPECT_EQ(parts[0].flat_offset, 0);
  EXPECT_EQ(parts[0].length, ModelDims({2, 3, 1}).param_count());
}

}  // namespace
}  // namespace klstm
