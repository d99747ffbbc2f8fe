#include <cmath>
#include <filesystem>
#include <fstream>

#include <unistd.h>

#include <gtest/gtest.h>

#include "klstm/data.hpp"
#include "klstm/errors.hpp"
#include "klstm/trainers.hpp"
#include "test_support.hpp"

namespace klstm {
namespace {

namespace fs = std::filesystem;

class TempFile {
 public:
  explicit TempFile(const std::string& contents) {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("klstm_data_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + ".csv");
    std::ofstream(path_) << contents;
  }
  ~TempFile() { fs::remove(path_); }
  std::string path() const { return path_.string(); }

 private:
  fs::path path_;
};

DelimitedOptions last_column() { return {',', {-1}, false}; }

// --- loader ----------------------------------------------------------------------

TEST(LoadDelimited, CountsAndBias) {
  TempFile f("1,2,10\n3,4,20\n5,6,30\n");
  const RegressionStream s = load_delimited(f.path(), {',', {2}, false});
  EXPECT_EQ(s.length(), 3);
  EXPECT_EQ(s.n_x(), 3);
  EXPECT_EQ(s.n_d(), 1);
  EXPECT_EQ(s.inputs.row(1), (Eigen::RowVector3d() << 3, 4, 1).finished());
  EXPECT_EQ(s.targets.col(0), (Eigen::Vector3d() << -1, 0, 1).finished());
  EXPECT_EQ(s.scaling[0].min, 10.0);
  EXPECT_EQ(s.scaling[0].max, 30.0);
}

TEST(LoadDelimited, HeaderAndBlankLinesSkipped) {
  TempFile f("a,b,y\n\n1,2,0\n3,4,1\n\n");
  const RegressionStream s = load_delimited(f.path(), {',', {-1}, true});
  EXPECT_EQ(s.length(), 2);
  EXPECT_EQ(s.targets(1, 0), 1.0);
}

TEST(LoadDelimited, WhitespaceDelimiter) {
  TempFile f("1  2\t5\n 3 4 7\n");
  const RegressionStream s = load_delimited(f.path(), {' ', {-1}, false});
  EXPECT_EQ(s.length(), 2);
  EXPECT_EQ(s.inputs(1, 0), 3.0);
}

TEST(LoadDelimited, NegativeColumnsCountFromTheRight) {
  TempFile f("1,2,3,4\n5,6,7,9\n");
  const RegressionStream a = load_delimited(f.path(), {',', {-2, -1}, false});
  const RegressionStream b = load_delimited(f.path(), {',', {2, 3}, false});
  EXPECT_EQ(a.targets, b.targets);
  EXPECT_EQ(a.inputs, b.inputs);
  EXPECT_THROW(load_delimited(f.path(), {',', {-5}, false}), std::invalid_argument);
  EXPECT_THROW(load_delimited(f.path(), {',', {4}, false}), std::invalid_argument);
}

TEST(LoadDelimited, ParseErrorReportsPosition) {
  TempFile f("1,2,3\n4,x5,6\n");
  try {
    load_delimited(f.path(), last_column());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 2u);
    EXPECT_EQ(e.col(), 2u);
  }
}

TEST(LoadDelimited, RaggedRowsRejected) {
  TempFile f("1,2,3\n4,5\n");
  EXPECT_THROW(load_delimited(f.path(), last_column()), RaggedRows);
}

TEST(LoadDelimited, MissingFileRejected) {
  EXPECT_THROW(load_delimited("/nonexistent/klstm.csv", last_column()), FileNotFound);
}

TEST(LoadDelimited, ConstantTargetRejected) {
  TempFile f("1,5\n2,5\n");
  EXPECT_THROW(load_delimited(f.path(), last_column()), ConstantTarget);
}

TEST(LoadDelimited, PrefixKeepsLeadingRows) {
  TempFile f("1,0\n2,1\n3,2\n");
  const RegressionStream s = load_delimited(f.path(), last_column());
  EXPECT_EQ(s.prefix(2).length(), 2);
  EXPECT_EQ(s.prefix(2).targets, s.targets.topRows(2));
  EXPECT_EQ(s.prefix(10).length(), 3);
}

// --- scaling ---------------------------------------------------------------------

TEST(ScaleTargets, Examples) {
  const MatrixXd raw = (MatrixXd(3, 2) << 0, -4, 5, 0, 10, 4).finished();
  const ScaledTargets s = scale_targets(raw);
  EXPECT_EQ(s.scaled, (MatrixXd(3, 2) << -1, -1, 0, 0, 1, 1).finished());
  EXPECT_THROW(scale_targets(MatrixXd::Ones(3, 1)), ConstantTarget);
}

TEST(ScaleTargets, RoundTripAndRange) {
  testing::Gen gen(3);
  for (int trial = 0; trial < 50; ++trial) {
    const MatrixXd raw = gen.matrix(gen.integer(2, 40), gen.integer(1, 3), gen.uniform(0.1, 100.0));
    const ScaledTargets s = scale_targets(raw);
    EXPECT_LE(s.scaled.cwiseAbs().maxCoeff(), 1.0);
    const MatrixXd back = unscale_targets(s.scaled, s.scaling);
    EXPECT_LE((back - raw).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, raw.cwiseAbs().maxCoeff()));
  }
}

// --- binary addition -----------------------------------------------------------

TEST(BinaryAddition, HandExamples) {
  BinaryAdditionTask t(2, 1);
  auto s = t.add({1, 1});
  EXPECT_EQ(s.sum_bit, 0);
  EXPECT_EQ(s.carry_after, 1);
  s = t.add({1, 0});
  EXPECT_EQ(s.sum_bit, 0);
  EXPECT_EQ(s.carry_after, 1);
  s = t.add({0, 0});
  EXPECT_EQ(s.sum_bit, 1);
  EXPECT_EQ(s.carry_after, 0);

  BinaryAdditionTask five(5, 1);
  s = five.add({1, 1, 1, 1, 1});
  EXPECT_EQ(s.sum_bit, 1);
  EXPECT_EQ(s.carry_after, 2);
  s = five.add({1, 1, 1, 1, 1});  // 2 + 5 = 7
  EXPECT_EQ(s.sum_bit, 1);
  EXPECT_EQ(s.carry_after, 3);
  EXPECT_THROW(five.add({1, 0}), DimensionMismatch);
  EXPECT_THROW(BinaryAdditionTask(1, 1), std::invalid_argument);
}

TEST(BinaryAddition, MatchesWideIntegerSum) {
  for (int n = 2; n <= 7; ++n) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const Index len = 60;
      const RegressionStream s = binary_addition_stream(n, seed, len);
      unsigned __int128 total = 0;
      for (int k = 0; k < n; ++k) {
        unsigned __int128 value = 0;
        for (Index t = 0; t < len; ++t)
          if (s.inputs(t, k) == 1.0) value |= static_cast<unsigned __int128>(1) << t;
        total += value;
      }
      for (Index t = 0; t < len; ++t) {
        const int bit = static_cast<int>((total >> t) & 1U);
        EXPECT_EQ(s.targets(t, 0), bit ? 1.0 : -1.0) << "n=" << n << " seed=" << seed << " t=" << t;
      }
    }
  }
}

TEST(BinaryAddition, StreamShapeAndAlphabet) {
  const RegressionStream s = binary_addition_stream(4, 9, 500);
  EXPECT_EQ(s.n_x(), 5);
  EXPECT_EQ(s.n_d(), 1);
  EXPECT_TRUE((s.inputs.col(4).array() == 1.0).all());
  EXPECT_TRUE((s.inputs.leftCols(4).array() == 0.0 || s.inputs.leftCols(4).array() == 1.0).all());
  EXPECT_TRUE((s.targets.array().abs() == 1.0).all());
  EXPECT_EQ(binary_addition_stream(4, 9, 500).inputs, s.inputs);
  EXPECT_NE(binary_addition_stream(4, 10, 500).inputs, s.inputs);
}

TEST(BinaryAddition, BitsAreFairCoins) {
  const Index len = 20000;
  const RegressionStream s = binary_addition_stream(3, 5, len);
  for (Index k = 0; k < 3; ++k) {
    const double freq = s.inputs.col(k).mean();
    EXPECT_LE(std::abs(freq - 0.5), 4.0 * 0.5 / std::sqrt(static_cast<double>(len)));
  }
}

// --- teacher task ----------------------------------------------------------------

TEST(TeacherStream, DeterministicAndBounded) {
  const TeacherTaskSpec spec;
  const RegressionStream a = teacher_lstm_stream(spec, 300);
  const RegressionStream b = teacher_lstm_stream(spec, 300);
  EXPECT_EQ(a.inputs, b.inputs);
  EXPECT_EQ(a.targets, b.targets);
  EXPECT_EQ(a.n_x(), 9);
  EXPECT_TRUE((a.inputs.col(8).array() == 1.0).all());
  EXPECT_LE(a.targets.cwiseAbs().maxCoeff(), 1.0);
  EXPECT_EQ(teacher_lstm_stream(spec, 100).targets, a.targets.topRows(100));
}

TEST(TeacherStream, ClampsLargeNoise) {
  TeacherTaskSpec spec;
  spec.noise_std = 5.0;
  const RegressionStream s = teacher_lstm_stream(spec, 400);
  EXPECT_LE(s.targets.cwiseAbs().maxCoeff(), 1.0);
  EXPECT_GT((s.targets.array().abs() == 1.0).count(), 0);
  spec.noise_std = -1.0;
  EXPECT_THROW(teacher_lstm_stream(spec, 10), std::invalid_argument);
}

TEST(TeacherStream, NoiselessTeacherIsRealizable) {
  TeacherTaskSpec spec;
  spec.dims = {4, 5, 2};
  spec.noise_std = 0.0;
  const RegressionStream s = teacher_lstm_stream(spec, 200);
  FirstOrderTrainer learner(teacher_params(spec), {FirstOrderKind::kSgd, 0.2}, 10);
  for (const TrainerStep& st : train_online(learner, s, 200)) EXPECT_EQ(st.loss, 0.0);
  EXPECT_EQ(learner.theta(), teacher_params(spec).flat());
}

}  // namespace
}  // namespace klstm
