#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "klstm/lstm_model.hpp"
#include "klstm/matrix_kit.hpp"

namespace klstm {

/// Affine map of one raw target dimension onto [-1, 1].
struct TargetScaling {
  double min = -1.0;
  double max = 1.0;

  double scale(double raw) const { return 2.0 * (raw - min) / (max - min) - 1.0; }
  double unscale(double scaled) const { return (scaled + 1.0) * (max - min) / 2.0 + min; }
};

/// Materialized stream of (x_t, d_t) pairs. Row t of `inputs`/`targets` is step t+1.
struct RegressionStream {
  std::string source;
  MatrixXd inputs;   ///< length × n_x, last column is the constant bias
  MatrixXd targets;  ///< length × n_d, every entry in [-1, 1]
  std::vector<TargetScaling> scaling;

  Index n_x() const { return inputs.cols(); }
  Index n_d() const { return targets.cols(); }
  Index length() const { return inputs.rows(); }

  /// First `n` pairs (all of them if the stream is shorter).
  RegressionStream prefix(Index n) const;
};

struct ScaledTargets {
  MatrixXd scaled;
  std::vector<TargetScaling> scaling;
};

/// Per-column 2·(raw − min)/(max − min) − 1 with dataset-global min/max.
ScaledTargets scale_targets(const MatrixXd& raw);
MatrixXd unscale_targets(const MatrixXd& scaled, const std::vector<TargetScaling>& scaling);

struct DelimitedOptions {
  char delimiter = ',';  ///< ' ' means any run of whitespace
  std::vector<Index> target_columns;  ///< 0-based; negative counts from the right (-1: last)
  bool has_header = false;
};

RegressionStream load_delimited(const std::string& path, const DelimitedOptions& options);

/// Adds n Bernoulli(1/2) bit streams LSB-first with a running carry.
class BinaryAdditionTask {
 public:
  BinaryAdditionTask(int n, std::uint64_t seed);

  struct Symbol {
    std::vector<int> bits;
    int sum_bit = 0;
    int carry_after = 0;
  };

  /// Draws n bits and adds them to the carry.
  Symbol next();
  /// Deterministic addition step used by next(); exposed for hand checks.
  Symbol add(const std::vector<int>& bits);

  int n() const { return n_; }
  int carry() const { return carry_; }

 private:
  int n_;
  int carry_ = 0;
  std::mt19937_64 rng_;
  std::bernoulli_distribution coin_{0.5};
};

/// x_t = (b_1..b_n, 1.0), d_t = ±1 for the sum bit.
RegressionStream binary_addition_stream(int n, std::uint64_t seed, Index length);

struct TeacherTaskSpec {
  ModelDims dims{9, 16, 1};
  std::uint64_t teacher_seed = 7;
  double teacher_std = 0.5;
  double noise_std = 0.05;
  std::uint64_t input_seed = 11;
};

/// Targets produced by a random LSTM on N(0,1) inputs, plus noise, clamped to [-1,1].
RegressionStream teacher_lstm_stream(const TeacherTaskSpec& spec, Index length);
LstmParams<double> teacher_params(const TeacherTaskSpec& spec);

}  // namespace klstm
