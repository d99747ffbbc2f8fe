#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "klstm/data.hpp"
#include "klstm/matrix_kit.hpp"
#include "klstm/trainers.hpp"

namespace klstm {

/// Population variance of a target stream: mean of ‖d_t − d̄‖².
double target_variance(const Eigen::Ref<const MatrixXd>& targets);

/// Mean squared error over the stream divided by its target variance.
double nse(const std::vector<double>& losses, const Eigen::Ref<const MatrixXd>& targets);

/// Squared error of the k-step-ahead forecast made with weights frozen after
/// step `t` (1-based): the frozen model runs open-loop on x_{t+1..t+k}.
double knse_error(Forecaster frozen, const RegressionStream& stream, long t, long k);

/// Linear interpolation between order statistics (position (n−1)·p).
double percentile(std::vector<double> values, double p);

struct Interval {
  double lower = 0.0;
  double median = 0.0;
  double upper = 0.0;
};

struct ConfidenceBand {
  std::vector<double> p5;
  std::vector<double> p50;
  std::vector<double> p95;
  Interval average;  ///< time-average of (p5, p50, p95)
};

/// Per-timestep 5th/50th/95th percentiles across seeds. Needs at least two curves of equal length.
ConfidenceBand confidence_band(const std::vector<std::vector<double>>& curves);

inline constexpr long kSustainableWindow = 500;
inline constexpr long kSustainableLimit = 100000;

/// 1-based index of the first symbol of the earliest run of `window`
/// consecutive correct decisions that starts within the first `limit`
/// symbols; nullopt when there is none.
std::optional<long> sustainable_prediction(const std::vector<bool>& correct, long window = kSustainableWindow,
                                           long limit = kSustainableLimit);

/// Incremental form of sustainable_prediction for early stopping.
class SustainedRunTracker {
 public:
  SustainedRunTracker(long window = kSustainableWindow, long limit = kSustainableLimit)
      : window_(window), limit_(limit) {}

  /// Feeds decision t (1-based, consecutive). Returns true once a qualifying run is complete.
  bool push(bool correct);
  std::optional<long> result() const { return found_; }
  /// True when no qualifying run can still start.
  bool exhausted() const { return !found_ && t_ >= limit_ && run_ == 0; }

 private:
  long window_;
  long limit_;
  long t_ = 0;
  long run_ = 0;
  long run_start_ = 0;
  std::optional<long> found_;
};

}  // namespace klstm
