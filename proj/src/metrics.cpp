#include "klstm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "klstm/errors.hpp"

namespace klstm {

double target_variance(const Eigen::Ref<const MatrixXd>& targets) {
  if (targets.rows() < 2) throw ZeroVariance("need at least two targets");
  const Eigen::RowVectorXd mean = targets.colwise().mean();
  const double var = (targets.rowwise() - mean).rowwise().squaredNorm().mean();
  if (!(var > 0.0)) throw ZeroVariance("target stream has zero variance");
  return var;
}

double nse(const std::vector<double>& losses, const Eigen::Ref<const MatrixXd>& targets) {
  if (static_cast<Index>(losses.size()) != targets.rows())
    throw DimensionMismatch("nse: one loss per target row required");
  const double var = target_variance(targets);
  double sum = 0.0;
  for (double l : losses) sum += l;
  return sum / static_cast<double>(losses.size()) / var;
}

double knse_error(Forecaster frozen, const RegressionStream& stream, long t, long k) {
  if (k < 1) throw HorizonOutOfRange("knse: horizon must be at least 1");
  if (t < 1 || t + k > stream.length()) throw HorizonOutOfRange("knse: t + k exceeds the stream");
  VectorXd d_hat;
  for (long j = 1; j <= k; ++j) d_hat = frozen.predict(stream.inputs.row(t + j - 1).transpose());
  return (stream.targets.row(t + k - 1).transpose() - d_hat).squaredNorm();
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

ConfidenceBand confidence_band(const std::vector<std::vector<double>>& curves) {
  if (curves.size() < 2) throw std::invalid_argument("confidence_band: at least two seeds required");
  const std::size_t len = curves.front().size();
  for (const auto& c : curves)
    if (c.size() != len) throw DimensionMismatch("confidence_band: curves differ in length");

  ConfidenceBand band;
  band.p5.resize(len);
  band.p50.resize(len);
  band.p95.resize(len);
  std::vector<double> column(curves.size());
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t s = 0; s < curves.size(); ++s) column[s] = curves[s][t];
    band.p5[t] = percentile(column, 0.05);
    band.p50[t] = percentile(column, 0.50);
    band.p95[t] = percentile(column, 0.95);
  }
  if (len > 0) {
    auto mean = [len](const std::vector<double>& v) {
      double s = 0.0;
      for (double x : v) s += x;
      return s / static_cast<double>(len);
    };
    band.average = {mean(band.p5), mean(band.p50), mean(band.p95)};
  }
  return band;
}

std::optional<long> sustainable_prediction(const std::vector<bool>& correct, long window, long limit) {
  SustainedRunTracker tracker(window, limit);
  for (bool c : correct)
    if (tracker.push(c)) break;
  return tracker.result();
}

bool SustainedRunTracker::push(bool correct) {
  if (found_) return true;
  ++t_;
  if (!correct) {
    run_ = 0;
    return false;
  }
  if (run_ == 0) {
    if (t_ > limit_) return false;
    run_start_ = t_;
  }
  if (++run_ >= window_) found_ = run_start_;
  return found_.has_value();
}

}  // namespace klstm
