#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "klstm/derivatives.hpp"
#include "klstm/lstm_model.hpp"
#include "klstm/matrix_kit.hpp"

namespace klstm {

/// Geometric annealing: start·(end/start)^(min(t,horizon)/horizon), t 0-based.
struct NoiseSchedule {
  double start = 1.0;
  double end = 1.0;
  long horizon = 1;

  static NoiseSchedule constant(double v) { return {v, v, 1}; }
  double value(long t) const;
  void validate(const char* what) const;
};

/// Model plus its running recurrent state and TBPTT window.
class OnlineModel {
 public:
  OnlineModel(LstmParams<double> params, Index tbptt_depth);

  /// Advances the recurrence on x and returns d̂ under the current θ̂.
  const VectorXd& predict(const Eigen::Ref<const VectorXd>& x);
  MatrixXd jacobian() const { return tbptt_jacobian(window_, params_); }

  const LstmParams<double>& params() const { return params_; }
  LstmParams<double>& params() { return params_; }
  const LstmState<double>& state() const { return state_; }
  const VectorXd& last_prediction() const { return d_hat_; }
  const ModelDims& dims() const { return params_.dims(); }

 private:
  LstmParams<double> params_;
  LstmState<double> state_;
  TbpttContext<double> window_;
  VectorXd d_hat_;
};

/// Frozen copy of one or more models and their mixing weights; used for
/// k-step-ahead forecasts without touching the trainer.
class Forecaster {
 public:
  struct Member {
    LstmParams<double> params;
    LstmState<double> state;
  };
  Forecaster(std::vector<Member> members, VectorXd weights);

  VectorXd predict(const Eigen::Ref<const VectorXd>& x);

 private:
  std::vector<Member> members_;
  VectorXd weights_;
};

/// When the SPD safeguard runs a full factorization.
struct SpdGuard {
  /// Factorize every N-th update of a block (1 = every update). A cheap
  /// positive-diagonal check runs on every update regardless.
  long check_interval = 100;
};

/// Counters filled in by every Kalman block update.
struct KalmanDiagnostics {
  long node_updates = 0;
  long skipped_nodes = 0;  ///< zero adaptive noise (H_i = 0)
  long trace_violations = 0;
  double max_trace_excess = -1e300;  ///< max of Tr((I−GH)P) − Tr(P)
  long jitter_repairs = 0;
};

/// One covariance block and the θ̂ coordinates it owns.
struct CovBlock {
  NodeSlice slice;
  MatrixXd cov;
  long updates_since_check = 0;
};

/// G = P Hᵀ (H P Hᵀ + rI)⁻¹;  θ̂ += G e;  P ← sym((I − GH) P) + qI.
void kalman_block_update(Eigen::Ref<VectorXd> theta_block, CovBlock& block,
                         const Eigen::Ref<const MatrixXd>& jac_block, const Eigen::Ref<const VectorXd>& err,
                         double r, double q, const SpdGuard& guard, KalmanDiagnostics& diag);

enum class TrainerKind { kSgd, kRmsprop, kAdam, kEkf, kDekf, kAlg1, kAlg2 };

std::string to_string(TrainerKind kind);
TrainerKind trainer_kind_from_string(const std::string& name);

struct StepOutcome {
  double loss = 0.0;  ///< ‖d − d̂‖² of the emitted prediction
  bool updated = false;
};

/// Streaming protocol: predict(x_t) strictly precedes observe(d_t).
class Trainer {
 public:
  virtual ~Trainer() = default;
  virtual TrainerKind kind() const = 0;
  virtual VectorXd predict(const Eigen::Ref<const VectorXd>& x) = 0;
  virtual StepOutcome observe(const Eigen::Ref<const VectorXd>& d) = 0;
  virtual Forecaster freeze() const = 0;
  virtual const KalmanDiagnostics* diagnostics() const { return nullptr; }
  virtual const ModelDims& dims() const = 0;
};

/// Full-covariance EKF on the flat weight vector.
class EkfTrainer final : public Trainer {
 public:
  EkfTrainer(LstmParams<double> init, double p0, NoiseSchedule q, NoiseSchedule r, Index tbptt_depth,
             SpdGuard guard = {});

  void step(const Eigen::Ref<const MatrixXd>& jac, const Eigen::Ref<const VectorXd>& err, long t);

  TrainerKind kind() const override { return TrainerKind::kEkf; }
  VectorXd predict(const Eigen::Ref<const VectorXd>& x) override;
  StepOutcome observe(const Eigen::Ref<const VectorXd>& d) override;
  Forecaster freeze() const override;
  const KalmanDiagnostics* diagnostics() const override { return &diag_; }
  const ModelDims& dims() const override { return model_.dims(); }

  const VectorXd& theta() const { return model_.params().flat(); }
  const MatrixXd& covariance() const { return block_.cov; }
  const OnlineModel& model() const { return model_; }

 private:
  OnlineModel model_;
  CovBlock block_;
  NoiseSchedule q_;
  NoiseSchedule r_;
  SpdGuard guard_;
  KalmanDiagnostics diag_;
  long t_ = 0;
};

/// Block-diagonal EKF, one independent filter per node, with scheduled noise
/// (the decoupled baseline). Any partition of θ is accepted.
class IekfTrainer final : public Trainer {
 public:
  IekfTrainer(LstmParams<double> init, std::vector<NodeSlice> partition, double p0, NoiseSchedule q,
              NoiseSchedule r, Index tbptt_depth, SpdGuard guard = {});

  void step(const Eigen::Ref<const MatrixXd>& jac, const Eigen::Ref<const VectorXd>& err, long t);

  TrainerKind kind() const override { return TrainerKind::kDekf; }
  VectorXd predict(const Eigen::Ref<const VectorXd>& x) override;
  StepOutcome observe(const Eigen::Ref<const VectorXd>& d) override;
  Forecaster freeze() const override;
  const KalmanDiagnostics* diagnostics() const override { return &diag_; }
  const ModelDims& dims() const override { return model_.dims(); }

  const VectorXd& theta() const { return model_.params().flat(); }
  const std::vector<CovBlock>& blocks() const { return blocks_; }

 private:
  OnlineModel model_;
  std::vector<CovBlock> blocks_;
  NoiseSchedule q_;
  NoiseSchedule r_;
  SpdGuard guard_;
  KalmanDiagnostics diag_;
  long t_ = 0;
};

/// Block-diagonal EKF with the residual-bound gate ‖e‖² > 4ζ̄² and the
/// per-node measurement noise r_i = 3·Tr(H_i P_i H_iᵀ)/n_d.
class Alg1Trainer final : public Trainer {
 public:
  Alg1Trainer(LstmParams<double> init, double zeta_bar, double p1, NoiseSchedule q, Index tbptt_depth,
              SpdGuard guard = {});

  bool gate_open(const Eigen::Ref<const VectorXd>& err) const {
    return err.squaredNorm() > 4.0 * zeta_bar_ * zeta_bar_;
  }

  /// Lines 5-15 of the update; returns whether θ̂ and P_i were touched.
  bool step(const Eigen::Ref<const MatrixXd>& jac, const Eigen::Ref<const VectorXd>& d,
            const Eigen::Ref<const VectorXd>& d_hat, long t);

  TrainerKind kind() const override { return TrainerKind::kAlg1; }
  VectorXd predict(const Eigen::Ref<const VectorXd>& x) override;
  StepOutcome observe(const Eigen::Ref<const VectorXd>& d) override;
  Forecaster freeze() const override;
  const KalmanDiagnostics* diagnostics() const override { return &diag_; }
  const ModelDims& dims() const override { return model_.dims(); }

  double zeta_bar() const { return zeta_bar_; }
  const VectorXd& theta() const { return model_.params().flat(); }
  const std::vector<CovBlock>& blocks() const { return blocks_; }
  /// r_i of the last non-gated step (0 where the node was skipped).
  const VectorXd& last_noise() const { return last_noise_; }
  const OnlineModel& model() const { return model_; }
  long update_count() const { return update_count_; }

 private:
  OnlineModel model_;
  std::vector<CovBlock> blocks_;
  double zeta_bar_;
  NoiseSchedule q_;
  SpdGuard guard_;
  KalmanDiagnostics diag_;
  VectorXd last_noise_;
  long t_ = 0;
  long update_count_ = 0;
};

/// Multiplicative weights over N experts with rate 1/(8·n_d), kept in log space.
class ExponentialWeights {
 public:
  ExponentialWeights(std::size_t experts, Index n_d);

  /// Normalized weights (sum to 1).
  VectorXd weights() const;
  VectorXd mix(const std::vector<VectorXd>& predictions) const;
  void update(const Eigen::Ref<const VectorXd>& losses);
  const VectorXd& log_weights() const { return log_w_; }

 private:
  VectorXd log_w_;
  double rate_;
};

/// Grid √n_d, √n_d/2, √n_d/4, … (values > ζ̄_min), then ζ̄_min.
std::vector<double> zeta_grid(Index n_d, double zeta_min);

/// N Alg1 instances on the ζ̄ grid, mixed by exponential weighting.
class Alg2Trainer final : public Trainer {
 public:
  Alg2Trainer(const LstmParams<double>& init, double zeta_min, double p1, NoiseSchedule q, Index tbptt_depth,
              SpdGuard guard = {});

  TrainerKind kind() const override { return TrainerKind::kAlg2; }
  VectorXd predict(const Eigen::Ref<const VectorXd>& x) override;
  StepOutcome observe(const Eigen::Ref<const VectorXd>& d) override;
  Forecaster freeze() const override;
  const KalmanDiagnostics* diagnostics() const override;
  const ModelDims& dims() const override { return instances_.front().dims(); }

  const std::vector<double>& grid() const { return grid_; }
  const std::vector<Alg1Trainer>& instances() const { return instances_; }
  const ExponentialWeights& mixer() const { return mixer_; }
  /// Per-instance predictions from the last predict() call.
  const std::vector<VectorXd>& instance_predictions() const { return last_predictions_; }

 private:
  std::vector<double> grid_;
  std::vector<Alg1Trainer> instances_;
  ExponentialWeights mixer_;
  std::vector<VectorXd> last_predictions_;
  VectorXd d_hat_;
  mutable KalmanDiagnostics merged_;
};

enum class FirstOrderKind { kSgd, kRmsprop, kAdam };

struct FirstOrderConfig {
  FirstOrderKind kind = FirstOrderKind::kSgd;
  double learning_rate = 0.01;
  double rmsprop_decay = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class FirstOrderTrainer final : public Trainer {
 public:
  FirstOrderTrainer(LstmParams<double> init, FirstOrderConfig config, Index tbptt_depth);

  /// One optimizer step on gradient g; t is the 1-based step count for Adam's bias correction.
  void step(const Eigen::Ref<const VectorXd>& grad, long t);

  TrainerKind kind() const override;
  VectorXd predict(const Eigen::Ref<const VectorXd>& x) override;
  StepOutcome observe(const Eigen::Ref<const VectorXd>& d) override;
  Forecaster freeze() const override;
  const ModelDims& dims() const override { return model_.dims(); }

  const VectorXd& theta() const { return model_.params().flat(); }

 private:
  OnlineModel model_;
  FirstOrderConfig config_;
  VectorXd m_;
  VectorXd v_;
  long t_ = 0;
};

/// Per-timestep record produced by train_online.
struct TrainerStep {
  long t = 0;  ///< 1-based
  VectorXd prediction;
  double loss = 0.0;
  bool updated = false;
  double elapsed_seconds = 0.0;  ///< cumulative training wall-clock
};

struct RegressionStream;

/// Runs up to `steps` predict/observe rounds over the stream (fewer if it is shorter).
std::vector<TrainerStep> train_online(Trainer& trainer, const RegressionStream& stream, long steps);

}  // namespace klstm
