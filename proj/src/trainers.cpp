#include "klstm/trainers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "klstm/data.hpp"

namespace klstm {

double NoiseSchedule::value(long t) const {
  if (start == end || horizon <= 0) return start;
  const double frac = static_cast<double>(std::clamp(t, 0L, horizon)) / static_cast<double>(horizon);
  return start * std::pow(end / start, frac);
}

void NoiseSchedule::validate(const char* what) const {
  if (!(start > 0.0) || !(end > 0.0) || !std::isfinite(start) || !std::isfinite(end))
    throw std::invalid_argument(std::string(what) + " schedule endpoints must be positive and finite");
  if (horizon < 1) throw std::invalid_argument(std::string(what) + " schedule horizon must be positive");
}

OnlineModel::OnlineModel(LstmParams<double> params, Index tbptt_depth)
    : params_(std::move(params)),
      state_(LstmState<double>::zeros(params_.dims().n_s)),
      window_(tbptt_depth),
      d_hat_(VectorXd::Zero(params_.dims().n_d)) {}

const VectorXd& OnlineModel::predict(const Eigen::Ref<const VectorXd>& x) {
  CellTrace<double> tr = forward_cell_traced(params_, x, state_);
  state_.c = tr.c;
  state_.y = tr.y;
  d_hat_ = output_layer(params_, state_.y);
  window_.push(std::move(tr));
  return d_hat_;
}

Forecaster::Forecaster(std::vector<Member> members, VectorXd weights)
    : members_(std::move(members)), weights_(std::move(weights)) {
  if (members_.empty() || static_cast<Index>(members_.size()) != weights_.size())
    throw std::invalid_argument("Forecaster: one weight per member required");
}

VectorXd Forecaster::predict(const Eigen::Ref<const VectorXd>& x) {
  VectorXd out = VectorXd::Zero(members_.front().params.dims().n_d);
  for (std::size_t j = 0; j < members_.size(); ++j) {
    Prediction<double> p = predict_step(members_[j].params, x, members_[j].state);
    members_[j].state = std::move(p.next);
    out += weights_[static_cast<Index>(j)] * p.d_hat;
  }
  return out;
}

void kalman_block_update(Eigen::Ref<VectorXd> theta_block, CovBlock& block,
                         const Eigen::Ref<const MatrixXd>& jac_block, const Eigen::Ref<const VectorXd>& err,
                         double r, double q, const SpdGuard& guard, KalmanDiagnostics& diag) {
  MatrixXd& cov = block.cov;
  const Index n = cov.rows();
  if (jac_block.cols() != n || theta_block.size() != n || jac_block.rows() != err.size())
    throw DimensionMismatch("kalman_block_update: inconsistent block shapes");

  // P is kept exactly symmetric, so H P = (P Hᵀ)ᵀ.
  const MatrixXd pht = cov * jac_block.transpose();
  MatrixXd innov = jac_block * pht;
  symmetrize_in_place(innov);
  innov.diagonal().array() += r;
  const MatrixXd gain = spd_solve(innov, pht.transpose()).transpose();

  theta_block.noalias() += gain * err;

  const double trace_before = cov.trace();
  cov.noalias() -= gain * pht.transpose();
  symmetrize_in_place(cov);
  const double excess = cov.trace() - trace_before;
  diag.max_trace_excess = std::max(diag.max_trace_excess, excess);
  if (excess > 1e-10) ++diag.trace_violations;
  cov.diagonal().array() += q;
  ++diag.node_updates;

  ++block.updates_since_check;
  const bool diag_ok = (cov.diagonal().array() > 0.0).all() && cov.diagonal().allFinite();
  if (!diag_ok || block.updates_since_check >= guard.check_interval) {
    block.updates_since_check = 0;
    SpdRepair repair;
    cov = ensure_spd(cov, default_jitter(cov), &repair);
    if (repair.doublings >= 0) ++diag.jitter_repairs;
  }
}

namespace {

std::vector<CovBlock> make_blocks(const std::vector<NodeSlice>& partition, double p0) {
  std::vector<CovBlock> blocks;
  blocks.reserve(partition.size());
  for (const NodeSlice& s : partition) blocks.push_back({s, p0 * MatrixXd::Identity(s.length, s.length), 0});
  return blocks;
}

void check_partition(const std::vector<NodeSlice>& partition, Index n_theta) {
  Index expect = 0;
  for (const NodeSlice& s : partition) {
    if (s.flat_offset != expect || s.length <= 0)
      throw std::invalid_argument("partition must be contiguous, ordered and non-empty");
    expect += s.length;
  }
  if (expect != n_theta) throw std::invalid_argument("partition does not cover θ");
}

Forecaster single_forecaster(const OnlineModel& m) {
  return Forecaster({{m.params(), m.state()}}, VectorXd::Ones(1));
}

VectorXd innovation(const OnlineModel& m, const Eigen::Ref<const VectorXd>& d) {
  if (d.size() != m.dims().n_d) throw DimensionMismatch("target length differs from n_d");
  return d - m.last_prediction();
}

}  // namespace

// ---------------------------------------------------------------------------

EkfTrainer::EkfTrainer(LstmParams<double> init, double p0, NoiseSchedule q, NoiseSchedule r, Index tbptt_depth,
                       SpdGuard guard)
    : model_(std::move(init), tbptt_depth), q_(q), r_(r), guard_(guard) {
  if (!(p0 > 0.0)) throw std::invalid_argument("EKF: initial covariance scale must be positive");
  q_.validate("q");
  r_.validate("r");
  const Index n = model_.dims().param_count();
  block_ = {NodeSlice{1, 0, n}, p0 * MatrixXd::Identity(n, n), 0};
}

void EkfTrainer::step(const Eigen::Ref<const MatrixXd>& jac, const Eigen::Ref<const VectorXd>& err, long t) {
  kalman_block_update(model_.params().flat(), block_, jac, err, r_.value(t), q_.value(t), guard_, diag_);
}

VectorXd EkfTrainer::predict(const Eigen::Ref<const VectorXd>& x) { return model_.predict(x); }

StepOutcome EkfTrainer::observe(const Eigen::Ref<const VectorXd>& d) {
  const VectorXd err = innovation(model_, d);
  step(model_.jacobian(), err, t_++);
  return {err.squaredNorm(), true};
}

Forecaster EkfTrainer::freeze() const { return single_forecaster(model_); }

// ---------------------------------------------------------------------------

IekfTrainer::IekfTrainer(LstmParams<double> init, std::vector<NodeSlice> partition, double p0, NoiseSchedule q,
                         NoiseSchedule r, Index tbptt_depth, SpdGuard guard)
    : model_(std::move(init), tbptt_depth), q_(q), r_(r), guard_(guard) {
  if (!(p0 > 0.0)) throw std::invalid_argument("IEKF: initial covariance scale must be positive");
  q_.validate("q");
  r_.validate("r");
  check_partition(partition, model_.dims().param_count());
  blocks_ = make_blocks(partition, p0);
}

void IekfTrainer::step(const Eigen::Ref<const MatrixXd>& jac, const Eigen::Ref<const VectorXd>& err, long t) {
  const double r = r_.value(t);
  const double q = q_.value(t);
  VectorXd& theta = model_.params().flat();
  for (CovBlock& b : blocks_) {
    kalman_block_update(theta.segment(b.slice.flat_offset, b.slice.length), b,
                        jac.middleCols(b.slice.flat_offset, b.slice.length), err, r, q, guard_, diag_);
  }
}

VectorXd IekfTrainer::predict(const Eigen::Ref<const VectorXd>& x) { return model_.predict(x); }

StepOutcome IekfTrainer::observe(const Eigen::Ref<const VectorXd>& d) {
  const VectorXd err = innovation(model_, d);
  step(model_.jacobian(), err, t_++);
  return {err.squaredNorm(), true};
}

Forecaster IekfTrainer::freeze() const { return single_forecaster(model_); }

// ---------------------------------------------------------------------------

Alg1Trainer::Alg1Trainer(LstmParams<double> init, double zeta_bar, double p1, NoiseSchedule q, Index tbptt_depth,
                         SpdGuard guard)
    : model_(std::move(init), tbptt_depth), zeta_bar_(zeta_bar), q_(q), guard_(guard) {
  if (!(zeta_bar_ > 0.0)) throw std::invalid_argument("Alg1: residual bound must be positive");
  if (!(p1 > 0.0)) throw std::invalid_argument("Alg1: initial covariance scale must be positive");
  q_.validate("q");
  blocks_ = make_blocks(node_partition(model_.dims()), p1);
  last_noise_ = VectorXd::Zero(static_cast<Index>(blocks_.size()));
}

bool Alg1Trainer::step(const Eigen::Ref<const MatrixXd>& jac, const Eigen::Ref<const VectorXd>& d,
                       const Eigen::Ref<const VectorXd>& d_hat, long t) {
  const VectorXd err = d - d_hat;
  if (!gate_open(err)) return false;

  const double q = q_.value(t);
  const double n_d = static_cast<double>(model_.dims().n_d);
  VectorXd& theta = model_.params().flat();
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    CovBlock& b = blocks_[k];
    const auto jac_block = jac.middleCols(b.slice.flat_offset, b.slice.length);
    // Tr(H P Hᵀ) without forming the n_d × n_d product.
    const double r = 3.0 * (jac_block * b.cov).cwiseProduct(jac_block).sum() / n_d;
    last_noise_[static_cast<Index>(k)] = r;
    if (!(r > 0.0)) {
      ++diag_.skipped_nodes;
      continue;
    }
    kalman_block_update(theta.segment(b.slice.flat_offset, b.slice.length), b, jac_block, err, r, q, guard_,
                        diag_);
  }
  ++update_count_;
  return true;
}

VectorXd Alg1Trainer::predict(const Eigen::Ref<const VectorXd>& x) { return model_.predict(x); }

StepOutcome Alg1Trainer::observe(const Eigen::Ref<const VectorXd>& d) {
  const VectorXd err = innovation(model_, d);
  const long t = t_++;
  // The Jacobian is only needed when the gate opens.
  if (!gate_open(err)) return {err.squaredNorm(), false};
  const bool updated = step(model_.jacobian(), d, model_.last_prediction(), t);
  return {err.squaredNorm(), updated};
}

Forecaster Alg1Trainer::freeze() const { return single_forecaster(model_); }

// ---------------------------------------------------------------------------

ExponentialWeights::ExponentialWeights(std::size_t experts, Index n_d)
    : log_w_(VectorXd::Constant(static_cast<Index>(experts), -std::log(static_cast<double>(experts)))),
      rate_(1.0 / (8.0 * static_cast<double>(n_d))) {
  if (experts == 0) throw std::invalid_argument("ExponentialWeights: need at least one expert");
  if (n_d <= 0) throw std::invalid_argument("ExponentialWeights: n_d must be positive");
}

VectorXd ExponentialWeights::weights() const {
  const double top = log_w_.maxCoeff();
  VectorXd w = (log_w_.array() - top).exp().matrix();
  return w / w.sum();
}

VectorXd ExponentialWeights::mix(const std::vector<VectorXd>& predictions) const {
  if (static_cast<Index>(predictions.size()) != log_w_.size())
    throw DimensionMismatch("ExponentialWeights::mix: one prediction per expert required");
  const VectorXd w = weights();
  VectorXd out = VectorXd::Zero(predictions.front().size());
  for (Index j = 0; j < w.size(); ++j) out += w[j] * predictions[static_cast<std::size_t>(j)];
  return out;
}

void ExponentialWeights::update(const Eigen::Ref<const VectorXd>& losses) {
  if (losses.size() != log_w_.size()) throw DimensionMismatch("ExponentialWeights::update: one loss per expert");
  log_w_ -= rate_ * losses;
  // Renormalize in log space; only ratios matter.
  const double top = log_w_.maxCoeff();
  log_w_ = (log_w_.array() - top).matrix();
  const double lse = std::log((log_w_.array()).exp().sum());
  log_w_.array() -= lse;
}

std::vector<double> zeta_grid(Index n_d, double zeta_min) {
  if (n_d <= 0) throw std::invalid_argument("zeta_grid: n_d must be positive");
  const double top = std::sqrt(static_cast<double>(n_d));
  if (!(zeta_min > 0.0) || !(zeta_min < top))
    throw InvalidZetaMin("zeta_min must lie in (0, sqrt(n_d))");
  std::vector<double> grid;
  for (double z = top; z > zeta_min; z *= 0.5) grid.push_back(z);
  grid.push_back(zeta_min);
  return grid;
}

Alg2Trainer::Alg2Trainer(const LstmParams<double>& init, double zeta_min, double p1, NoiseSchedule q,
                         Index tbptt_depth, SpdGuard guard)
    : grid_(zeta_grid(init.dims().n_d, zeta_min)), mixer_(grid_.size(), init.dims().n_d) {
  instances_.reserve(grid_.size());
  for (double z : grid_) instances_.emplace_back(init, z, p1, q, tbptt_depth, guard);
  last_predictions_.resize(grid_.size());
}

VectorXd Alg2Trainer::predict(const Eigen::Ref<const VectorXd>& x) {
  for (std::size_t j = 0; j < instances_.size(); ++j) last_predictions_[j] = instances_[j].predict(x);
  d_hat_ = mixer_.mix(last_predictions_);
  return d_hat_;
}

StepOutcome Alg2Trainer::observe(const Eigen::Ref<const VectorXd>& d) {
  if (d.size() != d_hat_.size()) throw DimensionMismatch("target length differs from n_d");
  VectorXd losses(static_cast<Index>(instances_.size()));
  bool any = false;
  for (std::size_t j = 0; j < instances_.size(); ++j) {
    const StepOutcome o = instances_[j].observe(d);
    losses[static_cast<Index>(j)] = o.loss;
    any = any || o.updated;
  }
  mixer_.update(losses);
  return {(d - d_hat_).squaredNorm(), any};
}

Forecaster Alg2Trainer::freeze() const {
  std::vector<Forecaster::Member> members;
  members.reserve(instances_.size());
  for (const Alg1Trainer& a : instances_) members.push_back({a.model().params(), a.model().state()});
  return Forecaster(std::move(members), mixer_.weights());
}

const KalmanDiagnostics* Alg2Trainer::diagnostics() const {
  merged_ = {};
  for (const Alg1Trainer& a : instances_) {
    const KalmanDiagnostics& d = *a.diagnostics();
    merged_.node_updates += d.node_updates;
    merged_.skipped_nodes += d.skipped_nodes;
    merged_.trace_violations += d.trace_violations;
    merged_.max_trace_excess = std::max(merged_.max_trace_excess, d.max_trace_excess);
    merged_.jitter_repairs += d.jitter_repairs;
  }
  return &merged_;
}

// ---------------------------------------------------------------------------

FirstOrderTrainer::FirstOrderTrainer(LstmParams<double> init, FirstOrderConfig config, Index tbptt_depth)
    : model_(std::move(init), tbptt_depth), config_(config) {
  if (!(config_.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  m_ = VectorXd::Zero(model_.dims().param_count());
  v_ = VectorXd::Zero(model_.dims().param_count());
}

TrainerKind FirstOrderTrainer::kind() const {
  switch (config_.kind) {
    case FirstOrderKind::kSgd: return TrainerKind::kSgd;
    case FirstOrderKind::kRmsprop: return TrainerKind::kRmsprop;
    case FirstOrderKind::kAdam: return TrainerKind::kAdam;
  }
  return TrainerKind::kSgd;
}

void FirstOrderTrainer::step(const Eigen::Ref<const VectorXd>& grad, long t) {
  if (grad.size() != m_.size()) throw DimensionMismatch("gradient length differs from n_θ");
  VectorXd& theta = model_.params().flat();
  const double lr = config_.learning_rate;
  switch (config_.kind) {
    case FirstOrderKind::kSgd:
      theta.noalias() -= lr * grad;
      break;
    case FirstOrderKind::kRmsprop: {
      const double rho = config_.rmsprop_decay;
      v_.array() = rho * v_.array() + (1.0 - rho) * grad.array().square();
      theta.array() -= lr * grad.array() / (v_.array().sqrt() + config_.epsilon);
      break;
    }
    case FirstOrderKind::kAdam: {
      const double b1 = config_.beta1;
      const double b2 = config_.beta2;
      m_.array() = b1 * m_.array() + (1.0 - b1) * grad.array();
      v_.array() = b2 * v_.array() + (1.0 - b2) * grad.array().square();
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
      theta.array() -= lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + config_.epsilon);
      break;
    }
  }
}

VectorXd FirstOrderTrainer::predict(const Eigen::Ref<const VectorXd>& x) { return model_.predict(x); }

StepOutcome FirstOrderTrainer::observe(const Eigen::Ref<const VectorXd>& d) {
  const VectorXd err = innovation(model_, d);
  step(loss_gradient(model_.jacobian(), err), ++t_);
  return {err.squaredNorm(), true};
}

Forecaster FirstOrderTrainer::freeze() const { return single_forecaster(model_); }

// ---------------------------------------------------------------------------

std::string to_string(TrainerKind kind) {
  switch (kind) {
    case TrainerKind::kSgd: return "sgd";
    case TrainerKind::kRmsprop: return "rmsprop";
    case TrainerKind::kAdam: return "adam";
    case TrainerKind::kEkf: return "ekf";
    case TrainerKind::kDekf: return "dekf";
    case TrainerKind::kAlg1: return "alg1";
    case TrainerKind::kAlg2: return "alg2";
  }
  return "unknown";
}

TrainerKind trainer_kind_from_string(const std::string& name) {
  for (TrainerKind k : {TrainerKind::kSgd, TrainerKind::kRmsprop, TrainerKind::kAdam, TrainerKind::kEkf,
                        TrainerKind::kDekf, TrainerKind::kAlg1, TrainerKind::kAlg2})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown optimizer '" + name + "'");
}

std::vector<TrainerStep> train_online(Trainer& trainer, const RegressionStream& stream, long steps) {
  if (stream.n_x() != trainer.dims().n_x || stream.n_d() != trainer.dims().n_d)
    throw DimensionMismatch("train_online: stream shape does not match the model");
  const long n = std::min<long>(steps, static_cast<long>(stream.length()));
  std::vector<TrainerStep> records;
  records.reserve(static_cast<std::size_t>(std::max(0L, n)));
  using Clock = std::chrono::steady_clock;
  double elapsed = 0.0;
  VectorXd x(stream.n_x());
  VectorXd d(stream.n_d());
  for (long t = 0; t < n; ++t) {
    x = stream.inputs.row(t).transpose();
    d = stream.targets.row(t).transpose();
    const auto begin = Clock::now();
    VectorXd prediction = trainer.predict(x);
    const StepOutcome o = trainer.observe(d);
    elapsed += std::chrono::duration<double>(Clock::now() - begin).count();
    records.push_back({t + 1, std::move(prediction), o.loss, o.updated, elapsed});
  }
  return records;
}

}  // namespace klstm
