#pragma once

#include <deque>
#include <vector>

#include <Eigen/Core>

#include "klstm/errors.hpp"
#include "klstm/lstm_model.hpp"
#include "klstm/matrix_kit.hpp"

namespace klstm {

inline constexpr Index kDefaultTbpttDepth = 10;

/// Ring buffer of the last τ forward steps.
///
/// Activations are kept as they were computed, under whatever θ̂ was current
/// at that step; they are never recomputed after a weight update. The state
/// entering the window is treated as a constant (zero derivative w.r.t. θ).
template <typename Scalar>
class TbpttContext {
 public:
  explicit TbpttContext(Index depth = kDefaultTbpttDepth) : depth_(depth) {
    if (depth_ < 1) throw std::invalid_argument("TBPTT depth must be positive");
  }

  void push(CellTrace<Scalar> step) {
    steps_.push_back(std::move(step));
    if (static_cast<Index>(steps_.size()) > depth_) steps_.pop_front();
  }
  void clear() { steps_.clear(); }

  Index depth() const { return depth_; }
  Index size() const { return static_cast<Index>(steps_.size()); }
  bool empty() const { return steps_.empty(); }
  const CellTrace<Scalar>& step(Index k) const { return steps_[static_cast<std::size_t>(k)]; }
  const CellTrace<Scalar>& latest() const { return steps_.back(); }

 private:
  Index depth_;
  std::deque<CellTrace<Scalar>> steps_;
};

namespace detail {

/// Accumulates ∂(seed·y_t)/∂θ for the recurrent part into `grad` by walking
/// the window backwards from the newest step.
template <typename Scalar>
void backprop_window(const TbpttContext<Scalar>& ctx, const LstmParams<Scalar>& params,
                     Vector<Scalar> dy, Vector<Scalar>& grad) {
  using RowMajor = typename LstmParams<Scalar>::RowMajor;
  const ModelDims& d = params.dims();
  const Index n_s = d.n_s;
  Vector<Scalar> dc = Vector<Scalar>::Zero(n_s);
  Vector<Scalar> da(n_s);
  Vector<Scalar> dv(d.concat());

  auto gate_grad = [&](Gate g) {
    return Eigen::Map<RowMajor>(grad.data() + LstmParams<Scalar>::gate_offset(d, g), n_s, d.concat());
  };

  for (Index k = ctx.size() - 1; k >= 0; --k) {
    const CellTrace<Scalar>& s = ctx.step(k);
    const Vector<Scalar> tanh_c = s.c.array().tanh().matrix();

    // y = o ⊙ tanh(c)
    dc.array() += dy.array() * s.o.array() * (Scalar(1) - tanh_c.array().square());

    dv.setZero();
    // output gate
    da = (dy.array() * tanh_c.array() * s.o.array() * (Scalar(1) - s.o.array())).matrix();
    gate_grad(Gate::kOutput).noalias() += da * s.input.transpose();
    dv.noalias() += params.gate(Gate::kOutput).transpose() * da;
    // candidate
    da = (dc.array() * s.i.array() * (Scalar(1) - s.z.array().square())).matrix();
    gate_grad(Gate::kCandidate).noalias() += da * s.input.transpose();
    dv.noalias() += params.gate(Gate::kCandidate).transpose() * da;
    // input gate
    da = (dc.array() * s.z.array() * s.i.array() * (Scalar(1) - s.i.array())).matrix();
    gate_grad(Gate::kInput).noalias() += da * s.input.transpose();
    dv.noalias() += params.gate(Gate::kInput).transpose() * da;
    // forget gate
    da = (dc.array() * s.c_prev.array() * s.f.array() * (Scalar(1) - s.f.array())).matrix();
    gate_grad(Gate::kForget).noalias() += da * s.input.transpose();
    dv.noalias() += params.gate(Gate::kForget).transpose() * da;

    dc = dc.cwiseProduct(s.f);
    dy = dv.tail(n_s);
  }
}

}  // namespace detail

/// H = ∂d̂_t/∂θ (n_d × n_θ) by truncated backpropagation over the buffered window.
template <typename Scalar>
Matrix<Scalar> tbptt_jacobian(const TbpttContext<Scalar>& ctx, const LstmParams<Scalar>& params) {
  if (ctx.empty()) throw EmptyContext("tbptt_jacobian: no forward steps recorded");
  const ModelDims& d = params.dims();
  if (ctx.latest().y.size() != d.n_s) throw DimensionMismatch("tbptt_jacobian: context does not match params");

  const Vector<Scalar>& y_t = ctx.latest().y;
  const Vector<Scalar> d_hat = output_layer(params, y_t);
  const Index out_off = LstmParams<Scalar>::output_offset(d);

  Matrix<Scalar> jac(d.n_d, d.param_count());
  Vector<Scalar> grad(d.param_count());
  for (Index k = 0; k < d.n_d; ++k) {
    grad.setZero();
    const Scalar slope = Scalar(1) - d_hat[k] * d_hat[k];
    grad.segment(out_off + k * d.n_s, d.n_s) = slope * y_t;
    Vector<Scalar> dy = slope * params.output().row(k).transpose();
    detail::backprop_window(ctx, params, std::move(dy), grad);
    jac.row(k) = grad.transpose();
  }
  return jac;
}

/// Columns of H belonging to one node.
template <typename Derived>
Matrix<typename Derived::Scalar> slice_node_jacobian(const Eigen::MatrixBase<Derived>& jac, const NodeSlice& slice) {
  if (slice.flat_offset < 0 || slice.flat_offset + slice.length > jac.cols())
    throw DimensionMismatch("slice_node_jacobian: slice exceeds Jacobian width");
  return jac.middleCols(slice.flat_offset, slice.length);
}

/// Gradient of ‖d − d̂‖² w.r.t. θ given H and e = d − d̂: −2·Hᵀe.
template <typename DerivedH, typename DerivedE>
Vector<typename DerivedH::Scalar> loss_gradient(const Eigen::MatrixBase<DerivedH>& jac,
                                                const Eigen::MatrixBase<DerivedE>& err) {
  if (err.size() != jac.rows()) throw DimensionMismatch("loss_gradient: error length differs from n_d");
  return typename DerivedH::Scalar(-2) * jac.transpose() * err;
}

/// Central-difference Jacobian of the fully unfolded network. Test oracle.
template <typename Scalar>
Matrix<Scalar> fd_jacobian(const std::vector<VectorXd>& inputs, const LstmParams<Scalar>& params, Scalar h) {
  if (!(h > Scalar(0))) throw std::invalid_argument("fd_jacobian: step must be positive");
  const ModelDims& d = params.dims();
  Matrix<Scalar> jac(d.n_d, d.param_count());
  LstmParams<Scalar> probe = params;
  for (Index k = 0; k < d.param_count(); ++k) {
    const Scalar base = params.flat()[k];
    probe.flat()[k] = base + h;
    const Vector<Scalar> plus = unfolded_output(probe, inputs);
    probe.flat()[k] = base - h;
    const Vector<Scalar> minus = unfolded_output(probe, inputs);
    probe.flat()[k] = base;
    jac.col(k) = (plus - minus) / (Scalar(2) * h);
  }
  return jac;
}

}  // namespace klstm
