#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "klstm/errors.hpp"
#include "klstm/matrix_kit.hpp"

// Single-layer LSTM without peepholes followed by a tanh output layer:
//
//   z = tanh(Wz [x; y']),  i = σ(Wi [x; y']),  f = σ(Wf [x; y'])
//   c = i ⊙ z + f ⊙ c',    o = σ(Wo [x; y']),  y = o ⊙ tanh(c)
//   d̂ = tanh(Wd y)
//
// The bias is not implicit: callers append a constant 1.0 to x.
namespace klstm {

using Index = Eigen::Index;

struct ModelDims {
  Index n_x = 0;  ///< input width, bias column included
  Index n_s = 0;  ///< state width
  Index n_d = 0;  ///< output width

  Index concat() const { return n_x + n_s; }
  Index gate_params() const { return n_s * concat(); }
  Index param_count() const { return 4 * n_s * (n_s + n_x) + n_s * n_d; }
  Index node_count() const { return 4 * n_s + n_d; }

  void validate() const {
    if (n_x <= 0 || n_s <= 0 || n_d <= 0)
      throw DimensionMismatch("model dimensions must be strictly positive");
  }
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

enum class Gate : int { kCandidate = 0, kInput = 1, kForget = 2, kOutput = 3 };

/// Flat parameter vector θ with structured row-major views.
///
/// Layout: rows of Wz, Wi, Wf, Wo (each n_s × (n_x+n_s)), then rows of Wd
/// (n_d × n_s). Every row is contiguous.
template <typename Scalar>
class LstmParams {
 public:
  using RowMajor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MapType = Eigen::Map<RowMajor>;
  using ConstMapType = Eigen::Map<const RowMajor>;

  LstmParams() = default;
  explicit LstmParams(const ModelDims& dims) : dims_(dims), flat_(Vector<Scalar>::Zero(0)) {
    dims_.validate();
    flat_ = Vector<Scalar>::Zero(dims_.param_count());
  }
  LstmParams(const ModelDims& dims, Vector<Scalar> flat) : dims_(dims), flat_(std::move(flat)) {
    dims_.validate();
    if (flat_.size() != dims_.param_count())
      throw DimensionMismatch("flat parameter vector has length " + std::to_string(flat_.size()) +
                              ", expected " + std::to_string(dims_.param_count()));
  }

  const ModelDims& dims() const { return dims_; }
  const Vector<Scalar>& flat() const { return flat_; }
  Vector<Scalar>& flat() { return flat_; }

  static Index gate_offset(const ModelDims& d, Gate g) { return static_cast<Index>(g) * d.gate_params(); }
  static Index output_offset(const ModelDims& d) { return 4 * d.gate_params(); }

  MapType gate(Gate g) { return {flat_.data() + gate_offset(dims_, g), dims_.n_s, dims_.concat()}; }
  ConstMapType gate(Gate g) const {
    return {flat_.data() + gate_offset(dims_, g), dims_.n_s, dims_.concat()};
  }
  MapType output() { return {flat_.data() + output_offset(dims_), dims_.n_d, dims_.n_s}; }
  ConstMapType output() const { return {flat_.data() + output_offset(dims_), dims_.n_d, dims_.n_s}; }

  template <typename Other>
  LstmParams<Other> cast() const {
    return LstmParams<Other>(dims_, flat_.template cast<Other>());
  }

 private:
  ModelDims dims_;
  Vector<Scalar> flat_;
};

/// Carry/hidden pair threaded through the recursion.
template <typename Scalar>
struct LstmState {
  Vector<Scalar> c;
  Vector<Scalar> y;

  static LstmState zeros(Index n_s) { return {Vector<Scalar>::Zero(n_s), Vector<Scalar>::Zero(n_s)}; }
};

/// Everything one forward step produced; kept by TBPTT.
template <typename Scalar>
struct CellTrace {
  Vector<Scalar> input;   ///< [x; y_prev]
  Vector<Scalar> c_prev;
  Vector<Scalar> z, i, f, o;
  Vector<Scalar> c, y;
};

/// One contiguous block of θ owned by a single neural node.
struct NodeSlice {
  Index node_index = 0;  ///< 1-based
  Index flat_offset = 0;
  Index length = 0;
  friend bool operator==(const NodeSlice&, const NodeSlice&) = default;
};

template <typename Scalar>
Scalar sigmoid(Scalar a) {
  using std::exp;
  return Scalar(1) / (Scalar(1) + exp(-a));
}

/// i.i.d. N(0, std_dev²) entries from a seeded 64-bit Mersenne Twister.
inline LstmParams<double> init_params(const ModelDims& dims, double std_dev, std::uint64_t seed) {
  if (!(std_dev >= 0.0)) throw std::invalid_argument("init_params: std_dev must be non-negative");
  LstmParams<double> params(dims);
  if (std_dev == 0.0) return params;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std_dev);
  for (Index k = 0; k < params.flat().size(); ++k) params.flat()[k] = normal(rng);
  return params;
}

namespace detail {

template <typename Scalar, typename DerivedX>
void check_cell_inputs(const LstmParams<Scalar>& params, const Eigen::MatrixBase<DerivedX>& x,
                       const LstmState<Scalar>& prev) {
  const ModelDims& d = params.dims();
  if (x.size() != d.n_x)
    throw DimensionMismatch("input has length " + std::to_string(x.size()) + ", expected " +
                            std::to_string(d.n_x));
  if (prev.c.size() != d.n_s || prev.y.size() != d.n_s)
    throw DimensionMismatch("previous state does not match n_s");
}

}  // namespace detail

/// Forward step that keeps every intermediate activation.
template <typename Scalar, typename DerivedX>
CellTrace<Scalar> forward_cell_traced(const LstmParams<Scalar>& params, const Eigen::MatrixBase<DerivedX>& x,
                                      const LstmState<Scalar>& prev) {
  detail::check_cell_inputs(params, x, prev);
  const ModelDims& d = params.dims();
  CellTrace<Scalar> tr;
  tr.input.resize(d.concat());
  tr.input << x.template cast<Scalar>(), prev.y;
  tr.c_prev = prev.c;

  tr.z = (params.gate(Gate::kCandidate) * tr.input).array().tanh().matrix();
  tr.i = (params.gate(Gate::kInput) * tr.input).unaryExpr([](Scalar a) { return sigmoid(a); });
  tr.f = (params.gate(Gate::kForget) * tr.input).unaryExpr([](Scalar a) { return sigmoid(a); });
  tr.o = (params.gate(Gate::kOutput) * tr.input).unaryExpr([](Scalar a) { return sigmoid(a); });
  tr.c = tr.i.cwiseProduct(tr.z) + tr.f.cwiseProduct(prev.c);
  tr.y = tr.o.cwiseProduct(tr.c.array().tanh().matrix());
  return tr;
}

template <typename Scalar, typename DerivedX>
LstmState<Scalar> forward_cell(const LstmParams<Scalar>& params, const Eigen::MatrixBase<DerivedX>& x,
                               const LstmState<Scalar>& prev) {
  CellTrace<Scalar> tr = forward_cell_traced(params, x, prev);
  return {std::move(tr.c), std::move(tr.y)};
}

/// tanh(Wd·y).
template <typename Scalar, typename DerivedY>
Vector<Scalar> output_layer(const LstmParams<Scalar>& params, const Eigen::MatrixBase<DerivedY>& y) {
  if (y.size() != params.dims().n_s) throw DimensionMismatch("output_layer: y does not match n_s");
  return (params.output() * y).array().tanh().matrix();
}

template <typename Scalar>
struct Prediction {
  Vector<Scalar> d_hat;
  LstmState<Scalar> next;
};

template <typename Scalar, typename DerivedX>
Prediction<Scalar> predict_step(const LstmParams<Scalar>& params, const Eigen::MatrixBase<DerivedX>& x,
                                const LstmState<Scalar>& prev) {
  LstmState<Scalar> next = forward_cell(params, x, prev);
  Vector<Scalar> d_hat = output_layer(params, next.y);
  return {std::move(d_hat), std::move(next)};
}

/// Output of the fully unfolded network after consuming `inputs` from the zero state.
template <typename Scalar>
Vector<Scalar> unfolded_output(const LstmParams<Scalar>& params, const std::vector<VectorXd>& inputs) {
  if (inputs.empty()) throw std::invalid_argument("unfolded_output: empty input sequence");
  LstmState<Scalar> state = LstmState<Scalar>::zeros(params.dims().n_s);
  for (const VectorXd& x : inputs) state = forward_cell(params, x, state);
  return output_layer(params, state.y);
}

/// 4·n_s gate-row nodes (z, i, f, o order) of length n_x+n_s, then n_d
/// output-row nodes of length n_s.
inline std::vector<NodeSlice> node_partition(const ModelDims& dims) {
  dims.validate();
  std::vector<NodeSlice> slices;
  slices.reserve(static_cast<std::size_t>(dims.node_count()));
  Index offset = 0;
  Index node = 1;
  for (Index r = 0; r < 4 * dims.n_s; ++r, ++node) {
    slices.push_back({node, offset, dims.concat()});
    offset += dims.concat();
  }
  for (Index r = 0; r < dims.n_d; ++r, ++node) {
    slices.push_back({node, offset, dims.n_s});
    offset += dims.n_s;
  }
  return slices;
}

/// One slice covering all of θ; turns the block-diagonal filter into the full one.
inline std::vector<NodeSlice> single_node_partition(const ModelDims& dims) {
  dims.validate();
  return {NodeSlice{1, 0, dims.param_count()}};
}

}  // namespace klstm
