#pragma once

#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "klstm/errors.hpp"

// Small dense helpers for the Kalman recursions. Everything here is a pure
// function of its arguments.
namespace klstm {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

inline constexpr int kMaxJitterDoublings = 10;

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& a) {
  return a.allFinite();
}

template <typename Derived>
typename Derived::Scalar trace(const Eigen::MatrixBase<Derived>& a) {
  if (a.rows() != a.cols()) throw DimensionMismatch("trace: matrix is not square");
  return a.trace();
}

template <typename Scalar>
void symmetrize_in_place(Matrix<Scalar>& a) {
  if (a.rows() != a.cols()) throw DimensionMismatch("symmetrize: matrix is not square");
  const Eigen::Index n = a.rows();
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = c + 1; r < n; ++r) {
      const Scalar m = (a(r, c) + a(c, r)) / Scalar(2);
      a(r, c) = m;
      a(c, r) = m;
    }
  }
}

/// (A + Aᵀ)/2. Exactly symmetric in floating point.
template <typename Derived>
Matrix<typename Derived::Scalar> symmetrize(const Eigen::MatrixBase<Derived>& a) {
  if (a.rows() != a.cols()) throw DimensionMismatch("symmetrize: matrix is not square");
  Matrix<typename Derived::Scalar> out = a;
  symmetrize_in_place(out);
  return out;
}

template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& a, double rel_tol = 1e-12) {
  if (a.rows() != a.cols()) return false;
  for (Eigen::Index c = 0; c < a.cols(); ++c)
    for (Eigen::Index r = c + 1; r < a.rows(); ++r) {
      const double ajk = static_cast<double>(a(r, c));
      const double akj = static_cast<double>(a(c, r));
      if (std::abs(ajk - akj) > rel_tol * std::max(1.0, std::abs(ajk))) return false;
    }
  return true;
}

/// Default starting jitter for ensure_spd: 1e-12 times the mean diagonal entry.
template <typename Derived>
double default_jitter(const Eigen::MatrixBase<Derived>& a) {
  const double n = static_cast<double>(a.rows());
  const double mean_diag = n > 0 ? static_cast<double>(a.trace()) / n : 0.0;
  return 1e-12 * (mean_diag > 0.0 ? mean_diag : 1.0);
}

/// Jitter actually added by the last ensure_spd call (0 when A was already SPD).
struct SpdRepair {
  double jitter = 0.0;
  int doublings = -1;  // -1: no jitter needed
};

/// Symmetrizes A and adds εI (ε = jitter_start·2^k, k = 0..10) until a
/// Cholesky factorization succeeds.
template <typename Derived>
Matrix<typename Derived::Scalar> ensure_spd(const Eigen::MatrixBase<Derived>& a, double jitter_start,
                                            SpdRepair* repair = nullptr) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> sym = symmetrize(a);
  if (!sym.allFinite()) throw NotPositiveDefinite("ensure_spd: non-finite entries");
  Eigen::LLT<Matrix<Scalar>> llt(sym);
  if (llt.info() == Eigen::Success) {
    if (repair) *repair = {};
    return sym;
  }
  double eps = jitter_start;
  for (int k = 0; k <= kMaxJitterDoublings; ++k, eps *= 2.0) {
    Matrix<Scalar> trial = sym;
    trial.diagonal().array() += Scalar(eps);
    llt.compute(trial);
    if (llt.info() == Eigen::Success) {
      if (repair) *repair = {eps, k};
      return trial;
    }
  }
  throw NotPositiveDefinite("ensure_spd: factorization failed after " +
                            std::to_string(kMaxJitterDoublings) + " jitter doublings");
}

/// Solves A·X = B for symmetric positive definite A.
template <typename DerivedA, typename DerivedB>
Matrix<typename DerivedA::Scalar> spd_solve(const Eigen::MatrixBase<DerivedA>& a,
                                            const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.rows() != a.cols()) throw DimensionMismatch("spd_solve: A is not square");
  if (b.rows() != a.rows()) throw DimensionMismatch("spd_solve: row count of B differs from A");
  Eigen::LLT<Matrix<Scalar>> llt(a);
  if (llt.info() == Eigen::Success) return llt.solve(b);
  const Matrix<Scalar> repaired = ensure_spd(a, default_jitter(a));
  llt.compute(repaired);
  return llt.solve(b);
}

}  // namespace klstm
