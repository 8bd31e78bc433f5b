#pragma once

// Dense symmetric linear algebra kernels shared by the modal solver and PCA.
// Everything here is templated on the Eigen expression type so that the same
// code runs in double for production and in long double for oracles.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "frfnet/errors.hpp"

namespace frfnet {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Eigenpairs of a real symmetric matrix. Values are sorted descending and
/// column i of `vectors` belongs to values(i).
template <typename Scalar>
struct SymmetricEigen {
  VectorX<Scalar> values;
  MatrixX<Scalar> vectors;
  int sweeps = 0;
};

struct JacobiOptions {
  double relative_tolerance = 1e-12;  // on ||offdiag||_F / ||A||_F
  int max_sweeps = 100;
};

/// Sample covariance with mean-centering and divisor n_samples - 1.
/// Rows are samples, columns are features.
template <typename Derived>
MatrixX<typename Derived::Scalar> covariance(const Eigen::MatrixBase<Derived>& data) {
  using Scalar = typename Derived::Scalar;
  if (data.rows() < 2) throw ContractError("covariance: need at least 2 samples");
  const VectorX<Scalar> mean = data.colwise().mean().transpose();
  const MatrixX<Scalar> centered = data.rowwise() - mean.transpose();
  MatrixX<Scalar> cov = (centered.transpose() * centered) / Scalar(data.rows() - 1);
  // exact symmetry for downstream Jacobi
  return Scalar(0.5) * (cov + cov.transpose());
}

namespace detail {

template <typename Scalar>
Scalar off_diagonal_norm(const MatrixX<Scalar>& a) {
  Scalar sum(0);
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (i != j) sum += a(i, j) * a(i, j);
  return std::sqrt(sum);
}

}  // namespace detail

/// Orders eigenpairs by descending value and flips each vector so that its
/// largest-magnitude entry is positive.
template <typename Scalar>
void canonicalize(SymmetricEigen<Scalar>& eig) {
  const Eigen::Index n = eig.values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return eig.values(a) > eig.values(b);
  });
  SymmetricEigen<Scalar> sorted;
  sorted.values.resize(n);
  sorted.vectors.resize(eig.vectors.rows(), n);
  sorted.sweeps = eig.sweeps;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    sorted.values(k) = eig.values(src);
    auto column = eig.vectors.col(src);
    Eigen::Index arg = 0;
    column.cwiseAbs().maxCoeff(&arg);
    sorted.vectors.col(k) = column(arg) < Scalar(0) ? VectorX<Scalar>(-column) : VectorX<Scalar>(column);
  }
  eig = std::move(sorted);
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
///
/// Sweeps over all (p, q) pairs in row order, annihilating a(p, q) with a plane
/// rotation, until the off-diagonal Frobenius norm drops below
/// `relative_tolerance * ||A||_F`. Throws ConvergenceError when the sweep cap is
/// reached first.
template <typename Derived>
SymmetricEigen<typename Derived::Scalar> eig_sym(const Eigen::MatrixBase<Derived>& matrix,
                                                 const JacobiOptions& options = {}) {
  using Scalar = typename Derived::Scalar;
  using std::abs;
  using std::sqrt;
  if (matrix.rows() != matrix.cols()) throw ContractError("eig_sym: matrix is not square");
  const Eigen::Index n = matrix.rows();
  MatrixX<Scalar> a = matrix;
  const Scalar norm = a.norm();
  const Scalar asym = (a - a.transpose()).norm();
  if (asym > Scalar(1e-10) * std::max(norm, Scalar(1)))
    throw ContractError("eig_sym: matrix is not symmetric");
  a = Scalar(0.5) * (a + a.transpose()).eval();

  SymmetricEigen<Scalar> result;
  result.vectors = MatrixX<Scalar>::Identity(n, n);
  const Scalar tolerance = Scalar(options.relative_tolerance) * norm;

  VectorX<Scalar> tmp(n);
  int sweep = 0;
  for (;; ++sweep) {
    if (detail::off_diagonal_norm(a) <= tolerance) break;
    if (sweep >= options.max_sweeps)
      throw ConvergenceError("eig_sym: Jacobi iteration did not converge within " +
                             std::to_string(options.max_sweeps) + " sweeps");
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Scalar apq = a(p, q);
        if (apq == Scalar(0)) continue;
        // after a few sweeps, entries below the diagonals' precision are dropped
        const Scalar g = Scalar(100) * abs(apq);
        if (sweep > 3 && abs(a(p, p)) + g == abs(a(p, p)) && abs(a(q, q)) + g == abs(a(q, q))) {
          a(p, q) = Scalar(0);
          a(q, p) = Scalar(0);
          continue;
        }
        const Scalar theta = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
        Scalar t = Scalar(1) / (abs(theta) + sqrt(theta * theta + Scalar(1)));
        if (theta < Scalar(0)) t = -t;
        const Scalar c = Scalar(1) / sqrt(t * t + Scalar(1));
        const Scalar s = t * c;
        const Scalar app = a(p, p);
        const Scalar aqq = a(q, q);
        // A <- J^T A J with J the rotation in the (p, q) plane: rotate columns
        // p and q, mirror them into rows p and q, then fix the 2x2 block.
        tmp = c * a.col(p) - s * a.col(q);
        a.col(q) = s * a.col(p) + c * a.col(q);
        a.col(p) = tmp;
        a.row(p) = a.col(p).transpose();
        a.row(q) = a.col(q).transpose();
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = Scalar(0);
        a(q, p) = Scalar(0);
        tmp = c * result.vectors.col(p) - s * result.vectors.col(q);
        result.vectors.col(q) = s * result.vectors.col(p) + c * result.vectors.col(q);
        result.vectors.col(p) = tmp;
      }
    }
  }
  result.values = a.diagonal();
  result.sweeps = sweep;
  canonicalize(result);
  return result;
}

/// Largest residual ||A v - lambda v|| over all returned pairs.
template <typename Derived, typename Scalar = typename Derived::Scalar>
Scalar max_eigen_residual(const Eigen::MatrixBase<Derived>& matrix, const SymmetricEigen<Scalar>& eig) {
  Scalar worst(0);
  for (Eigen::Index k = 0; k < eig.values.size(); ++k) {
    const VectorX<Scalar> r = matrix * eig.vectors.col(k) - eig.values(k) * eig.vectors.col(k);
    worst = std::max(worst, r.norm());
  }
  return worst;
}

}  // namespace frfnet
