#include "minfer/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

namespace minfer {

Eigen::VectorXd fix_column_signs(MatrixXd& M) {
  VectorXd signs(M.cols());
  for (int j = 0; j < M.cols(); ++j) {
    int imax = 0;
    double best = -1.0;
    for (int i = 0; i < M.rows(); ++i) {
      double a = std::abs(M(i, j));
      if (a > best) {
        best = a;
        imax = i;
      }
    }
    double s = (M(imax, j) < 0.0) ? -1.0 : 1.0;
    if (s < 0.0) M.col(j) = -M.col(j);
    signs(j) = s;
  }
  return signs;
}

MatrixXd polar_factor(const MatrixXd& M) {
  check_finite(M, "polar_factor");
  Eigen::JacobiSVD<MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().transpose();
}

OrthoAnchor make_ortho_anchor(const MatrixXd& A0) {
  check_finite(A0, "ortho_complement anchor");
  const int p1 = static_cast<int>(A0.rows());
  const int p2 = static_cast<int>(A0.cols());
  if (p1 <= p2 || p2 < 1)
    throw RankDeficientError("ortho_complement: anchor must be tall (rows > cols >= 1)");

  Eigen::JacobiSVD<MatrixXd> svd(A0, Eigen::ComputeFullU);
  OrthoAnchor anchor;
  anchor.rows = p1;
  anchor.cols = p2;
  anchor.sigma_max = svd.singularValues()(0);
  if (svd.singularValues()(p2 - 1) < 1e-8 * anchor.sigma_max)
    throw RankDeficientError("ortho_complement: rank-deficient anchor");

  MatrixXd frame = svd.matrixU();  // (U0, U0perp), p1 x p1
  fix_column_signs(frame);
  VectorXd weights(p1);
  for (int i = 0; i < p1; ++i) weights(i) = static_cast<double>(p1 - i);
  anchor.weighted_frame = frame * weights.asDiagonal();
  return anchor;
}

MatrixXd ortho_complement(const MatrixXd& A, const OrthoAnchor& anchor) {
  check_finite(A, "ortho_complement");
  const int p1 = static_cast<int>(A.rows());
  const int p2 = static_cast<int>(A.cols());
  if (p1 != anchor.rows || p2 != anchor.cols)
    throw AnchorMismatchError("ortho_complement: input shape differs from anchor");

  Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeThinU);
  if (svd.singularValues()(p2 - 1) < 1e-8 * anchor.sigma_max)
    throw RankDeficientError("ortho_complement: input nearly rank-deficient at anchor scale");

  const MatrixXd& UA = svd.matrixU();  // p1 x p2
  MatrixXd M = anchor.weighted_frame - UA * (UA.transpose() * anchor.weighted_frame);
  Eigen::JacobiSVD<MatrixXd> svd2(M, Eigen::ComputeFullU);
  MatrixXd F = svd2.matrixU().leftCols(p1 - p2);
  fix_column_signs(F);
  return F;
}

MatrixXd ortho_complement(const MatrixXd& A) {
  return ortho_complement(A, make_ortho_anchor(A));
}

namespace {

struct SymEig {
  MatrixXd vectors;
  VectorXd values;
};

SymEig sym_eig(const MatrixXd& H) {
  check_finite(H, "pinv");
  if (H.rows() != H.cols()) throw NumericalError("pinv: matrix not square");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(H);
  if (es.info() != Eigen::Success) throw NumericalError("pinv: eigendecomposition failed");
  return {es.eigenvectors(), es.eigenvalues()};
}

VectorXd inverted_spectrum(const VectorXd& values, double rcond, int* rank) {
  double amax = 0.0;
  for (int i = 0; i < values.size(); ++i) amax = std::max(amax, std::abs(values(i)));
  VectorXd inv = VectorXd::Zero(values.size());
  int r = 0;
  for (int i = 0; i < values.size(); ++i) {
    if (std::abs(values(i)) > rcond * amax && values(i) != 0.0) {
      inv(i) = 1.0 / values(i);
      ++r;
    }
  }
  if (rank) *rank = r;
  return inv;
}

}  // namespace

VectorXd pinv_solve(const MatrixXd& H, const VectorXd& g, double rcond, int* rank) {
  check_finite(g, "pinv_solve rhs");
  SymEig e = sym_eig(H);
  VectorXd inv = inverted_spectrum(e.values, rcond, rank);
  return e.vectors * (inv.asDiagonal() * (e.vectors.transpose() * g));
}

MatrixXd pinv_matrix(const MatrixXd& H, double rcond, int* rank) {
  SymEig e = sym_eig(H);
  VectorXd inv = inverted_spectrum(e.values, rcond, rank);
  return e.vectors * inv.asDiagonal() * e.vectors.transpose();
}

double pinv_quadratic(const MatrixXd& S, const VectorXd& v, double rcond, int* rank) {
  SymEig e = sym_eig(S);
  VectorXd inv = inverted_spectrum(e.values, rcond, rank);
  VectorXd w = e.vectors.transpose() * v;
  double q = 0.0;
  for (int i = 0; i < w.size(); ++i) q += inv(i) * w(i) * w(i);
  return q;
}

}  // namespace minfer
