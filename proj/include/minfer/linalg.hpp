#ifndef MINFER_LINALG_H
#define MINFER_LINALG_H

#include "minfer/common.hpp"

namespace minfer {

/* ---- anchored orthonormal complement ----
 * Smooth assignment A |-> F with A^T F = 0, F^T F = I, valid on a
 * neighborhood of the anchor A0. The anchor caches the weighted frame
 * (U0, U0perp) diag(p1, p1-1, ..., 1) once; each evaluation projects it off
 * the column space of A's top singular vectors and takes the leading left
 * singular vectors of the result. Column signs fixed (largest-magnitude
 * entry positive) for determinism. */
struct OrthoAnchor {
  MatrixXd weighted_frame;  // p1 x p1
  double sigma_max = 0.0;   // largest singular value of A0
  int rows = 0;
  int cols = 0;
};

OrthoAnchor make_ortho_anchor(const MatrixXd& A0);
MatrixXd ortho_complement(const MatrixXd& A, const OrthoAnchor& anchor);
// self-anchored convenience
MatrixXd ortho_complement(const MatrixXd& A);

/* Flip columns so each column's largest-magnitude entry is positive.
 * Returns the applied signs (+1/-1) so paired factors can be flipped in sync. */
Eigen::VectorXd fix_column_signs(MatrixXd& M);

/* Polar factor L R^T from the thin SVD of M (closest orthonormal matrix). */
MatrixXd polar_factor(const MatrixXd& M);

/* ---- pseudo-inverse for symmetric matrices ----
 * Eigenvalues with |lambda| <= rcond * max|lambda| are treated as zero. */
VectorXd pinv_solve(const MatrixXd& H, const VectorXd& g, double rcond = 1e-12,
                    int* rank = nullptr);
MatrixXd pinv_matrix(const MatrixXd& H, double rcond = 1e-12, int* rank = nullptr);

/* v^T pinv(S) v */
double pinv_quadratic(const MatrixXd& S, const VectorXd& v, double rcond = 1e-12,
                      int* rank = nullptr);

}  // namespace minfer

#endif
