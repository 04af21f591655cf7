#include <cmath>

#include "manifold_impl.hpp"
#include "minfer/linalg.hpp"

namespace minfer::detail {
namespace {

using Eigen::Map;

/* Matrices of fixed rank r in R^{p1 x p2}. A point is carried by the sign-
 * fixed factors of its thin SVD, X = U1 diag(sigma) V1^T; U2 and V2 are the
 * anchored orthonormal complements of U1 and V1, so the moving frame is a
 * smooth function of X near the anchor. Tangent vectors are
 * U1 A V1^T + U2 B V1^T + U1 C V2^T and chart coordinates are
 * (vec A, vec B, vec C), an orthonormal family in the Frobenius metric.
 *
 * Retraction: X(v) = [U1 U2] [S+A, C; B, B(S+A)^{-1} C] [V1 V2]^T, which has
 * rank exactly r and normal second-order acceleration. Its inverse reads the
 * blocks of [U1 U2]^T Y [V1 V2] directly (exact, defect purely normal). */
struct Frame {
  MatrixXd U1, V1, U2, V2;
  VectorXd sigma;
};

class FixedRank final : public Manifold {
 public:
  FixedRank(ManifoldDescriptor desc, VectorXd anchor)
      : Manifold(std::move(desc), std::move(anchor)),
        p1_(desc_.ambient_shape[0]),
        p2_(desc_.ambient_shape[1]),
        r_(desc_.rank) {
    require_feasible(anchor_);
    Eigen::JacobiSVD<MatrixXd> svd(Map<const MatrixXd>(anchor_.data(), p1_, p2_),
                                   Eigen::ComputeThinU | Eigen::ComputeThinV);
    MatrixXd U1 = svd.matrixU().leftCols(r_);
    MatrixXd V1 = svd.matrixV().leftCols(r_);
    const VectorXd signs = fix_column_signs(U1);
    V1 = V1 * signs.asDiagonal();
    uframe_ = make_ortho_anchor(U1);
    vframe_ = make_ortho_anchor(V1);
  }

  std::shared_ptr<const Manifold> with_anchor(const VectorXd& anchor) const override {
    return std::make_shared<FixedRank>(desc_, anchor);
  }

  double feasibility(const VectorXd& x) const override {
    Eigen::JacobiSVD<MatrixXd> svd(Map<const MatrixXd>(x.data(), p1_, p2_));
    const VectorXd& s = svd.singularValues();
    if (!(s(0) > 0.0)) return 1.0;
    if (s(r_ - 1) / s(0) < 1e-8) return 1.0;  // rank below r
    return s(r_) / s(0);
  }

  VectorXd retract(const VectorXd& x, const VectorXd& v, ChartFlags* fl) const override {
    const Frame f = frame_at(x);
    MatrixXd A, B, C;
    split(v, A, B, C);
    MatrixXd M11 = f.sigma.asDiagonal().toDenseMatrix() + A;
    Eigen::JacobiSVD<MatrixXd> svd(M11, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(r_ - 1);
    if (!(smin > 1e-12 * smax)) {
      if (!fl) throw NumericalError("fixed-rank retraction: center block singular");
      fl->domain_escape = true;
      return x;
    }
    const MatrixXd M11invC = svd.solve(C);
    const MatrixXd Y = f.U1 * (M11 * f.V1.transpose() + C * f.V2.transpose()) +
                       f.U2 * (B * f.V1.transpose() + (B * M11invC) * f.V2.transpose());
    return Map<const VectorXd>(Y.data(), p1_ * p2_);
  }

  VectorXd inverse_retract(const VectorXd& x, const VectorXd& y,
                           ChartFlags*) const override {
    const Frame f = frame_at(x);
    const Map<const MatrixXd> Y(y.data(), p1_, p2_);
    const MatrixXd YV1 = Y * f.V1;
    const MatrixXd A = f.U1.transpose() * YV1 - MatrixXd(f.sigma.asDiagonal());
    const MatrixXd B = f.U2.transpose() * YV1;
    const MatrixXd C = f.U1.transpose() * Y * f.V2;
    return join(A, B, C);
  }

  MatrixXd chart_basis(const VectorXd& x) const override {
    const Frame f = frame_at(x);
    MatrixXd basis(p1_ * p2_, dim());
    int col = 0;
    for (int j = 0; j < r_; ++j)
      for (int i = 0; i < r_; ++i) flat_outer(f.U1.col(i), f.V1.col(j), basis.col(col++));
    for (int j = 0; j < r_; ++j)
      for (int k = 0; k < p1_ - r_; ++k)
        flat_outer(f.U2.col(k), f.V1.col(j), basis.col(col++));
    for (int l = 0; l < p2_ - r_; ++l)
      for (int i = 0; i < r_; ++i) flat_outer(f.U1.col(i), f.V2.col(l), basis.col(col++));
    return basis;
  }

  VectorXd tangent_project(const VectorXd& x, const VectorXd& w) const override {
    const Frame f = frame_at(x);
    return flatten(project(f, Map<const MatrixXd>(w.data(), p1_, p2_)));
  }

  VectorXd riemannian_grad(const VectorXd& x, const VectorXd& g) const override {
    return tangent_project(x, g);
  }

  VectorXd project(const VectorXd& w) const override {
    Eigen::JacobiSVD<MatrixXd> svd(Map<const MatrixXd>(w.data(), p1_, p2_),
                                   Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (!(svd.singularValues()(r_ - 1) > 0.0)) {
      throw NumericalError("truncated SVD projection hit rank deficiency");
    }
    const MatrixXd Y = svd.matrixU().leftCols(r_) *
                       svd.singularValues().head(r_).asDiagonal() *
                       svd.matrixV().leftCols(r_).transpose();
    return flatten(Y);
  }

  /* Projected ambient Hessian plus the curvature term; only the normal part
   * of the ambient gradient enters (Weingarten map of the embedding). */
  VectorXd riemannian_hess_apply(const VectorXd& x, const VectorXd& g,
                                 const VectorXd& hess_xi,
                                 const VectorXd& xi) const override {
    const Frame f = frame_at(x);
    const Map<const MatrixXd> G(g.data(), p1_, p2_);
    const Map<const MatrixXd> Xi(xi.data(), p1_, p2_);
    const MatrixXd N = f.U2.transpose() * G * f.V2;
    const MatrixXd Bxi = f.U2.transpose() * Xi * f.V1;
    const MatrixXd Cxi = f.U1.transpose() * Xi * f.V2;
    const VectorXd sigma_inv = f.sigma.cwiseInverse();
    const MatrixXd corrB = N * Cxi.transpose() * sigma_inv.asDiagonal();
    const MatrixXd corrC = sigma_inv.asDiagonal() * Bxi.transpose() * N;
    MatrixXd W = project(f, Map<const MatrixXd>(hess_xi.data(), p1_, p2_));
    W += f.U2 * corrB * f.V1.transpose() + f.U1 * corrC * f.V2.transpose();
    return flatten(W);
  }

  bool distinct_singular_values(const VectorXd& x) const override {
    Eigen::JacobiSVD<MatrixXd> svd(Map<const MatrixXd>(x.data(), p1_, p2_));
    const VectorXd& s = svd.singularValues();
    for (int i = 0; i + 1 < r_; ++i) {
      if ((s(i) - s(i + 1)) / s(0) < 1e-8) return false;
    }
    return true;
  }

 private:
  Frame frame_at(const VectorXd& x) const {
    Eigen::JacobiSVD<MatrixXd> svd(Map<const MatrixXd>(x.data(), p1_, p2_),
                                   Eigen::ComputeThinU | Eigen::ComputeThinV);
    Frame f;
    f.U1 = svd.matrixU().leftCols(r_);
    f.V1 = svd.matrixV().leftCols(r_);
    f.sigma = svd.singularValues().head(r_);
    const VectorXd signs = fix_column_signs(f.U1);
    f.V1 = f.V1 * signs.asDiagonal();
    f.U2 = ortho_complement(f.U1, uframe_);
    f.V2 = ortho_complement(f.V1, vframe_);
    return f;
  }

  MatrixXd project(const Frame& f, const Eigen::Ref<const MatrixXd>& W) const {
    const MatrixXd U1tW = f.U1.transpose() * W;
    const MatrixXd WV1 = W * f.V1;
    return f.U1 * U1tW + WV1 * f.V1.transpose() -
           f.U1 * (f.U1.transpose() * WV1) * f.V1.transpose();
  }

  void split(const VectorXd& v, MatrixXd& A, MatrixXd& B, MatrixXd& C) const {
    A = Map<const MatrixXd>(v.data(), r_, r_);
    B = Map<const MatrixXd>(v.data() + r_ * r_, p1_ - r_, r_);
    C = Map<const MatrixXd>(v.data() + r_ * r_ + (p1_ - r_) * r_, r_, p2_ - r_);
  }

  VectorXd join(const MatrixXd& A, const MatrixXd& B, const MatrixXd& C) const {
    VectorXd v(dim());
    Map<VectorXd>(v.data(), r_ * r_) = Map<const VectorXd>(A.data(), r_ * r_);
    Map<VectorXd>(v.data() + r_ * r_, (p1_ - r_) * r_) =
        Map<const VectorXd>(B.data(), (p1_ - r_) * r_);
    Map<VectorXd>(v.data() + r_ * r_ + (p1_ - r_) * r_, r_ * (p2_ - r_)) =
        Map<const VectorXd>(C.data(), r_ * (p2_ - r_));
    return v;
  }

  template <typename Col>
  void flat_outer(const Eigen::Ref<const VectorXd>& u, const Eigen::Ref<const VectorXd>& v,
                  Col col) const {
    for (int b = 0; b < p2_; ++b) col.segment(b * p1_, p1_) = v(b) * u;
  }

  VectorXd flatten(const MatrixXd& M) const {
    return Map<const VectorXd>(M.data(), p1_ * p2_);
  }

  int p1_, p2_, r_;
  OrthoAnchor uframe_, vframe_;
};

}  // namespace

std::shared_ptr<const Manifold> make_fixed_rank(const ManifoldDescriptor& desc,
                                                const VectorXd& anchor) {
  return std::make_shared<FixedRank>(desc, anchor);
}

}  // namespace minfer::detail
