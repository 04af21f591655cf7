#include <cmath>

#include "manifold_impl.hpp"
#include "minfer/linalg.hpp"

namespace minfer::detail {
namespace {

using Eigen::Map;

/* Stiefel manifold St(p,r) = {U : U^T U = I_r} with the canonical metric
 * <a,b> = tr(a^T (I - U U^T / 2) b). Tangent vectors are U*Omega + Uperp*B
 * with Omega skew; chart coordinates list the strict upper triangle of Omega
 * (column-major) followed by vec(B). Both families are unit length and
 * mutually orthogonal under the canonical metric.
 *
 * The retraction is the polar factor of
 *   U (I + Omega + Omega^2/3 - B^T B / 3) + Uperp (B + B Omega / 2),
 * which matches the canonical geodesic through second order. The inverse is
 * a fixed-point iteration v <- v + coords(P_tan(Y - R_U(v))), locally a
 * contraction because dR at zero is the identity on coordinates. */
class Stiefel final : public Manifold {
 public:
  Stiefel(ManifoldDescriptor desc, VectorXd anchor)
      : Manifold(std::move(desc), std::move(anchor)),
        p_(desc_.ambient_shape[0]),
        r_(desc_.ambient_shape[1]),
        skew_dim_(r_ * (r_ - 1) / 2) {
    require_feasible(anchor_);
    frame_ = make_ortho_anchor(Map<const MatrixXd>(anchor_.data(), p_, r_));
  }

  std::shared_ptr<const Manifold> with_anchor(const VectorXd& anchor) const override {
    return std::make_shared<Stiefel>(desc_, anchor);
  }

  double feasibility(const VectorXd& x) const override {
    const Map<const MatrixXd> U(x.data(), p_, r_);
    return (U.transpose() * U - MatrixXd::Identity(r_, r_)).norm();
  }

  VectorXd retract(const VectorXd& x, const VectorXd& v, ChartFlags* fl) const override {
    const Map<const MatrixXd> U(x.data(), p_, r_);
    const MatrixXd Uperp = perp(U);
    MatrixXd Om, B;
    split(v, Om, B);
    const MatrixXd BtB = B.transpose() * B;
    const MatrixXd M = U * (MatrixXd::Identity(r_, r_) + Om + Om * Om / 3.0 - BtB / 3.0) +
                       Uperp * (B + 0.5 * B * Om);
    Eigen::JacobiSVD<MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(r_ - 1);
    if (!(smin > 1e-12 * smax)) {
      if (!fl) throw NumericalError("stiefel retraction: step outside the polar domain");
      fl->domain_escape = true;
      return x;
    }
    const MatrixXd Y = svd.matrixU() * svd.matrixV().transpose();
    return Map<const VectorXd>(Y.data(), p_ * r_);
  }

  VectorXd inverse_retract(const VectorXd& x, const VectorXd& y,
                           ChartFlags* fl) const override {
    const Map<const MatrixXd> U(x.data(), p_, r_);
    const Map<const MatrixXd> Y(y.data(), p_, r_);
    const MatrixXd Uperp = perp(U);

    VectorXd v = tangent_coords(U, Uperp, Y - U);
    ChartFlags inner;
    for (int it = 0; it < 100; ++it) {
      const VectorXd ry = retract(x, v, &inner);
      if (inner.domain_escape) break;
      const Map<const MatrixXd> R(ry.data(), p_, r_);
      const VectorXd step = tangent_coords(U, Uperp, Y - R);
      v += step;
      if (step.norm() <= 1e-10) return v;
    }
    if (!fl) throw NoConvergenceError("stiefel chart inversion did not converge");
    fl->no_convergence = true;
    return VectorXd::Zero(dim());
  }

  MatrixXd chart_basis(const VectorXd& x) const override {
    const Map<const MatrixXd> U(x.data(), p_, r_);
    const MatrixXd Uperp = perp(U);
    MatrixXd basis(p_ * r_, dim());
    int col = 0;
    MatrixXd T = MatrixXd::Zero(p_, r_);
    for (int j = 0; j < r_; ++j) {
      for (int i = 0; i < j; ++i) {
        T.setZero();
        T.col(j) = U.col(i);
        T.col(i) = -U.col(j);
        basis.col(col++) = Map<const VectorXd>(T.data(), p_ * r_);
      }
    }
    for (int j = 0; j < r_; ++j) {
      for (int k = 0; k < p_ - r_; ++k) {
        T.setZero();
        T.col(j) = Uperp.col(k);
        basis.col(col++) = Map<const VectorXd>(T.data(), p_ * r_);
      }
    }
    return basis;
  }

  VectorXd tangent_project(const VectorXd& x, const VectorXd& w) const override {
    const Map<const MatrixXd> U(x.data(), p_, r_);
    const Map<const MatrixXd> W(w.data(), p_, r_);
    const MatrixXd UtW = U.transpose() * W;
    const MatrixXd P = U * (0.5 * (UtW - UtW.transpose())) + (W - U * UtW);
    return Map<const VectorXd>(P.data(), p_ * r_);
  }

  VectorXd project(const VectorXd& w) const override {
    const MatrixXd P = polar_factor(Map<const MatrixXd>(w.data(), p_, r_));
    return Map<const VectorXd>(P.data(), p_ * r_);
  }

  double metric_inner(const VectorXd& x, const VectorXd& a,
                      const VectorXd& b) const override {
    const Map<const MatrixXd> U(x.data(), p_, r_);
    const Map<const MatrixXd> A(a.data(), p_, r_);
    const Map<const MatrixXd> B(b.data(), p_, r_);
    const MatrixXd UtA = U.transpose() * A;
    const MatrixXd UtB = U.transpose() * B;
    return a.dot(b) - 0.5 * (UtA.array() * UtB.array()).sum();
  }

  VectorXd riemannian_grad(const VectorXd& x, const VectorXd& g) const override {
    const Map<const MatrixXd> U(x.data(), p_, r_);
    const Map<const MatrixXd> G(g.data(), p_, r_);
    const MatrixXd R = G - U * (G.transpose() * U);
    return Map<const VectorXd>(R.data(), p_ * r_);
  }

  /* Returns W with <xi, W>_canonical = xi^T hess_xi + grad . Gamma(xi, eta)
   * for every tangent xi, where Gamma is the symmetrized geodesic
   * acceleration: Gamma(xi,eta) = (U(A1 A2 + A2 A1 - B1^T B2 - B2^T B1) +
   * Uperp(B1 A2 + B2 A1)) / 2. Assembled entries are then the canonical
   * Riemannian Hessian. */
  VectorXd riemannian_hess_apply(const VectorXd& x, const VectorXd& g,
                                 const VectorXd& hess_xi,
                                 const VectorXd& xi) const override {
    const Map<const MatrixXd> U(x.data(), p_, r_);
    const Map<const MatrixXd> G(g.data(), p_, r_);
    const Map<const MatrixXd> Xi(xi.data(), p_, r_);
    const Map<const MatrixXd> HXi(hess_xi.data(), p_, r_);
    const MatrixXd Uperp = perp(U);

    const MatrixXd GU = U.transpose() * G;                 // r x r
    const MatrixXd Gp = Uperp.transpose() * G;             // (p-r) x r
    const MatrixXd A2raw = U.transpose() * Xi;
    const MatrixXd A2 = 0.5 * (A2raw - A2raw.transpose());
    const MatrixXd B2 = Uperp.transpose() * Xi;
    const MatrixXd symGU = 0.5 * (GU + GU.transpose());

    // D with tr(xi^T D) = grad . Gamma(xi, eta) for tangent xi
    const MatrixXd DA = -0.5 * (GU * A2 + A2 * GU) + 0.5 * B2.transpose() * Gp;
    const MatrixXd DB = -B2 * symGU - 0.5 * Gp * A2;
    const MatrixXd V = HXi + U * DA + Uperp * DB;

    // raise the Euclidean pairing to the canonical one
    const MatrixXd UtV = U.transpose() * V;
    const MatrixXd W = U * (UtV - UtV.transpose()) + (V - U * UtV);
    return Map<const VectorXd>(W.data(), p_ * r_);
  }

 private:
  MatrixXd perp(const Eigen::Ref<const MatrixXd>& U) const {
    return ortho_complement(U, frame_);
  }

  void split(const VectorXd& v, MatrixXd& Om, MatrixXd& B) const {
    Om = MatrixXd::Zero(r_, r_);
    int idx = 0;
    for (int j = 0; j < r_; ++j) {
      for (int i = 0; i < j; ++i) {
        Om(i, j) = v(idx);
        Om(j, i) = -v(idx);
        ++idx;
      }
    }
    B = Map<const MatrixXd>(v.data() + skew_dim_, p_ - r_, r_);
  }

  VectorXd tangent_coords(const Eigen::Ref<const MatrixXd>& U,
                          const Eigen::Ref<const MatrixXd>& Uperp,
                          const Eigen::Ref<const MatrixXd>& W) const {
    const MatrixXd UtW = U.transpose() * W;
    const MatrixXd B = Uperp.transpose() * W;
    VectorXd v(dim());
    int idx = 0;
    for (int j = 0; j < r_; ++j) {
      for (int i = 0; i < j; ++i) {
        v(idx++) = 0.5 * (UtW(i, j) - UtW(j, i));
      }
    }
    Map<VectorXd>(v.data() + skew_dim_, (p_ - r_) * r_) =
        Map<const VectorXd>(B.data(), (p_ - r_) * r_);
    return v;
  }

  int p_, r_, skew_dim_;
  OrthoAnchor frame_;
};

}  // namespace

std::shared_ptr<const Manifold> make_stiefel(const ManifoldDescriptor& desc,
                                             const VectorXd& anchor) {
  return std::make_shared<Stiefel>(desc, anchor);
}

}  // namespace minfer::detail
