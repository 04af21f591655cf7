#include <cmath>
#include <vector>

#include "manifold_impl.hpp"
#include "minfer/linalg.hpp"

namespace minfer::detail {
namespace {

using Eigen::Map;

/* Nonzero rank-one tensors x0 * u1 (x) ... (x) uk in R^{p1 x ... x pk},
 * flattened column-major (first mode fastest). A point is carried by the
 * signed scale x0 and sign-fixed unit factors u_i (top left singular vector
 * of each mode unfolding); each factor's orthonormal complement U_i is
 * anchored at the corresponding factor of the anchor point.
 *
 * Chart coordinates (a0, w_1, ..., w_k): the basis pairs the scale direction
 * u1 (x) ... (x) uk with the unit tensors that replace one factor by a
 * complement column, an orthonormal family. Retraction
 *   (a0, w) |-> (x0 + a0) * prod_i (u_i + U_i w_i / (x0 + a0))
 * is second order (all curvature sits in multi-deviation cross terms, which
 * are normal) and inverts exactly by mode contractions. */
class RankOneTensor final : public Manifold {
 public:
  RankOneTensor(ManifoldDescriptor desc, VectorXd anchor)
      : Manifold(std::move(desc), std::move(anchor)),
        dims_(desc_.ambient_shape),
        k_(static_cast<int>(dims_.size())),
        size_(desc_.ambient_size()) {
    strides_.resize(k_);
    int s = 1;
    for (int j = 0; j < k_; ++j) {
      strides_[j] = s;
      s *= dims_[j];
    }
    require_feasible(anchor_);
    std::vector<VectorXd> u;
    double x0;
    extract(anchor_, x0, u);
    frames_.reserve(k_);
    for (int j = 0; j < k_; ++j) frames_.push_back(make_ortho_anchor(u[j]));
  }

  std::shared_ptr<const Manifold> with_anchor(const VectorXd& anchor) const override {
    return std::make_shared<RankOneTensor>(desc_, anchor);
  }

  double feasibility(const VectorXd& x) const override {
    const double nx = x.norm();
    if (!(nx > 0.0)) return 1.0;
    std::vector<VectorXd> u;
    double x0;
    extract(x, x0, u);
    return (x - rank_one(u, x0)).norm() / nx;
  }

  VectorXd retract(const VectorXd& x, const VectorXd& v, ChartFlags* fl) const override {
    Factors f = factors_at(x);
    const double c = f.x0 + v(0);
    if (!(std::abs(c) >= 1e-8 * std::abs(f.x0))) {
      if (!fl) throw NumericalError("rank-one retraction: scale crosses zero");
      fl->domain_escape = true;
      return x;
    }
    std::vector<VectorXd> vecs(k_);
    int off = 1;
    for (int j = 0; j < k_; ++j) {
      vecs[j] = f.u[j] + f.uperp[j] * (v.segment(off, dims_[j] - 1) / c);
      off += dims_[j] - 1;
    }
    return rank_one(vecs, c);
  }

  VectorXd inverse_retract(const VectorXd& x, const VectorXd& y,
                           ChartFlags* fl) const override {
    Factors f = factors_at(x);
    const double c = contract_all(y, f.u);
    if (!(std::abs(c) >= 1e-8 * std::abs(f.x0))) {
      if (!fl) throw NumericalError("rank-one chart: target scale projection vanishes");
      fl->out_of_chart = true;
      return VectorXd::Zero(dim());
    }
    VectorXd v(dim());
    v(0) = c - f.x0;
    int off = 1;
    for (int j = 0; j < k_; ++j) {
      v.segment(off, dims_[j] - 1) =
          f.uperp[j].transpose() * contract_all_but(y, f.u, j);
      off += dims_[j] - 1;
    }
    return v;
  }

  MatrixXd chart_basis(const VectorXd& x) const override {
    Factors f = factors_at(x);
    MatrixXd basis(size_, dim());
    basis.col(0) = rank_one(f.u, 1.0);
    int col = 1;
    std::vector<VectorXd> vecs = f.u;
    for (int j = 0; j < k_; ++j) {
      for (int m = 0; m < dims_[j] - 1; ++m) {
        vecs[j] = f.uperp[j].col(m);
        basis.col(col++) = rank_one(vecs, 1.0);
      }
      vecs[j] = f.u[j];
    }
    return basis;
  }

  VectorXd tangent_project(const VectorXd& x, const VectorXd& w) const override {
    Factors f = factors_at(x);
    return project(f, w);
  }

  VectorXd riemannian_grad(const VectorXd& x, const VectorXd& g) const override {
    return tangent_project(x, g);
  }

  VectorXd project(const VectorXd& w) const override {
    std::vector<VectorXd> u;
    double x0;
    extract(w, x0, u);
    if (!(std::abs(x0) > 0.0)) {
      throw NumericalError("rank-one projection produced a zero scale");
    }
    return rank_one(u, x0);
  }

  /* Projected ambient Hessian plus the chart curvature term: the coordinate
   * block coupling modes i != m is U_i^T N_im U_m / x0 with N_im the gradient
   * contracted with the unit factors on every other mode; the scale
   * coordinate takes no correction. */
  VectorXd riemannian_hess_apply(const VectorXd& x, const VectorXd& g,
                                 const VectorXd& hess_xi,
                                 const VectorXd& xi) const override {
    Factors f = factors_at(x);
    VectorXd W = project(f, hess_xi);

    std::vector<VectorXd> z(k_);
    for (int m = 0; m < k_; ++m) {
      const VectorXd t = contract_all_but(xi, f.u, m);
      z[m] = t - f.u[m] * f.u[m].dot(t);
    }
    std::vector<VectorXd> vecs = f.u;
    std::vector<VectorXd> mode = f.u;
    for (int i = 0; i < k_; ++i) {
      VectorXd q = VectorXd::Zero(dims_[i]);
      for (int m = 0; m < k_; ++m) {
        if (m == i) continue;
        vecs[m] = z[m];
        q += contract_all_but(g, vecs, i);
        vecs[m] = f.u[m];
      }
      q /= f.x0;
      mode[i] = q - f.u[i] * f.u[i].dot(q);
      W += rank_one(mode, 1.0);
      mode[i] = f.u[i];
    }
    return W;
  }

 private:
  struct Factors {
    double x0 = 0.0;
    std::vector<VectorXd> u;
    std::vector<MatrixXd> uperp;
  };

  Factors factors_at(const VectorXd& x) const {
    Factors f;
    extract(x, f.x0, f.u);
    f.uperp.reserve(k_);
    for (int j = 0; j < k_; ++j) f.uperp.push_back(ortho_complement(f.u[j], frames_[j]));
    return f;
  }

  /* Top left singular vector of each mode unfolding, largest entry positive;
   * the signed scale is the full contraction. */
  void extract(const VectorXd& x, double& x0, std::vector<VectorXd>& u) const {
    u.assign(k_, VectorXd());
    for (int j = 0; j < k_; ++j) {
      const int pj = dims_[j];
      MatrixXd unf(pj, size_ / pj);
      const int sj = strides_[j];
      for (int fidx = 0; fidx < size_; ++fidx) {
        const int row = (fidx / sj) % pj;
        const int col = fidx % sj + sj * (fidx / (sj * pj));
        unf(row, col) = x(fidx);
      }
      Eigen::JacobiSVD<MatrixXd> svd(unf, Eigen::ComputeThinU);
      MatrixXd top = svd.matrixU().col(0);
      fix_column_signs(top);
      u[j] = top.col(0);
    }
    x0 = contract_all(x, u);
  }

  VectorXd rank_one(const std::vector<VectorXd>& vecs, double scale) const {
    VectorXd t(1);
    t(0) = scale;
    for (int j = 0; j < k_; ++j) {
      const int cur = static_cast<int>(t.size());
      VectorXd next(cur * dims_[j]);
      for (int a = 0; a < dims_[j]; ++a) next.segment(a * cur, cur) = vecs[j](a) * t;
      t.swap(next);
    }
    return t;
  }

  double contract_all(const VectorXd& x, const std::vector<VectorXd>& vecs) const {
    return vecs[0].dot(contract_all_but(x, vecs, 0));
  }

  /* Contract every mode except `skip` with the given vectors. */
  VectorXd contract_all_but(const VectorXd& x, const std::vector<VectorXd>& vecs,
                            int skip) const {
    VectorXd out = VectorXd::Zero(dims_[skip]);
    for (int fidx = 0; fidx < size_; ++fidx) {
      double wgt = x(fidx);
      if (wgt == 0.0) continue;
      int row = 0;
      for (int j = 0; j < k_; ++j) {
        const int ij = (fidx / strides_[j]) % dims_[j];
        if (j == skip) {
          row = ij;
        } else {
          wgt *= vecs[j](ij);
        }
      }
      out(row) += wgt;
    }
    return out;
  }

  VectorXd project(const Factors& f, const VectorXd& w) const {
    VectorXd out = rank_one(f.u, contract_all(w, f.u));
    std::vector<VectorXd> mode = f.u;
    for (int j = 0; j < k_; ++j) {
      const VectorXd t = contract_all_but(w, f.u, j);
      mode[j] = t - f.u[j] * f.u[j].dot(t);
      out += rank_one(mode, 1.0);
      mode[j] = f.u[j];
    }
    return out;
  }

  std::vector<int> dims_;
  int k_;
  int size_;
  std::vector<int> strides_;
  std::vector<OrthoAnchor> frames_;
};

}  // namespace

std::shared_ptr<const Manifold> make_rank_one_tensor(const ManifoldDescriptor& desc,
                                                     const VectorXd& anchor) {
  return std::make_shared<RankOneTensor>(desc, anchor);
}

}  // namespace minfer::detail
