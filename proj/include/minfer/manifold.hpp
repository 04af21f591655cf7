#ifndef MINFER_MANIFOLD_H
#define MINFER_MANIFOLD_H

#include <memory>

#include "minfer/common.hpp"

namespace minfer {

/* A manifold object is immutable after construction and safe to share across
 * threads. The anchor point fixes the smooth orthonormal-complement frames
 * used by every chart; re-anchoring (e.g. at a fresh fit) builds a new object
 * via with_anchor. All points and tangent vectors are flattened column-major
 * ambient vectors; chart coordinates follow each manifold's basis order. */
class Manifold {
 public:
  virtual ~Manifold() = default;

  const ManifoldDescriptor& descriptor() const { return desc_; }
  int dim() const { return desc_.intrinsic_dim; }
  int ambient_size() const { return desc_.ambient_size(); }
  const VectorXd& anchor() const { return anchor_; }

  virtual std::shared_ptr<const Manifold> with_anchor(const VectorXd& anchor) const = 0;

  /* Relative residual of the defining constraints; feasible iff <= 1e-10. */
  virtual double feasibility(const VectorXd& x) const = 0;
  void require_feasible(const VectorXd& x) const;

  /* Chart maps. retract leaves x unchanged (domain_escape flag) when v exits
   * the retraction domain; inverse_retract returns zeros (out_of_chart flag)
   * when y is not reachable in the chart of x. */
  virtual VectorXd retract(const VectorXd& x, const VectorXd& v,
                           ChartFlags* fl = nullptr) const = 0;
  virtual VectorXd inverse_retract(const VectorXd& x, const VectorXd& y,
                                   ChartFlags* fl = nullptr) const = 0;

  /* Columns form an orthonormal basis of T_xM under metric_inner. */
  virtual MatrixXd chart_basis(const VectorXd& x) const = 0;

  virtual VectorXd tangent_project(const VectorXd& x, const VectorXd& w) const = 0;

  /* Feasible point near an arbitrary ambient array (normalization, polar
   * factor, truncated SVD, unfolding-based rank-one). Used for initial
   * iterates, not guaranteed to be the metric projection for tensors. */
  virtual VectorXd project(const VectorXd& w) const = 0;

  /* Riemannian metric on ambient tangent representatives (Euclidean unless
   * overridden; the Stiefel manifold uses the canonical metric). */
  virtual double metric_inner(const VectorXd& x, const VectorXd& a, const VectorXd& b) const;

  /* Pullbacks of ambient derivatives. euclid_hess_xi is the ambient Hessian
   * of the extension already applied to the tangent vector xi. */
  virtual VectorXd riemannian_grad(const VectorXd& x, const VectorXd& euclid_grad) const = 0;
  virtual VectorXd riemannian_hess_apply(const VectorXd& x, const VectorXd& euclid_grad,
                                         const VectorXd& euclid_hess_xi,
                                         const VectorXd& xi) const = 0;

  /* Tangential part of the defect x + basis*inverse_retract(x,y) - y; zero for
   * projection-like inverse retractions. */
  double normal_space_residual(const VectorXd& x, const VectorXd& y,
                               ChartFlags* fl = nullptr) const;

  /* Charts at points with clustered spectra are unfit for single-coordinate
   * inference; fixed-rank overrides this with a singular-value gap test. */
  virtual bool distinct_singular_values(const VectorXd& /*x*/) const { return true; }

  /* Extrinsic (Frobenius) distance unless a closed geodesic form exists. */
  virtual double distance(const VectorXd& x, const VectorXd& y) const;

 protected:
  Manifold(ManifoldDescriptor desc, VectorXd anchor)
      : desc_(std::move(desc)), anchor_(std::move(anchor)) {}

  ManifoldDescriptor desc_;
  VectorXd anchor_;
};

std::shared_ptr<const Manifold> make_manifold(const ManifoldDescriptor& desc,
                                              const VectorXd& anchor);

/* A fixed feasible point of the manifold, independent of any data. Used to
 * bootstrap an instance when no anchor is known yet. */
VectorXd canonical_point(const ManifoldDescriptor& desc);

/* Mini-grammar: sphere:P | stiefel:P,R | fixedrank:R,P1,P2 | rank1tensor:P1,...,PK */
ManifoldDescriptor parse_manifold(const std::string& text);

ManifoldDescriptor sphere_descriptor(int p);
ManifoldDescriptor stiefel_descriptor(int p, int r);
ManifoldDescriptor fixed_rank_descriptor(int r, int p1, int p2);
ManifoldDescriptor rank_one_tensor_descriptor(const std::vector<int>& dims);

}  // namespace minfer

#endif
