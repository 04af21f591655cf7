#include <algorithm>
#include <cmath>

#include "manifold_impl.hpp"
#include "minfer/linalg.hpp"

namespace minfer::detail {
namespace {

/* Unit sphere in R^p. Chart at x: v |-> (x + F v)/|x + F v| with F the
 * anchored orthonormal complement of x, so coordinates are orthonormal and
 * the retraction is second order (acceleration -|v|^2 x is normal). */
class Sphere final : public Manifold {
 public:
  Sphere(ManifoldDescriptor desc, VectorXd anchor)
      : Manifold(std::move(desc), std::move(anchor)) {
    require_feasible(anchor_);
    frame_ = make_ortho_anchor(anchor_);
  }

  std::shared_ptr<const Manifold> with_anchor(const VectorXd& anchor) const override {
    return std::make_shared<Sphere>(desc_, anchor);
  }

  double feasibility(const VectorXd& x) const override {
    return std::abs(x.norm() - 1.0);
  }

  VectorXd retract(const VectorXd& x, const VectorXd& v, ChartFlags*) const override {
    const VectorXd w = x + chart_basis(x) * v;
    return w / w.norm();
  }

  VectorXd inverse_retract(const VectorXd& x, const VectorXd& y,
                           ChartFlags* fl) const override {
    const double t = x.dot(y);
    if (t <= 1e-12) {
      if (!fl) throw NumericalError("sphere chart: target not in the open hemisphere");
      fl->out_of_chart = true;
      return VectorXd::Zero(dim());
    }
    return chart_basis(x).transpose() * (y / t - x);
  }

  MatrixXd chart_basis(const VectorXd& x) const override {
    return ortho_complement(x, frame_);
  }

  VectorXd tangent_project(const VectorXd& x, const VectorXd& w) const override {
    return w - x * x.dot(w);
  }

  VectorXd project(const VectorXd& w) const override {
    const double nw = w.norm();
    if (!(nw > 0.0)) throw NumericalError("cannot project the zero vector to the sphere");
    return w / nw;
  }

  VectorXd riemannian_grad(const VectorXd& x, const VectorXd& g) const override {
    return tangent_project(x, g);
  }

  VectorXd riemannian_hess_apply(const VectorXd& x, const VectorXd& g,
                                 const VectorXd& hess_xi,
                                 const VectorXd& xi) const override {
    return tangent_project(x, hess_xi) - x.dot(g) * xi;
  }

  double distance(const VectorXd& x, const VectorXd& y) const override {
    return std::acos(std::clamp(x.dot(y), -1.0, 1.0));
  }

 private:
  OrthoAnchor frame_;
};

}  // namespace

std::shared_ptr<const Manifold> make_sphere(const ManifoldDescriptor& desc,
                                            const VectorXd& anchor) {
  return std::make_shared<Sphere>(desc, anchor);
}

}  // namespace minfer::detail
