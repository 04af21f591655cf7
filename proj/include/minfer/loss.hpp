#ifndef MINFER_LOSS_H
#define MINFER_LOSS_H

#include <memory>

#include "minfer/dataset.hpp"
#include "minfer/manifold.hpp"

namespace minfer {

enum class LossKind { GaussianLocation, SphereBarycenter };

LossKind parse_loss(const std::string& text);
std::string loss_name(LossKind kind);

/* A loss bound to a manifold. Chart derivatives are taken at the chart origin
 * (v = 0 at the given feasible point); the fd_* helpers below differentiate
 * inside one fixed chart at an arbitrary offset instead. Per-sample gradients
 * carry no 1/n factor, so their column mean equals chart_gradient. */
class LossModel {
 public:
  LossModel(LossKind kind, std::shared_ptr<const Manifold> manifold);

  LossKind kind() const { return kind_; }
  const std::shared_ptr<const Manifold>& manifold() const { return manifold_; }
  LossModel with_manifold(std::shared_ptr<const Manifold> manifold) const;

  /* DataError on shape/content mismatch; UsageError for a loss bound to an
   * unsupported manifold kind. */
  void validate(const Dataset& data) const;

  double loss_value(const Dataset& data, const VectorXd& x) const;
  VectorXd per_sample_loss_values(const Dataset& data, const VectorXd& x) const;

  VectorXd ambient_gradient(const Dataset& data, const VectorXd& x) const;
  VectorXd chart_gradient(const Dataset& data, const VectorXd& x) const;
  /* n x dim; row i is the chart gradient of the loss on sample i alone. */
  MatrixXd per_sample_chart_gradients(const Dataset& data, const VectorXd& x) const;

  MatrixXd chart_hessian(const Dataset& data, const VectorXd& x) const;
  MatrixXd chart_hessian_unsymmetrized(const Dataset& data, const VectorXd& x) const;

 private:
  VectorXd ambient_hess_apply(const Dataset& data, const VectorXd& x, const VectorXd& xi) const;

  LossKind kind_;
  std::shared_ptr<const Manifold> manifold_;
};

/* Central differences of the pulled-back loss v -> L(R_x(v), data) in the
 * fixed chart at x. Used where derivatives away from the origin are needed
 * (anchored-chart tests) and as the reference in accuracy checks. */
VectorXd fd_chart_gradient_at(const LossModel& model, const Dataset& data, const VectorXd& x,
                              const VectorXd& v, double h = 1e-5);
MatrixXd fd_chart_hessian_at(const LossModel& model, const Dataset& data, const VectorXd& x,
                             const VectorXd& v, double h = 1e-4);
MatrixXd fd_per_sample_chart_gradients_at(const LossModel& model, const Dataset& data,
                                          const VectorXd& x, const VectorXd& v, double h = 1e-5);

}  // namespace minfer

#endif
