#include "minfer/newton.hpp"

#include "minfer/linalg.hpp"
#include "minfer/parallel.hpp"
#include "minfer/rng.hpp"

namespace minfer {

VectorXd newton_step(const LossModel& model, const Dataset& data, const VectorXd& x,
                     double rcond, ChartFlags* fl) {
  const VectorXd g = model.chart_gradient(data, x);
  const MatrixXd h = model.chart_hessian(data, x);
  const VectorXd v = -pinv_solve(h, g, rcond);
  return model.manifold()->retract(x, v, fl);
}

NewtonResult newton_iterate(const LossModel& model, const Dataset& data, const VectorXd& x0,
                            const NewtonConfig& config) {
  NewtonResult res;
  res.x = x0;
  for (int iter = 0;; ++iter) {
    const double gn = model.chart_gradient(data, res.x).norm();
    if (!std::isfinite(gn)) throw NonFiniteError("newton: gradient norm is not finite");
    res.grad_norms.push_back(gn);
    if (gn <= config.grad_tol || iter == config.max_iter) break;
    ChartFlags fl;
    res.x = newton_step(model, data, res.x, config.rcond, &fl);
    res.flags.merge(fl);
    if (fl.domain_escape) break;  // the step was rejected; repeating cannot help
  }
  // A rejected (domain_escape) step leaves the point in place and does not
  // count as a step, so the last logged norm already belongs to the result.
  res.steps = static_cast<int>(res.grad_norms.size()) - 1;
  return res;
}

BootstrapBundle fit_and_bootstrap(const LossModel& model, const Dataset& data,
                                  const VectorXd& x0, const BootstrapOptions& options) {
  model.validate(data);
  if (options.b < 1) throw UsageError("bootstrap needs b >= 1 replicates");
  if (options.burn < 0) throw UsageError("burn must be >= 0");
  model.manifold()->require_feasible(x0);

  const LossModel model0 = model.with_manifold(model.manifold()->with_anchor(x0));
  NewtonConfig stage1;
  stage1.max_iter = options.burn;
  stage1.grad_tol = options.grad_tol;
  stage1.rcond = options.rcond;
  const NewtonResult fit = newton_iterate(model0, data, x0, stage1);

  BootstrapBundle bundle(model.with_manifold(model.manifold()->with_anchor(fit.x)));
  bundle.theta_hat = fit.x;
  bundle.fit_grad_norms = fit.grad_norms;
  bundle.seed = options.seed;
  bundle.burn = options.burn;
  bundle.data = data;
  bundle.replicates.resize(data.sample_size(), options.b);
  bundle.replicate_flags.assign(options.b, ChartFlags{});

  NewtonConfig two_step;
  two_step.max_iter = 2;
  two_step.grad_tol = -1.0;  // always take both steps
  two_step.rcond = options.rcond;

  const int n = data.n();
  for_each_index(options.b, options.threads, [&](int i) {
    std::vector<int> idx;
    resample_indices(options.seed, static_cast<std::uint64_t>(i), n, idx);
    const Dataset rd = resample(data, idx);
    try {
      const NewtonResult rep = newton_iterate(bundle.model, rd, bundle.theta_hat, two_step);
      bundle.replicates.col(i) = rep.x;
      bundle.replicate_flags[i] = rep.flags;
    } catch (const NumericalError&) {
      bundle.replicates.col(i) = bundle.theta_hat;
      bundle.replicate_flags[i].no_convergence = true;
    }
  });
  return bundle;
}

}  // namespace minfer
