#ifndef MINFER_NEWTON_H
#define MINFER_NEWTON_H

#include <cstdint>
#include <vector>

#include "minfer/loss.hpp"

namespace minfer {

struct NewtonConfig {
  int max_iter = 20;
  /* Stop once the chart gradient norm is <= grad_tol. Negative disables the
   * early exit so a fixed step count is taken (bootstrap replicates). */
  double grad_tol = 1e-12;
  double rcond = 1e-12;
};

/* One chart Newton update: v = -pinv(H) g at x, then retract. A step that
 * leaves the retraction domain keeps x and sets domain_escape. */
VectorXd newton_step(const LossModel& model, const Dataset& data, const VectorXd& x,
                     double rcond = 1e-12, ChartFlags* fl = nullptr);

struct NewtonResult {
  VectorXd x;
  /* Chart gradient norm at every visited iterate, final point included, so
   * size() == steps + 1. A start that already meets grad_tol logs one entry. */
  std::vector<double> grad_norms;
  int steps = 0;
  ChartFlags flags;
};

NewtonResult newton_iterate(const LossModel& model, const Dataset& data, const VectorXd& x0,
                            const NewtonConfig& config = {});

struct BootstrapOptions {
  int burn = 20;       // stage-one Newton iteration cap
  int b = 1000;        // bootstrap replicates
  std::uint64_t seed = 0;
  int threads = 1;
  double rcond = 1e-12;
  double grad_tol = 1e-12;
};

/* Fit plus b resampled two-step refits, all charts re-anchored at the fit.
 * Replicate i is a pure function of (seed, i, data), so any thread layout
 * produces byte-identical columns. */
struct BootstrapBundle {
  VectorXd theta_hat;
  MatrixXd replicates;  // ambient_size x b, replicate estimates as points
  std::vector<ChartFlags> replicate_flags;
  std::vector<double> fit_grad_norms;
  std::uint64_t seed = 0;
  int burn = 0;
  LossModel model;  // re-anchored at theta_hat
  Dataset data;     // original sample; replicate datasets are re-derivable

  explicit BootstrapBundle(LossModel m) : model(std::move(m)) {}
  int b() const { return static_cast<int>(replicates.cols()); }
};

BootstrapBundle fit_and_bootstrap(const LossModel& model, const Dataset& data,
                                  const VectorXd& x0, const BootstrapOptions& options = {});

}  // namespace minfer

#endif
