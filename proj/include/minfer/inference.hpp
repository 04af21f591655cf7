#ifndef MINFER_INFERENCE_H
#define MINFER_INFERENCE_H

#include <functional>
#include <string>
#include <vector>

#include "minfer/newton.hpp"

namespace minfer {

/* sigma = pinv(hessian_factor) * score_outer * pinv(hessian_factor), stored
 * on the estimator-variance scale: score_outer = (1/n^2) sum g_i g_i^T so
 * that an identity Hessian leaves sigma = (1/n) * mean outer product of the
 * per-sample scores. */
struct SandwichCovariance {
  MatrixXd sigma;
  MatrixXd hessian_factor;
  MatrixXd score_outer;
  int rank = 0;
  VectorXd center;
  bool singular = false;  // rank < dim; sigma still valid via pseudo-inverse
};

SandwichCovariance sandwich(const LossModel& model, const Dataset& data, const VectorXd& center,
                            double rcond = 1e-12);

/* Same estimator assembled with finite differences inside the fixed chart at
 * x, evaluated at offset v. Used by the anchored-chart location test where
 * derivatives away from the chart origin are required. */
SandwichCovariance sandwich_fixed_chart(const LossModel& model, const Dataset& data,
                                        const VectorXd& x, const VectorXd& v,
                                        double rcond = 1e-12, double grad_step = 1e-5,
                                        double hess_step = 1e-4);

/* v^T sigma^dagger v with v = inverse_retract(center_from, theta_ref).
 * Out-of-chart reference: 0 with the flag set. */
double wald_statistic(const Manifold& man, const VectorXd& center_from, const VectorXd& theta_ref,
                      const SandwichCovariance& sigma, double rcond = 1e-12,
                      ChartFlags* fl = nullptr);

/* a^T v / sqrt(a^T sigma a). pinv_studentize replaces the quadratic form by
 * a^T sigma^dagger a (variant kept selectable; plain form is the default). */
double intrinsic_t_statistic(const Manifold& man, const VectorXd& center_from,
                             const VectorXd& theta_ref, const SandwichCovariance& sigma,
                             const VectorXd& a, bool pinv_studentize = false,
                             double rcond = 1e-12, ChartFlags* fl = nullptr);

/* Scalar function of the ambient point; ambient_gradient may be empty, in
 * which case chart gradients fall back to central differences through the
 * retraction. */
struct AmbientFunctional {
  std::string name;
  std::function<double(const VectorXd&)> value;
  std::function<VectorXd(const VectorXd&)> ambient_gradient;
};

AmbientFunctional coordinate_functional(int index, int ambient_size);

/* Chart-coordinate gradient of f composed with the retraction at center. */
VectorXd functional_chart_gradient(const Manifold& man, const VectorXd& center,
                                   const AmbientFunctional& f, double h = 1e-5);

/* (f(center_from) - theta_ref_value) / sqrt(g^T sigma g). */
double extrinsic_t_statistic(const Manifold& man, const VectorXd& center_from,
                             double theta_ref_value, const AmbientFunctional& f,
                             const SandwichCovariance& sigma, ChartFlags* fl = nullptr);

/* Smallest sample value minimizing |F_hat(x) - target_cdf|, F_hat the
 * empirical CDF; ties resolved toward the smaller value. */
double empirical_quantile(std::vector<double> values, double target_cdf);

enum class StatisticKind { Wald, IntrinsicT, ExtrinsicT };
std::string statistic_name(StatisticKind kind);

struct StatisticSeries {
  std::vector<double> values;
  StatisticKind kind = StatisticKind::Wald;
  int zero_flag_count = 0;  // flagged replicates; their entries are exactly 0
};

/* Per-replicate resampled statistics. Replicate i is studentized by the
 * sandwich on its own resampled dataset at theta*_i and measures
 * inverse_retract(theta*_i, theta_hat); replicates flagged during refitting
 * contribute an exact 0. */
StatisticSeries bootstrap_wald_series(const BootstrapBundle& bundle, int threads = 1,
                                      double rcond = 1e-12);
StatisticSeries bootstrap_intrinsic_t_series(const BootstrapBundle& bundle, const VectorXd& a,
                                             int threads = 1, bool pinv_studentize = false,
                                             double rcond = 1e-12);
StatisticSeries bootstrap_extrinsic_t_series(const BootstrapBundle& bundle,
                                             const AmbientFunctional& f, int threads = 1,
                                             double rcond = 1e-12);

/* One pass over the replicates collecting the studentized series together
 * with the variants studentized by the single full-sample sandwich. */
struct JointSeries {
  StatisticSeries wald_studentized;
  StatisticSeries wald_nonstudentized;
  StatisticSeries t_studentized;
  StatisticSeries t_nonstudentized;
};
JointSeries bootstrap_joint_series(const BootstrapBundle& bundle, const VectorXd& a,
                                   int threads = 1, double rcond = 1e-12);

enum class Sided { Lower, Upper, Two };
Sided parse_sided(const std::string& text);

struct ConfidenceRegion {
  StatisticKind kind = StatisticKind::Wald;
  double level = 0.9;
  /* Wald and one-sided intervals store one quantile; two-sided intervals
   * store {lower, upper} quantiles of the replicate series. */
  std::vector<double> quantiles;
  Sided sided = Sided::Two;
  SandwichCovariance sigma;  // full-sample sandwich at theta_hat
  VectorXd a;                // intrinsic-t direction
  AmbientFunctional f;       // extrinsic-t functional
  double f_hat = 0.0;        // f(theta_hat)
  double denom = 0.0;        // sqrt(a^T sigma a) or sqrt(g^T sigma g)
  VectorXd theta_hat;
  std::shared_ptr<const Manifold> manifold;
  int b = 0;
  int zero_flag_count = 0;
  bool degenerate_chart = false;  // clustered spectrum at theta_hat
  bool small_b = false;           // b below the warning threshold 100
  double rcond = 1e-12;

  bool contains(const VectorXd& theta, ChartFlags* fl = nullptr) const;
};

ConfidenceRegion wald_region(const BootstrapBundle& bundle, double alpha, int threads = 1,
                             double rcond = 1e-12);
ConfidenceRegion intrinsic_t_interval(const BootstrapBundle& bundle, const VectorXd& a,
                                      double alpha, Sided sided = Sided::Two, int threads = 1,
                                      bool pinv_studentize = false, double rcond = 1e-12);
ConfidenceRegion extrinsic_t_interval(const BootstrapBundle& bundle, const AmbientFunctional& f,
                                      double alpha, Sided sided = Sided::Two, int threads = 1,
                                      double rcond = 1e-12);

/* Same constructions from an already-computed replicate series (the builders
 * above collect theirs internally). */
ConfidenceRegion wald_region_from_series(const BootstrapBundle& bundle,
                                         const StatisticSeries& series, double alpha,
                                         double rcond = 1e-12);
ConfidenceRegion intrinsic_t_interval_from_series(const BootstrapBundle& bundle,
                                                  const StatisticSeries& series,
                                                  const VectorXd& a, double alpha,
                                                  Sided sided = Sided::Two,
                                                  bool pinv_studentize = false,
                                                  double rcond = 1e-12);
ConfidenceRegion extrinsic_t_interval_from_series(const BootstrapBundle& bundle,
                                                  const StatisticSeries& series,
                                                  const AmbientFunctional& f, double alpha,
                                                  Sided sided = Sided::Two,
                                                  double rcond = 1e-12);

std::string region_to_json(const ConfidenceRegion& region, const bool* decision = nullptr);

/* ---- locational hypothesis test in the chart anchored at the null ---- */

struct LocationTestOptions {
  double alpha = 0.1;
  int b = 1000;
  std::uint64_t seed = 0;
  int burn = 20;
  int threads = 1;
  double rcond = 1e-12;
  double grad_tol = 1e-12;
};

/* Everything level-independent: observed statistics and replicate series in
 * the chart at theta1, reusable across several alpha levels. */
struct LocationTestSeries {
  VectorXd theta_hat;
  VectorXd eta_hat;      // chart coordinates of theta_hat at theta1
  VectorXd t_observed;   // per coordinate
  double wald_observed = 0.0;
  MatrixXd t_replicates;  // b x dim
  std::vector<double> wald_replicates;
  MatrixXd sigma_phi;
  int zero_flag_count = 0;
  ChartFlags flags;
};

LocationTestSeries location_test_series(const LossModel& model, const Dataset& data,
                                        const VectorXd& theta1,
                                        const LocationTestOptions& options = {});

struct LocationTestResult {
  double alpha = 0.1;
  VectorXd t_observed;
  VectorXd t_critical_lo;  // per coordinate, alpha/2 quantile of T*
  VectorXd t_critical_hi;  // per coordinate, 1 - alpha/2 quantile
  std::vector<bool> reject_t;  // two-sided, per coordinate
  double wald_observed = 0.0;
  double wald_critical = 0.0;  // 1 - alpha quantile of W*
  bool reject_wald = false;
  int b = 0;
  int zero_flag_count = 0;
};

LocationTestResult location_test(const LossModel& model, const Dataset& data,
                                 const VectorXd& theta1, const LocationTestOptions& options = {});
/* Rejection rules applied to an existing series at one level. */
LocationTestResult location_test_from_series(const LocationTestSeries& series, double alpha);

std::string location_test_to_json(const LocationTestResult& result);

}  // namespace minfer

#endif
