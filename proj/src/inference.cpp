#include "minfer/inference.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "minfer/linalg.hpp"
#include "minfer/parallel.hpp"
#include "minfer/rng.hpp"
#include "minfer/text_format.hpp"

namespace minfer {

namespace {

SandwichCovariance assemble_sandwich(MatrixXd hess, const MatrixXd& rows, VectorXd center,
                                     double rcond) {
  SandwichCovariance out;
  const int n = static_cast<int>(rows.rows());
  out.hessian_factor = std::move(hess);
  out.score_outer = rows.transpose() * rows / (static_cast<double>(n) * n);
  const MatrixXd hinv = pinv_matrix(out.hessian_factor, rcond, &out.rank);
  MatrixXd sigma = hinv * out.score_outer * hinv;
  out.sigma = 0.5 * (sigma + sigma.transpose());
  out.center = std::move(center);
  out.singular = out.rank < out.hessian_factor.rows();
  return out;
}

double studentized_span(const SandwichCovariance& sigma, const VectorXd& a, bool pinv_studentize,
                        double rcond) {
  const double q =
      pinv_studentize ? pinv_quadratic(sigma.sigma, a, rcond) : a.dot(sigma.sigma * a);
  return q > 0.0 ? std::sqrt(q) : 0.0;
}

Dataset replicate_dataset(const BootstrapBundle& bundle, int i) {
  std::vector<int> idx;
  resample_indices(bundle.seed, static_cast<std::uint64_t>(i), bundle.data.n(), idx);
  return resample(bundle.data, idx);
}

int count_nonzero(const std::vector<char>& flags) {
  int c = 0;
  for (char f : flags) c += f != 0;
  return c;
}

}  // namespace

SandwichCovariance sandwich(const LossModel& model, const Dataset& data, const VectorXd& center,
                            double rcond) {
  return assemble_sandwich(model.chart_hessian(data, center),
                           model.per_sample_chart_gradients(data, center), center, rcond);
}

SandwichCovariance sandwich_fixed_chart(const LossModel& model, const Dataset& data,
                                        const VectorXd& x, const VectorXd& v, double rcond,
                                        double grad_step, double hess_step) {
  return assemble_sandwich(fd_chart_hessian_at(model, data, x, v, hess_step),
                           fd_per_sample_chart_gradients_at(model, data, x, v, grad_step),
                           model.manifold()->retract(x, v), rcond);
}

double wald_statistic(const Manifold& man, const VectorXd& center_from, const VectorXd& theta_ref,
                      const SandwichCovariance& sigma, double rcond, ChartFlags* fl) {
  ChartFlags local;
  const VectorXd v = man.inverse_retract(center_from, theta_ref, &local);
  if (fl) fl->merge(local);
  if (local.any()) {
    if (!fl) throw NumericalError("wald statistic: reference not reachable in chart");
    return 0.0;
  }
  return pinv_quadratic(sigma.sigma, v, rcond);
}

double intrinsic_t_statistic(const Manifold& man, const VectorXd& center_from,
                             const VectorXd& theta_ref, const SandwichCovariance& sigma,
                             const VectorXd& a, bool pinv_studentize, double rcond,
                             ChartFlags* fl) {
  ChartFlags local;
  const VectorXd v = man.inverse_retract(center_from, theta_ref, &local);
  const double s = studentized_span(sigma, a, pinv_studentize, rcond);
  if (s <= 0.0) local.zero_variance = true;
  if (fl) fl->merge(local);
  if (local.any()) {
    if (!fl) throw ZeroVarianceError("intrinsic t: zero variance or unreachable reference");
    return 0.0;
  }
  return a.dot(v) / s;
}

AmbientFunctional coordinate_functional(int index, int ambient_size) {
  if (index < 0 || index >= ambient_size) {
    throw UsageError("coordinate index " + std::to_string(index) + " outside ambient size " +
                     std::to_string(ambient_size));
  }
  AmbientFunctional f;
  f.name = "coord:" + std::to_string(index);
  f.value = [index](const VectorXd& x) { return x(index); };
  f.ambient_gradient = [index, ambient_size](const VectorXd&) {
    VectorXd g = VectorXd::Zero(ambient_size);
    g(index) = 1.0;
    return g;
  };
  return f;
}

VectorXd functional_chart_gradient(const Manifold& man, const VectorXd& center,
                                   const AmbientFunctional& f, double h) {
  const MatrixXd basis = man.chart_basis(center);
  if (f.ambient_gradient) return basis.transpose() * f.ambient_gradient(center);
  const int p = static_cast<int>(basis.cols());
  VectorXd g(p), v = VectorXd::Zero(p);
  for (int j = 0; j < p; ++j) {
    v(j) = h;
    const double up = f.value(man.retract(center, v));
    v(j) = -h;
    const double dn = f.value(man.retract(center, v));
    v(j) = 0.0;
    g(j) = (up - dn) / (2.0 * h);
  }
  return g;
}

double extrinsic_t_statistic(const Manifold& man, const VectorXd& center_from,
                             double theta_ref_value, const AmbientFunctional& f,
                             const SandwichCovariance& sigma, ChartFlags* fl) {
  const VectorXd g = functional_chart_gradient(man, center_from, f);
  const double q = g.dot(sigma.sigma * g);
  if (q <= 0.0) {
    if (!fl) throw ZeroVarianceError("extrinsic t: functional has zero studentizing variance");
    fl->zero_variance = true;
    return 0.0;
  }
  return (f.value(center_from) - theta_ref_value) / std::sqrt(q);
}

double empirical_quantile(std::vector<double> values, double target_cdf) {
  if (values.empty()) throw UsageError("empirical quantile of an empty series");
  if (!(target_cdf > 0.0 && target_cdf < 1.0)) {
    throw UsageError("quantile target must lie in (0,1)");
  }
  std::sort(values.begin(), values.end());
  const double b = static_cast<double>(values.size());
  double best = values.front();
  double best_diff = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < values.size();) {
    size_t j = i;
    while (j + 1 < values.size() && values[j + 1] == values[i]) ++j;
    const double diff = std::abs(static_cast<double>(j + 1) / b - target_cdf);
    if (diff < best_diff) {
      best_diff = diff;
      best = values[i];
    }
    i = j + 1;
  }
  return best;
}

std::string statistic_name(StatisticKind kind) {
  switch (kind) {
    case StatisticKind::Wald:
      return "wald";
    case StatisticKind::IntrinsicT:
      return "intrinsic-t";
    default:
      return "extrinsic-t";
  }
}

Sided parse_sided(const std::string& text) {
  if (text == "lower") return Sided::Lower;
  if (text == "upper") return Sided::Upper;
  if (text == "two") return Sided::Two;
  throw UsageError("unknown sidedness '" + text + "' (expected lower|upper|two)");
}

StatisticSeries bootstrap_wald_series(const BootstrapBundle& bundle, int threads, double rcond) {
  const int b = bundle.b();
  StatisticSeries out;
  out.kind = StatisticKind::Wald;
  out.values.assign(b, 0.0);
  std::vector<char> flagged(b, 0);
  const auto& man = *bundle.model.manifold();
  for_each_index(b, threads, [&](int i) {
    if (bundle.replicate_flags[i].any()) {
      flagged[i] = 1;
      return;
    }
    const Dataset rd = replicate_dataset(bundle, i);
    const VectorXd center = bundle.replicates.col(i);
    const SandwichCovariance sig = sandwich(bundle.model, rd, center, rcond);
    ChartFlags fl;
    out.values[i] = wald_statistic(man, center, bundle.theta_hat, sig, rcond, &fl);
    if (fl.any()) {
      out.values[i] = 0.0;
      flagged[i] = 1;
    }
  });
  out.zero_flag_count = count_nonzero(flagged);
  return out;
}

StatisticSeries bootstrap_intrinsic_t_series(const BootstrapBundle& bundle, const VectorXd& a,
                                             int threads, bool pinv_studentize, double rcond) {
  const int b = bundle.b();
  StatisticSeries out;
  out.kind = StatisticKind::IntrinsicT;
  out.values.assign(b, 0.0);
  std::vector<char> flagged(b, 0);
  const auto& man = *bundle.model.manifold();
  for_each_index(b, threads, [&](int i) {
    if (bundle.replicate_flags[i].any()) {
      flagged[i] = 1;
      return;
    }
    const Dataset rd = replicate_dataset(bundle, i);
    const VectorXd center = bundle.replicates.col(i);
    const SandwichCovariance sig = sandwich(bundle.model, rd, center, rcond);
    ChartFlags fl;
    out.values[i] =
        intrinsic_t_statistic(man, center, bundle.theta_hat, sig, a, pinv_studentize, rcond, &fl);
    if (fl.any()) {
      out.values[i] = 0.0;
      flagged[i] = 1;
    }
  });
  out.zero_flag_count = count_nonzero(flagged);
  return out;
}

StatisticSeries bootstrap_extrinsic_t_series(const BootstrapBundle& bundle,
                                             const AmbientFunctional& f, int threads,
                                             double rcond) {
  const int b = bundle.b();
  StatisticSeries out;
  out.kind = StatisticKind::ExtrinsicT;
  out.values.assign(b, 0.0);
  std::vector<char> flagged(b, 0);
  const auto& man = *bundle.model.manifold();
  const double f_hat = f.value(bundle.theta_hat);
  for_each_index(b, threads, [&](int i) {
    if (bundle.replicate_flags[i].any()) {
      flagged[i] = 1;
      return;
    }
    const Dataset rd = replicate_dataset(bundle, i);
    const VectorXd center = bundle.replicates.col(i);
    const SandwichCovariance sig = sandwich(bundle.model, rd, center, rcond);
    ChartFlags fl;
    out.values[i] = extrinsic_t_statistic(man, center, f_hat, f, sig, &fl);
    if (fl.any()) {
      out.values[i] = 0.0;
      flagged[i] = 1;
    }
  });
  out.zero_flag_count = count_nonzero(flagged);
  return out;
}

JointSeries bootstrap_joint_series(const BootstrapBundle& bundle, const VectorXd& a, int threads,
                                   double rcond) {
  const int b = bundle.b();
  JointSeries out;
  out.wald_studentized.kind = out.wald_nonstudentized.kind = StatisticKind::Wald;
  out.t_studentized.kind = out.t_nonstudentized.kind = StatisticKind::IntrinsicT;
  out.wald_studentized.values.assign(b, 0.0);
  out.wald_nonstudentized.values.assign(b, 0.0);
  out.t_studentized.values.assign(b, 0.0);
  out.t_nonstudentized.values.assign(b, 0.0);
  std::vector<char> fl_wst(b, 0), fl_wnon(b, 0), fl_tst(b, 0), fl_tnon(b, 0);
  const auto& man = *bundle.model.manifold();
  const SandwichCovariance sig_hat = sandwich(bundle.model, bundle.data, bundle.theta_hat, rcond);
  const double span_hat = studentized_span(sig_hat, a, false, rcond);
  for_each_index(b, threads, [&](int i) {
    if (bundle.replicate_flags[i].any()) {
      fl_wst[i] = fl_wnon[i] = fl_tst[i] = fl_tnon[i] = 1;
      return;
    }
    const VectorXd center = bundle.replicates.col(i);
    ChartFlags chart_fl;
    const VectorXd v = man.inverse_retract(center, bundle.theta_hat, &chart_fl);
    if (chart_fl.any()) {
      fl_wst[i] = fl_wnon[i] = fl_tst[i] = fl_tnon[i] = 1;
      return;
    }
    const Dataset rd = replicate_dataset(bundle, i);
    const SandwichCovariance sig = sandwich(bundle.model, rd, center, rcond);
    out.wald_studentized.values[i] = pinv_quadratic(sig.sigma, v, rcond);
    out.wald_nonstudentized.values[i] = pinv_quadratic(sig_hat.sigma, v, rcond);
    const double span = studentized_span(sig, a, false, rcond);
    if (span > 0.0) {
      out.t_studentized.values[i] = a.dot(v) / span;
    } else {
      fl_tst[i] = 1;
    }
    if (span_hat > 0.0) {
      out.t_nonstudentized.values[i] = a.dot(v) / span_hat;
    } else {
      fl_tnon[i] = 1;
    }
  });
  out.wald_studentized.zero_flag_count = count_nonzero(fl_wst);
  out.wald_nonstudentized.zero_flag_count = count_nonzero(fl_wnon);
  out.t_studentized.zero_flag_count = count_nonzero(fl_tst);
  out.t_nonstudentized.zero_flag_count = count_nonzero(fl_tnon);
  return out;
}

namespace {

ConfidenceRegion base_region(const BootstrapBundle& bundle, StatisticKind kind, double alpha,
                             Sided sided, double rcond) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0,1)");
  ConfidenceRegion region;
  region.kind = kind;
  region.level = 1.0 - alpha;
  region.sided = sided;
  region.sigma = sandwich(bundle.model, bundle.data, bundle.theta_hat, rcond);
  region.theta_hat = bundle.theta_hat;
  region.manifold = bundle.model.manifold();
  region.b = bundle.b();
  region.small_b = bundle.b() < 100;
  region.degenerate_chart = !bundle.model.manifold()->distinct_singular_values(bundle.theta_hat);
  region.rcond = rcond;
  return region;
}

void attach_quantiles(ConfidenceRegion& region, const StatisticSeries& series, double alpha) {
  region.zero_flag_count = series.zero_flag_count;
  switch (region.sided) {
    case Sided::Two:
      region.quantiles = {empirical_quantile(series.values, alpha / 2.0),
                          empirical_quantile(series.values, 1.0 - alpha / 2.0)};
      break;
    case Sided::Upper:
      region.quantiles = {empirical_quantile(
          series.values, region.kind == StatisticKind::ExtrinsicT ? alpha : 1.0 - alpha)};
      break;
    case Sided::Lower:
      region.quantiles = {empirical_quantile(
          series.values, region.kind == StatisticKind::ExtrinsicT ? 1.0 - alpha : alpha)};
      break;
  }
}

}  // namespace

ConfidenceRegion wald_region_from_series(const BootstrapBundle& bundle,
                                         const StatisticSeries& series, double alpha,
                                         double rcond) {
  ConfidenceRegion region = base_region(bundle, StatisticKind::Wald, alpha, Sided::Upper, rcond);
  region.zero_flag_count = series.zero_flag_count;
  region.quantiles = {empirical_quantile(series.values, 1.0 - alpha)};
  return region;
}

ConfidenceRegion intrinsic_t_interval_from_series(const BootstrapBundle& bundle,
                                                  const StatisticSeries& series,
                                                  const VectorXd& a, double alpha, Sided sided,
                                                  bool pinv_studentize, double rcond) {
  if (a.size() != bundle.model.manifold()->dim()) {
    throw UsageError("direction length must equal the manifold dimension");
  }
  ConfidenceRegion region = base_region(bundle, StatisticKind::IntrinsicT, alpha, sided, rcond);
  region.a = a;
  region.denom = studentized_span(region.sigma, a, pinv_studentize, rcond);
  if (region.denom <= 0.0) {
    throw ZeroVarianceError("intrinsic t interval: a^T sigma a is zero at the fit");
  }
  attach_quantiles(region, series, alpha);
  return region;
}

ConfidenceRegion extrinsic_t_interval_from_series(const BootstrapBundle& bundle,
                                                  const StatisticSeries& series,
                                                  const AmbientFunctional& f, double alpha,
                                                  Sided sided, double rcond) {
  ConfidenceRegion region = base_region(bundle, StatisticKind::ExtrinsicT, alpha, sided, rcond);
  region.f = f;
  region.f_hat = f.value(bundle.theta_hat);
  const VectorXd g = functional_chart_gradient(*bundle.model.manifold(), bundle.theta_hat, f);
  const double q = g.dot(region.sigma.sigma * g);
  if (q <= 0.0) {
    throw ZeroVarianceError("extrinsic t interval: functional variance is zero at the fit");
  }
  region.denom = std::sqrt(q);
  attach_quantiles(region, series, alpha);
  return region;
}

ConfidenceRegion wald_region(const BootstrapBundle& bundle, double alpha, int threads,
                             double rcond) {
  return wald_region_from_series(bundle, bootstrap_wald_series(bundle, threads, rcond), alpha,
                                 rcond);
}

ConfidenceRegion intrinsic_t_interval(const BootstrapBundle& bundle, const VectorXd& a,
                                      double alpha, Sided sided, int threads,
                                      bool pinv_studentize, double rcond) {
  return intrinsic_t_interval_from_series(
      bundle, bootstrap_intrinsic_t_series(bundle, a, threads, pinv_studentize, rcond), a, alpha,
      sided, pinv_studentize, rcond);
}

ConfidenceRegion extrinsic_t_interval(const BootstrapBundle& bundle, const AmbientFunctional& f,
                                      double alpha, Sided sided, int threads, double rcond) {
  return extrinsic_t_interval_from_series(bundle, bootstrap_extrinsic_t_series(bundle, f, threads, rcond),
                                          f, alpha, sided, rcond);
}

bool ConfidenceRegion::contains(const VectorXd& theta, ChartFlags* fl) const {
  if (kind == StatisticKind::ExtrinsicT) {
    const double val = f.value(theta);
    switch (sided) {
      case Sided::Two:
        return val >= f_hat - quantiles[1] * denom && val <= f_hat - quantiles[0] * denom;
      case Sided::Upper:
        return val <= f_hat - quantiles[0] * denom;
      default:
        return val >= f_hat - quantiles[0] * denom;
    }
  }
  ChartFlags local;
  const VectorXd v = manifold->inverse_retract(theta_hat, theta, &local);
  if (fl) fl->merge(local);
  if (local.any()) return false;
  if (kind == StatisticKind::Wald) {
    return pinv_quadratic(sigma.sigma, v, rcond) <= quantiles[0];
  }
  const double x = a.dot(v);
  switch (sided) {
    case Sided::Two:
      return x >= quantiles[0] * denom && x <= quantiles[1] * denom;
    case Sided::Upper:
      return x <= quantiles[0] * denom;
    default:
      return x >= quantiles[0] * denom;
  }
}

std::string region_to_json(const ConfidenceRegion& region, const bool* decision) {
  nlohmann::json j;
  j["kind"] = statistic_name(region.kind);
  j["level"] = region.level;
  if (region.quantiles.size() == 1) {
    j["quantile"] = region.quantiles[0];
  } else {
    j["quantile"] = {region.quantiles[0], region.quantiles[1]};
  }
  j["sided"] = region.sided == Sided::Two ? "two" : (region.sided == Sided::Upper ? "upper" : "lower");
  std::vector<double> sig;
  sig.reserve(static_cast<size_t>(region.sigma.sigma.size()));
  for (Eigen::Index i = 0; i < region.sigma.sigma.rows(); ++i) {
    for (Eigen::Index k = 0; k < region.sigma.sigma.cols(); ++k) {
      sig.push_back(region.sigma.sigma(i, k));
    }
  }
  j["sigma"] = sig;
  j["sigma_rank"] = region.sigma.rank;
  if (region.kind == StatisticKind::IntrinsicT) {
    j["direction"] = std::vector<double>(region.a.data(), region.a.data() + region.a.size());
    j["denom"] = region.denom;
  }
  if (region.kind == StatisticKind::ExtrinsicT) {
    j["functional"] = region.f.name;
    j["f_hat"] = region.f_hat;
    j["denom"] = region.denom;
  }
  j["b"] = region.b;
  j["flags"] = {{"zero_flag_count", region.zero_flag_count},
                {"flagged_fraction",
                 region.b ? static_cast<double>(region.zero_flag_count) / region.b : 0.0},
                {"degenerate_chart", region.degenerate_chart},
                {"small_b", region.small_b},
                {"sigma_singular", region.sigma.singular}};
  if (decision) {
    j["decision"] = *decision;
  } else {
    j["decision"] = nullptr;
  }
  return j.dump(2);
}

LocationTestSeries location_test_series(const LossModel& model, const Dataset& data,
                                        const VectorXd& theta1,
                                        const LocationTestOptions& options) {
  model.validate(data);
  if (options.b < 1) throw UsageError("location test needs b >= 1 replicates");
  model.manifold()->require_feasible(theta1);

  const auto man1 = model.manifold()->with_anchor(theta1);
  const LossModel model1 = model.with_manifold(man1);
  const int p = man1->dim();
  const int n = data.n();

  NewtonConfig stage1;
  stage1.max_iter = options.burn;
  stage1.grad_tol = options.grad_tol;
  stage1.rcond = options.rcond;
  const NewtonResult fit = newton_iterate(model1, data, theta1, stage1);

  LocationTestSeries series;
  series.theta_hat = fit.x;
  series.t_observed = VectorXd::Zero(p);
  series.t_replicates = MatrixXd::Zero(options.b, p);
  series.wald_replicates.assign(options.b, 0.0);

  ChartFlags eta_fl;
  series.eta_hat = man1->inverse_retract(theta1, fit.x, &eta_fl);
  series.flags.merge(eta_fl);
  if (eta_fl.any()) {
    // Estimate escaped the chart of the null: observed statistics take the
    // zero convention and the test never rejects.
    series.sigma_phi = MatrixXd::Zero(p, p);
    series.zero_flag_count = options.b;
    return series;
  }

  const SandwichCovariance sig =
      sandwich_fixed_chart(model1, data, theta1, series.eta_hat, options.rcond);
  series.sigma_phi = sig.sigma;
  for (int jc = 0; jc < p; ++jc) {
    const double var = sig.sigma(jc, jc);
    series.t_observed(jc) = var > 0.0 ? series.eta_hat(jc) / std::sqrt(var) : 0.0;
    if (var <= 0.0) series.flags.zero_variance = true;
  }
  series.wald_observed = pinv_quadratic(sig.sigma, series.eta_hat, options.rcond);

  const auto man_hat = model.manifold()->with_anchor(fit.x);
  const LossModel model_hat = model.with_manifold(man_hat);
  NewtonConfig two_step;
  two_step.max_iter = 2;
  two_step.grad_tol = -1.0;
  two_step.rcond = options.rcond;

  std::vector<char> flagged(options.b, 0);
  for_each_index(options.b, options.threads, [&](int i) {
    std::vector<int> idx;
    resample_indices(options.seed, static_cast<std::uint64_t>(i), n, idx);
    const Dataset rd = resample(data, idx);
    try {
      const NewtonResult rep = newton_iterate(model_hat, rd, fit.x, two_step);
      if (rep.flags.any()) {
        flagged[i] = 1;
        return;
      }
      ChartFlags fl;
      const VectorXd eta_star = man1->inverse_retract(theta1, rep.x, &fl);
      if (fl.any()) {
        flagged[i] = 1;
        return;
      }
      const SandwichCovariance sig_star =
          sandwich_fixed_chart(model1, rd, theta1, eta_star, options.rcond);
      const VectorXd d = eta_star - series.eta_hat;
      bool any_zero = false;
      for (int jc = 0; jc < p; ++jc) {
        const double var = sig_star.sigma(jc, jc);
        if (var > 0.0) {
          series.t_replicates(i, jc) = d(jc) / std::sqrt(var);
        } else {
          any_zero = true;
        }
      }
      series.wald_replicates[i] = pinv_quadratic(sig_star.sigma, d, options.rcond);
      if (any_zero) flagged[i] = 1;
    } catch (const NumericalError&) {
      series.t_replicates.row(i).setZero();
      series.wald_replicates[i] = 0.0;
      flagged[i] = 1;
    }
  });
  for (int i = 0; i < options.b; ++i) {
    if (flagged[i]) {
      series.t_replicates.row(i).setZero();
      series.wald_replicates[i] = 0.0;
    }
  }
  series.zero_flag_count = count_nonzero(flagged);
  return series;
}

LocationTestResult location_test_from_series(const LocationTestSeries& series, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0,1)");
  const int p = static_cast<int>(series.t_replicates.cols());
  const int b = static_cast<int>(series.t_replicates.rows());
  LocationTestResult res;
  res.alpha = alpha;
  res.t_observed = series.t_observed;
  res.t_critical_lo = VectorXd::Zero(p);
  res.t_critical_hi = VectorXd::Zero(p);
  res.reject_t.assign(p, false);
  res.b = b;
  res.zero_flag_count = series.zero_flag_count;
  std::vector<double> col(b);
  for (int jc = 0; jc < p; ++jc) {
    for (int i = 0; i < b; ++i) col[i] = series.t_replicates(i, jc);
    res.t_critical_lo(jc) = empirical_quantile(col, alpha / 2.0);
    res.t_critical_hi(jc) = empirical_quantile(col, 1.0 - alpha / 2.0);
    res.reject_t[jc] = series.t_observed(jc) < res.t_critical_lo(jc) ||
                       series.t_observed(jc) > res.t_critical_hi(jc);
  }
  res.wald_observed = series.wald_observed;
  res.wald_critical = empirical_quantile(series.wald_replicates, 1.0 - alpha);
  res.reject_wald = series.wald_observed > res.wald_critical;
  return res;
}

LocationTestResult location_test(const LossModel& model, const Dataset& data,
                                 const VectorXd& theta1, const LocationTestOptions& options) {
  return location_test_from_series(location_test_series(model, data, theta1, options),
                                   options.alpha);
}

std::string location_test_to_json(const LocationTestResult& result) {
  nlohmann::json j;
  j["kind"] = "location-test";
  j["alpha"] = result.alpha;
  j["t_observed"] = std::vector<double>(result.t_observed.data(),
                                        result.t_observed.data() + result.t_observed.size());
  j["t_critical_lo"] = std::vector<double>(
      result.t_critical_lo.data(), result.t_critical_lo.data() + result.t_critical_lo.size());
  j["t_critical_hi"] = std::vector<double>(
      result.t_critical_hi.data(), result.t_critical_hi.data() + result.t_critical_hi.size());
  j["reject_t"] = result.reject_t;
  j["wald_observed"] = result.wald_observed;
  j["wald_critical"] = result.wald_critical;
  j["reject_wald"] = result.reject_wald;
  j["b"] = result.b;
  j["flags"] = {{"zero_flag_count", result.zero_flag_count}};
  return j.dump(2);
}

}  // namespace minfer
