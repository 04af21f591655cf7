#include "minfer/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <boost/math/distributions/chi_squared.hpp>
#include <json.hpp>

#include "minfer/parallel.hpp"
#include "minfer/rng.hpp"
#include "minfer/text_format.hpp"

namespace minfer {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint64_t setting_id(Setting s) { return static_cast<std::uint64_t>(s) + 1; }

/* Per-n root so every study draws distinct, threading-independent streams. */
std::uint64_t n_root(const ExperimentConfig& config, int n) {
  return derive_seed(config.seed, streams::kEpoch, setting_id(config.setting) * 4096 +
                                                       static_cast<std::uint64_t>(n));
}

void check_config(const ExperimentConfig& config) {
  if (config.n_values.empty()) throw UsageError("no sample sizes configured");
  for (int n : config.n_values) {
    if (n < 10) throw UsageError("n must be at least 10");
  }
  if (config.epochs < 1) throw UsageError("epochs must be at least 1");
  if (config.num_seeds < 1) throw UsageError("num_seeds must be at least 1");
  for (double lvl : config.levels) {
    if (!(lvl > 0.0 && lvl < 1.0)) throw UsageError("levels must lie in (0,1)");
  }
}

double empirical_cdf_at(const std::vector<double>& sorted, double x) {
  return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin()) /
         static_cast<double>(sorted.size());
}

std::ofstream open_table(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  return out;
}

}  // namespace

Setting parse_setting(const std::string& text) {
  if (text == "sphere") return Setting::Sphere;
  if (text == "stiefel") return Setting::Stiefel;
  if (text == "fixedrank") return Setting::FixedRank;
  if (text == "rank1tensor") return Setting::RankOneTensor;
  if (text == "barycenter") return Setting::Barycenter;
  throw UsageError("unknown setting '" + text +
                   "' (expected sphere|stiefel|fixedrank|rank1tensor|barycenter)");
}

std::string setting_name(Setting setting) {
  switch (setting) {
    case Setting::Sphere:
      return "sphere";
    case Setting::Stiefel:
      return "stiefel";
    case Setting::FixedRank:
      return "fixedrank";
    case Setting::RankOneTensor:
      return "rank1tensor";
    default:
      return "barycenter";
  }
}

ManifoldDescriptor setting_descriptor(Setting setting) {
  switch (setting) {
    case Setting::Sphere:
    case Setting::Barycenter:
      return sphere_descriptor(3);
    case Setting::Stiefel:
      return stiefel_descriptor(4, 2);
    case Setting::FixedRank:
      return fixed_rank_descriptor(2, 4, 4);
    default:
      return rank_one_tensor_descriptor({3, 3, 3});
  }
}

LossKind setting_loss(Setting setting) {
  return setting == Setting::Barycenter ? LossKind::SphereBarycenter
                                        : LossKind::GaussianLocation;
}

VectorXd ground_truth(Setting setting) {
  switch (setting) {
    case Setting::Sphere:
    case Setting::Barycenter: {
      VectorXd x(3);
      x << 0.0, 1.0, 0.0;
      return x;
    }
    case Setting::Stiefel: {
      const double s = 1.0 / std::sqrt(2.0);
      VectorXd x = VectorXd::Zero(8);  // 4x2 column-major
      x(0) = s;
      x(1) = s;
      x(4) = s;
      x(5) = -s;
      return x;
    }
    case Setting::FixedRank: {
      VectorXd x = VectorXd::Zero(16);  // 4x4 column-major
      x(0) = 5.0;
      x(5) = 1.0;
      return x;
    }
    default: {
      VectorXd x = VectorXd::Zero(27);  // e1 (x) e1 (x) e1 in R^{3x3x3}
      x(0) = 1.0;
      return x;
    }
  }
}

double default_noise_scale(Setting setting) {
  return setting == Setting::Sphere ? std::sqrt(2.0) : 1.0;
}

double resolve_noise(const ExperimentConfig& config) {
  return config.noise_scale >= 0.0 ? config.noise_scale : default_noise_scale(config.setting);
}

int resolve_b(const ExperimentConfig& config, int n) {
  return config.b > 0 ? config.b : std::min(1000 * n, 50000);
}

Dataset simulate_gaussian_dataset(const VectorXd& theta0, int n, std::uint64_t seed,
                                  double noise_scale) {
  if (n < 1) throw UsageError("dataset needs n >= 1");
  RngStream rng(seed, streams::kDataset);
  Dataset data;
  data.samples.resize(theta0.size(), n);
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < theta0.size(); ++j) {
      data.samples(j, i) = theta0(j) + noise_scale * rng.normal();
    }
  }
  return data;
}

Dataset simulate_dataset(Setting setting, int n, std::uint64_t seed, double noise_scale) {
  if (setting != Setting::Barycenter) {
    const double scale = noise_scale >= 0.0 ? noise_scale : default_noise_scale(setting);
    return simulate_gaussian_dataset(ground_truth(setting), n, seed, scale);
  }
  if (n < 1) throw UsageError("dataset needs n >= 1");
  RngStream rng(seed, streams::kDataset);
  Dataset data;
  data.samples.resize(3, n);
  for (int i = 0; i < n; ++i) {
    const double az = 2.0 * kPi * rng.uniform();
    const double polar = rng.beta22();  // radians; keeps the design in one hemisphere
    data.samples(0, i) = std::cos(az) * std::sin(polar);
    data.samples(1, i) = std::cos(polar);
    data.samples(2, i) = std::sin(az) * std::sin(polar);
  }
  return data;
}

VectorXd default_initializer(const Manifold& manifold, const Dataset& data) {
  return manifold.project(data.samples.rowwise().mean());
}

double cdf_error(const std::vector<double>& samples,
                 const std::function<double(double)>& reference_cdf,
                 const std::vector<double>& grid) {
  if (grid.empty()) throw UsageError("cdf error needs a nonempty grid");
  if (samples.empty()) throw UsageError("cdf error needs samples");
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  double sup = 0.0;
  for (double x : grid) {
    sup = std::max(sup, std::abs(empirical_cdf_at(sorted, x) - reference_cdf(x)));
  }
  return sup;
}

double cdf_error(const std::vector<double>& samples, const std::vector<double>& reference_samples,
                 const std::vector<double>& grid) {
  if (reference_samples.empty()) throw UsageError("cdf error needs reference samples");
  std::vector<double> ref = reference_samples;
  std::sort(ref.begin(), ref.end());
  return cdf_error(
      samples, [&ref](double x) { return empirical_cdf_at(ref, x); }, grid);
}

double ks_distance(const std::vector<double>& samples,
                   const std::function<double(double)>& reference_cdf) {
  if (samples.empty()) throw UsageError("ks distance needs samples");
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  const double b = static_cast<double>(sorted.size());
  double sup = 0.0;
  for (size_t i = 0; i < sorted.size(); ++i) {
    const double f = reference_cdf(sorted[i]);
    sup = std::max(sup, std::abs(static_cast<double>(i + 1) / b - f));
    sup = std::max(sup, std::abs(static_cast<double>(i) / b - f));
  }
  return sup;
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

std::vector<double> wald_grid() {
  std::vector<double> g(8);
  for (int i = 0; i < 8; ++i) g[i] = static_cast<double>(i + 1);
  return g;
}

std::vector<double> t_grid() {
  std::vector<double> g(21);
  for (int s = -10; s <= 10; ++s) g[static_cast<size_t>(s + 10)] = 0.2 * s;
  return g;
}

std::vector<Type1Row> run_type1_table(const ExperimentConfig& config) {
  check_config(config);
  if (config.setting != Setting::Sphere) {
    throw UsageError("type-1 table is defined for the sphere setting");
  }
  const VectorXd theta0 = ground_truth(config.setting);
  const double noise = resolve_noise(config);
  const auto base_manifold = make_manifold(setting_descriptor(config.setting), theta0);
  const LossModel model(setting_loss(config.setting), base_manifold);

  std::vector<Type1Row> rows;
  for (int n : config.n_values) {
    const std::uint64_t root = n_root(config, n);
    const int b = resolve_b(config, n);
    const int L = static_cast<int>(config.levels.size());
    // acceptance slots: epoch-major, (level, statistic) minor; 1 = accept
    std::vector<char> accept(static_cast<size_t>(config.epochs) * L * 2, 0);
    for_each_index(config.epochs, config.threads, [&](int e) {
      const Dataset data = simulate_dataset(
          config.setting, n, derive_seed(root, streams::kDataset, static_cast<std::uint64_t>(e)),
          noise);
      LocationTestOptions opts;
      opts.b = b;
      opts.seed = derive_seed(root, streams::kResample, static_cast<std::uint64_t>(e));
      opts.threads = 1;  // epochs carry the parallelism
      const LocationTestSeries series = location_test_series(model, data, theta0, opts);
      for (int l = 0; l < L; ++l) {
        const LocationTestResult res =
            location_test_from_series(series, 1.0 - config.levels[static_cast<size_t>(l)]);
        accept[(static_cast<size_t>(e) * L + l) * 2 + 0] = res.reject_t[0] ? 0 : 1;
        accept[(static_cast<size_t>(e) * L + l) * 2 + 1] = res.reject_wald ? 0 : 1;
      }
    });
    for (int l = 0; l < L; ++l) {
      for (int s = 0; s < 2; ++s) {
        long hits = 0;
        for (int e = 0; e < config.epochs; ++e) {
          hits += accept[(static_cast<size_t>(e) * L + l) * 2 + s];
        }
        Type1Row row;
        row.n = n;
        row.level = config.levels[static_cast<size_t>(l)];
        row.statistic = s == 0 ? "t" : "wald";
        row.acceptance = static_cast<double>(hits) / config.epochs;
        row.epochs = config.epochs;
        row.b = b;
        row.seed = config.seed;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

void write_type1_csv(const std::string& path, const std::vector<Type1Row>& rows) {
  auto out = open_table(path);
  out << "n,level,statistic,acceptance,epochs,b,seed\n";
  for (const auto& r : rows) {
    out << r.n << ',' << format_double(r.level) << ',' << r.statistic << ','
        << format_double(r.acceptance) << ',' << r.epochs << ',' << r.b << ',' << r.seed << '\n';
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

std::vector<CdfErrorRow> run_cdf_study(const ExperimentConfig& config) {
  check_config(config);
  if (config.setting == Setting::Sphere) {
    throw UsageError("the CDF study covers the non-sphere settings");
  }
  const VectorXd theta0 = ground_truth(config.setting);
  const double noise = resolve_noise(config);
  const auto base_manifold = make_manifold(setting_descriptor(config.setting), theta0);
  const LossModel model(setting_loss(config.setting), base_manifold);
  const int dim = base_manifold->dim();
  const VectorXd a = VectorXd::Unit(dim, 0);
  const std::vector<double> wgrid = wald_grid();
  const std::vector<double> tgrid = t_grid();
  const boost::math::chi_squared chi2(dim);
  const auto chi2_cdf = [&chi2](double x) {
    return x <= 0.0 ? 0.0 : boost::math::cdf(chi2, x);
  };

  NewtonConfig fit_config;  // defaults: burn 20, tol 1e-12

  std::vector<CdfErrorRow> rows;
  for (int n : config.n_values) {
    const std::uint64_t root = n_root(config, n);
    const int b = resolve_b(config, n);

    // Monte-Carlo reference statistics over fresh datasets, shared by all
    // study repetitions at this (setting, n).
    std::vector<double> mc_wald(static_cast<size_t>(config.epochs), 0.0);
    std::vector<double> mc_t(static_cast<size_t>(config.epochs), 0.0);
    for_each_index(config.epochs, config.threads, [&](int e) {
      const Dataset data = simulate_dataset(
          config.setting, n, derive_seed(root, streams::kDataset, static_cast<std::uint64_t>(e)),
          noise);
      const VectorXd x0 = default_initializer(*base_manifold, data);
      const LossModel m0 = model.with_manifold(base_manifold->with_anchor(x0));
      const NewtonResult fit = newton_iterate(m0, data, x0, fit_config);
      const auto man_hat = base_manifold->with_anchor(fit.x);
      const LossModel m_hat = model.with_manifold(man_hat);
      const SandwichCovariance sig = sandwich(m_hat, data, fit.x);
      ChartFlags fl;
      mc_wald[static_cast<size_t>(e)] = wald_statistic(*man_hat, fit.x, theta0, sig, 1e-12, &fl);
      ChartFlags fl_t;
      mc_t[static_cast<size_t>(e)] =
          intrinsic_t_statistic(*man_hat, fit.x, theta0, sig, a, false, 1e-12, &fl_t);
    });
    std::vector<double> mc_wald_sorted = mc_wald, mc_t_sorted = mc_t;
    std::sort(mc_wald_sorted.begin(), mc_wald_sorted.end());
    std::sort(mc_t_sorted.begin(), mc_t_sorted.end());
    const auto mc_wald_cdf = [&](double x) { return empirical_cdf_at(mc_wald_sorted, x); };
    const auto mc_t_cdf = [&](double x) { return empirical_cdf_at(mc_t_sorted, x); };

    const double chisq_error = cdf_error(mc_wald, chi2_cdf, wgrid);
    const double normal_error = cdf_error(mc_t, standard_normal_cdf, tgrid);

    for (int k = 0; k < config.num_seeds; ++k) {
      const Dataset data = simulate_dataset(
          config.setting, n, derive_seed(root, streams::kInit, static_cast<std::uint64_t>(k)),
          noise);
      const VectorXd x0 = default_initializer(*base_manifold, data);
      BootstrapOptions opts;
      opts.b = b;
      opts.seed = derive_seed(root, streams::kResample, static_cast<std::uint64_t>(k));
      opts.threads = config.threads;
      const BootstrapBundle bundle =
          fit_and_bootstrap(model.with_manifold(base_manifold), data, x0, opts);
      const JointSeries joint = bootstrap_joint_series(bundle, a, config.threads);

      const auto add_row = [&](const std::string& method, double err) {
        CdfErrorRow row;
        row.setting = setting_name(config.setting);
        row.n = n;
        row.method = method;
        row.error = err;
        row.log_error = std::log(std::max(err, 1e-300));
        row.sqrtn_error = std::sqrt(static_cast<double>(n)) * err;
        row.seed = static_cast<std::uint64_t>(k);
        rows.push_back(row);
      };
      add_row("wald_studentized", cdf_error(joint.wald_studentized.values, mc_wald_cdf, wgrid));
      add_row("wald_nonstudentized",
              cdf_error(joint.wald_nonstudentized.values, mc_wald_cdf, wgrid));
      add_row("wald_chisq", chisq_error);
      add_row("t_studentized", cdf_error(joint.t_studentized.values, mc_t_cdf, tgrid));
      add_row("t_nonstudentized", cdf_error(joint.t_nonstudentized.values, mc_t_cdf, tgrid));
      add_row("t_normal", normal_error);
    }
  }
  return rows;
}

void write_cdf_csv(const std::string& path, const std::vector<CdfErrorRow>& rows) {
  auto out = open_table(path);
  out << "setting,n,method,error,log_error,sqrtn_error,seed\n";
  for (const auto& r : rows) {
    out << r.setting << ',' << r.n << ',' << r.method << ',' << format_double(r.error) << ','
        << format_double(r.log_error) << ',' << format_double(r.sqrtn_error) << ',' << r.seed
        << '\n';
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

std::vector<BarycenterRow> run_barycenter_study(const ExperimentConfig& config) {
  check_config(config);
  if (config.setting != Setting::Barycenter) {
    throw UsageError("the barycenter study needs the barycenter setting");
  }
  const VectorXd theta0 = ground_truth(config.setting);
  const auto base_manifold = make_manifold(setting_descriptor(config.setting), theta0);
  const LossModel model(setting_loss(config.setting), base_manifold);

  std::vector<BarycenterRow> rows;
  for (int n : config.n_values) {
    const std::uint64_t root = n_root(config, n);
    std::vector<double> dist(static_cast<size_t>(config.epochs), 0.0);
    std::vector<double> grad(static_cast<size_t>(config.epochs), 0.0);
    for_each_index(config.epochs, config.threads, [&](int k) {
      const Dataset data = simulate_dataset(
          config.setting, n, derive_seed(root, streams::kDataset, static_cast<std::uint64_t>(k)),
          -1.0);
      RngStream init_rng(derive_seed(root, streams::kInit, static_cast<std::uint64_t>(k)),
                         streams::kInit);
      VectorXd start = theta0;
      for (int j = 0; j < 3; ++j) start(j) += 0.1 * init_rng.normal();
      const VectorXd x0 = base_manifold->project(start);
      const LossModel m0 = model.with_manifold(base_manifold->with_anchor(x0));
      const NewtonResult fit = newton_iterate(m0, data, x0, NewtonConfig{});
      dist[static_cast<size_t>(k)] = base_manifold->distance(fit.x, theta0);
      grad[static_cast<size_t>(k)] = fit.grad_norms.back();
    });
    for (int k = 0; k < config.epochs; ++k) {
      BarycenterRow row;
      row.seed = static_cast<std::uint64_t>(k);
      row.n = n;
      row.dist = dist[static_cast<size_t>(k)];
      row.grad_norm = grad[static_cast<size_t>(k)];
      rows.push_back(row);
    }
  }
  return rows;
}

void write_barycenter_csv(const std::string& path, const std::vector<BarycenterRow>& rows) {
  auto out = open_table(path);
  out << "seed,n,dist,grad_norm\n";
  for (const auto& r : rows) {
    out << r.seed << ',' << r.n << ',' << format_double(r.dist) << ','
        << format_double(r.grad_norm) << '\n';
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

void write_manifest(const std::string& path, const ExperimentConfig& config,
                    const std::string& study) {
  nlohmann::json j;
  j["study"] = study;
  j["setting"] = setting_name(config.setting);
  j["n_values"] = config.n_values;
  std::vector<int> resolved;
  resolved.reserve(config.n_values.size());
  for (int n : config.n_values) resolved.push_back(resolve_b(config, n));
  j["b"] = resolved;
  j["epochs"] = config.epochs;
  j["seed"] = config.seed;
  if (config.setting == Setting::Barycenter) {
    j["noise_scale"] = nullptr;
  } else {
    j["noise_scale"] = resolve_noise(config);
  }
  j["levels"] = config.levels;
  j["num_seeds"] = config.num_seeds;
  if (study == "cdf") {
    j["reference_datasets"] = config.epochs;
    j["wald_grid"] = wald_grid();
    j["t_grid"] = t_grid();
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write failed for '" + path + "'");
}

}  // namespace minfer
