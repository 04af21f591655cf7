// Acceptance gate: every shipped behavior that matters gets one criterion and
// one [PASS]/[FAIL] line. Run with no arguments for all criteria, or pass
// criterion numbers (e.g. "acceptance 1 3 7") to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "minfer/experiments.hpp"
#include "minfer/linalg.hpp"
#include "minfer/newton.hpp"
#include "minfer/parallel.hpp"
#include "minfer/rng.hpp"

using namespace minfer;

namespace {

namespace fs = std::filesystem;

/* ---------- shared helpers ---------- */

VectorXd random_point(const ManifoldDescriptor& desc, RngStream& rng) {
  VectorXd w(desc.ambient_size());
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.normal();
  const auto scratch = make_manifold(desc, canonical_point(desc));
  return scratch->project(w);
}

VectorXd random_chart_vector(int dim, double max_norm, RngStream& rng) {
  VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.normal();
  v *= max_norm * rng.uniform() / v.norm();
  return v;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/* independent finite-difference oracles over the pulled-back loss */
VectorXd fd_grad_oracle(const LossModel& model, const Dataset& data, const VectorXd& x,
                        double h) {
  const auto& man = *model.manifold();
  const int p = man.dim();
  VectorXd g(p), v = VectorXd::Zero(p);
  for (int j = 0; j < p; ++j) {
    v(j) = h;
    const double up = model.loss_value(data, man.retract(x, v));
    v(j) = -h;
    const double dn = model.loss_value(data, man.retract(x, v));
    v(j) = 0.0;
    g(j) = (up - dn) / (2.0 * h);
  }
  return g;
}

MatrixXd fd_hess_oracle(const LossModel& model, const Dataset& data, const VectorXd& x,
                        double h) {
  const auto& man = *model.manifold();
  const int p = man.dim();
  MatrixXd H(p, p);
  VectorXd v = VectorXd::Zero(p);
  const auto L = [&](double a, double b, int j, int k) {
    v(j) += a;
    v(k) += b;
    const double val = model.loss_value(data, man.retract(x, v));
    v(j) -= a;
    v(k) -= b;
    return val;
  };
  for (int j = 0; j < p; ++j) {
    for (int k = 0; k < p; ++k) {
      H(j, k) =
          (L(h, h, j, k) - L(h, -h, j, k) - L(-h, h, j, k) + L(-h, -h, j, k)) / (4.0 * h * h);
    }
  }
  return H;
}

// dominant rank-one tensor approximation by alternating power iteration
VectorXd hopm_rank_one(const VectorXd& t, const std::vector<int>& dims) {
  const int k = static_cast<int>(dims.size());
  int size = 1;
  std::vector<int> strides(k);
  for (int j = 0; j < k; ++j) {
    strides[j] = size;
    size *= dims[j];
  }
  std::vector<VectorXd> u(k);
  for (int j = 0; j < k; ++j) u[j] = VectorXd::Ones(dims[j]) / std::sqrt(double(dims[j]));
  const auto contract_but = [&](int skip) {
    VectorXd out = VectorXd::Zero(dims[skip]);
    for (int f = 0; f < size; ++f) {
      double w = t(f);
      int row = 0;
      for (int j = 0; j < k; ++j) {
        const int ij = (f / strides[j]) % dims[j];
        if (j == skip) {
          row = ij;
        } else {
          w *= u[j](ij);
        }
      }
      out(row) += w;
    }
    return out;
  };
  double scale = 0.0;
  for (int sweep = 0; sweep < 300; ++sweep) {
    for (int j = 0; j < k; ++j) {
      VectorXd z = contract_but(j);
      scale = z.norm();
      u[j] = z / scale;
    }
  }
  VectorXd out(1);
  out(0) = scale;
  for (int j = 0; j < k; ++j) {
    const int cur = static_cast<int>(out.size());
    VectorXd next(cur * dims[j]);
    for (int a = 0; a < dims[j]; ++a) next.segment(a * cur, cur) = u[j](a) * out;
    out.swap(next);
  }
  return out;
}

/* ---------- criteria ---------- */

bool criterion_geometry() {
  const std::vector<ManifoldDescriptor> descs{
      sphere_descriptor(3), stiefel_descriptor(4, 2), fixed_rank_descriptor(2, 4, 4),
      rank_one_tensor_descriptor({3, 3, 3})};
  bool ok = true;
  for (const auto& desc : descs) {
    const double trip_tol = desc.name.rfind("stiefel", 0) == 0 ? 1e-6 : 1e-8;
    const bool exact_normal =
        desc.name.rfind("fixedrank", 0) == 0 || desc.name.rfind("rank1tensor", 0) == 0;
    double worst_trip = 0.0, worst_gram = 0.0, worst_normal = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      RngStream rng(1000 + trial, streams::kTest);
      const VectorXd x = random_point(desc, rng);
      const auto man = make_manifold(desc, x);
      const VectorXd v = random_chart_vector(man->dim(), 0.1, rng);
      const VectorXd y = man->retract(x, v);
      worst_trip = std::max(worst_trip, (man->inverse_retract(x, y) - v).norm());
      const MatrixXd B = man->chart_basis(x);
      for (int i = 0; i < man->dim(); ++i) {
        for (int j = 0; j < man->dim(); ++j) {
          const double g = man->metric_inner(x, B.col(i), B.col(j));
          worst_gram = std::max(worst_gram, std::abs(g - (i == j ? 1.0 : 0.0)));
        }
      }
      if (exact_normal) {
        worst_normal = std::max(worst_normal, man->normal_space_residual(x, y));
      }
    }
    std::cout << "  " << desc.name << ": round trip " << worst_trip << " (tol " << trip_tol
              << "), basis gram " << worst_gram;
    if (exact_normal) std::cout << ", normal residual " << worst_normal;
    std::cout << "\n";
    ok = ok && worst_trip <= trip_tol && worst_gram <= 1e-10;
    if (exact_normal) ok = ok && worst_normal <= 1e-8;
  }

  // sphere second-order ratio: the retraction defect shrinks cubically
  double ratio_lo = 1.0, ratio_hi = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    RngStream rng(2000 + trial, streams::kTest);
    const VectorXd x = random_point(sphere_descriptor(3), rng);
    const auto man = make_manifold(sphere_descriptor(3), x);
    VectorXd u = random_chart_vector(2, 1.0, rng);
    u /= u.norm();
    const VectorXd w = man->chart_basis(x) * u;  // ambient unit tangent
    const auto err = [&](double t) -> double {
      const VectorXd geo = std::cos(t) * x + std::sin(t) * w;
      return (man->retract(x, t * u) - geo).norm();
    };
    const double ratio = err(0.01) / err(0.1);
    ratio_lo = std::min(ratio_lo, ratio);
    ratio_hi = std::max(ratio_hi, ratio);
  }
  std::cout << "  sphere second-order ratio range [" << ratio_lo << ", " << ratio_hi << "]\n";
  return ok && ratio_lo >= 1e-4 && ratio_hi <= 1e-2;
}

bool criterion_derivatives() {
  struct Pair {
    ManifoldDescriptor desc;
    LossKind loss;
  };
  const std::vector<Pair> pairs{{sphere_descriptor(3), LossKind::GaussianLocation},
                                {stiefel_descriptor(4, 2), LossKind::GaussianLocation},
                                {fixed_rank_descriptor(2, 4, 4), LossKind::GaussianLocation},
                                {rank_one_tensor_descriptor({3, 3, 3}),
                                 LossKind::GaussianLocation},
                                {sphere_descriptor(3), LossKind::SphereBarycenter}};
  bool ok = true;
  for (const auto& pair : pairs) {
    double worst_grad = 0.0, worst_hess = 0.0, worst_sym = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      RngStream rng(3000 + trial, streams::kTest);
      const VectorXd x = random_point(pair.desc, rng);
      const auto man = make_manifold(pair.desc, x);
      const LossModel model(pair.loss, man);

      Dataset data;
      const int n = 25;
      data.samples.resize(x.size(), n);
      for (int i = 0; i < n; ++i) {
        VectorXd s = x;
        for (Eigen::Index j = 0; j < s.size(); ++j) s(j) += 0.3 * rng.normal();
        if (pair.loss == LossKind::SphereBarycenter) s /= s.norm();
        data.samples.col(i) = s;
      }

      const VectorXd g = model.chart_gradient(data, x);
      const VectorXd g_fd = fd_grad_oracle(model, data, x, 1e-5);
      worst_grad = std::max(worst_grad, (g - g_fd).norm() / (1.0 + g.norm()));

      const MatrixXd H = model.chart_hessian(data, x);
      const MatrixXd H_fd = fd_hess_oracle(model, data, x, 1e-4);
      worst_hess = std::max(worst_hess, (H - H_fd).norm() / (1.0 + H.norm()));

      const MatrixXd Hu = model.chart_hessian_unsymmetrized(data, x);
      worst_sym = std::max(worst_sym, (Hu - Hu.transpose()).norm() / (1.0 + Hu.norm()));
    }
    std::cout << "  " << pair.desc.name << " x "
              << (pair.loss == LossKind::GaussianLocation ? "gaussian" : "barycenter")
              << ": grad err " << worst_grad << ", hess err " << worst_hess << ", asymmetry "
              << worst_sym << "\n";
    ok = ok && worst_grad <= 1e-5 && worst_hess <= 1e-4 && worst_sym <= 1e-10;
  }
  return ok;
}

bool criterion_estimator() {
  bool ok = true;
  const int n = 200;
  for (Setting setting : {Setting::Sphere, Setting::Stiefel, Setting::FixedRank,
                          Setting::RankOneTensor}) {
    const Dataset data = simulate_dataset(setting, n, 77);
    const auto desc = setting_descriptor(setting);
    const auto scratch = make_manifold(desc, canonical_point(desc));
    const VectorXd mean = data.samples.rowwise().mean();
    const VectorXd x0 = scratch->project(mean);
    const LossModel model(setting_loss(setting), scratch->with_anchor(x0));
    const NewtonResult fit = newton_iterate(model, data, x0);

    VectorXd oracle;
    switch (setting) {
      case Setting::Sphere:
        oracle = mean / mean.norm();
        break;
      case Setting::Stiefel: {
        const Eigen::Map<const MatrixXd> M(mean.data(), 4, 2);
        const MatrixXd P = polar_factor(M);
        oracle = Eigen::Map<const VectorXd>(P.data(), 8);
        break;
      }
      case Setting::FixedRank: {
        const Eigen::Map<const MatrixXd> M(mean.data(), 4, 4);
        Eigen::JacobiSVD<MatrixXd> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const MatrixXd T = svd.matrixU().leftCols(2) *
                           svd.singularValues().head(2).asDiagonal() *
                           svd.matrixV().leftCols(2).transpose();
        oracle = Eigen::Map<const VectorXd>(T.data(), 16);
        break;
      }
      default:
        oracle = hopm_rank_one(mean, {3, 3, 3});
        break;
    }
    const double dist = scratch->distance(fit.x, oracle);
    std::cout << "  " << setting_name(setting) << ": fit vs closed form " << dist << "\n";
    ok = ok && dist <= 1e-8;
  }

  // quadratic contraction on the sphere from a 30-degree offset start
  const Dataset data = simulate_dataset(Setting::Barycenter, n, 78);
  VectorXd x0(3);
  x0 << std::sin(0.5), std::cos(0.5), 0.0;
  const auto man = make_manifold(sphere_descriptor(3), x0);
  NewtonConfig cfg;
  cfg.max_iter = 25;
  cfg.grad_tol = 1e-15;
  const NewtonResult fit =
      newton_iterate(LossModel(LossKind::SphereBarycenter, man), data, x0, cfg);
  double contraction = 0.0;
  int pairs = 0;
  for (size_t k = 0; k + 1 < fit.grad_norms.size(); ++k) {
    const double g0 = fit.grad_norms[k], g1 = fit.grad_norms[k + 1];
    if (g0 > 1e-7 && g0 < 0.5) {
      contraction = std::max(contraction, g1 / (g0 * g0));
      ++pairs;
    }
  }
  std::cout << "  sphere contraction constant " << contraction << " over " << pairs
            << " steps, final grad " << fit.grad_norms.back() << "\n";
  return ok && pairs >= 1 && contraction <= 10.0;
}

bool criterion_type1_table() {
  ExperimentConfig config;
  config.setting = Setting::Sphere;
  config.n_values = {40, 160};
  config.epochs = 500;
  config.b = 2000;
  config.levels = {0.9};
  config.seed = 0;
  config.threads = hardware_threads();
  const auto rows = run_type1_table(config);

  const auto lookup = [&](int n, const std::string& stat) {
    for (const auto& r : rows) {
      if (r.n == n && r.statistic == stat) return r.acceptance;
    }
    return -1.0;
  };
  struct Target {
    int n;
    const char* stat;
    double value;
  };
  const std::vector<Target> targets{
      {40, "t", 0.9231}, {160, "t", 0.9057}, {40, "wald", 0.9607}, {160, "wald", 0.9210}};
  bool ok = true;
  for (const auto& t : targets) {
    const double got = lookup(t.n, t.stat);
    const double gap = std::abs(got - t.value);
    std::cout << "  n=" << t.n << " " << t.stat << ": acceptance " << got << " vs " << t.value
              << " (gap " << gap << ")\n";
    ok = ok && gap <= 0.03;
  }
  return ok;
}

bool criterion_cdf_trend() {
  bool decreasing_all = true;
  int studentized_wins = 0;
  for (Setting setting : {Setting::Stiefel, Setting::FixedRank, Setting::RankOneTensor}) {
    ExperimentConfig config;
    config.setting = setting;
    config.n_values = {40, 160};
    config.epochs = 500;
    config.num_seeds = 5;
    config.b = 0;  // per-n rule: min(1000 n, 50000)
    config.seed = 0;
    config.threads = hardware_threads();
    const auto rows = run_cdf_study(config);

    const auto med = [&](const std::string& method, int n, bool sqrtn) {
      std::vector<double> vals;
      for (const auto& r : rows) {
        if (r.method == method && r.n == n) vals.push_back(sqrtn ? r.sqrtn_error : r.error);
      }
      return median(vals);
    };
    const double w40 = med("wald_studentized", 40, true);
    const double w160 = med("wald_studentized", 160, true);
    const double t40 = med("t_studentized", 40, true);
    const double t160 = med("t_studentized", 160, true);
    const double e_st = med("wald_studentized", 160, false);
    const double e_non = med("wald_nonstudentized", 160, false);
    std::cout << "  " << setting_name(setting) << ": sqrt(n) wald error " << w40 << " -> "
              << w160 << ", t error " << t40 << " -> " << t160 << "; at n=160 studentized "
              << e_st << (e_st <= e_non ? " <= " : " > ") << e_non << " non-studentized\n";
    decreasing_all = decreasing_all && w160 < w40;
    studentized_wins += e_st <= e_non ? 1 : 0;
  }
  std::cout << "  studentized at n=160 no worse in " << studentized_wins << "/3 settings\n";
  return decreasing_all && studentized_wins >= 2;
}

bool criterion_counterexample() {
  const int n = 1000, b = 10000;
  const auto run_ks = [&](const VectorXd& theta0, std::uint64_t seed) {
    const Dataset data = simulate_gaussian_dataset(theta0, n, seed, 1.0);
    const auto desc = fixed_rank_descriptor(2, 4, 4);
    const auto scratch = make_manifold(desc, canonical_point(desc));
    const VectorXd x0 = scratch->project(data.samples.rowwise().mean());
    const LossModel model(LossKind::GaussianLocation, scratch->with_anchor(x0));
    BootstrapOptions opts;
    opts.b = b;
    opts.seed = seed + 1;
    opts.threads = hardware_threads();
    const BootstrapBundle bundle = fit_and_bootstrap(model, data, x0, opts);
    const VectorXd a = VectorXd::Unit(bundle.model.manifold()->dim(), 0);
    const StatisticSeries series =
        bootstrap_intrinsic_t_series(bundle, a, hardware_threads());
    return ks_distance(series.values, standard_normal_cdf);
  };

  VectorXd degenerate = VectorXd::Zero(16);
  degenerate(0) = 1.0;
  degenerate(5) = 1.0;  // diag(1,1,0,0): equal top singular values
  const double ks_bad = run_ks(degenerate, 901);
  const double ks_good = run_ks(ground_truth(Setting::FixedRank), 903);
  std::cout << "  KS vs normal: equal spectrum " << ks_bad << " (want > 0.1), distinct "
            << ks_good << " (want < 0.05)\n";
  return ks_bad > 0.1 && ks_good < 0.05;
}

bool criterion_determinism() {
  const fs::path base = fs::temp_directory_path() / "minfer_acceptance_c7";
  fs::remove_all(base);
  const fs::path d1 = base / "t1", d8 = base / "t8";
  fs::create_directories(d1);
  fs::create_directories(d8);

  const auto run_all = [&](const fs::path& dir, int threads) {
    ExperimentConfig t1;
    t1.setting = Setting::Sphere;
    t1.n_values = {20};
    t1.epochs = 4;
    t1.b = 40;
    t1.seed = 11;
    t1.threads = threads;
    write_type1_csv((dir / "type1.csv").string(), run_type1_table(t1));
    write_manifest((dir / "type1_manifest.json").string(), t1, "type1");

    ExperimentConfig cdf;
    cdf.setting = Setting::Stiefel;
    cdf.n_values = {20};
    cdf.epochs = 5;
    cdf.num_seeds = 2;
    cdf.b = 30;
    cdf.seed = 12;
    cdf.threads = threads;
    write_cdf_csv((dir / "cdf_error.csv").string(), run_cdf_study(cdf));
    write_manifest((dir / "cdf_manifest.json").string(), cdf, "cdf");

    ExperimentConfig bc;
    bc.setting = Setting::Barycenter;
    bc.n_values = {30};
    bc.epochs = 3;
    bc.seed = 13;
    bc.threads = threads;
    write_barycenter_csv((dir / "barycenter.csv").string(), run_barycenter_study(bc));
    write_manifest((dir / "barycenter_manifest.json").string(), bc, "barycenter");
  };
  run_all(d1, 1);
  run_all(d8, 8);

  bool ok = true;
  for (const char* name : {"type1.csv", "type1_manifest.json", "cdf_error.csv",
                           "cdf_manifest.json", "barycenter.csv", "barycenter_manifest.json"}) {
    const bool same = slurp(d1 / name) == slurp(d8 / name);
    std::cout << "  " << name << ": " << (same ? "byte-identical" : "DIFFERS") << "\n";
    ok = ok && same;
  }
  fs::remove_all(base);
  return ok;
}

bool criterion_barycenter() {
  ExperimentConfig config;
  config.setting = Setting::Barycenter;
  config.n_values = {400};
  config.epochs = 50;
  config.seed = 0;
  config.threads = hardware_threads();
  const auto rows = run_barycenter_study(config);

  int close = 0;
  double worst_grad = 0.0, worst_dist = 0.0;
  for (const auto& r : rows) {
    close += r.dist <= 0.1 ? 1 : 0;
    worst_grad = std::max(worst_grad, r.grad_norm);
    worst_dist = std::max(worst_dist, r.dist);
  }
  std::cout << "  dist <= 0.1 in " << close << "/50 runs (max dist " << worst_dist
            << "), max grad " << worst_grad << "\n";
  return close >= 45 && worst_grad <= 1e-10;
}

struct Criterion {
  int id;
  const char* name;
  std::function<bool()> run;
  double limit_seconds;  // 0 = reported only
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "geometry suite", criterion_geometry, 30.0},
      {2, "derivative suite", criterion_derivatives, 60.0},
      {3, "estimator oracle suite", criterion_estimator, 60.0},
      {4, "type-1 table reproduction", criterion_type1_table, 0.0},
      {5, "cdf error trend", criterion_cdf_trend, 0.0},
      {6, "degenerate chart counterexample", criterion_counterexample, 0.0},
      {7, "thread-count determinism", criterion_determinism, 0.0},
      {8, "barycenter sanity", criterion_barycenter, 0.0},
  };

  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) {
      continue;
    }
    std::cout << "criterion " << c.id << ": " << c.name << "\n" << std::flush;
    const auto start = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = c.run();
    } catch (const std::exception& e) {
      std::cout << "  exception: " << e.what() << "\n";
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_seconds > 0.0 && seconds > c.limit_seconds) {
      std::cout << "  over time budget: " << seconds << " s > " << c.limit_seconds << " s\n";
      ok = false;
    }
    std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << c.id << ": " << c.name << " ("
              << seconds << " s)\n"
              << std::flush;
    failures += ok ? 0 : 1;
  }
  if (failures) std::cout << failures << " criterion(s) failed\n";
  return failures ? 1 : 0;
}
