#ifndef MINFER_EXPERIMENTS_H
#define MINFER_EXPERIMENTS_H

#include <cstdint>
#include <string>
#include <vector>

#include "minfer/inference.hpp"

namespace minfer {

enum class Setting { Sphere, Stiefel, FixedRank, RankOneTensor, Barycenter };

Setting parse_setting(const std::string& text);
std::string setting_name(Setting setting);

ManifoldDescriptor setting_descriptor(Setting setting);
LossKind setting_loss(Setting setting);
VectorXd ground_truth(Setting setting);

/* Entry standard deviation for the Gaussian settings: sqrt(2) for the sphere
 * setting, 1 elsewhere; unused by the barycenter design. */
double default_noise_scale(Setting setting);

/* Gaussian settings: theta0 + noise_scale * standard normal entries.
 * Barycenter: azimuth uniform on [0, 2pi), polar angle Beta(2,2) in radians,
 * sample (cos az sin polar, cos polar, sin az sin polar). One counter-based
 * stream per dataset, so draws are independent of threading. */
Dataset simulate_dataset(Setting setting, int n, std::uint64_t seed, double noise_scale = -1.0);
Dataset simulate_gaussian_dataset(const VectorXd& theta0, int n, std::uint64_t seed,
                                  double noise_scale);

/* Feasible starting point: projection of the sample mean. */
VectorXd default_initializer(const Manifold& manifold, const Dataset& data);

/* sup over the grid of |F_hat(samples) - F_ref|. */
double cdf_error(const std::vector<double>& samples,
                 const std::function<double(double)>& reference_cdf,
                 const std::vector<double>& grid);
double cdf_error(const std::vector<double>& samples, const std::vector<double>& reference_samples,
                 const std::vector<double>& grid);

/* sup_x max(|F_hat(x) - F(x)|, |F_hat(x-) - F(x)|) over the sample points. */
double ks_distance(const std::vector<double>& samples,
                   const std::function<double(double)>& reference_cdf);
double standard_normal_cdf(double x);

std::vector<double> wald_grid();  // {1, ..., 8}
std::vector<double> t_grid();     // {0.2 s : s = -10..10}

struct ExperimentConfig {
  Setting setting = Setting::Sphere;
  std::vector<int> n_values = {40, 80, 160};
  int b = 0;          // 0 resolves to min(1000 n, 50000)
  int epochs = 30;    // type-1 trials; reference dataset count for the CDF study
  std::uint64_t seed = 0;
  double noise_scale = -1.0;  // negative resolves per setting
  std::vector<double> levels = {0.9, 0.95, 0.975};
  int num_seeds = 5;  // CDF study repetitions (rows per setting, n, method)
  int threads = 1;
};

int resolve_b(const ExperimentConfig& config, int n);
double resolve_noise(const ExperimentConfig& config);

struct Type1Row {
  int n = 0;
  double level = 0.0;
  std::string statistic;  // "t" (first chart coordinate, two-sided) or "wald"
  double acceptance = 0.0;
  int epochs = 0;
  int b = 0;
  std::uint64_t seed = 0;
};

/* Location test of theta1 = theta0 on the sphere setting, epochs independent
 * trials per n, acceptance rate per (n, level, statistic). */
std::vector<Type1Row> run_type1_table(const ExperimentConfig& config);
void write_type1_csv(const std::string& path, const std::vector<Type1Row>& rows);

struct CdfErrorRow {
  std::string setting;
  int n = 0;
  std::string method;
  double error = 0.0;
  double log_error = 0.0;
  double sqrtn_error = 0.0;
  std::uint64_t seed = 0;  // study repetition index
};

/* For each n: Monte-Carlo reference CDF of the Wald / first-coordinate t
 * statistics over `epochs` fresh datasets (shared across repetitions), then
 * per repetition one bundle whose resampled series yield the studentized and
 * non-studentized bootstrap CDFs; chi-square / normal reference rows round
 * out the six methods. */
std::vector<CdfErrorRow> run_cdf_study(const ExperimentConfig& config);
void write_cdf_csv(const std::string& path, const std::vector<CdfErrorRow>& rows);

struct BarycenterRow {
  std::uint64_t seed = 0;  // run index
  int n = 0;
  double dist = 0.0;       // geodesic distance of the fit to (0,1,0)
  double grad_norm = 0.0;  // chart gradient norm at the fit
};

std::vector<BarycenterRow> run_barycenter_study(const ExperimentConfig& config);
void write_barycenter_csv(const std::string& path, const std::vector<BarycenterRow>& rows);

/* Config echo for reruns; deliberately free of thread counts and timings so
 * reruns at any worker count emit identical bytes. */
void write_manifest(const std::string& path, const ExperimentConfig& config,
                    const std::string& study);

}  // namespace minfer

#endif
