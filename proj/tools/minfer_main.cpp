#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "minfer/experiments.hpp"
#include "minfer/parallel.hpp"
#include "minfer/text_format.hpp"

namespace {

using namespace minfer;

struct SimulateSpec {
  int n = 0;
  std::uint64_t seed = 0;
  double noise = -1.0;
};

SimulateSpec parse_simulate_spec(const std::string& text) {
  SimulateSpec spec;
  bool have_n = false;
  size_t pos = 0;
  while (pos < text.size()) {
    const size_t comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    const size_t eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("bad --simulate item '" + item + "'");
    const std::string key = item.substr(0, eq);
    const std::string val = item.substr(eq + 1);
    try {
      if (key == "n") {
        spec.n = std::stoi(val);
        have_n = true;
      } else if (key == "seed") {
        spec.seed = std::stoull(val);
      } else if (key == "noise") {
        spec.noise = std::stod(val);
      } else {
        throw UsageError("unknown --simulate key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw UsageError("bad --simulate value '" + val + "'");
    } catch (const std::out_of_range&) {
      throw UsageError("bad --simulate value '" + val + "'");
    }
    pos = comma + 1;
  }
  if (!have_n || spec.n < 1) throw UsageError("--simulate needs n=<positive>");
  return spec;
}

Setting setting_for(const ManifoldDescriptor& desc, LossKind kind) {
  for (Setting s : {Setting::Sphere, Setting::Stiefel, Setting::FixedRank,
                    Setting::RankOneTensor, Setting::Barycenter}) {
    if (setting_descriptor(s).name == desc.name && setting_loss(s) == kind) return s;
  }
  throw UsageError("simulation is defined for the built-in settings only (" + desc.name + ")");
}

VectorXd read_point(const std::string& arg) {
  if (std::filesystem::exists(arg)) {
    const Dataset d = read_samples(arg);
    if (d.n() != 1) throw DataError("'" + arg + "' must hold exactly one row");
    return d.samples.col(0);
  }
  return parse_csv_row(arg, "--null/--query literal");
}

int resolve_threads(int cli_threads) {
  if (const char* env = std::getenv("MANIFOLD_INFER_THREADS")) {
    try {
      const int t = std::stoi(env);
      if (t < 1) throw UsageError("MANIFOLD_INFER_THREADS must be positive");
      return t;
    } catch (const std::invalid_argument&) {
      throw UsageError("MANIFOLD_INFER_THREADS is not a number");
    } catch (const std::out_of_range&) {
      throw UsageError("MANIFOLD_INFER_THREADS is out of range");
    }
  }
  return cli_threads > 0 ? cli_threads : hardware_threads();
}

struct CommonArgs {
  std::string manifold_spec;
  std::string loss_name = "gaussian";
  std::string data_path;
  std::string simulate_spec;
  std::string init_path;
  std::string out_dir = ".";
  int burn = 20;
  int b = 1000;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = auto
};

struct LoadedProblem {
  std::shared_ptr<const Manifold> manifold;
  std::optional<LossModel> model;
  Dataset data;
  VectorXd x0;
};

LoadedProblem load_problem(const CommonArgs& args) {
  if (args.manifold_spec.empty()) throw UsageError("--manifold is required");
  if (args.data_path.empty() == args.simulate_spec.empty()) {
    throw UsageError("exactly one of --data and --simulate is required");
  }
  const ManifoldDescriptor desc = parse_manifold(args.manifold_spec);
  const LossKind kind = parse_loss(args.loss_name);

  LoadedProblem prob;
  if (!args.data_path.empty()) {
    prob.data = read_samples(args.data_path);
  } else {
    const SimulateSpec spec = parse_simulate_spec(args.simulate_spec);
    prob.data = simulate_dataset(setting_for(desc, kind), spec.n, spec.seed, spec.noise);
  }
  if (prob.data.sample_size() != desc.ambient_size()) {
    throw DataError("data sample size " + std::to_string(prob.data.sample_size()) +
                    " does not match manifold " + desc.name);
  }
  // catch bad input before it contaminates the default initializer
  if (!prob.data.samples.allFinite()) throw DataError("dataset holds non-finite values");

  if (!args.init_path.empty()) {
    const Dataset init = read_samples(args.init_path);
    if (init.n() != 1) throw DataError("--init file must hold exactly one row");
    prob.x0 = init.samples.col(0);
    prob.manifold = make_manifold(desc, prob.x0);
  } else {
    // No starting point given: project the sample mean. project() never uses
    // the anchor, so a scratch instance at the canonical point suffices.
    const auto scratch = make_manifold(desc, canonical_point(desc));
    prob.x0 = scratch->project(prob.data.samples.rowwise().mean());
    prob.manifold = scratch->with_anchor(prob.x0);
  }
  prob.manifold->require_feasible(prob.x0);
  prob.model.emplace(kind, prob.manifold);
  prob.model->validate(prob.data);
  return prob;
}

void write_estimate_outputs(const std::string& out_dir, const NewtonResult& fit,
                            const SandwichCovariance& sigma) {
  std::filesystem::create_directories(out_dir);
  write_row_csv(out_dir + "/theta_hat.csv", fit.x);
  write_series_csv(out_dir + "/grad_norms.csv", fit.grad_norms);
  write_matrix_csv(out_dir + "/sigma.csv", sigma.sigma);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"extremum estimation and bootstrap inference on matrix manifolds"};
  app.require_subcommand(1);

  CommonArgs args;
  double alpha = 0.1;
  std::string statistic = "wald";
  std::string direction;
  std::string functional = "coord:0";
  std::string sided = "two";
  std::string query_path;
  std::string null_arg;
  std::string study = "type1";
  std::string setting_arg;
  std::string n_list;
  int epochs = -1;
  int num_seeds = 5;
  double noise = -1.0;

  const auto add_common = [&](CLI::App* cmd, bool needs_model) {
    if (needs_model) {
      cmd->add_option("--manifold", args.manifold_spec,
                      "sphere:P | stiefel:P,R | fixedrank:R,P1,P2 | rank1tensor:P1,...,PK");
      cmd->add_option("--loss", args.loss_name, "gaussian|barycenter");
      cmd->add_option("--data", args.data_path, "samples file (.csv or .bin)");
      cmd->add_option("--simulate", args.simulate_spec, "n=..,seed=..[,noise=..]");
      cmd->add_option("--init", args.init_path, "starting point file (one row)");
      cmd->add_option("--burn", args.burn, "stage-one Newton iteration cap");
    }
    cmd->add_option("--seed", args.seed, "root seed");
    cmd->add_option("--threads", args.threads, "worker count (default: cores)");
    cmd->add_option("--out", args.out_dir, "output directory");
  };

  CLI::App* cmd_estimate = app.add_subcommand("estimate", "fit by Riemannian Newton");
  add_common(cmd_estimate, true);

  CLI::App* cmd_infer = app.add_subcommand("infer", "bootstrap confidence region");
  add_common(cmd_infer, true);
  cmd_infer->add_option("--b", args.b, "bootstrap replicates");
  cmd_infer->add_option("--alpha", alpha, "1 - confidence level");
  cmd_infer->add_option("--statistic", statistic, "wald|intrinsic-t|extrinsic-t");
  cmd_infer->add_option("--direction", direction, "chart direction a (comma literal)");
  cmd_infer->add_option("--functional", functional, "ambient functional, e.g. coord:0");
  cmd_infer->add_option("--sided", sided, "lower|upper|two");
  cmd_infer->add_option("--query", query_path, "point whose membership to report");

  CLI::App* cmd_test = app.add_subcommand("test", "location hypothesis test");
  add_common(cmd_test, true);
  cmd_test->add_option("--b", args.b, "bootstrap replicates");
  cmd_test->add_option("--alpha", alpha, "test level");
  cmd_test->add_option("--null", null_arg, "hypothesized point (file or comma literal)");

  CLI::App* cmd_simulate = app.add_subcommand("simulate", "experiment suites");
  add_common(cmd_simulate, false);
  cmd_simulate->add_option("--study", study, "type1|cdf|barycenter");
  cmd_simulate->add_option("--setting", setting_arg,
                           "sphere|stiefel|fixedrank|rank1tensor|barycenter");
  cmd_simulate->add_option("--n", n_list, "comma list of sample sizes");
  cmd_simulate->add_option("--b", args.b, "bootstrap replicates (0 = min(1000n, 50000))");
  cmd_simulate->add_option("--epochs", epochs, "trials / reference datasets");
  cmd_simulate->add_option("--num-seeds", num_seeds, "CDF study repetitions");
  cmd_simulate->add_option("--noise", noise, "noise scale override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }

  try {
    const int threads = resolve_threads(args.threads);

    if (cmd_estimate->parsed()) {
      LoadedProblem prob = load_problem(args);
      const LossModel model0 =
          prob.model->with_manifold(prob.manifold->with_anchor(prob.x0));
      NewtonConfig cfg;
      cfg.max_iter = args.burn;
      const NewtonResult fit = newton_iterate(model0, prob.data, prob.x0, cfg);
      const auto man_hat = prob.manifold->with_anchor(fit.x);
      const SandwichCovariance sig =
          sandwich(prob.model->with_manifold(man_hat), prob.data, fit.x);
      write_estimate_outputs(args.out_dir, fit, sig);
      std::cout << "converged_grad_norm " << format_double(fit.grad_norms.back()) << "\n";
      return 0;
    }

    if (cmd_infer->parsed()) {
      LoadedProblem prob = load_problem(args);
      BootstrapOptions opts;
      opts.burn = args.burn;
      opts.b = args.b;
      opts.seed = args.seed;
      opts.threads = threads;
      const BootstrapBundle bundle = fit_and_bootstrap(*prob.model, prob.data, prob.x0, opts);

      StatisticSeries series;
      ConfidenceRegion region;
      if (statistic == "wald") {
        series = bootstrap_wald_series(bundle, threads);
        if (series.zero_flag_count == bundle.b()) {
          throw NumericalError("all replicates flagged; no usable series");
        }
        region = wald_region_from_series(bundle, series, alpha);
      } else if (statistic == "intrinsic-t") {
        VectorXd a = direction.empty() ? VectorXd(VectorXd::Unit(prob.manifold->dim(), 0))
                                       : parse_csv_row(direction, "--direction");
        series = bootstrap_intrinsic_t_series(bundle, a, threads);
        if (series.zero_flag_count == bundle.b()) {
          throw NumericalError("all replicates flagged; no usable series");
        }
        region = intrinsic_t_interval_from_series(bundle, series, a, alpha, parse_sided(sided));
      } else if (statistic == "extrinsic-t") {
        const std::string prefix = "coord:";
        if (functional.rfind(prefix, 0) != 0) {
          throw UsageError("unknown functional '" + functional + "' (expected coord:INDEX)");
        }
        int index = 0;
        try {
          index = std::stoi(functional.substr(prefix.size()));
        } catch (const std::exception&) {
          throw UsageError("bad functional index in '" + functional + "'");
        }
        const AmbientFunctional f = coordinate_functional(index, prob.manifold->ambient_size());
        series = bootstrap_extrinsic_t_series(bundle, f, threads);
        if (series.zero_flag_count == bundle.b()) {
          throw NumericalError("all replicates flagged; no usable series");
        }
        region = extrinsic_t_interval_from_series(bundle, series, f, alpha, parse_sided(sided));
      } else {
        throw UsageError("unknown statistic '" + statistic + "'");
      }

      std::filesystem::create_directories(args.out_dir);
      write_series_csv(args.out_dir + "/series.csv", series.values);
      std::optional<bool> decision;
      if (!query_path.empty()) {
        const VectorXd q = read_point(query_path);
        ChartFlags fl;
        decision = region.contains(q, &fl);
      }
      {
        std::ofstream out(args.out_dir + "/region.json");
        if (!out) throw DataError("cannot write region.json");
        out << region_to_json(region, decision ? &*decision : nullptr) << "\n";
      }
      if (region.quantiles.size() == 1) {
        std::cout << "quantile " << format_double(region.quantiles[0]) << "\n";
      } else {
        std::cout << "quantile " << format_double(region.quantiles[0]) << " "
                  << format_double(region.quantiles[1]) << "\n";
      }
      if (decision) std::cout << (*decision ? "inside" : "outside") << "\n";
      return 0;
    }

    if (cmd_test->parsed()) {
      if (null_arg.empty()) throw UsageError("--null is required");
      LoadedProblem prob = load_problem(args);
      const VectorXd theta1 = read_point(null_arg);
      LocationTestOptions opts;
      opts.alpha = alpha;
      opts.b = args.b;
      opts.seed = args.seed;
      opts.burn = args.burn;
      opts.threads = threads;
      const LocationTestResult res = location_test(*prob.model, prob.data, theta1, opts);
      std::filesystem::create_directories(args.out_dir);
      {
        std::ofstream out(args.out_dir + "/test.json");
        if (!out) throw DataError("cannot write test.json");
        out << location_test_to_json(res) << "\n";
      }
      for (Eigen::Index j = 0; j < res.t_observed.size(); ++j) {
        std::cout << "t[" << j << "] " << format_double(res.t_observed(j)) << " critical ["
                  << format_double(res.t_critical_lo(j)) << ", "
                  << format_double(res.t_critical_hi(j)) << "] "
                  << (res.reject_t[static_cast<size_t>(j)] ? "reject" : "accept") << "\n";
      }
      std::cout << "wald " << format_double(res.wald_observed) << " critical "
                << format_double(res.wald_critical) << " "
                << (res.reject_wald ? "reject" : "accept") << "\n";
      return 0;
    }

    // simulate
    ExperimentConfig config;
    config.seed = args.seed;
    config.threads = threads;
    config.b = cmd_simulate->count("--b") ? args.b : 0;  // 0 = per-n rule
    config.num_seeds = num_seeds;
    config.noise_scale = noise;
    if (!n_list.empty()) {
      config.n_values.clear();
      const VectorXd ns = parse_csv_row(n_list, "--n");
      for (Eigen::Index i = 0; i < ns.size(); ++i) {
        config.n_values.push_back(static_cast<int>(ns(i)));
      }
    }
    std::filesystem::create_directories(args.out_dir);
    if (study == "type1") {
      config.setting = Setting::Sphere;
      config.epochs = epochs > 0 ? epochs : 30;
      if (!setting_arg.empty()) config.setting = parse_setting(setting_arg);
      write_type1_csv(args.out_dir + "/type1.csv", run_type1_table(config));
      write_manifest(args.out_dir + "/manifest.json", config, "type1");
    } else if (study == "cdf") {
      config.setting = setting_arg.empty() ? Setting::Stiefel : parse_setting(setting_arg);
      config.epochs = epochs > 0 ? epochs : 500;
      write_cdf_csv(args.out_dir + "/cdf_error.csv", run_cdf_study(config));
      write_manifest(args.out_dir + "/manifest.json", config, "cdf");
    } else if (study == "barycenter") {
      config.setting = Setting::Barycenter;
      config.epochs = epochs > 0 ? epochs : 50;
      if (n_list.empty()) config.n_values = {400};
      write_barycenter_csv(args.out_dir + "/barycenter.csv", run_barycenter_study(config));
      write_manifest(args.out_dir + "/manifest.json", config, "barycenter");
    } else {
      throw UsageError("unknown study '" + study + "' (expected type1|cdf|barycenter)");
    }
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
