#include <chrono>
#include <cstring>
#include <iostream>
#include <string>

#include "minfer/experiments.hpp"
#include "minfer/parallel.hpp"

using namespace minfer;

/* Times the bootstrap at one worker versus many and checks that the two
 * replicate matrices agree byte for byte. */
int main(int argc, char** argv) {
  int n = 400;
  int b = 4000;
  int threads = hardware_threads();
  std::string setting_name = "stiefel";
  std::uint64_t seed = 7;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    const auto next = [&]() -> std::string {
      if (i + 1 >= argc) {
        std::cerr << "missing value for " << arg << "\n";
        std::exit(1);
      }
      return argv[++i];
    };
    if (arg == "--n") {
      n = std::stoi(next());
    } else if (arg == "--b") {
      b = std::stoi(next());
    } else if (arg == "--threads") {
      threads = std::stoi(next());
    } else if (arg == "--setting") {
      setting_name = next();
    } else if (arg == "--seed") {
      seed = std::stoull(next());
    } else {
      std::cerr << "usage: bench_bundle [--setting S] [--n N] [--b B] [--threads T] [--seed K]\n";
      return 1;
    }
  }

  try {
    const Setting setting = parse_setting(setting_name);
    const Dataset data = simulate_dataset(setting, n, seed);
    const auto desc = setting_descriptor(setting);
    const auto scratch = make_manifold(desc, canonical_point(desc));
    const VectorXd x0 = scratch->project(data.samples.rowwise().mean());
    const LossModel model(setting_loss(setting), scratch->with_anchor(x0));

    const auto run = [&](int t) {
      BootstrapOptions opts;
      opts.b = b;
      opts.seed = seed;
      opts.threads = t;
      const auto start = std::chrono::steady_clock::now();
      BootstrapBundle bundle = fit_and_bootstrap(model, data, x0, opts);
      const auto stop = std::chrono::steady_clock::now();
      const double secs = std::chrono::duration<double>(stop - start).count();
      return std::make_pair(std::move(bundle), secs);
    };

    const auto [serial, t1] = run(1);
    const auto [parallel, tp] = run(threads);

    const bool identical =
        serial.replicates.size() == parallel.replicates.size() &&
        std::memcmp(serial.replicates.data(), parallel.replicates.data(),
                    sizeof(double) * static_cast<size_t>(serial.replicates.size())) == 0;

    std::cout << "setting " << setting_name << " n " << n << " b " << b << "\n";
    std::cout << "serial_seconds " << t1 << "\n";
    std::cout << "threads " << threads << " parallel_seconds " << tp << "\n";
    std::cout << "speedup " << (tp > 0 ? t1 / tp : 0.0) << "\n";
    std::cout << "replicates_identical " << (identical ? "yes" : "no") << "\n";
    return identical ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
