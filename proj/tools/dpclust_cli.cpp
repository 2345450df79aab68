#include <iostream>

#include <CLI11.hpp>

#include "dpclust/harness.hpp"

int main(int argc, char** argv) {
  dpclust::RunConfig cfg;
  CLI::App app{"Streaming differentially private k-clustering with continual release"};
  app.add_option("--k", cfg.k, "number of centers");
  app.add_option("--d", cfg.d, "dimension");
  app.add_option("--z", cfg.z, "1 = k-median, 2 = k-means");
  app.add_option("--lambda", cfg.lambda, "radius of the input ball");
  app.add_option("--horizon", cfg.horizon, "stream horizon T (0 = stream length)");
  app.add_option("--epsilon", cfg.epsilon, "privacy parameter");
  app.add_option("--epsilon1", cfg.epsilon1, "histogram epsilon for the level-0 semicoreset (0 = epsilon)");
  app.add_option("--delta1", cfg.delta1, "histogram delta for the level-0 semicoreset");
  app.add_option("--gamma", cfg.gamma, "coreset accuracy, in (0, 0.5)");
  app.add_option("--theta", cfg.theta, "heavy-hitter threshold (0 = derived)");
  app.add_option("--gamma-h", cfg.gamma_h, "heavy-hitter slack, in (0, 0.5)");
  app.add_option("--block-size", cfg.block_size, "merge-reduce block size M (0 = derived)");
  app.add_option("--cm", cfg.c_m, "block size constant C_M");
  app.add_option("--seed", cfg.seed, "root seed");
  app.add_flag("--noise-off", cfg.noise_off, "disable all noise (not private; for testing)");
  app.add_option("--report-every", cfg.report_every, "ticks between metrics rows");
  app.add_option("--input", cfg.input, "CSV file with one point per line");
  app.add_option("--generator", cfg.generator, "synthetic stream, e.g. gauss:k=3,d=2,sep=50,sigma=1,n=20000");
  app.add_option("--output", cfg.output, "output directory");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return dpclust::kExitConfig;
  }
  return dpclust::run_main(cfg, std::cerr);
}
