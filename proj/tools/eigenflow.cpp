#include "eigenflow/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

void add_common(CLI::App* cmd, eigenflow::ExperimentConfig& config) {
  cmd->set_help_flag("--help", "print help");  // frees -h for the step size
  cmd->add_option("--process", config.process, "dyson | wishart | dynkin | flag");
  cmd->add_option("--beta", config.beta, "Dyson beta (1, 2 or 4)");
  cmd->add_option("--n", config.n, "matrix dimension");
  cmd->add_option("--seed", config.seed, "master seed");
  cmd->add_option("--base", config.base, "base spectrum, descending")->delimiter(',');
  cmd->add_option("--h", config.h, "base step size");
  cmd->add_option("--h-min", config.h_min, "step size floor");
  cmd->add_option("--gap-threshold", config.gap_threshold, "relative gap triggering step halving");
  cmd->add_option("--max-halvings", config.max_halvings, "per-step retry budget");
  cmd->add_option("--threads", config.threads, "worker threads (0 = available parallelism)");
  cmd->add_option("--out", config.out_dir, "output directory (default $EIGENFLOW_OUTDIR or .)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"eigenflow: matrix-valued diffusions and their spectral dynamics"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "print help");
  app.set_config("--config")->configurable(false);

  eigenflow::ExperimentConfig config;

  CLI::App* simulate = app.add_subcommand("simulate", "write trajectory CSV for sampled paths");
  add_common(simulate, config);
  simulate->add_option("--level", config.level, "matrix | spectral");
  simulate->add_option("--t-end", config.t_end, "horizon");
  simulate->add_option("--paths", config.paths, "number of paths");

  CLI::App* drift = app.add_subcommand("drift-check", "one-step Monte Carlo drift adjudication");
  add_common(drift, config);
  drift->add_option("--level", config.level, "matrix | spectral");
  drift->add_option("--chart", config.chart, "lambda | sigma | gamma");
  drift->add_option("--samples", config.samples, "Monte Carlo samples");

  CLI::App* dist = app.add_subcommand("dist-check", "matrix vs spectral terminal KS test");
  add_common(dist, config);
  dist->add_option("--t-end", config.t_end, "horizon");
  dist->add_option("--paths", config.paths, "paths per level");

  CLI::App* grad = app.add_subcommand("grad-check", "finite-difference gradient sweep");
  add_common(grad, config);
  grad->add_option("--n-min", config.n_min, "smallest dimension");
  grad->add_option("--n-max", config.n_max, "largest dimension");
  grad->add_option("--trials", config.trials, "random spectra");

  CLI::App* mcf = app.add_subcommand("mcf-check", "vertical-only flow vs drift-field ODE");
  add_common(mcf, config);
  mcf->add_option("--t-end", config.t_end, "horizon");
  mcf->add_option("--paths", config.paths, "number of paths");

  CLI::App* scaled = app.add_subcommand("scaled-metric", "scaled-metric drift and QV ratios");
  add_common(scaled, config);
  scaled->add_option("--r", config.r, "horizontal scaling factor");
  scaled->add_option("--samples", config.samples, "Monte Carlo samples per run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  config.command = app.get_subcommands().front()->get_name();
  return eigenflow::run_experiment(config);
}
