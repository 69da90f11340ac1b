// Experiment configuration, dispatch, and serialization (CSV + JSON
// reports) behind the command-line front end.
#pragma once

#include "eigenflow/verify.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace eigenflow {

struct ExperimentConfig {
  std::string command;  // simulate | drift-check | dist-check | grad-check | mcf-check | scaled-metric
  std::string process = "dyson";  // dyson | wishart | dynkin | flag
  std::string level = "matrix";   // matrix | spectral
  std::string chart;              // lambda | sigma | gamma; empty = process default
  int n = 2;
  int beta = 2;
  double t_end = 1.0;
  double h = 1e-3;
  double h_min = 1e-8;
  double gap_threshold = 0.05;
  int max_halvings = 20;
  std::int64_t paths = 1000;
  std::int64_t samples = 1000000;
  std::uint64_t seed = 42;
  std::vector<double> base;  // base spectrum / initial condition, descending
  double r = 2.0;            // scaled-metric only
  int n_min = 2;             // grad-check sweep
  int n_max = 6;
  int trials = 100;
  // Execution details, excluded from the config echo so reruns with
  // different thread counts or output directories stay byte-identical.
  std::string out_dir;  // empty: $EIGENFLOW_OUTDIR, else "."
  int threads = 0;      // 0 = available parallelism
};

ProcessKind parse_process(const ExperimentConfig& config);

// Experiment definition only (no out_dir / threads); re-parsing it
// reproduces the run bit-exactly.
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);

// Shortest round-trip decimal formatting used in all CSV output.
std::string format_double(double v);

// Dispatches the configured experiment, writes <command>.csv and
// report.json into the output directory. Exit codes: 0 pass, 1
// verification failure, 2 usage/configuration error.
int run_experiment(const ExperimentConfig& config);

}  // namespace eigenflow
