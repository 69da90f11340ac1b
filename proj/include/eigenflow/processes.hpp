// Full-trajectory orchestration at either level, and terminal-time spectrum
// ensembles for distributional comparison.
#pragma once

#include "eigenflow/randmat.hpp"
#include "eigenflow/sdecore.hpp"

#include <cstdint>
#include <vector>

namespace eigenflow {

// Recorded chart, identical across levels so ensembles are comparable:
// Dyson and FlagWarmup record eigenvalues, Wishart the eigenvalues of
// W W^T, Dynkin gamma = (1/2) log eig(G G^T).
struct ProcessSpec {
  ProcessKind kind;
  Level level = Level::Matrix;
  DriftVariant variant = DriftVariant::intro();  // spectral level only
  int n = 2;
  double t_end = 1.0;
  // Start in the recorded chart; empty selects the kind's default
  // (Dyson/Wishart matrix level from 0, Dynkin from G = I; spectral level
  // from the documented epsilon perturbation).
  Eigen::VectorXd initial;
};

DriftVariant trusted_variant(ProcessKind kind);
IncrementKind driving_increment(ProcessKind kind);

// Default spectral-level start: eps (n-1, ..., 0) for Dyson and Dynkin
// (gamma chart), eps (n, ..., 1) for Wishart (positivity), eps = 1e-3.
Eigen::VectorXd default_spectral_start(ProcessKind kind, int n);

// FlagWarmup default spectrum (n-1)/2 - i, i.e. (1, 0, -1) at n = 3.
Eigen::VectorXd default_flag_spectrum(int n);

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  bool collided = false;
  double collision_time = 0.0;
};

// Deterministic given (spec, ctrl, stream). Matrix level records on the h0
// grid; spectral level records on the same grid while stepping with
// adapt_h and retry-with-halving on chart violations.
Trajectory run_path(const ProcessSpec& spec, const StepControl& ctrl, RngStream stream);

struct Ensemble {
  Eigen::MatrixXd spectra;  // one row per surviving path, in path order
  std::int64_t n_collided = 0;
};

// Path i runs on derive_stream(master_seed, i); collided paths are excluded
// and counted. Throws when more than half the paths are excluded.
Ensemble terminal_ensemble(const ProcessSpec& spec, const StepControl& ctrl,
                           std::int64_t n_paths, std::uint64_t master_seed, int threads = 0);

}  // namespace eigenflow
