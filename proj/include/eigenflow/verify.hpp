// Statistical adjudication: Monte Carlo drift estimation, candidate-formula
// scoring, two-sample Kolmogorov-Smirnov tests, gradient cross-checks, and
// the deterministic mean-curvature-flow check.
#pragma once

#include "eigenflow/processes.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace eigenflow {

// Observable coordinates of a matrix-level spectrum.
enum class Chart { Lambda, Sigma, Gamma };

Chart default_chart(ProcessKind kind);
std::string chart_name(Chart chart);

// The kind's trusted drift expressed in the requested chart (Ito-mapped
// where the chart differs from the chart the trusted form is printed in).
DriftCoeffs trusted_drift_in_chart(ProcessKind kind, Chart chart, const Spectrum& s);

struct DriftEstimate {
  Eigen::VectorXd base;
  Eigen::VectorXd mean;  // mean displacement over h, divided by h
  Eigen::VectorXd se;    // standard error per component
  std::int64_t n_samples = 0;
  std::int64_t n_collided = 0;
  double h = 0.0;
};

// One-step Monte Carlo drift at a diagonal representative of `base`
// (matrix level) or directly on the spectral SDE in the kind's trusted
// chart. Sample i draws from derive_stream(seed, i); reductions run over
// fixed chunks so results are bitwise independent of the thread count.
// Throws when the collision rate exceeds 1%.
DriftEstimate estimate_drift(ProcessKind kind, Level level, const Spectrum& base, double h,
                             std::int64_t n_samples, std::uint64_t seed,
                             Chart chart, int threads = 0);

struct Candidate {
  std::string label;
  Eigen::VectorXd drift;
};

struct CandidateScore {
  std::string label;
  double max_abs_z = 0.0;
  Eigen::VectorXd z;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double bound = 0.0;
};

struct VerificationReport {
  std::string experiment;
  std::vector<CandidateScore> candidates;
  std::string accepted;  // candidate label or "inconclusive"
  std::vector<CheckResult> checks;
  std::vector<std::string> notes;
  std::uint64_t seed = 0;
  double h = 0.0;
  std::int64_t n_samples = 0;

  bool passed() const;
  nlohmann::json to_json() const;
};

// Accept the unique candidate with max |z| <= 3 when every other candidate
// has max |z| >= 5; otherwise "inconclusive". Order-invariant.
VerificationReport adjudicate_drift(const DriftEstimate& est, const std::vector<Candidate>& candidates);

// Two-sample KS statistic over the pooled sample and the asymptotic
// Kolmogorov p bound at effective size nx ny / (nx + ny).
std::pair<double, double> ks_two_sample(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// Critical D at level alpha for effective size ne.
double ks_critical(double alpha, double n_effective);

// Asymptotic Kolmogorov tail Q(z) = 2 sum_k (-1)^{k-1} exp(-2 k^2 z^2).
double kolmogorov_tail(double z);

// Central finite differences of log_orbit_volume against grad_log_volume
// (metric-corrected for Dynkin); also records the ratio of (1/2) grad to
// the kind's trusted drift, mapped to a common chart.
VerificationReport gradient_check(ProcessKind kind, const Spectrum& s);

struct McfOptions {
  double h = 1e-4;
  std::int64_t n_paths = 1000;
  std::uint64_t seed = 0;
  int threads = 0;
};

struct McfResult {
  VerificationReport report;
  Eigen::VectorXd times;
  Eigen::MatrixXd mc_mean;  // path-averaged spectrum per grid time
  Eigen::MatrixXd ode;      // drift-field reference on the same grid
};

// Vertical-only matrix process versus 4th-order integration of the trusted
// drift field (Dyson in lambda, Wishart in sigma). Reports the max relative
// deviation of the path-averaged spectrum trajectory on [0, t_end].
McfResult mcf_check(ProcessKind kind, const Spectrum& start, double t_end,
                    const McfOptions& opts);

struct ScaledMetricOptions {
  double h = 1e-4;
  std::int64_t n_samples = 200000;
  std::uint64_t seed = 0;
  int threads = 0;
};

struct ScaledMetricResult {
  VerificationReport report;
  Eigen::VectorXd drift_scaled, drift_scaled_se, qv_scaled, qv_scaled_se;
  Eigen::VectorXd drift_unit, drift_unit_se, qv_unit, qv_unit_se;
};

// One-step drift and per-component quadratic variation of the
// horizontally scaled process at diag(base), compared against 1/r^2 times
// the r = 1 values.
ScaledMetricResult scaled_metric_check(ProcessKind kind, const Spectrum& base, double r,
                                       const ScaledMetricOptions& opts);

struct FlagDriftResult {
  Eigen::MatrixXd mean;  // entrywise displacement over h
  Eigen::MatrixXd se;
  Eigen::MatrixXd target;  // -(n H - tr(H) I) at H = diag(lambda)
  VerificationReport report;
};

// Entrywise drift of H = Q Lambda Q^T under the warm-up flow from Q = I.
FlagDriftResult flag_drift_check(const Eigen::VectorXd& lambda, double h, std::int64_t n_samples,
                                 std::uint64_t seed, int threads = 0);

// Well-separated random spectrum in the kind's volume chart (lambda for
// Dyson, sigma otherwise), for gradient and kernel sweeps.
Spectrum random_test_spectrum(ProcessKind kind, int n, RngStream& stream);

}  // namespace eigenflow
