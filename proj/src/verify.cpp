#include "eigenflow/verify.hpp"

#include "eigenflow/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace eigenflow {

Chart default_chart(ProcessKind kind) {
  switch (kind.family) {
    case Family::Dynkin:
      return Chart::Gamma;
    default:
      return Chart::Lambda;
  }
}

std::string chart_name(Chart chart) {
  switch (chart) {
    case Chart::Lambda:
      return "lambda";
    case Chart::Sigma:
      return "sigma";
    default:
      return "gamma";
  }
}

bool VerificationReport::passed() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

nlohmann::json VerificationReport::to_json() const {
  nlohmann::json j;
  j["experiment"] = experiment;
  j["accepted"] = accepted;
  j["candidates"] = nlohmann::json::array();
  for (const auto& c : candidates) {
    nlohmann::json jc;
    jc["label"] = c.label;
    jc["max_abs_z"] = c.max_abs_z;
    jc["z"] = std::vector<double>(c.z.data(), c.z.data() + c.z.size());
    j["candidates"].push_back(jc);
  }
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    nlohmann::json jc;
    jc["name"] = c.name;
    jc["pass"] = c.pass;
    jc["value"] = c.value;
    jc["bound"] = c.bound;
    j["checks"].push_back(jc);
  }
  j["notes"] = notes;
  j["environment"] = {{"seed", seed}, {"h", h}, {"n_samples", n_samples}};
  return j;
}

namespace {

constexpr std::int64_t kChunk = 4096;

struct MomentAccumulator {
  Eigen::VectorXd sum;
  Eigen::VectorXd sumsq;
  std::int64_t count = 0;
  std::int64_t collided = 0;
};

// Deterministic reduction: per-chunk partials combined in chunk order.
MomentAccumulator reduce_chunks(std::vector<MomentAccumulator>& parts, int dim) {
  MomentAccumulator total;
  total.sum = Eigen::VectorXd::Zero(dim);
  total.sumsq = Eigen::VectorXd::Zero(dim);
  for (const auto& p : parts) {
    if (p.count > 0) {
      total.sum += p.sum;
      total.sumsq += p.sumsq;
    }
    total.count += p.count;
    total.collided += p.collided;
  }
  return total;
}

}  // namespace

DriftCoeffs trusted_drift_in_chart(ProcessKind kind, Chart chart, const Spectrum& s) {
  switch (kind.family) {
    case Family::Dyson:
      if (chart != Chart::Lambda)
        throw std::invalid_argument("estimate_drift: Dyson uses the lambda chart");
      return spectral_drift(kind, DriftVariant::intro(), s);
    case Family::Wishart:
      if (chart == Chart::Lambda) return spectral_drift(kind, DriftVariant::intro(), s);
      if (chart == Chart::Sigma) return wishart_sigma_drift_consistent(s);
      throw std::invalid_argument("estimate_drift: Wishart has no gamma chart");
    case Family::Dynkin: {
      if (chart == Chart::Gamma) return spectral_drift(kind, DriftVariant::rw(), s);
      if (chart == Chart::Lambda) return dynkin_lambda_drift_from_rw(s);
      // sigma chart: image of the RW form through sigma = exp(gamma).
      const Eigen::VectorXd& sig = s.values;
      Spectrum gam;
      gam.values = sig.array().log();
      DriftCoeffs rw = spectral_drift(kind, DriftVariant::rw(), gam);
      DriftCoeffs c;
      c.diffusion = sig;
      c.drift = sig.cwiseProduct(rw.drift) + 0.5 * sig;
      return c;
    }
    case Family::FlagWarmup:
      break;
  }
  throw std::invalid_argument("estimate_drift: use flag_drift_check for the warm-up process");
}

namespace {

// Diagonal matrix representative of `base` expressed in `chart`.
FieldMatrix matrix_representative(ProcessKind kind, Chart chart, const Eigen::VectorXd& base) {
  switch (kind.family) {
    case Family::Dyson:
      return embed_scalar_diag(base, matrix_field(kind));
    case Family::Wishart: {
      Eigen::VectorXd sig = chart == Chart::Lambda ? base.cwiseSqrt().eval() : base;
      return {sig.asDiagonal(), Field::Real};
    }
    case Family::Dynkin: {
      Eigen::VectorXd sig;
      if (chart == Chart::Lambda)
        sig = base.cwiseSqrt();
      else if (chart == Chart::Sigma)
        sig = base;
      else
        sig = base.array().exp();
      return {sig.asDiagonal(), Field::Real};
    }
    case Family::FlagWarmup:
      break;
  }
  throw std::logic_error("matrix_representative: unreachable");
}

// Spectrum of the matrix state in the requested chart; false when the
// observation is unavailable (pairing failure, nonpositive log argument).
bool observe_chart(ProcessKind kind, Chart chart, const FieldMatrix& state, Eigen::VectorXd& out) {
  try {
    if (kind.family == Family::Dyson) {
      out = dedup_embedded_values(symmetric_eigenvalues(state.mat),
                                  field_multiplicity(state.field));
      return true;
    }
    Eigen::VectorXd lam = symmetric_eigenvalues(state.mat * state.mat.transpose());
    switch (chart) {
      case Chart::Lambda:
        out = lam;
        return true;
      case Chart::Sigma:
        out = lam.cwiseMax(0.0).cwiseSqrt();
        return true;
      case Chart::Gamma:
        if (lam.minCoeff() <= 0.0) return false;
        out = 0.5 * lam.array().log();
        return true;
    }
  } catch (const std::exception&) {
    return false;
  }
  return false;
}

}  // namespace

DriftEstimate estimate_drift(ProcessKind kind, Level level, const Spectrum& base, double h,
                             std::int64_t n_samples, std::uint64_t seed, Chart chart, int threads) {
  if (!(h > 0.0)) throw std::invalid_argument("estimate_drift: h must be positive");
  if (n_samples < 2) throw std::invalid_argument("estimate_drift: need at least 2 samples");
  if (!strictly_descending(base.values))
    throw std::invalid_argument("estimate_drift: base must be strictly descending");

  const int n = base.size();
  const DriftCoeffs trusted = trusted_drift_in_chart(kind, chart, base);
  if (n > 1) {
    const double max_b = trusted.drift.cwiseAbs().maxCoeff();
    double min_gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i + 1 < n; ++i) min_gap = std::min(min_gap, base.values[i] - base.values[i + 1]);
    if (3.0 * max_b * h >= min_gap)
      throw std::invalid_argument("estimate_drift: h too coarse for this base point");
  }

  const std::int64_t n_chunks = (n_samples + kChunk - 1) / kChunk;
  std::vector<MomentAccumulator> parts(n_chunks);

  if (level == Level::Matrix) {
    const FieldMatrix rep = matrix_representative(kind, chart, base.values);
    const IncrementKind inc = driving_increment(kind);
    parallel_chunks(n_samples, kChunk, threads,
                    [&](std::int64_t c, std::int64_t begin, std::int64_t end) {
                      MomentAccumulator acc;
                      acc.sum = Eigen::VectorXd::Zero(n);
                      acc.sumsq = Eigen::VectorXd::Zero(n);
                      Eigen::VectorXd vals;
                      for (std::int64_t i = begin; i < end; ++i) {
                        RngStream stream = derive_stream(seed, static_cast<std::uint64_t>(i));
                        FieldMatrix dw = sample_matrix_increment(inc, n, h, stream);
                        FieldMatrix next = matrix_step(kind, rep, dw, h);
                        if (!observe_chart(kind, chart, next, vals)) {
                          ++acc.collided;
                          continue;
                        }
                        const Eigen::VectorXd d = vals - base.values;
                        acc.sum += d;
                        acc.sumsq += d.cwiseProduct(d);
                        ++acc.count;
                      }
                      parts[c] = std::move(acc);
                    });
  } else {
    if (chart != default_chart(kind))
      throw std::invalid_argument("estimate_drift: spectral level runs in the trusted chart");
    const DriftVariant variant = trusted_variant(kind);
    parallel_chunks(n_samples, kChunk, threads,
                    [&](std::int64_t c, std::int64_t begin, std::int64_t end) {
                      MomentAccumulator acc;
                      acc.sum = Eigen::VectorXd::Zero(n);
                      acc.sumsq = Eigen::VectorXd::Zero(n);
                      Eigen::VectorXd xi(n);
                      for (std::int64_t i = begin; i < end; ++i) {
                        RngStream stream = derive_stream(seed, static_cast<std::uint64_t>(i));
                        for (int k = 0; k < n; ++k) xi[k] = stream.next_normal();
                        auto next = spectral_step(kind, variant, base, xi, h);
                        if (!next) {
                          ++acc.collided;
                          continue;
                        }
                        const Eigen::VectorXd d = next->values - base.values;
                        acc.sum += d;
                        acc.sumsq += d.cwiseProduct(d);
                        ++acc.count;
                      }
                      parts[c] = std::move(acc);
                    });
  }

  MomentAccumulator total = reduce_chunks(parts, n);
  if (100 * total.collided > n_samples)
    throw std::runtime_error("estimate_drift: collision rate above 1% at this h");
  if (total.count < 2) throw std::runtime_error("estimate_drift: too few surviving samples");

  DriftEstimate est;
  est.base = base.values;
  est.h = h;
  est.n_samples = total.count;
  est.n_collided = total.collided;
  const double nn = static_cast<double>(total.count);
  const Eigen::VectorXd mean_d = total.sum / nn;
  est.mean = mean_d / h;
  Eigen::VectorXd var = (total.sumsq / nn - mean_d.cwiseProduct(mean_d)) * (nn / (nn - 1.0));
  est.se = (var.cwiseMax(0.0) / nn).cwiseSqrt() / h;
  return est;
}

VerificationReport adjudicate_drift(const DriftEstimate& est, const std::vector<Candidate>& candidates) {
  if (candidates.size() < 2)
    throw std::invalid_argument("adjudicate_drift: need at least two candidates");

  VerificationReport rep;
  rep.experiment = "adjudicate_drift";
  rep.h = est.h;
  rep.n_samples = est.n_samples;

  for (const auto& cand : candidates) {
    CandidateScore score;
    score.label = cand.label;
    score.z.resize(est.mean.size());
    for (int i = 0; i < est.mean.size(); ++i) {
      const double diff = cand.drift[i] - est.mean[i];
      if (est.se[i] > 0.0)
        score.z[i] = diff / est.se[i];
      else
        score.z[i] = diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    score.max_abs_z = score.z.cwiseAbs().maxCoeff();
    rep.candidates.push_back(std::move(score));
  }

  int accepted_idx = -1;
  bool unique = true;
  for (std::size_t i = 0; i < rep.candidates.size(); ++i) {
    if (rep.candidates[i].max_abs_z <= 3.0) {
      if (accepted_idx >= 0) unique = false;
      accepted_idx = static_cast<int>(i);
    }
  }
  bool others_rejected = true;
  if (accepted_idx >= 0)
    for (std::size_t i = 0; i < rep.candidates.size(); ++i)
      if (static_cast<int>(i) != accepted_idx && rep.candidates[i].max_abs_z < 5.0)
        others_rejected = false;

  rep.accepted = (accepted_idx >= 0 && unique && others_rejected)
                     ? rep.candidates[accepted_idx].label
                     : "inconclusive";
  return rep;
}

double kolmogorov_tail(double z) {
  if (z <= 0.0) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 1000; ++k) {
    const double term = std::exp(-2.0 * k * k * z * z);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

std::pair<double, double> ks_two_sample(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() == 0 || y.size() == 0)
    throw std::invalid_argument("ks_two_sample: empty sample");
  std::vector<double> xs(x.data(), x.data() + x.size());
  std::vector<double> ys(y.data(), y.data() + y.size());
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());

  const double nx = static_cast<double>(xs.size());
  const double ny = static_cast<double>(ys.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < xs.size() && j < ys.size()) {
    const double v = std::min(xs[i], ys[j]);
    while (i < xs.size() && xs[i] == v) ++i;
    while (j < ys.size() && ys[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  const double ne = nx * ny / (nx + ny);
  return {d, kolmogorov_tail(std::sqrt(ne) * d)};
}

double ks_critical(double alpha, double n_effective) {
  if (!(alpha > 0.0 && alpha < 1.0) || !(n_effective > 0.0))
    throw std::invalid_argument("ks_critical: bad arguments");
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(n_effective);
}

VerificationReport gradient_check(ProcessKind kind, const Spectrum& s) {
  VerificationReport rep;
  rep.experiment = "gradient_check";

  const Eigen::VectorXd analytic = grad_log_volume(kind, s);
  const int n = s.size();
  const double fd_step = 1e-6;

  Eigen::VectorXd fd(n);
  for (int i = 0; i < n; ++i) {
    Spectrum plus = s, minus = s;
    plus.values[i] += fd_step;
    minus.values[i] -= fd_step;
    fd[i] = (log_orbit_volume(kind, plus) - log_orbit_volume(kind, minus)) / (2.0 * fd_step);
  }
  if (kind.family == Family::Dynkin)
    fd = fd.cwiseProduct(s.values.cwiseProduct(s.values));  // metric correction

  const double scale = analytic.cwiseAbs().maxCoeff();
  CheckResult check;
  if (scale == 0.0) {
    check.name = "fd_zero_gradient";
    check.value = fd.cwiseAbs().maxCoeff();
    check.bound = 1e-9;
  } else {
    check.name = "fd_vs_analytic_rel";
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      worst = std::max(worst, std::abs(analytic[i] - fd[i]) / std::max(std::abs(analytic[i]), 1e-12));
    check.value = worst;
    check.bound = 1e-6;
  }
  check.pass = check.value <= check.bound;
  rep.checks.push_back(check);

  // Ratio of (1/2) grad to the trusted drift, in a common chart.
  if (n >= 2 && kind.family != Family::FlagWarmup) {
    Eigen::VectorXd half_grad = 0.5 * analytic;
    Eigen::VectorXd drift;
    switch (kind.family) {
      case Family::Dyson:
        drift = spectral_drift(kind, DriftVariant::intro(), s).drift;
        break;
      case Family::Wishart:
        drift = wishart_sigma_drift_consistent(s).drift;
        break;
      case Family::Dynkin: {
        // gamma-chart gradient is grad_sigma / sigma.
        half_grad = half_grad.cwiseQuotient(s.values);
        Spectrum gam;
        gam.values = s.values.array().log();
        drift = spectral_drift(kind, DriftVariant::rw(), gam).drift;
        break;
      }
      default:
        break;
    }
    double ratio_min = std::numeric_limits<double>::infinity();
    double ratio_max = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
      if (std::abs(drift[i]) > 1e-12) {
        const double r = half_grad[i] / drift[i];
        ratio_min = std::min(ratio_min, r);
        ratio_max = std::max(ratio_max, r);
      }
    if (std::isfinite(ratio_min)) {
      CheckResult ratio_check;
      ratio_check.name = "half_grad_to_drift_ratio_constant";
      ratio_check.value = ratio_max - ratio_min;
      ratio_check.bound = 1e-6 * std::max(1.0, std::abs(ratio_max));
      ratio_check.pass = ratio_check.value <= ratio_check.bound;
      rep.checks.push_back(ratio_check);
      rep.notes.push_back("half_grad / trusted_drift = " + std::to_string(0.5 * (ratio_min + ratio_max)));
    }
  }
  return rep;
}

namespace {

Eigen::VectorXd mcf_drift(ProcessKind kind, const Eigen::VectorXd& x) {
  Spectrum s;
  s.values = x;
  s.kind = kind.family == Family::Wishart ? SpectrumKind::SingularValues : SpectrumKind::Eigenvalues;
  if (kind.family == Family::Dyson) return spectral_drift(kind, DriftVariant::intro(), s).drift;
  return wishart_sigma_drift_consistent(s).drift;
}

}  // namespace

McfResult mcf_check(ProcessKind kind, const Spectrum& start, double t_end,
                    const McfOptions& opts) {
  if (kind.family != Family::Dyson && kind.family != Family::Wishart)
    throw std::invalid_argument("mcf_check: supported for Dyson and Wishart");
  if (!(t_end > 0.0) || !(opts.h > 0.0) || opts.n_paths < 1)
    throw std::invalid_argument("mcf_check: bad options");
  require_valid_spectrum(kind, start);

  const int n = start.size();
  const std::int64_t n_steps = std::llround(t_end / opts.h);
  const IncrementKind inc =
      kind.family == Family::Dyson ? driving_increment(kind) : IncrementKind::Ginibre;
  const Chart chart = kind.family == Family::Dyson ? Chart::Lambda : Chart::Sigma;
  const FieldMatrix rep = matrix_representative(kind, chart, start.values);

  const std::int64_t chunk = 16;
  const std::int64_t n_chunks = (opts.n_paths + chunk - 1) / chunk;
  std::vector<Eigen::MatrixXd> sums(n_chunks);
  std::vector<std::int64_t> survivors(n_chunks, 0);
  std::vector<std::int64_t> collided(n_chunks, 0);

  parallel_chunks(opts.n_paths, chunk, opts.threads,
                  [&](std::int64_t c, std::int64_t begin, std::int64_t end) {
                    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n_steps + 1, n);
                    Eigen::MatrixXd path(n_steps + 1, n);
                    Eigen::VectorXd vals;
                    for (std::int64_t p = begin; p < end; ++p) {
                      RngStream stream = derive_stream(opts.seed, static_cast<std::uint64_t>(p));
                      FieldMatrix state = rep;
                      path.row(0) = start.values.transpose();
                      bool ok = true;
                      for (std::int64_t k = 1; k <= n_steps; ++k) {
                        try {
                          FieldMatrix dw = sample_matrix_increment(inc, n, opts.h, stream);
                          state = projected_step(ProjectionMode::vertical(), kind, state, dw, opts.h);
                          if (!observe_chart(kind, chart, state, vals)) throw std::runtime_error("x");
                          path.row(k) = vals.transpose();
                        } catch (const std::exception&) {
                          ok = false;
                          break;
                        }
                      }
                      if (ok) {
                        acc += path;
                        ++survivors[c];
                      } else {
                        ++collided[c];
                      }
                    }
                    sums[c] = std::move(acc);
                  });

  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(n_steps + 1, n);
  std::int64_t n_ok = 0, n_bad = 0;
  for (std::int64_t c = 0; c < n_chunks; ++c) {
    if (survivors[c] > 0) mean += sums[c];
    n_ok += survivors[c];
    n_bad += collided[c];
  }
  if (n_ok == 0) throw std::runtime_error("mcf_check: every path collided");
  mean /= static_cast<double>(n_ok);

  // Reference: classical RK4 on the drift field over the same grid.
  Eigen::MatrixXd ode(n_steps + 1, n);
  ode.row(0) = start.values.transpose();
  Eigen::VectorXd x = start.values;
  for (std::int64_t k = 1; k <= n_steps; ++k) {
    const Eigen::VectorXd k1 = mcf_drift(kind, x);
    const Eigen::VectorXd k2 = mcf_drift(kind, x + 0.5 * opts.h * k1);
    const Eigen::VectorXd k3 = mcf_drift(kind, x + 0.5 * opts.h * k2);
    const Eigen::VectorXd k4 = mcf_drift(kind, x + opts.h * k3);
    x += (opts.h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    ode.row(k) = x.transpose();
  }

  double worst = 0.0;
  for (std::int64_t k = 0; k <= n_steps; ++k)
    for (int i = 0; i < n; ++i)
      worst = std::max(worst, std::abs(mean(k, i) - ode(k, i)) /
                                  std::max(std::abs(ode(k, i)), 1e-3));

  McfResult result;
  result.mc_mean = std::move(mean);
  result.ode = std::move(ode);
  result.times.resize(n_steps + 1);
  for (std::int64_t k = 0; k <= n_steps; ++k) result.times[k] = static_cast<double>(k) * opts.h;

  result.report.experiment = "mcf_check";
  result.report.seed = opts.seed;
  result.report.h = opts.h;
  result.report.n_samples = n_ok;
  result.report.checks.push_back({"mcf_max_rel_dev", worst <= 0.02, worst, 0.02});
  if (n_bad > 0)
    result.report.notes.push_back("collided paths excluded: " + std::to_string(n_bad));
  return result;
}

namespace {

struct OneStepMoments {
  Eigen::VectorXd drift, drift_se, qv, qv_se;
  std::int64_t n = 0;
};

OneStepMoments projected_one_step_moments(ProcessKind kind, const FieldMatrix& rep,
                                          const Eigen::VectorXd& base, double r, double h,
                                          std::int64_t n_samples, std::uint64_t seed, int threads) {
  const int n = static_cast<int>(base.size());
  const IncrementKind inc = driving_increment(kind);
  const std::int64_t n_chunks = (n_samples + kChunk - 1) / kChunk;
  std::vector<MomentAccumulator> parts(n_chunks);
  const ProjectionMode mode = r == 1.0 ? ProjectionMode::scaled(1.0) : ProjectionMode::scaled(r);

  parallel_chunks(n_samples, kChunk, threads,
                  [&](std::int64_t c, std::int64_t begin, std::int64_t end) {
                    MomentAccumulator acc;
                    acc.sum = Eigen::VectorXd::Zero(n);
                    acc.sumsq = Eigen::VectorXd::Zero(n);
                    Eigen::VectorXd vals;
                    for (std::int64_t i = begin; i < end; ++i) {
                      RngStream stream = derive_stream(seed, static_cast<std::uint64_t>(i));
                      FieldMatrix dw = sample_matrix_increment(inc, n, h, stream);
                      FieldMatrix next = projected_step(mode, kind, rep, dw, h);
                      if (!observe_chart(kind, Chart::Lambda, next, vals)) {
                        ++acc.collided;
                        continue;
                      }
                      const Eigen::VectorXd d = vals - base;
                      acc.sum += d;
                      acc.sumsq += d.cwiseProduct(d);
                      ++acc.count;
                    }
                    parts[c] = std::move(acc);
                  });

  MomentAccumulator total = reduce_chunks(parts, n);
  if (total.count < 2) throw std::runtime_error("scaled_metric_check: too few samples");
  const double nn = static_cast<double>(total.count);
  const Eigen::VectorXd mean_d = total.sum / nn;
  Eigen::VectorXd var = (total.sumsq / nn - mean_d.cwiseProduct(mean_d)) * (nn / (nn - 1.0));
  var = var.cwiseMax(0.0);

  OneStepMoments m;
  m.n = total.count;
  m.drift = mean_d / h;
  m.drift_se = (var / nn).cwiseSqrt() / h;
  m.qv = var / h;
  m.qv_se = m.qv * std::sqrt(2.0 / (nn - 1.0));
  return m;
}

}  // namespace

ScaledMetricResult scaled_metric_check(ProcessKind kind, const Spectrum& base, double r,
                                       const ScaledMetricOptions& opts) {
  if (kind.family != Family::Dyson)
    throw std::invalid_argument("scaled_metric_check: implemented for Dyson");
  require_valid_spectrum(kind, base);

  const FieldMatrix rep = matrix_representative(kind, Chart::Lambda, base.values);
  const OneStepMoments at_r = projected_one_step_moments(kind, rep, base.values, r, opts.h,
                                                         opts.n_samples, opts.seed, opts.threads);
  const OneStepMoments at_1 = projected_one_step_moments(kind, rep, base.values, 1.0, opts.h,
                                                         opts.n_samples, opts.seed + 1, opts.threads);

  ScaledMetricResult out;
  out.drift_scaled = at_r.drift;
  out.drift_scaled_se = at_r.drift_se;
  out.qv_scaled = at_r.qv;
  out.qv_scaled_se = at_r.qv_se;
  out.drift_unit = at_1.drift;
  out.drift_unit_se = at_1.drift_se;
  out.qv_unit = at_1.qv;
  out.qv_unit_se = at_1.qv_se;

  VerificationReport& rep_out = out.report;
  rep_out.experiment = "scaled_metric_check";
  rep_out.seed = opts.seed;
  rep_out.h = opts.h;
  rep_out.n_samples = at_r.n;

  const double rr = r * r;
  const int n = base.size();
  double worst_drift = 0.0, worst_qv = 0.0;
  for (int i = 0; i < n; ++i) {
    const double se_d = std::sqrt(at_r.drift_se[i] * at_r.drift_se[i] +
                                  at_1.drift_se[i] * at_1.drift_se[i] / (rr * rr));
    worst_drift = std::max(worst_drift,
                           std::abs(at_r.drift[i] - at_1.drift[i] / rr) / std::max(se_d, 1e-300));
    const double se_q = std::sqrt(at_r.qv_se[i] * at_r.qv_se[i] +
                                  at_1.qv_se[i] * at_1.qv_se[i] / (rr * rr));
    worst_qv = std::max(worst_qv,
                        std::abs(at_r.qv[i] - at_1.qv[i] / rr) / std::max(se_q, 1e-300));
  }
  rep_out.checks.push_back({"scaled_drift_quarter_z", worst_drift <= 3.0, worst_drift, 3.0});
  rep_out.checks.push_back({"scaled_qv_quarter_z", worst_qv <= 3.0, worst_qv, 3.0});

  // The unscaled run should also reproduce the trusted drift.
  const DriftCoeffs trusted = spectral_drift(kind, DriftVariant::intro(), base);
  double worst_trusted = 0.0;
  for (int i = 0; i < n; ++i)
    worst_trusted = std::max(worst_trusted, std::abs(at_1.drift[i] - trusted.drift[i]) /
                                                std::max(at_1.drift_se[i], 1e-300));
  rep_out.checks.push_back({"unscaled_drift_matches_trusted_z", worst_trusted <= 3.0, worst_trusted, 3.0});
  rep_out.notes.push_back("companion r=1 run uses seed+1");
  return out;
}

Spectrum random_test_spectrum(ProcessKind kind, int n, RngStream& stream) {
  const bool positive = kind.family == Family::Wishart || kind.family == Family::Dynkin;
  Spectrum s;
  s.kind = positive ? SpectrumKind::SingularValues : SpectrumKind::Eigenvalues;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) {
      const double u = stream.next_uniform();
      v[i] = positive ? 0.5 + 2.5 * u : 6.0 * u - 3.0;
    }
    std::sort(v.data(), v.data() + n, std::greater<double>());
    bool ok = true;
    for (int i = 0; i + 1 < n; ++i)
      if (v[i] - v[i + 1] < 0.1) ok = false;
    if (ok) {
      s.values = v;
      return s;
    }
  }
  throw std::runtime_error("random_test_spectrum: failed to draw a well-separated spectrum");
}

FlagDriftResult flag_drift_check(const Eigen::VectorXd& lambda, double h, std::int64_t n_samples,
                                 std::uint64_t seed, int threads) {
  const int n = static_cast<int>(lambda.size());
  if (n < 2) throw std::invalid_argument("flag_drift_check: need n >= 2");
  if (!(h > 0.0) || n_samples < 2) throw std::invalid_argument("flag_drift_check: bad options");

  const Eigen::MatrixXd lam_diag = lambda.asDiagonal();
  const std::int64_t n_chunks = (n_samples + kChunk - 1) / kChunk;
  const int dim = n * n;
  std::vector<MomentAccumulator> parts(n_chunks);
  const ProcessKind kind = ProcessKind::flag_warmup();
  const FieldMatrix q0{Eigen::MatrixXd::Identity(n, n), Field::Real};

  parallel_chunks(n_samples, kChunk, threads,
                  [&](std::int64_t c, std::int64_t begin, std::int64_t end) {
                    MomentAccumulator acc;
                    acc.sum = Eigen::VectorXd::Zero(dim);
                    acc.sumsq = Eigen::VectorXd::Zero(dim);
                    for (std::int64_t i = begin; i < end; ++i) {
                      RngStream stream = derive_stream(seed, static_cast<std::uint64_t>(i));
                      FieldMatrix da =
                          sample_matrix_increment(IncrementKind::SkewSymmetric, n, h, stream);
                      FieldMatrix q1 = matrix_step(kind, q0, da, h);
                      Eigen::MatrixXd h1 = q1.mat * lam_diag * q1.mat.transpose();
                      Eigen::MatrixXd d = h1 - lam_diag;
                      Eigen::Map<Eigen::VectorXd> dv(d.data(), dim);
                      acc.sum += dv;
                      acc.sumsq += dv.cwiseProduct(dv);
                      ++acc.count;
                    }
                    parts[c] = std::move(acc);
                  });

  MomentAccumulator total = reduce_chunks(parts, dim);
  const double nn = static_cast<double>(total.count);
  const Eigen::VectorXd mean_d = total.sum / nn;
  Eigen::VectorXd var = (total.sumsq / nn - mean_d.cwiseProduct(mean_d)) * (nn / (nn - 1.0));
  var = var.cwiseMax(0.0);
  const Eigen::VectorXd se = (var / nn).cwiseSqrt() / h;

  FlagDriftResult out;
  out.mean = Eigen::Map<const Eigen::MatrixXd>(mean_d.data(), n, n) / h;
  out.se = Eigen::Map<const Eigen::MatrixXd>(se.data(), n, n);
  out.target = -(static_cast<double>(n) * lam_diag - lambda.sum() * Eigen::MatrixXd::Identity(n, n));

  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      worst = std::max(worst, std::abs(out.mean(i, j) - out.target(i, j)) /
                                  std::max(out.se(i, j), 1e-300));
  out.report.experiment = "flag_drift_check";
  out.report.seed = seed;
  out.report.h = h;
  out.report.n_samples = total.count;
  out.report.checks.push_back({"flag_drift_entrywise_z", worst <= 3.0, worst, 3.0});
  return out;
}

}  // namespace eigenflow
