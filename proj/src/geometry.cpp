#include "eigenflow/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace eigenflow {

ProcessKind ProcessKind::dyson(int beta) {
  if (beta != 1 && beta != 2 && beta != 4)
    throw std::invalid_argument("ProcessKind: Dyson beta must be 1, 2 or 4");
  return {Family::Dyson, beta};
}

DriftVariant DriftVariant::scaled_constant(double c) {
  if (c != 0.25 && c != 0.5 && c != 1.0 && c != 2.0 && c != 4.0)
    throw std::invalid_argument("DriftVariant: scale must be one of 1/4, 1/2, 1, 2, 4");
  return {VariantTag::ScaledConstant, c};
}

Field matrix_field(ProcessKind kind) {
  if (kind.family != Family::Dyson) return Field::Real;
  return kind.beta == 1 ? Field::Real : (kind.beta == 2 ? Field::Complex : Field::Quaternion);
}

namespace {

bool positive_chart(ProcessKind kind) {
  return kind.family == Family::Wishart || kind.family == Family::Dynkin;
}

void check_ordered(const Spectrum& s, double rel_gap_tol) {
  if (s.size() == 0) throw std::invalid_argument("spectrum: empty");
  if (!strictly_descending(s.values))
    throw std::invalid_argument("spectrum: values must be strictly descending");
  if (min_relative_gap(s.values) < rel_gap_tol)
    throw std::invalid_argument("spectrum: degenerate (relative gap below tolerance)");
}

void check_positive(const Spectrum& s) {
  if (s.values[s.size() - 1] <= 0.0)
    throw std::invalid_argument("spectrum: values must be positive for this process");
}

}  // namespace

void require_valid_spectrum(ProcessKind kind, const Spectrum& s, double rel_gap_tol) {
  check_ordered(s, rel_gap_tol);
  if (positive_chart(kind)) check_positive(s);
}

double log_orbit_volume(ProcessKind kind, const Spectrum& s) {
  require_valid_spectrum(kind, s);
  const int n = s.size();
  const Eigen::VectorXd& v = s.values;
  double out = 0.0;
  switch (kind.family) {
    case Family::Dyson:
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) out += 2.0 * kind.beta * std::log(v[a] - v[b]);
      return out;
    case Family::Wishart: {
      const Eigen::VectorXd lam = v.cwiseProduct(v);
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) out += 4.0 * std::log(lam[i] - lam[j]);
      return out;
    }
    case Family::Dynkin: {
      const Eigen::VectorXd lam = v.cwiseProduct(v);
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          out += 4.0 * std::log(lam[i] - lam[j]) - 2.0 * std::log(lam[i] * lam[j]);
      return out;
    }
    case Family::FlagWarmup:
      // Torus-coset fibres all share the same volume.
      return 0.0;
  }
  return out;
}

Eigen::VectorXd grad_log_volume(ProcessKind kind, const Spectrum& s) {
  require_valid_spectrum(kind, s);
  const int n = s.size();
  const Eigen::VectorXd& v = s.values;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  switch (kind.family) {
    case Family::Dyson:
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          if (b != a) g[a] += 2.0 * kind.beta / (v[a] - v[b]);
      return g;
    case Family::Wishart: {
      const Eigen::VectorXd lam = v.cwiseProduct(v);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (j != i) g[i] += 8.0 * v[i] / (lam[i] - lam[j]);
      return g;
    }
    case Family::Dynkin: {
      // sigma_i^2 d/dsigma_i of the log volume (metric-corrected).
      const Eigen::VectorXd lam = v.cwiseProduct(v);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (j != i) g[i] += 4.0 * v[i] * (lam[i] + lam[j]) / (lam[i] - lam[j]);
      return g;
    }
    case Family::FlagWarmup:
      return g;
  }
  return g;
}

namespace {

DriftCoeffs dyson_intro(int beta, const Eigen::VectorXd& lam) {
  const int n = static_cast<int>(lam.size());
  DriftCoeffs c;
  c.diffusion = Eigen::VectorXd::Ones(n);
  c.drift = Eigen::VectorXd::Zero(n);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      if (q != p) c.drift[p] += 0.5 * beta / (lam[p] - lam[q]);
  return c;
}

DriftCoeffs wishart_intro(const Eigen::VectorXd& lam) {
  const int n = static_cast<int>(lam.size());
  DriftCoeffs c;
  c.diffusion = 2.0 * lam.cwiseSqrt();
  c.drift = Eigen::VectorXd::Constant(n, static_cast<double>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (j != i) c.drift[i] += (lam[i] + lam[j]) / (lam[i] - lam[j]);
  return c;
}

// Section-2 Wishart corollary, verbatim (carries the disputed 1/2).
DriftCoeffs wishart_section2(const Eigen::VectorXd& sig) {
  const int n = static_cast<int>(sig.size());
  const Eigen::VectorXd lam = sig.cwiseProduct(sig);
  DriftCoeffs c;
  c.diffusion = Eigen::VectorXd::Ones(n);
  c.drift = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (j != i) c.drift[i] += 0.5 * sig[i] / (lam[i] - lam[j]);
  return c;
}

// Section-1 Dynkin display, verbatim (squared denominator, +lambda dt).
DriftCoeffs dynkin_intro(const Eigen::VectorXd& lam) {
  const int n = static_cast<int>(lam.size());
  DriftCoeffs c;
  c.diffusion = 2.0 * lam;
  c.drift = lam;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (j != i) {
        const double d = lam[i] - lam[j];
        c.drift[i] += (lam[i] + lam[j]) * lam[i] / (d * d);
      }
  return c;
}

// Section-2 Dynkin corollary, verbatim (missing the quotient-BM term).
DriftCoeffs dynkin_section2(const Eigen::VectorXd& sig) {
  const int n = static_cast<int>(sig.size());
  const Eigen::VectorXd lam = sig.cwiseProduct(sig);
  DriftCoeffs c;
  c.diffusion = sig;
  c.drift = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (j != i) {
        const double d = lam[i] - lam[j];
        const double ratio = (lam[i] + lam[j]) / d;
        c.drift[i] += 0.5 * (ratio * ratio * sig[i] - 2.0 * (lam[i] + lam[j]) * lam[j] * sig[i] / (d * d));
      }
  return c;
}

DriftCoeffs dynkin_rw(const Eigen::VectorXd& gam) {
  const int n = static_cast<int>(gam.size());
  DriftCoeffs c;
  c.diffusion = Eigen::VectorXd::Ones(n);
  c.drift = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (j != i) c.drift[i] += 0.5 / std::tanh(gam[i] - gam[j]);
  return c;
}

DriftCoeffs trusted_drift(ProcessKind kind, const Eigen::VectorXd& x) {
  switch (kind.family) {
    case Family::Dyson:
      return dyson_intro(kind.beta, x);
    case Family::Wishart:
      return wishart_intro(x);
    case Family::Dynkin:
      return dynkin_rw(x);
    case Family::FlagWarmup:
      break;
  }
  DriftCoeffs c;
  c.drift = Eigen::VectorXd::Zero(x.size());
  c.diffusion = Eigen::VectorXd::Zero(x.size());
  return c;
}

}  // namespace

DriftCoeffs spectral_drift(ProcessKind kind, DriftVariant variant, const Spectrum& s) {
  check_ordered(s, 1e-8);
  const Eigen::VectorXd& x = s.values;

  if (variant.tag == VariantTag::ScaledConstant) {
    // Trusted chart: lambda for Dyson/Wishart, gamma for Dynkin.
    if (kind.family == Family::Wishart) check_positive(s);
    DriftCoeffs c = trusted_drift(kind, x);
    c.drift *= variant.scale;
    return c;
  }

  switch (kind.family) {
    case Family::Dyson:
      if (variant.tag == VariantTag::RWForm)
        throw std::invalid_argument("spectral_drift: RWForm is Dynkin-only");
      return dyson_intro(kind.beta, x);  // the section-2 corollary equals the intro display
    case Family::Wishart:
      if (variant.tag == VariantTag::IntroForm) {
        check_positive(s);
        return wishart_intro(x);
      }
      if (variant.tag == VariantTag::Section2Form) {
        check_positive(s);
        return wishart_section2(x);
      }
      throw std::invalid_argument("spectral_drift: invalid variant for Wishart");
    case Family::Dynkin:
      if (variant.tag == VariantTag::IntroForm) {
        check_positive(s);
        return dynkin_intro(x);
      }
      if (variant.tag == VariantTag::Section2Form) {
        check_positive(s);
        return dynkin_section2(x);
      }
      return dynkin_rw(x);
    case Family::FlagWarmup: {
      if (variant.tag != VariantTag::IntroForm)
        throw std::invalid_argument("spectral_drift: flag warm-up supports IntroForm only");
      DriftCoeffs c;  // isospectral orbit: the spectrum does not move
      c.drift = Eigen::VectorXd::Zero(x.size());
      c.diffusion = Eigen::VectorXd::Zero(x.size());
      return c;
    }
  }
  throw std::logic_error("spectral_drift: unreachable");
}

DriftCoeffs dynkin_lambda_drift_from_rw(const Spectrum& lambda) {
  check_ordered(lambda, 1e-8);
  check_positive(lambda);
  const Eigen::VectorXd& lam = lambda.values;
  const int n = static_cast<int>(lam.size());
  DriftCoeffs c;
  c.diffusion = 2.0 * lam;
  c.drift = 2.0 * lam;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (j != i) c.drift[i] += lam[i] * (lam[i] + lam[j]) / (lam[i] - lam[j]);
  return c;
}

DriftCoeffs wishart_sigma_drift_consistent(const Spectrum& sigma) {
  check_ordered(sigma, 1e-8);
  check_positive(sigma);
  const Eigen::VectorXd& sig = sigma.values;
  const Eigen::VectorXd lam = sig.cwiseProduct(sig);
  const int n = static_cast<int>(sig.size());
  DriftCoeffs c;
  c.diffusion = Eigen::VectorXd::Ones(n);
  c.drift = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (j != i) c.drift[i] += sig[i] / (lam[i] - lam[j]);
  return c;
}

std::pair<double, double> coth_identity(double gamma_i, double gamma_j) {
  if (gamma_i == gamma_j)
    throw std::invalid_argument("coth_identity: arguments must differ");
  const double lhs = 1.0 / std::tanh(gamma_i - gamma_j);
  const double li = std::exp(2.0 * gamma_i);
  const double lj = std::exp(2.0 * gamma_j);
  const double rhs = (li + lj) / (li - lj);
  return {lhs, rhs};
}

namespace {

// Horizontal part of an embedded-Hermitian tangent at a Dyson state:
// the span of the deduplicated eigenprojectors. Basis-free, so it covers
// beta = 1, 2, 4 uniformly.
Eigen::MatrixXd dyson_horizontal(const EigSym& es, int mult, const Eigen::MatrixXd& tangent) {
  const int n = static_cast<int>(es.values.values.size());
  const Eigen::MatrixXd w = es.vectors.transpose() * tangent * es.vectors;
  Eigen::VectorXd d(static_cast<Eigen::Index>(n) * mult);
  for (int k = 0; k < n; ++k) {
    const double avg = w.diagonal().segment(static_cast<Eigen::Index>(k) * mult, mult).mean();
    d.segment(static_cast<Eigen::Index>(k) * mult, mult).setConstant(avg);
  }
  return es.vectors * d.asDiagonal() * es.vectors.transpose();
}

}  // namespace

FieldMatrix vertical_project(ProcessKind kind, const FieldMatrix& base, const FieldMatrix& tangent) {
  if (base.rows() != tangent.rows() || base.cols() != tangent.cols())
    throw std::invalid_argument("vertical_project: tangent shape mismatch");
  if (base.field != tangent.field)
    throw std::invalid_argument("vertical_project: embedding tag mismatch");

  switch (kind.family) {
    case Family::Dyson: {
      EigSym es = eig_sym(base);
      if (min_relative_gap(es.values.values) < 1e-8)
        throw std::invalid_argument("vertical_project: degenerate spectrum");
      FieldMatrix out;
      out.field = tangent.field;
      out.mat = tangent.mat - dyson_horizontal(es, field_multiplicity(base.field), tangent.mat);
      return out;
    }
    case Family::Wishart: {
      SvdFrames f = svd_frames(base.mat);
      if (min_relative_gap(f.sigma) < 1e-8)
        throw std::invalid_argument("vertical_project: degenerate spectrum");
      Eigen::MatrixXd t = f.u.transpose() * tangent.mat * f.v;
      t.diagonal().setZero();
      return {f.u * t * f.v.transpose(), Field::Real};
    }
    case Family::Dynkin: {
      SvdFrames f = svd_frames(base.mat);
      if (min_relative_gap(f.sigma) < 1e-8)
        throw std::invalid_argument("vertical_project: degenerate spectrum");
      // Tangent at Sigma through the isometry, then left-trivialised.
      Eigen::MatrixXd xi = f.sigma.cwiseInverse().asDiagonal() *
                           (f.u.transpose() * tangent.mat * f.v);
      xi.diagonal().setZero();
      return {f.u * (f.sigma.asDiagonal() * xi) * f.v.transpose(), Field::Real};
    }
    case Family::FlagWarmup:
      throw std::invalid_argument("vertical_project: flag warm-up fibres live on the rotation group");
  }
  throw std::logic_error("vertical_project: unreachable");
}

double quotient_inner(ProcessKind kind, const Spectrum& s, const Eigen::VectorXd& u,
                      const Eigen::VectorXd& v) {
  if (u.size() != v.size() || u.size() != s.values.size())
    throw std::invalid_argument("quotient_inner: dimension mismatch");
  if (kind.family == Family::Dynkin)
    return (u.cwiseProduct(v).cwiseQuotient(s.values.cwiseProduct(s.values))).sum();
  return u.dot(v);
}

double ambient_inner(ProcessKind kind, const FieldMatrix& base, const FieldMatrix& x,
                     const FieldMatrix& y) {
  if (kind.family != Family::Dynkin) return frobenius_inner(x, y);
  const Eigen::MatrixXd minv = base.mat.inverse();
  return ((minv * x.mat).cwiseProduct(minv * y.mat)).sum();
}

MeanCurvature mean_curvature_at_diag(ProcessKind kind, const Spectrum& s) {
  require_valid_spectrum(kind, s);
  const int n = s.size();
  const Eigen::VectorXd& v = s.values;
  MeanCurvature mc;
  mc.trace = Eigen::VectorXd::Zero(n);
  switch (kind.family) {
    case Family::Dyson:
      mc.fiber_dim = kind.beta * n * (n - 1) / 2;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          if (b != a) mc.trace[a] -= kind.beta / (v[a] - v[b]);
      return mc;
    case Family::Wishart: {
      mc.fiber_dim = n * (n - 1);
      const Eigen::VectorXd lam = v.cwiseProduct(v);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (j != i) mc.trace[i] -= 2.0 * v[i] / (lam[i] - lam[j]);
      return mc;
    }
    case Family::Dynkin: {
      mc.fiber_dim = n * (n - 1);
      const Eigen::VectorXd lam = v.cwiseProduct(v);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (j != i) mc.trace[i] -= v[i] * (lam[i] + lam[j]) / (lam[i] - lam[j]);
      return mc;
    }
    case Family::FlagWarmup:
      // Totally geodesic fibres.
      mc.fiber_dim = n * (n - 1) / 2;
      return mc;
  }
  throw std::logic_error("mean_curvature_at_diag: unreachable");
}

}  // namespace eigenflow
