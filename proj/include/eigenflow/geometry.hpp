// Orbit volumes, log-volume gradients in the quotient metric, spectral
// drift formulas in every published variant, vertical/horizontal
// projections, quotient metric tensors, and fibre mean curvature at
// diagonal representatives.
#pragma once

#include "eigenflow/matcore.hpp"

#include <utility>

namespace eigenflow {

enum class Family { Dyson, Wishart, Dynkin, FlagWarmup };

struct ProcessKind {
  Family family = Family::Dyson;
  int beta = 2;  // Dyson only; 1 = GOE, 2 = GUE, 4 = GSE

  static ProcessKind dyson(int beta = 2);
  static ProcessKind wishart() { return {Family::Wishart, 0}; }
  static ProcessKind dynkin() { return {Family::Dynkin, 0}; }
  static ProcessKind flag_warmup() { return {Family::FlagWarmup, 0}; }

  bool operator==(const ProcessKind&) const = default;
};

// Field of the matrix-level state (Dyson runs over R/C/H by beta).
Field matrix_field(ProcessKind kind);

// Drift-formula variants as printed:
//   IntroForm      the section-1 displayed SDEs (lambda coordinates; the
//                  trusted convention for Dyson and Wishart).
//   Section2Form   the section-2 corollaries, verbatim (sigma coordinates
//                  for Wishart/Dynkin), kept for adjudication.
//   RWForm         Dynkin in log coordinates gamma = log(sigma); the
//                  trusted Dynkin convention.
//   ScaledConstant the kind's trusted drift scaled by c, as a
//                  constant-factor candidate generator.
enum class VariantTag { IntroForm, Section2Form, RWForm, ScaledConstant };

struct DriftVariant {
  VariantTag tag = VariantTag::IntroForm;
  double scale = 1.0;  // ScaledConstant only; one of 1/4, 1/2, 1, 2, 4

  static DriftVariant intro() { return {VariantTag::IntroForm, 1.0}; }
  static DriftVariant section2() { return {VariantTag::Section2Form, 1.0}; }
  static DriftVariant rw() { return {VariantTag::RWForm, 1.0}; }
  static DriftVariant scaled_constant(double c);

  bool operator==(const DriftVariant&) const = default;
};

// Per-component coefficients of dx_i = diffusion_i dB_i + drift_i dt.
struct DriftCoeffs {
  Eigen::VectorXd drift;
  Eigen::VectorXd diffusion;
};

// Rejects spectra whose relative gap is below tol (degenerate orbit), and
// nonpositive values where the kind requires positivity.
void require_valid_spectrum(ProcessKind kind, const Spectrum& s, double rel_gap_tol = 1e-8);

// Log orbit volume up to the kind-independent constant. Input chart:
// Dyson eigenvalues lambda; Wishart/Dynkin singular values sigma
// (lambda = sigma^2 internally). Flag warm-up fibres are torus cosets of
// constant volume, so the function is 0.
double log_orbit_volume(ProcessKind kind, const Spectrum& s);

// Gradient of log_orbit_volume with respect to the kind's quotient metric:
// Euclidean partials in lambda (Dyson) resp. sigma (Wishart); for Dynkin
// the metric at Sigma is <u,v> = sum u_i v_i / sigma_i^2, so component i is
// sigma_i^2 d/dsigma_i.
Eigen::VectorXd grad_log_volume(ProcessKind kind, const Spectrum& s);

// Published drift/diffusion per (kind, variant). Charts: Dyson lambda;
// Wishart Intro lambda, Section2 sigma; Dynkin Intro lambda, Section2
// sigma, RW gamma; ScaledConstant uses the trusted chart (Dyson/Wishart
// lambda, Dynkin gamma). FlagWarmup is isospectral: both vectors are zero.
DriftCoeffs spectral_drift(ProcessKind kind, DriftVariant variant, const Spectrum& s);

// Ito image of the trusted RW form through lambda = exp(2 gamma):
// a_i = 2 lambda_i, b_i = lambda_i sum_j coth(gamma_i - gamma_j) + 2 lambda_i.
DriftCoeffs dynkin_lambda_drift_from_rw(const Spectrum& lambda);

// Wishart sigma drift consistent with the intro/Bru lambda form:
// a_i = 1, b_i = sum_{j != i} sigma_i / (lambda_i - lambda_j).
DriftCoeffs wishart_sigma_drift_consistent(const Spectrum& sigma);

// Evaluates coth(gi - gj) and (li + lj)/(li - lj) with l = exp(2 g) by two
// independent routes; the caller asserts they agree.
std::pair<double, double> coth_identity(double gamma_i, double gamma_j);

// Orthogonal projection of a tangent onto the fibre tangent space at base,
// in the kind's metric. Dyson: kill the (embedded) eigenprojector-diagonal
// part in the eigenframe; Wishart: kill the diagonal in singular frames;
// Dynkin: left-trivialise at the diagonal representative and kill diag.
FieldMatrix vertical_project(ProcessKind kind, const FieldMatrix& base, const FieldMatrix& tangent);

// Quotient metric on spectrum tangents: Euclidean for Dyson/Wishart,
// sum u_i v_i / sigma_i^2 for Dynkin.
double quotient_inner(ProcessKind kind, const Spectrum& s, const Eigen::VectorXd& u,
                      const Eigen::VectorXd& v);

// Process metric on matrix tangents at base: Frobenius for Dyson/Wishart,
// tr(M^-1 A (M^-1 B)^T) for Dynkin.
double ambient_inner(ProcessKind kind, const FieldMatrix& base, const FieldMatrix& x,
                     const FieldMatrix& y);

struct MeanCurvature {
  Eigen::VectorXd trace;  // unnormalised second-fundamental-form trace, diagonal vector
  int fiber_dim;          // divide by this for the normalised mean curvature
};

// Closed-form fibre curvature trace at the diagonal representative.
MeanCurvature mean_curvature_at_diag(ProcessKind kind, const Spectrum& s);

}  // namespace eigenflow
