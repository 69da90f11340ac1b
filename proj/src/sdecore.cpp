#include "eigenflow/sdecore.hpp"

#include <cmath>
#include <stdexcept>

namespace eigenflow {

double adapt_h(const Spectrum& s, const StepControl& ctrl) {
  if (!(ctrl.h_min > 0.0) || ctrl.h_min > ctrl.h0 || !(ctrl.gap_threshold > 0.0))
    throw std::invalid_argument("adapt_h: invalid step control");
  const double g = min_relative_gap(s.values);
  if (g >= ctrl.gap_threshold) return ctrl.h0;
  if (!(g > 0.0)) return ctrl.h_min;
  const int k = static_cast<int>(std::ceil(std::log2(ctrl.gap_threshold / g) - 1e-9));
  return std::max(ctrl.h0 * std::ldexp(1.0, -k), ctrl.h_min);
}

ProjectionMode ProjectionMode::scaled(double r) {
  if (!(r > 0.0)) throw std::invalid_argument("ProjectionMode: r must be positive");
  return {false, r};
}

namespace {

void check_step_inputs(ProcessKind kind, const FieldMatrix& state, const FieldMatrix& dW) {
  if (state.rows() != dW.rows() || state.cols() != dW.cols())
    throw std::invalid_argument("matrix_step: increment shape mismatch");
  const Field want = (kind.family == Family::Dyson) ? matrix_field(kind) : Field::Real;
  if (kind.family == Family::Dyson && dW.field != want)
    throw std::invalid_argument("matrix_step: wrong increment kind for this process");
  if (kind.family != Family::Dyson && dW.field != Field::Real)
    throw std::invalid_argument("matrix_step: expected a real increment");
}

}  // namespace

FieldMatrix matrix_step(ProcessKind kind, const FieldMatrix& state, const FieldMatrix& dW, double h) {
  check_step_inputs(kind, state, dW);
  FieldMatrix out = state;
  switch (kind.family) {
    case Family::Dyson:
    case Family::Wishart:
      out.mat += dW.mat;
      return out;
    case Family::Dynkin:
      // dG = G o dW; dW dW^ = I h gives the Ito correction (h/2) G.
      out.mat += state.mat * dW.mat + 0.5 * h * state.mat;
      return out;
    case Family::FlagWarmup: {
      // dQ = o dA Q with dA dA = -(n-1) I h.
      const double n = static_cast<double>(state.rows());
      out.mat += dW.mat * state.mat - 0.5 * (n - 1.0) * h * state.mat;
      return out;
    }
  }
  throw std::logic_error("matrix_step: unreachable");
}

namespace {

bool chart_requires_positive(ProcessKind kind, DriftVariant variant) {
  if (kind.family == Family::Wishart) return true;  // lambda or sigma chart, both positive
  if (kind.family == Family::Dynkin)
    return variant.tag == VariantTag::IntroForm || variant.tag == VariantTag::Section2Form;
  return false;
}

}  // namespace

std::optional<Spectrum> spectral_step(ProcessKind kind, DriftVariant variant, const Spectrum& s,
                                      const Eigen::VectorXd& xi, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("spectral_step: h must be positive");
  if (xi.size() != s.values.size())
    throw std::invalid_argument("spectral_step: noise dimension mismatch");
  const DriftCoeffs c = spectral_drift(kind, variant, s);
  Spectrum out = s;
  out.values = s.values + std::sqrt(h) * c.diffusion.cwiseProduct(xi) + h * c.drift;
  // Landing inside the degeneracy guard counts as a collision so the caller
  // retries rather than handing the drift formulas a near-degenerate state.
  if (!strictly_descending(out.values) || min_relative_gap(out.values) < 1e-8)
    return std::nullopt;
  if (chart_requires_positive(kind, variant) && out.values[out.size() - 1] <= 0.0)
    return std::nullopt;
  return out;
}

FieldMatrix projected_step(ProjectionMode mode, ProcessKind kind, const FieldMatrix& state,
                           const FieldMatrix& dW, double h) {
  if (kind.family == Family::Dynkin && mode.vertical_only) {
    // Left-invariant increment at the current state, then fibre projection.
    FieldMatrix tangent{state.mat * dW.mat, Field::Real};
    FieldMatrix v = vertical_project(kind, state, tangent);
    FieldMatrix out = state;
    out.mat += v.mat;
    return out;
  }
  if (!mode.vertical_only && kind.family != Family::Dyson)
    throw std::invalid_argument("projected_step: scaled mode is implemented for Dyson only");

  if (kind.family == Family::Dyson) {
    EigSym es = eig_sym(state);
    if (min_relative_gap(es.values.values) < 1e-8)
      throw std::invalid_argument("projected_step: degenerate spectrum");
    const int mult = field_multiplicity(state.field);
    const int n = es.values.size();

    // Horizontal part in the eigenframe: deduplicated eigenprojector averages.
    const Eigen::MatrixXd w = es.vectors.transpose() * dW.mat * es.vectors;
    Eigen::VectorXd hor(static_cast<Eigen::Index>(n) * mult);
    for (int k = 0; k < n; ++k) {
      const double avg = w.diagonal().segment(static_cast<Eigen::Index>(k) * mult, mult).mean();
      hor.segment(static_cast<Eigen::Index>(k) * mult, mult).setConstant(avg);
    }

    Eigen::VectorXd frame_diag;
    if (mode.vertical_only) {
      frame_diag = -hor;  // state + dW - H(dW) rearranged below
    } else {
      const double inv_r = 1.0 / mode.r;
      frame_diag = (inv_r - 1.0) * hor;
      if (mode.r != 1.0) {
        // Horizontal lift of the drift field; see header.
        const DriftCoeffs c = spectral_drift(kind, DriftVariant::intro(), es.values);
        const double f = (inv_r * inv_r - 1.0) * h;
        for (int k = 0; k < n; ++k)
          frame_diag.segment(static_cast<Eigen::Index>(k) * mult, mult).array() += f * c.drift[k];
      }
    }
    FieldMatrix out = state;
    out.mat += dW.mat + es.vectors * frame_diag.asDiagonal() * es.vectors.transpose();
    return out;
  }

  // Wishart vertical-only.
  FieldMatrix v = vertical_project(kind, state, dW);
  FieldMatrix out = state;
  out.mat += v.mat;
  return out;
}

}  // namespace eigenflow
