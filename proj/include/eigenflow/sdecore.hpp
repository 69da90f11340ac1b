// Time-stepping: Euler-Maruyama for the spectral SDEs, Ito-corrected
// steppers for the matrix-level processes (group SDEs converted from
// Stratonovich form analytically), projected steppers for the
// vertical-only and scaled-metric processes, and step-size adaptation.
#pragma once

#include "eigenflow/geometry.hpp"
#include "eigenflow/matcore.hpp"

#include <optional>

namespace eigenflow {

struct StepControl {
  double h0 = 1e-3;
  double h_min = 1e-8;
  double gap_threshold = 0.05;  // relative gap below which h halves
  int max_halvings = 20;        // per-step retry budget on ordering violations
};

// h0 halved once per factor of two that the minimum relative gap sits below
// gap_threshold, floored at h_min. Deterministic.
double adapt_h(const Spectrum& s, const StepControl& ctrl);

enum class Level { Matrix, Spectral };

struct PathState {
  double time = 0.0;
  Level level = Level::Matrix;
  FieldMatrix matrix;
  Spectrum spectrum;
  bool collided = false;
};

// One Euler step of the matrix-level process:
//   Dyson        H + dW                      (GOE/GUE/GSE increment)
//   Wishart      W + dW                      (Ginibre)
//   Dynkin       G + G dW + (h/2) G          (Ito form of dG = G o dW)
//   FlagWarmup   Q + dA Q - ((n-1)/2) h Q    (Ito form of dQ = o dA Q)
FieldMatrix matrix_step(ProcessKind kind, const FieldMatrix& state, const FieldMatrix& dW, double h);

// Euler-Maruyama x_i <- x_i + a_i sqrt(h) xi_i + b_i h. Returns nullopt when
// the result leaves the chart (ordering or required positivity violated),
// signalling the caller to retry with a smaller h.
std::optional<Spectrum> spectral_step(ProcessKind kind, DriftVariant variant, const Spectrum& s,
                                      const Eigen::VectorXd& xi, double h);

struct ProjectionMode {
  bool vertical_only = true;
  double r = 1.0;

  static ProjectionMode vertical() { return {true, 1.0}; }
  static ProjectionMode scaled(double r);
};

// vertical_only: state + P_V(dW).
// scaled(r):     state + (1/r) P_H(dW) + P_V(dW) + (1/r^2 - 1) h L(state),
// where L is the horizontal lift of the spectral drift field; the
// deterministic term is the Ito correction that makes the step sample the
// Brownian motion of the horizontally scaled metric (it vanishes at r = 1).
// Scaled mode is implemented for Dyson.
FieldMatrix projected_step(ProjectionMode mode, ProcessKind kind, const FieldMatrix& state,
                           const FieldMatrix& dW, double h);

}  // namespace eigenflow
