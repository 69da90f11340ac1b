#include "eigenflow/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace eigenflow {

void check_embedding_dims(const FieldMatrix& a) {
  const int m = field_multiplicity(a.field);
  if (a.rows() != a.cols())
    throw std::invalid_argument("FieldMatrix: expected square matrix");
  if (a.rows() % m != 0)
    throw std::invalid_argument("FieldMatrix: dimensions inconsistent with embedding tag");
}

bool strictly_descending(const Eigen::VectorXd& v) {
  for (int i = 0; i + 1 < v.size(); ++i)
    if (!(v[i] > v[i + 1])) return false;
  return true;
}

double min_relative_gap(const Eigen::VectorXd& v) {
  if (v.size() < 2) return std::numeric_limits<double>::infinity();
  const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
  double g = std::numeric_limits<double>::infinity();
  for (int i = 0; i + 1 < v.size(); ++i) g = std::min(g, (v[i] - v[i + 1]) / scale);
  return g;
}

namespace {

// One cyclic Jacobi pass; returns the accumulated frame in q when requested.
// Convergence: off-diagonal Frobenius mass <= 1e-13 * ||a||_F, at most 30 sweeps.
void jacobi_sweeps(Eigen::MatrixXd& a, Eigen::MatrixXd* q) {
  const int n = static_cast<int>(a.rows());
  if (q) *q = Eigen::MatrixXd::Identity(n, n);
  if (n < 2) return;

  const double norm = a.norm();
  const double tol = 1e-13 * std::max(norm, std::numeric_limits<double>::min());
  const int max_sweeps = 30;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int r = p + 1; r < n; ++r) off += a(p, r) * a(p, r);
    off = std::sqrt(2.0 * off);
    if (off <= tol) return;

    for (int p = 0; p < n - 1; ++p) {
      for (int r = p + 1; r < n; ++r) {
        const double apq = a(p, r);
        if (apq == 0.0) continue;
        const double theta = (a(r, r) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, r);
          a(k, p) = c * akp - s * akq;
          a(k, r) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(r, k);
          a(p, k) = c * apk - s * aqk;
          a(r, k) = s * apk + c * aqk;
        }
        if (q) {
          for (int k = 0; k < n; ++k) {
            const double qkp = (*q)(k, p), qkq = (*q)(k, r);
            (*q)(k, p) = c * qkp - s * qkq;
            (*q)(k, r) = s * qkp + c * qkq;
          }
        }
      }
    }
  }

  double off = 0.0;
  for (int p = 0; p < n; ++p)
    for (int r = p + 1; r < n; ++r) off += a(p, r) * a(p, r);
  if (std::sqrt(2.0 * off) > tol)
    throw std::runtime_error("eig_sym: Jacobi sweeps failed to converge");
}

void require_symmetric(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("eig_sym: non-square input");
  const double scale = std::max(a.norm(), 1.0);
  if ((a - a.transpose()).norm() > 1e-12 * scale)
    throw std::invalid_argument("eig_sym: input is not symmetric");
}

}  // namespace

// Collapse exact multiplets of an embedded spectrum: consecutive blocks of
// size `mult` whose spread stays within 1e-8 * max(1, |value|).
Eigen::VectorXd dedup_embedded_values(const Eigen::VectorXd& raw, int mult) {
  if (mult == 1) return raw;
  if (raw.size() % mult != 0)
    throw std::invalid_argument("dedup_embedded_values: size not divisible by multiplicity");
  const int n = static_cast<int>(raw.size()) / mult;
  Eigen::VectorXd out(n);
  for (int k = 0; k < n; ++k) {
    const auto block = raw.segment(static_cast<Eigen::Index>(k) * mult, mult);
    const double spread = block.maxCoeff() - block.minCoeff();
    const double scale = std::max(1.0, block.cwiseAbs().maxCoeff());
    if (spread > 1e-8 * scale)
      throw std::runtime_error("eig_sym: embedded multiplet pairing failed (degenerate spectrum?)");
    out[k] = block.mean();
  }
  return out;
}

EigSym eig_sym(const FieldMatrix& a) {
  check_embedding_dims(a);
  require_symmetric(a.mat);

  Eigen::MatrixXd d = a.mat;
  Eigen::MatrixXd q;
  jacobi_sweeps(d, &q);

  const int n = static_cast<int>(d.rows());
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int i, int j) { return d(i, i) > d(j, j); });

  EigSym out;
  out.raw_values.resize(n);
  out.vectors.resize(n, n);
  for (int k = 0; k < n; ++k) {
    out.raw_values[k] = d(idx[k], idx[k]);
    out.vectors.col(k) = q.col(idx[k]);
  }
  const int mult = field_multiplicity(a.field);
  out.values.kind = SpectrumKind::Eigenvalues;
  out.values.values = dedup_embedded_values(out.raw_values, mult);
  return out;
}

EigSym eig_sym(const Eigen::MatrixXd& a) { return eig_sym(FieldMatrix{a, Field::Real}); }

Eigen::VectorXd symmetric_eigenvalues(Eigen::MatrixXd a) {
  require_symmetric(a);
  jacobi_sweeps(a, nullptr);
  Eigen::VectorXd vals = a.diagonal();
  std::sort(vals.data(), vals.data() + vals.size(), std::greater<double>());
  return vals;
}

Spectrum singular_values(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("singular_values: non-square input");
  Eigen::VectorXd ev = symmetric_eigenvalues(m * m.transpose());
  Spectrum s;
  s.kind = SpectrumKind::SingularValues;
  s.values = ev.cwiseMax(0.0).cwiseSqrt();
  return s;
}

SvdFrames svd_frames(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("svd_frames: non-square input");
  EigSym es = eig_sym(m * m.transpose());
  SvdFrames f;
  f.u = es.vectors;
  f.sigma = es.raw_values.cwiseMax(0.0).cwiseSqrt();
  if (f.sigma.minCoeff() <= 1e-12 * std::max(f.sigma.maxCoeff(), 1.0))
    throw std::invalid_argument("svd_frames: matrix is numerically singular");
  f.v = m.transpose() * f.u * f.sigma.cwiseInverse().asDiagonal();
  return f;
}

Eigen::MatrixXd embed_complex(const Eigen::MatrixXd& re, const Eigen::MatrixXd& im) {
  if (re.rows() != im.rows() || re.cols() != im.cols())
    throw std::invalid_argument("embed_complex: shape mismatch");
  const Eigen::Index n = re.rows(), m = re.cols();
  Eigen::MatrixXd out(2 * n, 2 * m);
  out.topLeftCorner(n, m) = re;
  out.topRightCorner(n, m) = -im;
  out.bottomLeftCorner(n, m) = im;
  out.bottomRightCorner(n, m) = re;
  return out;
}

Eigen::MatrixXd embed_quaternion(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                 const Eigen::MatrixXd& c, const Eigen::MatrixXd& d) {
  // q = a + bi + cj + dk via the complex 2n x 2n representation
  // [[a+ib, c+id], [-c+id, a-ib]].
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd re(2 * n, 2 * n), im(2 * n, 2 * n);
  re.topLeftCorner(n, n) = a;
  re.topRightCorner(n, n) = c;
  re.bottomLeftCorner(n, n) = -c;
  re.bottomRightCorner(n, n) = a;
  im.topLeftCorner(n, n) = b;
  im.topRightCorner(n, n) = d;
  im.bottomLeftCorner(n, n) = d;
  im.bottomRightCorner(n, n) = -b;
  return embed_complex(re, im);
}

FieldMatrix embed_scalar_diag(const Eigen::VectorXd& values, Field field) {
  const int mult = field_multiplicity(field);
  const int n = static_cast<int>(values.size());
  Eigen::VectorXd rep(static_cast<Eigen::Index>(n) * mult);
  for (int c = 0; c < mult; ++c) rep.segment(static_cast<Eigen::Index>(c) * n, n) = values;
  FieldMatrix out;
  out.field = field;
  out.mat = rep.asDiagonal();
  return out;
}

}  // namespace eigenflow
