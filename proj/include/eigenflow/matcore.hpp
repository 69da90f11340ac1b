// Dense small-matrix kernels: Frobenius inner product, cyclic-Jacobi
// symmetric eigensolver, singular values. Complex and quaternion matrices
// are handled through their real embeddings so every kernel runs on real
// arithmetic.
#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <utility>

namespace eigenflow {

// Scalar field of a stored matrix. The storage is always real:
// n x n complex -> 2n x 2n real [[A,-B],[B,A]], n x n quaternion ->
// 4n x 4n real through the complex 2n x 2n representation.
enum class Field { Real, Complex, Quaternion };

constexpr int field_multiplicity(Field f) {
  return f == Field::Real ? 1 : (f == Field::Complex ? 2 : 4);
}

struct FieldMatrix {
  Eigen::MatrixXd mat;
  Field field = Field::Real;

  int rows() const { return static_cast<int>(mat.rows()); }
  int cols() const { return static_cast<int>(mat.cols()); }
  // Dimension over the tagged field.
  int logical_dim() const { return rows() / field_multiplicity(field); }
};

void check_embedding_dims(const FieldMatrix& a);

enum class SpectrumKind { Eigenvalues, SingularValues };

// Strictly descending real spectrum; the quotient-space state.
struct Spectrum {
  Eigen::VectorXd values;
  SpectrumKind kind = SpectrumKind::Eigenvalues;

  int size() const { return static_cast<int>(values.size()); }
};

bool strictly_descending(const Eigen::VectorXd& v);

// Smallest neighbour gap divided by max(1, |v|_inf); +inf when n < 2.
double min_relative_gap(const Eigen::VectorXd& v);

// <A,B> = Re tr(A B^*) on the stored real representation.
template <typename DerivedA, typename DerivedB>
double frobenius_inner(const Eigen::MatrixBase<DerivedA>& a,
                       const Eigen::MatrixBase<DerivedB>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("frobenius_inner: shape mismatch");
  return a.derived().cwiseProduct(b.derived()).sum();
}

inline double frobenius_inner(const FieldMatrix& a, const FieldMatrix& b) {
  if (a.field != b.field)
    throw std::invalid_argument("frobenius_inner: embedding tag mismatch");
  return frobenius_inner(a.mat, b.mat);
}

struct EigSym {
  Spectrum values;             // deduplicated per the field tag
  Eigen::VectorXd raw_values;  // ambient eigenvalues, descending
  Eigen::MatrixXd vectors;     // ambient orthogonal frame, column k <-> raw_values[k]
};

// Symmetric (embedded-Hermitian) eigendecomposition by cyclic Jacobi sweeps.
// Embedded complex/quaternion inputs collapse their 2- resp. 4-fold
// eigenvalue multiplicity (pairing tolerance 1e-8 relative).
EigSym eig_sym(const FieldMatrix& a);
EigSym eig_sym(const Eigen::MatrixXd& a);

// Eigenvalues only (descending, no dedup, no frame); cheaper in hot loops.
Eigen::VectorXd symmetric_eigenvalues(Eigen::MatrixXd a);

// Collapse a descending embedded spectrum into its deduplicated values
// (consecutive blocks of size mult, spread <= 1e-8 relative).
Eigen::VectorXd dedup_embedded_values(const Eigen::VectorXd& raw_descending, int mult);

// Descending singular values of a square real matrix, sqrt of eig(m m^T).
Spectrum singular_values(const Eigen::MatrixXd& m);

struct SvdFrames {
  Eigen::MatrixXd u;
  Eigen::VectorXd sigma;  // descending, > 0
  Eigen::MatrixXd v;      // m = u * diag(sigma) * v^T
};

// Frames via eig(m m^T); requires m invertible (sigma_min > 1e-12 sigma_max).
SvdFrames svd_frames(const Eigen::MatrixXd& m);

// Real embeddings.
Eigen::MatrixXd embed_complex(const Eigen::MatrixXd& re, const Eigen::MatrixXd& im);
Eigen::MatrixXd embed_quaternion(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                 const Eigen::MatrixXd& c, const Eigen::MatrixXd& d);

// diag(values) embedded with the field's multiplicity.
FieldMatrix embed_scalar_diag(const Eigen::VectorXd& values, Field field);

}  // namespace eigenflow
