#include "eigenflow/randmat.hpp"

#include <cmath>
#include <stdexcept>

namespace eigenflow {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t avalanche(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t RngStream::next_u64() {
  ++counter;
  return avalanche(base + counter * kGolden);
}

double RngStream::next_uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_normal() {
  if (has_cached) {
    has_cached = false;
    return cached_normal;
  }
  double u, v, s;
  do {
    u = 2.0 * next_uniform() - 1.0;
    v = 2.0 * next_uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  cached_normal = v * f;
  has_cached = true;
  return u * f;
}

RngStream derive_stream(std::uint64_t master_seed, std::uint64_t path_index) {
  RngStream s;
  s.master_seed = master_seed;
  s.stream_index = path_index;
  s.base = avalanche(master_seed ^ (kGolden * path_index));
  return s;
}

Field increment_field(IncrementKind kind) {
  switch (kind) {
    case IncrementKind::GUE:
      return Field::Complex;
    case IncrementKind::GSE:
      return Field::Quaternion;
    default:
      return Field::Real;
  }
}

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

// Fill orders are fixed: diagonal first, then off-diagonal entries in
// row-major (a < b) order, with the per-entry real components in sequence.
Eigen::MatrixXd unit_goe(int n, RngStream& g) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = g.next_normal();
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      const double x = g.next_normal() * kInvSqrt2;
      m(a, b) = x;
      m(b, a) = x;
    }
  return m;
}

Eigen::MatrixXd unit_gue(int n, RngStream& g) {
  Eigen::MatrixXd re = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd im = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) re(i, i) = g.next_normal();
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      const double x = g.next_normal() * kInvSqrt2;
      const double y = g.next_normal() * kInvSqrt2;
      re(a, b) = x;
      re(b, a) = x;
      im(a, b) = y;
      im(b, a) = -y;
    }
  return embed_complex(re, im);
}

Eigen::MatrixXd unit_gse(int n, RngStream& g) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) a(i, i) = g.next_normal();
  for (int p = 0; p < n; ++p)
    for (int q = p + 1; q < n; ++q) {
      const double w = g.next_normal() * kInvSqrt2;
      const double x = g.next_normal() * kInvSqrt2;
      const double y = g.next_normal() * kInvSqrt2;
      const double z = g.next_normal() * kInvSqrt2;
      a(p, q) = w;
      a(q, p) = w;
      b(p, q) = x;
      b(q, p) = -x;
      c(p, q) = y;
      c(q, p) = -y;
      d(p, q) = z;
      d(q, p) = -z;
    }
  return embed_quaternion(a, b, c, d);
}

Eigen::MatrixXd unit_ginibre(int n, RngStream& g) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = g.next_normal();
  return m;
}

Eigen::MatrixXd unit_skew(int n, RngStream& g) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      const double x = g.next_normal();
      m(a, b) = x;
      m(b, a) = -x;
    }
  return m;
}

Eigen::MatrixXd unit_diag(int n, RngStream& g) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = g.next_normal();
  return v.asDiagonal();
}

}  // namespace

FieldMatrix sample_matrix_increment(IncrementKind kind, int n, double h, RngStream& stream) {
  if (n <= 0) throw std::invalid_argument("sample_matrix_increment: n must be positive");
  if (!(h > 0.0)) throw std::invalid_argument("sample_matrix_increment: h must be positive");

  FieldMatrix out;
  out.field = increment_field(kind);
  switch (kind) {
    case IncrementKind::GOE:
      out.mat = unit_goe(n, stream);
      break;
    case IncrementKind::GUE:
      out.mat = unit_gue(n, stream);
      break;
    case IncrementKind::GSE:
      out.mat = unit_gse(n, stream);
      break;
    case IncrementKind::Ginibre:
      out.mat = unit_ginibre(n, stream);
      break;
    case IncrementKind::SkewSymmetric:
      out.mat = unit_skew(n, stream);
      break;
    case IncrementKind::DiagonalBM:
      out.mat = unit_diag(n, stream);
      break;
  }
  out.mat *= std::sqrt(h);
  return out;
}

}  // namespace eigenflow
