#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "eigenflow/matcore.hpp"
#include "eigenflow/randmat.hpp"

#include <cmath>

using namespace eigenflow;

namespace {

Eigen::MatrixXd random_symmetric(int n, RngStream& g, double scale = 1.0) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      const double v = scale * (2.0 * g.next_uniform() - 1.0);
      a(i, j) = v;
      a(j, i) = v;
    }
  return a;
}

}  // namespace

TEST_CASE("frobenius_inner on stated examples") {
  const Eigen::MatrixXd i2 = Eigen::MatrixXd::Identity(2, 2);
  CHECK(frobenius_inner(i2, i2) == doctest::Approx(2.0).epsilon(1e-15));

  Eigen::MatrixXd e12 = Eigen::MatrixXd::Zero(2, 2), e21 = Eigen::MatrixXd::Zero(2, 2);
  e12(0, 1) = 1.0;
  e21(1, 0) = 1.0;
  CHECK(frobenius_inner(e12, e21) == 0.0);

  Eigen::MatrixXd m(2, 2);
  m << 1, 2, 3, 4;
  CHECK(frobenius_inner(m, m) == doctest::Approx(30.0).epsilon(1e-15));

  Eigen::MatrixXd bad(3, 2);
  CHECK_THROWS_AS((void)frobenius_inner(m, bad), std::invalid_argument);
}

TEST_CASE("frobenius_inner bilinearity and conjugation invariance") {
  RngStream g = derive_stream(7, 0);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 2 + static_cast<int>(g.next_u64() % 5);
    const Eigen::MatrixXd a = random_symmetric(n, g);
    const Eigen::MatrixXd b = random_symmetric(n, g);
    const Eigen::MatrixXd c = random_symmetric(n, g);
    const double s = 2.0 * g.next_uniform() - 1.0;

    CHECK(frobenius_inner(a, b) == doctest::Approx(frobenius_inner(b, a)).epsilon(1e-14));
    CHECK(frobenius_inner((s * a + b).eval(), c) ==
          doctest::Approx(s * frobenius_inner(a, c) + frobenius_inner(b, c)).epsilon(1e-12));

    const Eigen::MatrixXd q = eig_sym(random_symmetric(n, g)).vectors;
    const Eigen::MatrixXd qa = q * a * q.transpose();
    const Eigen::MatrixXd qb = q * b * q.transpose();
    CHECK(std::abs(frobenius_inner(qa, qb) - frobenius_inner(a, b)) <=
          1e-12 * std::max(1.0, std::abs(frobenius_inner(a, b))));
  }
}

TEST_CASE("eig_sym closed forms") {
  Eigen::MatrixXd a(2, 2);
  a << 2, 1, 1, 2;
  EigSym es = eig_sym(a);
  CHECK(es.values.values[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(es.values.values[1] == doctest::Approx(1.0).epsilon(1e-12));

  EigSym id = eig_sym(Eigen::MatrixXd::Identity(5, 5));
  for (int i = 0; i < 5; ++i) CHECK(id.values.values[i] == doctest::Approx(1.0));
}

TEST_CASE("eig_sym reconstruction, orthogonality, trace") {
  RngStream g = derive_stream(11, 0);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 2 + static_cast<int>(g.next_u64() % 7);
    const Eigen::MatrixXd a = random_symmetric(n, g, 3.0);
    EigSym es = eig_sym(a);

    const double norm = std::max(1.0, a.norm());
    const Eigen::MatrixXd recon =
        es.vectors * es.raw_values.asDiagonal() * es.vectors.transpose();
    CHECK((recon - a).norm() <= 1e-10 * norm);
    CHECK((es.vectors.transpose() * es.vectors - Eigen::MatrixXd::Identity(n, n)).norm() <= 1e-10);
    CHECK(std::abs(es.raw_values.sum() - a.trace()) <= 1e-10 * norm);
    bool sorted = true;  // descending, ties allowed
    for (int i = 0; i + 1 < n; ++i)
      if (es.raw_values[i] < es.raw_values[i + 1]) sorted = false;
    CHECK(sorted);
  }
}

TEST_CASE("eig_sym rejects non-symmetric input") {
  Eigen::MatrixXd a(2, 2);
  a << 0, 1, 0, 0;
  CHECK_THROWS_AS(eig_sym(a), std::invalid_argument);
}

TEST_CASE("embedded complex Hermitian deduplicates to the complex spectrum") {
  // H = [[2, i], [-i, 2]] has eigenvalues 3 and 1.
  Eigen::MatrixXd re(2, 2), im(2, 2);
  re << 2, 0, 0, 2;
  im << 0, 1, -1, 0;
  FieldMatrix h{embed_complex(re, im), Field::Complex};
  EigSym es = eig_sym(h);
  REQUIRE(es.values.values.size() == 2);
  CHECK(es.values.values[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(es.values.values[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(es.raw_values.size() == 4);
}

TEST_CASE("embedded quaternion Hermitian deduplicates with multiplicity four") {
  // [[1, q], [conj(q), -1]] with q = (1 + i + j + k)/2, |q| = 1:
  // eigenvalues +-sqrt(2), each four-fold in the real embedding.
  Eigen::MatrixXd a(2, 2), b(2, 2), c(2, 2), d(2, 2);
  a << 1, 0.5, 0.5, -1;
  b << 0, 0.5, -0.5, 0;
  c = b;
  d = b;
  FieldMatrix h{embed_quaternion(a, b, c, d), Field::Quaternion};
  EigSym es = eig_sym(h);
  REQUIRE(es.values.values.size() == 2);
  CHECK(es.values.values[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(es.values.values[1] == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("singular_values closed forms") {
  Eigen::MatrixXd d = Eigen::Vector2d(3.0, -2.0).asDiagonal();
  Spectrum s = singular_values(d);
  CHECK(s.values[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(s.values[1] == doctest::Approx(2.0).epsilon(1e-12));

  RngStream g = derive_stream(3, 0);
  const Eigen::MatrixXd q = eig_sym(random_symmetric(5, g)).vectors;
  Spectrum sq = singular_values(q);
  for (int i = 0; i < 5; ++i) CHECK(sq.values[i] == doctest::Approx(1.0).epsilon(1e-10));

  Eigen::MatrixXd m(2, 2);
  m << 1, 1, 0, 1;
  Spectrum sm = singular_values(m);
  CHECK(sm.values[0] == doctest::Approx((1.0 + std::sqrt(5.0)) / 2.0).epsilon(1e-12));
  CHECK(sm.values[1] == doctest::Approx((std::sqrt(5.0) - 1.0) / 2.0).epsilon(1e-12));

  CHECK_THROWS_AS(singular_values(Eigen::MatrixXd::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("singular values squared match eig of m m^T") {
  RngStream g = derive_stream(5, 0);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 2 + static_cast<int>(g.next_u64() % 7);
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = 2.0 * g.next_uniform() - 1.0;
    const Spectrum s = singular_values(m);
    const Eigen::VectorXd ev = symmetric_eigenvalues(m * m.transpose());
    for (int i = 0; i < n; ++i) {
      const double lhs = s.values[i] * s.values[i];
      CHECK(std::abs(lhs - ev[i]) <= 1e-9 * std::max(1.0, std::abs(ev[i])));
    }
  }
}

TEST_CASE("svd_frames reconstructs and is orthogonal") {
  RngStream g = derive_stream(13, 0);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 2 + static_cast<int>(g.next_u64() % 5);
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = 2.0 * g.next_uniform() - 1.0;
    m += 3.0 * Eigen::MatrixXd::Identity(n, n);  // keep it comfortably invertible
    SvdFrames f = svd_frames(m);
    CHECK((f.u * f.sigma.asDiagonal() * f.v.transpose() - m).norm() <= 1e-9 * m.norm());
    CHECK((f.u.transpose() * f.u - Eigen::MatrixXd::Identity(n, n)).norm() <= 1e-9);
    CHECK((f.v.transpose() * f.v - Eigen::MatrixXd::Identity(n, n)).norm() <= 1e-8);
  }
}

TEST_CASE("embed_scalar_diag layout") {
  const Eigen::VectorXd v = Eigen::Vector2d(4.0, 1.0);
  FieldMatrix c = embed_scalar_diag(v, Field::Complex);
  CHECK(c.rows() == 4);
  CHECK(c.logical_dim() == 2);
  EigSym es = eig_sym(c);
  CHECK(es.values.values[0] == doctest::Approx(4.0));
  CHECK(es.values.values[1] == doctest::Approx(1.0));
}
