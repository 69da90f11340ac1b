#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "eigenflow/verify.hpp"

#include <cmath>

using namespace eigenflow;

namespace {

Spectrum spec_of(std::initializer_list<double> v,
                 SpectrumKind kind = SpectrumKind::Eigenvalues) {
  Spectrum s;
  s.kind = kind;
  s.values = Eigen::Map<const Eigen::VectorXd>(v.begin(), static_cast<Eigen::Index>(v.size()));
  return s;
}

}  // namespace

TEST_CASE("estimate_drift: driftless case (Dyson n=1)") {
  DriftEstimate est = estimate_drift(ProcessKind::dyson(2), Level::Matrix, spec_of({0.5}), 1e-4,
                                     100000, 7, Chart::Lambda);
  CHECK(std::abs(est.mean[0]) <= 3.0 * est.se[0]);
  CHECK(est.n_collided == 0);
}

TEST_CASE("estimate_drift: Dyson beta separation at (4,2,1)") {
  const Spectrum base = spec_of({4, 2, 1});
  DriftEstimate est = estimate_drift(ProcessKind::dyson(2), Level::Matrix, base, 1e-4, 400000,
                                     1001, Chart::Lambda);
  Eigen::Vector3d intro(5.0 / 6.0, 0.5, -4.0 / 3.0);
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(est.mean[i] - intro[i]) <= 3.0 * est.se[i]);
}

TEST_CASE("estimate_drift: spectral level reproduces the drift by construction") {
  const Spectrum base = spec_of({4, 2, 1});
  DriftEstimate est = estimate_drift(ProcessKind::dyson(2), Level::Spectral, base, 1e-4, 50000,
                                     77, Chart::Lambda);
  const DriftCoeffs c = spectral_drift(ProcessKind::dyson(2), DriftVariant::intro(), base);
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(est.mean[i] - c.drift[i]) <= 3.0 * est.se[i]);
}

TEST_CASE("estimate_drift: SE scales as 1/sqrt(N)") {
  const Spectrum base = spec_of({2, 0});
  DriftEstimate e1 = estimate_drift(ProcessKind::dyson(1), Level::Matrix, base, 1e-4, 50000, 5,
                                    Chart::Lambda);
  DriftEstimate e4 = estimate_drift(ProcessKind::dyson(1), Level::Matrix, base, 1e-4, 200000, 5,
                                    Chart::Lambda);
  const double ratio = e1.se[0] / e4.se[0];
  CHECK(ratio == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("estimate_drift rejects a too-coarse step") {
  CHECK_THROWS_AS(estimate_drift(ProcessKind::dyson(2), Level::Matrix, spec_of({1.0 + 1e-4, 1.0}),
                                 1e-2, 100, 1, Chart::Lambda),
                  std::invalid_argument);
}

TEST_CASE("adjudicate_drift rules") {
  DriftEstimate est;
  est.base = Eigen::Vector2d(2, 0);
  est.mean = Eigen::Vector2d(1.0, -1.0);
  est.se = Eigen::Vector2d(0.05, 0.05);
  est.n_samples = 1000;
  est.h = 1e-4;

  // Exact match vs far alternative: accept.
  std::vector<Candidate> cands{{"right", Eigen::Vector2d(1.0, -1.0)},
                               {"wrong", Eigen::Vector2d(2.0, -2.0)}};
  VerificationReport rep = adjudicate_drift(est, cands);
  CHECK(rep.accepted == "right");

  // Reorder invariance.
  std::swap(cands[0], cands[1]);
  VerificationReport rep2 = adjudicate_drift(est, cands);
  CHECK(rep2.accepted == "right");

  // Two candidates within one SE of each other: inconclusive.
  std::vector<Candidate> close{{"a", Eigen::Vector2d(1.0, -1.0)},
                               {"b", Eigen::Vector2d(1.02, -1.02)}};
  CHECK(adjudicate_drift(est, close).accepted == "inconclusive");

  CHECK_THROWS_AS(adjudicate_drift(est, {{"only", Eigen::Vector2d(1, -1)}}),
                  std::invalid_argument);
}

TEST_CASE("Wishart sigma-drift adjudication resolves the half factor") {
  // sigma = (2,1): candidates 1/3 (printed) vs 2/3 (consistent) in component 1.
  const Spectrum base = spec_of({2, 1}, SpectrumKind::SingularValues);
  DriftEstimate est = estimate_drift(ProcessKind::wishart(), Level::Matrix, base, 1e-3, 1000000,
                                     2002, Chart::Sigma);
  const Eigen::VectorXd consistent = wishart_sigma_drift_consistent(base).drift;
  const Eigen::VectorXd printed =
      spectral_drift(ProcessKind::wishart(), DriftVariant::section2(), base).drift;
  CHECK(consistent[0] == doctest::Approx(2.0 / 3.0));
  CHECK(printed[0] == doctest::Approx(1.0 / 3.0));
  VerificationReport rep =
      adjudicate_drift(est, {{"consistent", consistent}, {"printed_half", printed}});
  CHECK(rep.accepted == "consistent");
}

TEST_CASE("Dynkin n=1 adjudication: 2 lambda beats lambda") {
  const Spectrum base = spec_of({1.0});
  DriftEstimate est = estimate_drift(ProcessKind::dynkin(), Level::Matrix, base, 1e-3, 1000000,
                                     3003, Chart::Lambda);
  VerificationReport rep = adjudicate_drift(
      est, {{"two_lambda", Eigen::VectorXd::Constant(1, 2.0)},
            {"one_lambda", Eigen::VectorXd::Constant(1, 1.0)}});
  CHECK(rep.accepted == "two_lambda");
}

TEST_CASE("ks_two_sample basics") {
  Eigen::VectorXd x(3), y(3);
  x << 1, 2, 3;
  y << 1.5, 2.5, 3.5;
  auto [d, p] = ks_two_sample(x, y);
  CHECK(d == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(p >= 0.0);
  CHECK(p <= 1.0);

  auto [d0, p0] = ks_two_sample(x, x);
  CHECK(d0 == 0.0);
  CHECK(p0 == 1.0);

  Eigen::VectorXd lo(4), hi(4);
  lo << 0, 1, 2, 3;
  hi << 10, 11, 12, 13;
  auto [d1, p1] = ks_two_sample(lo, hi);
  CHECK(d1 == 1.0);
  CHECK(p1 <= 0.1);

  CHECK_THROWS_AS(ks_two_sample(Eigen::VectorXd(), x), std::invalid_argument);
}

TEST_CASE("ks statistic stays in [0,1] on random samples") {
  RngStream g = derive_stream(404, 0);
  for (int rep = 0; rep < 50; ++rep) {
    const int nx = 2 + static_cast<int>(g.next_u64() % 40);
    const int ny = 2 + static_cast<int>(g.next_u64() % 40);
    Eigen::VectorXd x(nx), y(ny);
    for (int i = 0; i < nx; ++i) x[i] = g.next_normal();
    for (int i = 0; i < ny; ++i) y[i] = g.next_normal() + 0.3;
    auto [d, p] = ks_two_sample(x, y);
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
}

TEST_CASE("ks critical value at one percent") {
  // c(0.01) = sqrt(-ln(0.005)/2) ~ 1.6276
  CHECK(ks_critical(0.01, 1.0) == doctest::Approx(1.6276).epsilon(1e-4));
  CHECK(ks_critical(0.01, 2500.0) == doctest::Approx(1.6276 / 50.0).epsilon(1e-4));
}

TEST_CASE("gradient_check outcomes") {
  VerificationReport rep = gradient_check(ProcessKind::dyson(2), spec_of({4, 2, 1}));
  CHECK(rep.passed());

  // n = 1: zero gradient, trivially passing.
  VerificationReport rep1 = gradient_check(ProcessKind::dyson(2), spec_of({0.7}));
  CHECK(rep1.passed());

  // Dynkin ratio of half-gradient to RW drift is the documented factor 4.
  VerificationReport repd =
      gradient_check(ProcessKind::dynkin(), spec_of({2, 1}, SpectrumKind::SingularValues));
  CHECK(repd.passed());
  bool found = false;
  for (const auto& note : repd.notes)
    if (note.find("4.0") != std::string::npos) found = true;
  CHECK(found);

  CHECK_THROWS_AS(gradient_check(ProcessKind::dyson(2), spec_of({1.0, 1.0})),
                  std::invalid_argument);
}

TEST_CASE("mcf_check: small Dyson run matches the ODE") {
  McfOptions opts;
  opts.h = 2e-4;
  opts.n_paths = 200;
  opts.seed = 515;
  McfResult res = mcf_check(ProcessKind::dyson(2), spec_of({1.0, -1.0}), 0.05, opts);
  REQUIRE(res.report.checks.size() >= 1);
  CHECK(res.report.checks[0].value <= 0.02);
  // ODE endpoint: lambda_1(t) = sqrt(1 + t).
  CHECK(res.ode(res.ode.rows() - 1, 0) == doctest::Approx(std::sqrt(1.05)).epsilon(1e-6));
}

TEST_CASE("flag_drift_check matches -(nH - tr(H) I)") {
  FlagDriftResult res = flag_drift_check(Eigen::Vector3d(1.0, 0.0, -1.0), 1e-4, 200000, 616);
  CHECK(res.report.passed());
  CHECK(res.target(0, 0) == doctest::Approx(-3.0));
  CHECK(res.target(1, 1) == doctest::Approx(0.0));
  CHECK(res.target(2, 2) == doctest::Approx(3.0));
}

TEST_CASE("report json round-trips its fields") {
  VerificationReport rep;
  rep.experiment = "unit";
  rep.accepted = "x";
  rep.checks.push_back({"c", true, 0.5, 1.0});
  rep.seed = 42;
  rep.h = 1e-3;
  rep.n_samples = 10;
  nlohmann::json j = rep.to_json();
  CHECK(j["experiment"] == "unit");
  CHECK(j["checks"][0]["pass"] == true);
  CHECK(j["environment"]["seed"] == 42);
}
