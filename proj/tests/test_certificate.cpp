#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "pflow/certificate.hpp"

using namespace pflow;

namespace {

constexpr double kPi = std::numbers::pi;

double cot2_over_4(double r) {
  const double t = std::tan(r);
  return 0.25 / (t * t);
}

// f* = -rho^2 on a cap: concave, so the sublevel check must reject it.
RegularBallCert negated_fstar_cap(double r) {
  RegularBallCert c = make_best_cap_certificate(2, r, 1.0);
  const auto base = c.f_star;
  c.f_star.value = [base](std::span<const double> y) { return -base.value(y); };
  c.f_star.hessian = [base](std::span<const double> y, std::span<const double> X,
                            std::span<const double> Y) { return -base.hessian(y, X, Y); };
  c.a = 1.0;  // every point has -rho^2 < 1
  return c;
}

}  // namespace

TEST(DeltaP, ClosedFormValues) {
  for (int m : {1, 2, 3}) EXPECT_EQ(delta_p(m, 2.0), 3.0);
  EXPECT_EQ(delta_p(4, 3.0), 591.0);
  EXPECT_NEAR(delta_p(2, 3.0), 3 * std::pow(std::sqrt(2.0) + 12, 2) + 3, 1e-12);
  EXPECT_NEAR(delta_p(2, 3.0), 542.823, 1e-3);
}

TEST(DeltaP, IncreasingInP) {
  double prev = delta_p(2, 2.0);
  for (double p = 2.1; p < 6; p += 0.1) {
    const double d = delta_p(2, p);
    EXPECT_GT(d, prev);
    prev = d;
  }
}

TEST(DeltaP, RejectsBadArguments) {
  EXPECT_THROW(delta_p(2, 1.5), std::invalid_argument);
  EXPECT_THROW(delta_p(0, 2.0), std::invalid_argument);
  EXPECT_THROW(delta_p(2, std::nan("")), std::invalid_argument);
}

TEST(CapDelta, Examples) {
  EXPECT_NEAR(cap_delta(kPi / 4, kPi / 3), 0.2071068, 1e-7);
  EXPECT_NEAR(cap_delta(0.1, 0.2), 1.46887, 1e-5);
  EXPECT_NEAR(cap_delta(0.3, 0.3 + 1e-9), 0.0, 1e-7);
  EXPECT_THROW(cap_delta(0.3, 0.2), std::invalid_argument);
  EXPECT_THROW(cap_delta(0.3, kPi / 2), std::invalid_argument);
}

TEST(BestCap, QuarterPi) {
  const CapOptimum b = best_cap_delta(kPi / 4);
  EXPECT_NEAR(b.delta, 0.25, 1e-15);
  EXPECT_NEAR(b.r1, std::acos(std::sqrt(2.0) / 4), 1e-15);
  EXPECT_NEAR(b.r1, 1.2094, 1e-4);
  const auto grid = oracle::grid_search_best_cap(kPi / 4);
  EXPECT_NEAR(grid.arg, b.r1, 1e-6);
  EXPECT_NEAR(grid.value, b.delta, 1e-8);
}

TEST(BestCap, VanishesNearHalfPi) {
  EXPECT_LT(best_cap_delta(kPi / 2 - 1e-4).delta, 1e-8);
  EXPECT_THROW(best_cap_delta(0.0), std::invalid_argument);
  EXPECT_THROW(best_cap_delta(kPi / 2), std::invalid_argument);
}

TEST(BestCap, AgreesWithGridSearchOracle) {
  std::mt19937_64 gen(77);
  for (int i = 0; i < 100; ++i) {
    const double r = oracle::uniform(gen, 0.05, 1.5);
    const auto grid = oracle::grid_search_best_cap(r);
    const CapOptimum b = best_cap_delta(r);
    EXPECT_LE(std::abs(grid.value - b.delta), 1e-8) << "r=" << r;
    EXPECT_GE(b.delta, grid.value - 1e-14);  // closed form is the true max
  }
}

TEST(MaxCapRadius, AgreesWithBisectionOracle) {
  for (double p : {2.0, 2.5, 3.0}) {
    const double ref = oracle::bisect_r_max(delta_p(2, p));
    EXPECT_NEAR(max_admissible_cap_radius(p, 2), ref, 1e-10) << "p=" << p;
  }
  EXPECT_NEAR(max_admissible_cap_radius(2.0, 2), 0.28103490150281363, 1e-14);
  EXPECT_NEAR(max_admissible_cap_radius(3.0, 2), 0.021457250651540628, 1e-14);
}

TEST(MaxCapRadius, StraddlesTheThreshold) {
  for (double p : {2.0, 3.0}) {
    const double rm = max_admissible_cap_radius(p, 2);
    const double dp = delta_p(2, p);
    const double h = std::min(1e-3, 0.5 * rm);
    EXPECT_GT(best_cap_delta(rm - h).delta, dp);
    EXPECT_LT(best_cap_delta(rm + h).delta, dp);
  }
}

TEST(MaxCapRadius, DecreasesInP) {
  double prev = max_admissible_cap_radius(2.0, 2);
  for (double p = 2.25; p <= 8; p += 0.25) {
    const double r = max_admissible_cap_radius(p, 2);
    EXPECT_LT(r, prev);
    prev = r;
  }
}

TEST(RegularSet, CapPassesJustBelowTheOptimumAndFailsAbove) {
  const auto sphere = make_sphere(2);
  for (double r : {0.1, 0.2, 0.5}) {
    const auto samples = cap_samples(2, r);
    const double ds = cot2_over_4(r);
    const CertReport ok = verify_regular_set(make_best_cap_certificate(2, r, ds - 1e-6), sphere, samples);
    EXPECT_TRUE(ok.pass) << "r=" << r << " min eig " << ok.min_eigenvalue;
    const CertReport bad = verify_regular_set(make_best_cap_certificate(2, r, ds + 0.1), sphere, samples);
    EXPECT_FALSE(bad.pass) << "r=" << r;
    EXPECT_GT(bad.failures, 0u);
    // The binding samples sit at the cap boundary.
    const double rho = std::acos(std::clamp(samples[bad.worst_sample][2], -1.0, 1.0));
    EXPECT_GT(rho, 0.95 * r);
  }
}

TEST(RegularSet, PinchingConstantCoversF) {
  const auto sphere = make_sphere(2);
  const auto cert = make_best_cap_certificate(2, 0.2, 1.0);
  const CertReport rep = verify_regular_set(cert, sphere, cap_samples(2, 0.2));
  EXPECT_TRUE(rep.pinching_ok);
  EXPECT_GE(rep.f_min, 1.0 / cert.pinching);
  EXPECT_LE(rep.f_max, cert.pinching);
}

TEST(RegularSet, TrivialCertificateOnFlatTarget) {
  const auto torus = make_clifford_torus();
  std::vector<std::vector<double>> samples;
  const double s = 1.0 / std::numbers::sqrt2;
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j)
      samples.push_back({s * std::cos(0.4 * i), s * std::sin(0.4 * i), s * std::cos(0.4 * j), s * std::sin(0.4 * j)});
  for (double delta : {0.0, 3.0, 1e6}) {
    EXPECT_TRUE(verify_regular_set(make_trivial_certificate(delta), torus, samples).pass);
    EXPECT_TRUE(verify_sublevel(make_trivial_certificate(delta), torus, samples).pass);
  }
}

TEST(RegularSet, TrivialCertificateFailsOnSphere) {
  // K2 = 1 makes -K2 f h negative definite for f = 1.
  const auto rep = verify_regular_set(make_trivial_certificate(0.0), make_sphere(2), cap_samples(2, 0.3, 8));
  EXPECT_FALSE(rep.pass);
  EXPECT_NEAR(rep.min_eigenvalue, -1.0, 1e-12);
}

TEST(RegularSet, RejectsSamplesOutsideOmega) {
  const auto cert = make_best_cap_certificate(2, 0.2, 1.0);
  const std::vector<std::vector<double>> outside{{std::sin(0.3), 0.0, std::cos(0.3)}};
  EXPECT_THROW(verify_regular_set(cert, make_sphere(2), outside), std::invalid_argument);
  EXPECT_THROW(verify_sublevel(cert, make_sphere(2), outside), std::invalid_argument);
}

TEST(RegularSet, RejectsNonFiniteHessian) {
  auto cert = make_trivial_certificate(1.0);
  cert.f.hessian = [](std::span<const double>, std::span<const double>, std::span<const double>) {
    return std::nan("");
  };
  const std::vector<std::vector<double>> samples{{0.0, 0.0, 1.0}};
  EXPECT_THROW(verify_regular_set(cert, make_sphere(2), samples), std::domain_error);
}

TEST(Sublevel, CapDistanceSquaredIsConvex) {
  for (double r : {0.1, 0.5, 1.2}) {
    const auto cert = make_best_cap_certificate(2, r, 0.1);
    const auto rep = verify_sublevel(cert, make_sphere(2), cap_samples(2, r));
    EXPECT_TRUE(rep.pass) << "r=" << r;
    EXPECT_GT(rep.min_eigenvalue, 0.0);
  }
}

TEST(Sublevel, ConcaveFunctionFails) {
  const auto cert = negated_fstar_cap(0.3);
  EXPECT_FALSE(verify_sublevel(cert, make_sphere(2), cap_samples(2, 0.3)).pass);
}

TEST(Certificate, CapContainsExactlyTheOpenBall) {
  const auto cert = make_best_cap_certificate(2, 0.2, 1.0);
  EXPECT_TRUE(cert.contains(std::vector<double>{0.0, 0.0, 1.0}));
  EXPECT_TRUE(cert.contains(std::vector<double>{std::sin(0.199), 0.0, std::cos(0.199)}));
  EXPECT_FALSE(cert.contains(std::vector<double>{std::sin(0.201), 0.0, std::cos(0.201)}));
  EXPECT_NEAR(cert.a, 0.04, 1e-15);
}

TEST(Certificate, CapSamplesStayInside) {
  for (std::size_t n : {1u, 2u, 3u, 4u}) {
    const auto cert = make_best_cap_certificate(n, 0.3, 1.0);
    const auto samples = cap_samples(n, 0.3, 16);
    EXPECT_GT(samples.size(), 16u);
    for (const auto& y : samples) {
      EXPECT_NEAR(norm_sq(y), 1.0, 1e-14);
      EXPECT_TRUE(cert.contains(y));
    }
  }
}
