#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "pflow/target.hpp"

using namespace pflow;

namespace {

const double kS = 1.0 / std::numbers::sqrt2;

std::vector<double> sff1(const EmbeddedTarget& t, std::vector<double> y, std::vector<double> d) {
  std::vector<std::span<const double>> partials{d};
  const double ginv[] = {1.0};
  return sff_contract(t, y, partials, ginv);
}

// Same target as make_clifford_torus but without the closed-form projector,
// so project() goes through Gauss-Newton.
EmbeddedTarget clifford_without_projector() {
  const auto ref = make_clifford_torus();
  return EmbeddedTarget("clifford-gn", 4, 0.0, ref.constraints());
}

}  // namespace

TEST(Sphere, ConstraintAndProjection) {
  const auto s = make_sphere(2);
  EXPECT_EQ(s.ambient_dim(), 3u);
  EXPECT_EQ(s.intrinsic_dim(), 2u);
  EXPECT_EQ(s.sect_upper_bound(), 1.0);
  const std::vector<double> on{0.0, 0.6, 0.8};
  EXPECT_NEAR(s.violation(on), 0.0, 1e-15);
  const auto p = s.projected(std::vector<double>{2.0, 0.0, 0.0});
  EXPECT_DOUBLE_EQ(p[0], 1.0);
  EXPECT_EQ(p[1], 0.0);
  EXPECT_THROW(make_sphere(0), std::invalid_argument);
}

TEST(Sphere, SecondFundamentalFormIsSpeedSquaredTimesPosition) {
  const auto s = make_sphere(2);
  const std::vector<double> y{0.0, 0.6, 0.8};
  const auto a = sff1(s, y, {1.0, 0.0, 0.0});
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(a[k], y[k], 1e-15);
  const auto b = sff1(s, y, {2.0, 0.0, 0.0});
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(b[k], 4 * y[k], 1e-14);
  const auto z = sff1(s, y, {0.0, 0.0, 0.0});
  for (double c : z) EXPECT_EQ(c, 0.0);
}

TEST(Clifford, SecondFundamentalFormExample) {
  const auto t = make_clifford_torus();
  const auto a = sff1(t, {kS, 0.0, kS, 0.0}, {0.0, kS, 0.0, 0.0});
  EXPECT_NEAR(a[0], kS, 1e-15);
  EXPECT_NEAR(a[1], 0.0, 1e-15);
  EXPECT_NEAR(a[2], 0.0, 1e-15);
  EXPECT_NEAR(a[3], 0.0, 1e-15);
}

TEST(Clifford, ConstraintGradientsAreOrthogonal) {
  const auto t = make_clifford_torus();
  EXPECT_EQ(t.codim(), 2u);
  EXPECT_EQ(t.sect_upper_bound(), 0.0);
  std::mt19937_64 gen(3);
  for (int i = 0; i < 100; ++i) {
    const double a = oracle::uniform(gen, 0, 7), b = oracle::uniform(gen, 0, 7);
    const std::vector<double> y{kS * std::cos(a), kS * std::sin(a), kS * std::cos(b), kS * std::sin(b)};
    EXPECT_LE(t.violation(y), 1e-15);
    std::vector<double> g0(4), g1(4);
    t.constraints()[0].gradient(y, g0);
    t.constraints()[1].gradient(y, g1);
    EXPECT_EQ(dot(g0, g1), 0.0);
  }
}

TEST(Target, SecondFundamentalFormIsNormal) {
  std::mt19937_64 gen(4);
  for (const auto& t : {make_sphere(2), make_sphere(3), make_clifford_torus()}) {
    for (int i = 0; i < 50; ++i) {
      std::vector<double> y(t.ambient_dim()), d(t.ambient_dim());
      for (double& c : y) c = oracle::uniform(gen, -1, 1);
      t.project(y);
      for (double& c : d) c = oracle::uniform(gen, -1, 1);
      t.tangent_project(y, d);
      const auto a = sff1(t, y, d);
      for (const auto& e : t.tangent_frame(y)) EXPECT_NEAR(dot(a, e), 0.0, 1e-14);
    }
  }
}

TEST(Target, TangentFrameIsOrthonormalAndTangent) {
  for (const auto& t : {make_sphere(2), make_clifford_torus()}) {
    std::vector<double> y(t.ambient_dim(), 0.3);
    t.project(y);
    const auto frame = t.tangent_frame(y);
    ASSERT_EQ(frame.size(), t.intrinsic_dim());
    std::vector<double> g(t.ambient_dim());
    for (std::size_t i = 0; i < frame.size(); ++i) {
      for (std::size_t j = 0; j < frame.size(); ++j)
        EXPECT_NEAR(dot(frame[i], frame[j]), i == j ? 1.0 : 0.0, 1e-14);
      for (const auto& c : t.constraints()) {
        c.gradient(y, g);
        EXPECT_NEAR(dot(frame[i], g), 0.0, 1e-14);
      }
    }
  }
}

TEST(Target, GaussNewtonProjectionMatchesClosedForm) {
  const auto ref = make_clifford_torus();
  const auto gn = clifford_without_projector();
  std::mt19937_64 gen(9);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> y(4);
    for (double& c : y) c = oracle::uniform(gen, 0.3, 1.0);
    const auto a = ref.projected(y);
    const auto b = gn.projected(y);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
  }
  std::vector<double> origin(4, 0.0);
  EXPECT_THROW(gn.project(origin), DriftError);
}

TEST(Target, SecondFundamentalFormRejectsDrift) {
  const auto s = make_sphere(2);
  EXPECT_NO_THROW(sff1(s, {0.0, 0.0, 1.0 + 4e-7}, {1.0, 0.0, 0.0}));
  EXPECT_THROW(sff1(s, {0.0, 0.0, 1.0 + 2e-6}, {1.0, 0.0, 0.0}), DriftError);
}

TEST(Euclidean, HasNoConstraints) {
  const auto e = make_euclidean(3);
  EXPECT_EQ(e.codim(), 0u);
  const auto a = sff1(e, {5.0, -2.0, 1.0}, {1.0, 1.0, 1.0});
  for (double c : a) EXPECT_EQ(c, 0.0);
  std::vector<double> y{5.0, -2.0, 1.0};
  e.project(y);
  EXPECT_EQ(y[0], 5.0);
  EXPECT_THROW(make_euclidean(0), std::invalid_argument);
}
