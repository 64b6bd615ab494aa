#include <cmath>
#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "mupo/geometry.hpp"

using namespace mupo::geo;

namespace {

struct Moments {
  Vec2 mean = Vec2::Zero();
  Mat2 cov = Mat2::Zero();
  Mat2 model_cov = Mat2::Zero();
};

// Draws noisy polar measurements of a fixed truth and accumulates the sample
// mean/covariance of the converted positions and the mean reported covariance.
Moments sample_conversion(double rho, double theta, double s_rho, double s_theta, int n,
                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Moments m;
  std::vector<Vec2> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i) {
    PolarMeasurement z;
    z.rho = rho + s_rho * normal(rng);
    z.theta = theta + s_theta * normal(rng);
    const ConvertedMeasurement c = mucm_convert(z, s_rho, s_theta);
    pts.push_back(c.position());
    m.mean += c.position();
    m.model_cov += c.cov;
  }
  m.mean /= n;
  m.model_cov /= n;
  for (const Vec2& p : pts) m.cov += (p - m.mean) * (p - m.mean).transpose();
  m.cov /= n - 1;
  return m;
}

}  // namespace

TEST(SnrToPolarSigma, ReferenceValues) {
  RadarParams p;
  p.range_coeff = 150.0;
  EXPECT_NEAR(snr_to_polar_sigma(100.0, p).rho, 150.0 / std::sqrt(200.0), 1e-12);
  EXPECT_NEAR(snr_to_polar_sigma(100.0, p).rho, 10.6066, 1e-4);

  p.azimuth_coeff = 0.02;
  EXPECT_NEAR(snr_to_polar_sigma(0.5, p).theta, 0.02, 1e-15);
}

TEST(SnrToPolarSigma, QuadrupledSnrHalvesSigmas) {
  const RadarParams p;
  const PolarSigma a = snr_to_polar_sigma(100.0, p);
  const PolarSigma b = snr_to_polar_sigma(400.0, p);
  EXPECT_DOUBLE_EQ(b.rho, 0.5 * a.rho);
  EXPECT_DOUBLE_EQ(b.theta, 0.5 * a.theta);
}

TEST(SnrToPolarSigma, StrictlyDecreasing) {
  const RadarParams p;
  double prev = snr_to_polar_sigma(0.01, p).rho;
  for (double snr = 0.02; snr < 1e4; snr *= 1.7) {
    const PolarSigma s = snr_to_polar_sigma(snr, p);
    EXPECT_LT(s.rho, prev);
    prev = s.rho;
  }
}

TEST(SnrToPolarSigma, RejectsNonPositiveSnr) {
  EXPECT_THROW(snr_to_polar_sigma(0.0, RadarParams{}), std::invalid_argument);
  EXPECT_THROW(snr_to_polar_sigma(-1.0, RadarParams{}), std::invalid_argument);
}

TEST(PropagateSnr, FourthPowerLaw) {
  EXPECT_DOUBLE_EQ(propagate_snr(100.0, 200e3, 400e3), 6.25);
  EXPECT_DOUBLE_EQ(propagate_snr(100.0, 123e3, 123e3), 100.0);
  EXPECT_DOUBLE_EQ(propagate_snr(16.0, 100e3, 200e3), 1.0);
}

TEST(PropagateSnr, StrictlyDecreasingInRange) {
  double prev = propagate_snr(100.0, 150e3, 10e3);
  for (double rho = 20e3; rho < 500e3; rho += 10e3) {
    const double s = propagate_snr(100.0, 150e3, rho);
    EXPECT_LT(s, prev);
    prev = s;
  }
}

TEST(PropagateSnr, RejectsNonPositiveInputs) {
  EXPECT_THROW(propagate_snr(100.0, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(propagate_snr(100.0, 1.0, -1.0), std::invalid_argument);
  EXPECT_THROW(propagate_snr(0.0, 1.0, 1.0), std::invalid_argument);
}

TEST(MucmConvert, ZeroAzimuthNoiseIsPlainConversion) {
  PolarMeasurement z;
  z.rho = 1234.5;
  z.theta = 0.7;
  const ConvertedMeasurement c = mucm_convert(z, 10.0, 0.0);
  EXPECT_NEAR(c.x, 1234.5 * std::cos(0.7), 1e-9);
  EXPECT_NEAR(c.y, 1234.5 * std::sin(0.7), 1e-9);
}

TEST(MucmConvert, AxisAlignedExample) {
  PolarMeasurement z;
  z.rho = 1000.0;
  z.theta = 0.0;
  const ConvertedMeasurement c = mucm_convert(z, 10.0, 1e-3);
  EXPECT_NEAR(c.cov(0, 0), 100.0, 1.0);
  EXPECT_NEAR(c.cov(1, 1), 1.0, 0.01);
  EXPECT_NEAR(c.cov(0, 1), 0.0, 1e-6);
  EXPECT_FALSE(c.jittered);
}

TEST(MucmConvert, CovarianceIsSymmetric) {
  PolarMeasurement z;
  z.rho = 250e3;
  z.theta = 2.1;
  const ConvertedMeasurement c = mucm_convert(z, 30.0, 5e-3);
  EXPECT_EQ(c.cov(0, 1), c.cov(1, 0));
  EXPECT_TRUE(is_positive_definite(c.cov));
}

TEST(MucmConvert, DegenerateCovarianceIsJitteredAndFlagged) {
  PolarMeasurement z;
  z.rho = 1000.0;
  z.theta = 0.3;
  const ConvertedMeasurement c = mucm_convert(z, 0.0, 0.0);
  EXPECT_TRUE(c.jittered);
  EXPECT_TRUE(is_positive_definite(c.cov));
}

TEST(MucmConvert, RejectsLargeAzimuthSigma) {
  PolarMeasurement z;
  z.rho = 1000.0;
  EXPECT_THROW(mucm_convert(z, 1.0, 1.0), std::invalid_argument);
}

TEST(MucmConvert, MonteCarloUnbiased) {
  const double rho = 200e3;
  const double theta = kPi / 4;
  const int n = 100000;
  const Moments m = sample_conversion(rho, theta, 50.0, 2e-3, n, 11);
  const Vec2 truth(rho * std::cos(theta), rho * std::sin(theta));
  EXPECT_LT(std::abs(m.mean.x() - truth.x()), 4.0 * std::sqrt(m.model_cov(0, 0) / n));
  EXPECT_LT(std::abs(m.mean.y() - truth.y()), 4.0 * std::sqrt(m.model_cov(1, 1) / n));
}

TEST(MucmConvert, SampleCovarianceMatchesModel) {
  const Moments m = sample_conversion(150e3, kPi / 3, 20.0, 5e-3, 100000, 12);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      EXPECT_NEAR(m.cov(i, j), m.model_cov(i, j), 0.1 * std::abs(m.model_cov(i, j)))
          << "entry " << i << "," << j;
    }
  }
}

TEST(LinearizedCov, AxisAlignedAtZeroAzimuth) {
  const Mat2 c = linearized_cartesian_cov(1000.0, 0.0, 10.0, 1e-3);
  EXPECT_NEAR(c(0, 0), 100.0, 1e-9);
  EXPECT_NEAR(c(1, 1), 1.0, 1e-9);
  EXPECT_NEAR(c(0, 1), 0.0, 1e-12);
}

TEST(LinearizedCov, MatchesMucmExampleWithinOnePercent) {
  PolarMeasurement z;
  z.rho = 1000.0;
  const Mat2 m = mucm_convert(z, 10.0, 1e-3).cov;
  const Mat2 l = linearized_cartesian_cov(1000.0, 0.0, 10.0, 1e-3);
  EXPECT_NEAR(m(0, 0), l(0, 0), 0.01 * l(0, 0));
  EXPECT_NEAR(m(1, 1), l(1, 1), 0.01 * l(1, 1));
}

TEST(LinearizedCov, ZeroSigmasGiveZeroMatrix) {
  EXPECT_TRUE(linearized_cartesian_cov(5000.0, 1.0, 0.0, 0.0).isZero());
}

TEST(LinearizedCov, AgreesWithMucmForSmallAzimuthSigma) {
  for (double rho : {150e3, 275e3, 400e3}) {
    for (double theta : {-2.5, -0.4, 0.0, 1.1, 3.0}) {
      for (double s_theta : {1e-4, 1e-3, 5e-3}) {
        PolarMeasurement z;
        z.rho = rho;
        z.theta = theta;
        const Mat2 m = mucm_convert(z, 25.0, s_theta).cov;
        const Mat2 l = linearized_cartesian_cov(rho, theta, 25.0, s_theta);
        EXPECT_LT((m - l).norm() / l.norm(), 0.05) << rho << " " << theta << " " << s_theta;
      }
    }
  }
}

TEST(Geometry, WrapAngle) {
  EXPECT_NEAR(wrap_angle(3 * kPi), kPi, 1e-12);
  EXPECT_NEAR(wrap_angle(-kPi), kPi, 1e-12);
  EXPECT_NEAR(wrap_angle(0.5 + 4 * kPi), 0.5, 1e-12);
}

TEST(Geometry, CartesianToPolarRoundTrip) {
  const PolarMeasurement p = cartesian_to_polar(Vec2(-3000.0, 4000.0));
  EXPECT_NEAR(p.rho, 5000.0, 1e-9);
  EXPECT_NEAR(p.theta, std::atan2(4000.0, -3000.0), 1e-15);
}

TEST(Geometry, ConvertCapsAzimuthSigma) {
  RadarParams radar;
  PolarMeasurement z;
  z.rho = 300e3;
  z.theta = 0.2;
  z.snr = 1e-6;  // a deep fade
  const ConvertedMeasurement c = convert(z, radar);
  const ConvertedMeasurement capped =
      mucm_convert(z, snr_to_polar_sigma(z.snr, radar).rho, kMaxAzimuthSigma);
  EXPECT_EQ(c.cov, capped.cov);
  EXPECT_TRUE(std::isfinite(c.x));
}

TEST(Geometry, RadarParamsValidate) {
  RadarParams p;
  EXPECT_NO_THROW(p.validate());
  p.range_coeff = -1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}
