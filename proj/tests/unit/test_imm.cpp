#include <cmath>
#include <stdexcept>

#include <gtest/gtest.h>

#include "mupo/imm.hpp"
#include "mupo/scenario.hpp"

using namespace mupo;
using namespace mupo::imm;

namespace {

geo::ConvertedMeasurement meas(double x, double y, double t, const geo::Mat2& cov) {
  geo::ConvertedMeasurement z;
  z.x = x;
  z.y = y;
  z.t = t;
  z.cov = cov;
  return z;
}

FilterModel cv_model(double q) {
  FilterModel m;
  m.kind = Kinematics::CV;
  m.q = q;
  return m;
}

// Textbook Kalman filter on [x, vx, y, vy], written independently of the IMM.
struct PlainKf {
  Eigen::Vector4d x;
  Eigen::Matrix4d P;

  void step(const geo::ConvertedMeasurement& z, double dt, double q) {
    Eigen::Matrix4d F = Eigen::Matrix4d::Identity();
    F(0, 1) = dt;
    F(2, 3) = dt;
    Eigen::Matrix2d blk;
    blk << dt * dt * dt / 3, dt * dt / 2, dt * dt / 2, dt;
    Eigen::Matrix4d Q = Eigen::Matrix4d::Zero();
    Q.block<2, 2>(0, 0) = q * blk;
    Q.block<2, 2>(2, 2) = q * blk;
    x = F * x;
    P = F * P * F.transpose() + Q;
    Eigen::Matrix<double, 2, 4> H = Eigen::Matrix<double, 2, 4>::Zero();
    H(0, 0) = 1;
    H(1, 2) = 1;
    const Eigen::Matrix2d S = H * P * H.transpose() + z.cov;
    const Eigen::Matrix<double, 4, 2> K = P * H.transpose() * S.inverse();
    x += K * (Eigen::Vector2d(z.x, z.y) - H * x);
    P = (Eigen::Matrix4d::Identity() - K * H) * P;
  }
};

}  // namespace

TEST(ImmStep, ScalarHandCase) {
  const ImmConfig cfg = ImmConfig::single(cv_model(0.0));
  ImmState s;
  s.mu = Eigen::VectorXd::Ones(1);
  ModelState m;
  m.x = Eigen::VectorXd::Zero(4);
  m.P = Eigen::MatrixXd::Zero(4, 4);
  m.P(0, 0) = 1.0;
  m.P(2, 2) = 1.0;
  s.models.push_back(m);
  const ImmState n = imm_step(s, meas(1.0, 1.0, 1.0, geo::Mat2::Identity()), 1.0, cfg);
  EXPECT_NEAR(n.estimate.x(0), 0.5, 1e-12);
  EXPECT_NEAR(n.estimate.x(2), 0.5, 1e-12);
  EXPECT_NEAR(n.estimate.P(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(n.estimate.P(2, 2), 0.5, 1e-12);
}

TEST(ImmStep, SingleModelEqualsPlainKalmanFilter) {
  const double q = 2.0;
  const ImmConfig cfg = ImmConfig::single(cv_model(q));
  geo::Mat2 r;
  r << 400.0, 30.0, 30.0, 100.0;
  const auto z1 = meas(0.0, 0.0, 0.0, r);
  const auto z2 = meas(12.0, -3.0, 1.0, r);
  ImmState s = init_from_measurements(z1, z2, cfg);
  PlainKf kf{s.estimate.x, s.estimate.P};
  for (int k = 2; k < 30; ++k) {
    const auto z = meas(10.0 * k + std::sin(k) * 15, -2.0 * k + std::cos(3 * k) * 8, k, r);
    s = imm_step(s, z, 1.0, cfg);
    kf.step(z, 1.0, q);
    EXPECT_LT((s.estimate.x - kf.x).norm(), 1e-8 * (1.0 + kf.x.norm()));
    EXPECT_LT((s.estimate.P - kf.P).norm(), 1e-8 * (1.0 + kf.P.norm()));
  }
}

TEST(ImmStep, IdentityMixingKeepsModelProbabilities) {
  ImmConfig cfg = ImmConfig::desk_preset();
  const auto n = static_cast<Eigen::Index>(cfg.bank.size());
  cfg.mixing = Eigen::MatrixXd::Identity(n, n);
  cfg.mu0 = Eigen::VectorXd::Zero(n);
  cfg.mu0(0) = 1.0;
  const geo::Mat2 r = 100.0 * geo::Mat2::Identity();
  ImmState s = init_from_measurements(meas(0, 0, 0, r), meas(200, 10, 1, r), cfg);
  for (int k = 2; k < 40; ++k) {
    s = imm_step(s, meas(200.0 * k + 50 * std::sin(0.3 * k), 10.0 * k, k, r), 1.0, cfg);
    EXPECT_DOUBLE_EQ(s.mu(0), 1.0);
    for (Eigen::Index j = 1; j < n; ++j) EXPECT_DOUBLE_EQ(s.mu(j), 0.0);
  }
}

TEST(InitFromMeasurements, TwoPointDifferencing) {
  const ImmConfig cfg = ImmConfig::desk_preset();
  geo::Mat2 sig;
  sig << 9.0, 2.0, 2.0, 4.0;
  const ImmState s = init_from_measurements(meas(0, 0, 0, sig), meas(10, 0, 1, sig), cfg);
  EXPECT_DOUBLE_EQ(s.estimate.x(1), 10.0);
  EXPECT_DOUBLE_EQ(s.estimate.x(3), 0.0);
  EXPECT_DOUBLE_EQ(s.estimate.x(0), 10.0);
  // Velocity block is 2 sigma / dt^2.
  EXPECT_DOUBLE_EQ(s.estimate.P(1, 1), 18.0);
  EXPECT_DOUBLE_EQ(s.estimate.P(3, 3), 8.0);
  EXPECT_DOUBLE_EQ(s.estimate.P(1, 3), 4.0);
  EXPECT_EQ(s.mu, cfg.mu0);

  const ImmState h = init_from_measurements(meas(0, 0, 0, sig), meas(10, 0, 2, sig), cfg);
  EXPECT_DOUBLE_EQ(h.estimate.P(1, 1), 18.0 / 4.0);
  EXPECT_DOUBLE_EQ(h.estimate.x(1), 5.0);
}

TEST(InitFromMeasurements, ZeroCovarianceGivesExactStateAndZeroP) {
  const ImmConfig cfg = ImmConfig::from_preset("cv");
  const ImmState s = init_from_measurements(meas(1, 2, 0, geo::Mat2::Zero()),
                                            meas(4, 6, 1, geo::Mat2::Zero()), cfg);
  EXPECT_EQ(s.estimate.x, Vec4(4, 3, 6, 4));
  EXPECT_TRUE(s.estimate.P.isZero());
}

TEST(InitFromMeasurements, RejectsNonIncreasingTime) {
  const ImmConfig cfg = ImmConfig::desk_preset();
  const geo::Mat2 r = geo::Mat2::Identity();
  EXPECT_THROW(init_from_measurements(meas(0, 0, 1, r), meas(1, 0, 1, r), cfg),
               std::invalid_argument);
}

TEST(ImmConfig, PresetsValidate) {
  for (const char* name : {"desk8", "wide16", "cv"}) {
    EXPECT_NO_THROW(ImmConfig::from_preset(name).validate()) << name;
  }
  EXPECT_EQ(ImmConfig::desk_preset().bank.size(), 8u);
  EXPECT_EQ(ImmConfig::wide_preset().bank.size(), 16u);
  EXPECT_THROW(ImmConfig::from_preset("nope"), std::invalid_argument);
}

TEST(ImmConfig, RejectsBadMixing) {
  ImmConfig cfg = ImmConfig::desk_preset();
  cfg.mixing(0, 0) = 2.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(ImmStep, SimplexAndCovarianceInvariantsOnManeuveringTrack) {
  const ImmConfig cfg = ImmConfig::desk_preset();
  const sim::ScenarioConfig sc = sim::maneuver_heavy_scenario(17);
  sim::Rng rng(sc.seed);
  const sim::Track track = sim::generate_track(sc, rng);
  const auto zs = sim::generate_measurements(track, sc, rng);
  std::vector<geo::ConvertedMeasurement> c;
  for (const auto& z : zs) c.push_back(geo::convert(z, sc.radar));
  ImmState s = init_from_measurements(c[0], c[1], cfg);
  for (std::size_t k = 2; k < c.size(); ++k) {
    s = imm_step(s, c[k], c[k].t - c[k - 1].t, cfg);
    ASSERT_NEAR(s.mu.sum(), 1.0, 1e-9);
    ASSERT_GE(s.mu.minCoeff(), 0.0);
    ASSERT_EQ(s.estimate.P, s.estimate.P.transpose());
    const Eigen::SelfAdjointEigenSolver<Mat4> es(s.estimate.P);
    ASSERT_GE(es.eigenvalues().minCoeff(), -1e-9);
  }
}

TEST(ImmStep, FilteringBeatsMeasurementsOnConstantVelocityTruth) {
  sim::DynamicModel m;
  m.tag = sim::ModelTag::CV;
  m.q = 0.1;
  sim::ScenarioConfig sc;
  sc.models = {m};
  sc.transition = Eigen::MatrixXd::Ones(1, 1);
  sc.lambda_switch = 0.0;
  sc.fluctuation = sim::SnrFluctuation::None;
  const ImmConfig cfg = ImmConfig::from_preset("cv");

  double se_imm = 0.0;
  double se_meas = 0.0;
  double nees_sum = 0.0;
  long n = 0;
  for (std::uint64_t run = 0; run < 20; ++run) {
    sim::Rng rng(100 + run);
    const sim::Track track = sim::generate_track(sc, rng);
    const auto zs = sim::generate_measurements(track, sc, rng);
    const auto truth = sim::truth_at_measurements(track, sc);
    std::vector<geo::ConvertedMeasurement> c;
    for (const auto& z : zs) c.push_back(geo::convert(z, sc.radar));
    ImmState s = init_from_measurements(c[0], c[1], cfg);
    for (std::size_t k = 2; k < c.size(); ++k) {
      s = imm_step(s, c[k], 1.0, cfg);
      if (c[k].t < 10.0) continue;
      const geo::Vec2 p = truth[k].position();
      se_imm += (s.estimate.position() - p).squaredNorm();
      se_meas += (c[k].position() - p).squaredNorm();
      nees_sum += nees(s.estimate, Vec4(truth[k].x, truth[k].vx, truth[k].y, truth[k].vy));
      ++n;
    }
  }
  EXPECT_LT(se_imm, se_meas);
  const double mean_nees = nees_sum / n;
  EXPECT_GT(mean_nees, 3.0);
  EXPECT_LT(mean_nees, 5.2);
}
