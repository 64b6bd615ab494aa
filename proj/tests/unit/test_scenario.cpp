#include <cmath>
#include <stdexcept>

#include <gtest/gtest.h>

#include "mupo/scenario.hpp"
#include "oracles.hpp"

using namespace mupo;
using namespace mupo::sim;
using mupo::testing::ks_pvalue;
using mupo::testing::ks_statistic;
using mupo::testing::normal_cdf;

namespace {

ScenarioConfig single_model_config(const DynamicModel& m) {
  ScenarioConfig cfg;
  cfg.models = {m};
  cfg.transition = Eigen::MatrixXd::Ones(1, 1);
  cfg.lambda_switch = 0.0;
  return cfg;
}

}  // namespace

TEST(SampleInitialState, DegenerateIntervalsAreDeterministic) {
  InitRanges r;
  r.range = {200e3, 200e3};
  r.azimuth = {0.5, 0.5};
  r.speed = {210.0, 210.0};
  r.course = {-1.0, -1.0};
  Rng rng(3);
  const TargetState s = sample_initial_state(r, rng);
  EXPECT_DOUBLE_EQ(s.x, 200e3 * std::cos(0.5));
  EXPECT_DOUBLE_EQ(s.y, 200e3 * std::sin(0.5));
  EXPECT_DOUBLE_EQ(s.vx, 210.0 * std::cos(-1.0));
  EXPECT_DOUBLE_EQ(s.vy, 210.0 * std::sin(-1.0));
}

TEST(SampleInitialState, DefaultRangesStayInsideAndAreUniform) {
  const InitRanges r;
  Rng rng(4);
  std::vector<double> rho;
  for (int i = 0; i < 10000; ++i) {
    const TargetState s = sample_initial_state(r, rng);
    const double range = std::hypot(s.x, s.y);
    ASSERT_GE(range, 150e3 - 1e-6);
    ASSERT_LE(range, 400e3 + 1e-6);
    ASSERT_GE(s.speed(), 200.0 - 1e-9);
    ASSERT_LE(s.speed(), 220.0 + 1e-9);
    rho.push_back(range);
  }
  const double d = ks_statistic(rho, [](double x) {
    return std::clamp((x - 150e3) / 250e3, 0.0, 1.0);
  });
  EXPECT_GT(ks_pvalue(d, rho.size()), 0.01);
}

TEST(SwitchSchedule, PoissonMeanCount) {
  Rng rng(5);
  const Eigen::MatrixXd p = ScenarioConfig::default_transition(7);
  double total = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) total += sample_switch_schedule(0.02, 200.0, p, 0, rng).size();
  EXPECT_NEAR(total / n, 4.0, 0.1);
}

TEST(SwitchSchedule, EventTimesAreIncreasingAndInsideDuration) {
  Rng rng(6);
  const auto ev = sample_switch_schedule(0.5, 100.0, ScenarioConfig::default_transition(3), 0, rng);
  ASSERT_FALSE(ev.empty());
  for (std::size_t i = 0; i < ev.size(); ++i) {
    EXPECT_GT(ev[i].t, 0.0);
    EXPECT_LE(ev[i].t, 100.0);
    if (i > 0) {
      EXPECT_GT(ev[i].t, ev[i - 1].t);
    }
  }
}

TEST(SwitchSchedule, IdentityTransitionNeverChangesModel) {
  Rng rng(7);
  const auto ev = sample_switch_schedule(1.0, 500.0, Eigen::MatrixXd::Identity(4, 4), 2, rng);
  ASSERT_GT(ev.size(), 100u);
  for (const auto& e : ev) EXPECT_EQ(e.model, 2u);
}

TEST(SwitchSchedule, TransitionFrequenciesMatchMatrix) {
  Eigen::MatrixXd p(3, 3);
  p << 0.2, 0.5, 0.3,  //
      0.6, 0.1, 0.3,   //
      0.25, 0.25, 0.5;
  Rng rng(8);
  const auto ev = sample_switch_schedule(1.0, 1.0e5, p, 0, rng);
  ASSERT_GE(ev.size(), 99000u);
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(3, 3);
  std::size_t cur = 0;
  for (const auto& e : ev) {
    counts(static_cast<Eigen::Index>(cur), static_cast<Eigen::Index>(e.model)) += 1.0;
    cur = e.model;
  }
  for (Eigen::Index i = 0; i < 3; ++i) {
    const double row = counts.row(i).sum();
    for (Eigen::Index j = 0; j < 3; ++j) EXPECT_NEAR(counts(i, j) / row, p(i, j), 0.01);
  }
}

TEST(Propagate, ConstantVelocityWithoutNoise) {
  DynamicModel m;
  m.tag = ModelTag::CV;
  m.q = 0.0;
  TargetState s;
  s.vx = 10.0;
  Rng rng(1);
  const TargetState n = propagate(s, m, 1.0, rng);
  EXPECT_DOUBLE_EQ(n.x, 10.0);
  EXPECT_DOUBLE_EQ(n.vx, 10.0);
  EXPECT_DOUBLE_EQ(n.y, 0.0);
  EXPECT_DOUBLE_EQ(n.vy, 0.0);
  EXPECT_DOUBLE_EQ(n.t, 1.0);
}

TEST(Propagate, CoordinatedTurnQuarterArc) {
  DynamicModel m;
  m.tag = ModelTag::CTKnown;
  m.q = 0.0;
  m.omega = geo::kPi / 2;
  m.omega_limit = 2.0;
  TargetState s;
  s.vx = 10.0;
  Rng rng(1);
  enter_model(s, m, 0, rng);
  const TargetState n = propagate(s, m, 1.0, rng);
  const double r = 10.0 / (geo::kPi / 2);  // turn radius
  EXPECT_NEAR(n.vx, 0.0, 1e-12);
  EXPECT_NEAR(n.vy, 10.0, 1e-12);
  EXPECT_NEAR(n.x, r, 1e-12);
  EXPECT_NEAR(n.y, r, 1e-12);
  EXPECT_NEAR(n.speed(), 10.0, 1e-12);
}

TEST(Propagate, SingerWithoutManeuverVarianceIsConstantVelocity) {
  DynamicModel m;
  m.tag = ModelTag::Singer;
  m.sigma_m = 0.0;
  TargetState s;
  s.x = 5.0;
  s.vx = 3.0;
  s.vy = -4.0;
  Rng rng(1);
  for (int k = 0; k < 20; ++k) s = propagate(s, m, 0.5, rng);
  EXPECT_NEAR(s.x, 5.0 + 3.0 * 10.0, 1e-9);
  EXPECT_NEAR(s.y, -40.0, 1e-9);
  EXPECT_NEAR(s.vx, 3.0, 1e-12);
  EXPECT_NEAR(s.vy, -4.0, 1e-12);
}

TEST(Propagate, RejectsNonPositiveDt) {
  Rng rng(1);
  EXPECT_THROW(propagate(TargetState{}, DynamicModel{}, 0.0, rng), std::invalid_argument);
}

TEST(GenerateTrack, StateCountAndDeterminism) {
  ScenarioConfig cfg;
  Rng a(42);
  Rng b(42);
  const Track ta = generate_track(cfg, a);
  const Track tb = generate_track(cfg, b);
  ASSERT_EQ(ta.states.size(), 2001u);
  ASSERT_EQ(tb.states.size(), 2001u);
  for (std::size_t k = 0; k < ta.states.size(); ++k) {
    ASSERT_EQ(ta.states[k].x, tb.states[k].x);
    ASSERT_EQ(ta.states[k].y, tb.states[k].y);
    ASSERT_EQ(ta.states[k].vx, tb.states[k].vx);
    ASSERT_EQ(ta.states[k].model_index, tb.states[k].model_index);
  }
  const auto ma = generate_measurements(ta, cfg, a);
  const auto mb = generate_measurements(tb, cfg, b);
  ASSERT_EQ(ma.size(), mb.size());
  for (std::size_t k = 0; k < ma.size(); ++k) {
    EXPECT_EQ(ma[k].rho, mb[k].rho);
    EXPECT_EQ(ma[k].theta, mb[k].theta);
    EXPECT_EQ(ma[k].snr, mb[k].snr);
  }
}

TEST(GenerateTrack, NoSwitchingGivesSingleModel) {
  ScenarioConfig cfg;
  cfg.lambda_switch = 0.0;
  Rng rng(9);
  const Track t = generate_track(cfg, rng);
  for (const auto& s : t.states) EXPECT_EQ(s.model_index, cfg.initial_model);
  EXPECT_TRUE(switch_times(t).empty());
}

TEST(GenerateTrack, SpeedNeverExceedsLimit) {
  ScenarioConfig cfg;
  cfg.lambda_switch = 0.05;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    const Track t = generate_track(cfg, rng);
    for (const auto& s : t.states) ASSERT_LE(s.speed(), cfg.v_max * (1.0 + 1e-12));
  }
}

TEST(GenerateTrack, SegmentsChangeExactlyAtScheduledEvents) {
  const ScenarioConfig cfg = maneuver_heavy_scenario(3);
  Rng rng(cfg.seed);
  const Track t = generate_track(cfg, rng);
  const auto sw = switch_times(t);
  const auto& ev = *cfg.fixed_schedule;
  ASSERT_EQ(sw.size(), ev.size());
  for (std::size_t i = 0; i < ev.size(); ++i) {
    EXPECT_GE(sw[i], ev[i].t - 1e-9);
    EXPECT_LT(sw[i], ev[i].t + cfg.sim_dt);
  }
  // Piecewise constant between change points.
  std::size_t seg = 0;
  for (std::size_t k = 1; k < t.states.size(); ++k) {
    if (t.states[k].model_index != t.states[k - 1].model_index) ++seg;
    const std::size_t expect = seg == 0 ? cfg.initial_model : ev[seg - 1].model;
    ASSERT_EQ(t.states[k].model_index, expect);
  }
}

TEST(GenerateTrack, ConstantVelocityWithoutNoiseKeepsSpeed) {
  DynamicModel m;
  m.tag = ModelTag::CV;
  m.q = 0.0;
  const ScenarioConfig cfg = single_model_config(m);
  Rng rng(10);
  const Track t = generate_track(cfg, rng);
  const double v0 = t.states.front().speed();
  for (const auto& s : t.states) EXPECT_NEAR(s.speed(), v0, 1e-9 * v0);
}

TEST(GenerateMeasurements, CountMatchesDurationOverInterval) {
  ScenarioConfig cfg;
  Rng rng(11);
  const Track t = generate_track(cfg, rng);
  const auto z = generate_measurements(t, cfg, rng);
  ASSERT_EQ(z.size(), 200u);
  EXPECT_DOUBLE_EQ(z.front().t, 1.0);
  EXPECT_DOUBLE_EQ(z.back().t, 200.0);
}

TEST(GenerateMeasurements, VanishingNoiseReproducesTruth) {
  ScenarioConfig cfg;
  cfg.snr_1 = 1e30;
  Rng rng(12);
  const Track t = generate_track(cfg, rng);
  const auto z = generate_measurements(t, cfg, rng);
  const auto truth = truth_at_measurements(t, cfg);
  for (std::size_t k = 0; k < z.size(); ++k) {
    const geo::PolarMeasurement c = geo::cartesian_to_polar(truth[k].position());
    EXPECT_NEAR(z[k].rho, c.rho, 1e-6);
    EXPECT_NEAR(z[k].theta, c.theta, 1e-12);
  }
}

TEST(GenerateMeasurements, SwerlingSnrIsExponential) {
  // A stationary target keeps the mean SNR fixed.
  DynamicModel m;
  m.tag = ModelTag::CV;
  m.q = 0.0;
  ScenarioConfig cfg = single_model_config(m);
  cfg.init.speed = {0.0, 0.0};
  cfg.duration = 10000.0;
  cfg.sim_dt = 1.0;
  cfg.snr_1 = 40.0;
  Rng rng(13);
  const Track t = generate_track(cfg, rng);
  const auto z = generate_measurements(t, cfg, rng);
  ASSERT_EQ(z.size(), 10000u);
  std::vector<double> snr;
  for (const auto& r : z) snr.push_back(r.snr);
  const double d = ks_statistic(snr, [](double x) { return 1.0 - std::exp(-x / 40.0); });
  EXPECT_GT(ks_pvalue(d, snr.size()), 0.01);
}

TEST(GenerateMeasurements, StandardizedResidualsAreNormal) {
  ScenarioConfig cfg;
  cfg.duration = 10000.0;
  cfg.sim_dt = 1.0;
  cfg.lambda_switch = 0.0;
  cfg.init.speed = {0.0, 0.0};
  Rng rng(14);
  const Track t = generate_track(cfg, rng);
  const auto z = generate_measurements(t, cfg, rng);
  const auto truth = truth_at_measurements(t, cfg);
  std::vector<double> r_rho;
  std::vector<double> r_theta;
  for (std::size_t k = 0; k < z.size(); ++k) {
    const geo::PolarMeasurement c = geo::cartesian_to_polar(truth[k].position());
    const geo::PolarSigma s = geo::snr_to_polar_sigma(z[k].snr, cfg.radar);
    r_rho.push_back((z[k].rho - c.rho) / s.rho);
    r_theta.push_back(geo::wrap_angle(z[k].theta - c.theta) / s.theta);
  }
  EXPECT_GT(ks_pvalue(ks_statistic(r_rho, normal_cdf), r_rho.size()), 0.01);
  EXPECT_GT(ks_pvalue(ks_statistic(r_theta, normal_cdf), r_theta.size()), 0.01);
}

TEST(ManeuverHeavy, ScriptedPattern) {
  const ScenarioConfig cfg = maneuver_heavy_scenario(5);
  ASSERT_TRUE(cfg.fixed_schedule.has_value());
  const std::vector<ModelTag> expect{ModelTag::Jerk, ModelTag::CTKnown, ModelTag::CS,
                                     ModelTag::Jerk, ModelTag::CTKnown};
  ASSERT_EQ(cfg.fixed_schedule->size(), expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) {
    EXPECT_EQ(cfg.models[(*cfg.fixed_schedule)[i].model].tag, expect[i]);
  }
  EXPECT_EQ(cfg.models[cfg.initial_model].tag, ModelTag::CV);
}

TEST(ScenarioConfig, ValidateRejectsNonStochasticRows) {
  ScenarioConfig cfg;
  cfg.transition(0, 1) += 0.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(ModelTag, StringRoundTrip) {
  for (ModelTag t : {ModelTag::CV, ModelTag::CA, ModelTag::Jerk, ModelTag::Singer, ModelTag::CS,
                     ModelTag::CTKnown, ModelTag::CTUnknown}) {
    EXPECT_EQ(model_tag_from_string(to_string(t)), t);
  }
}
