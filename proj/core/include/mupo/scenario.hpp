#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mupo/geometry.hpp"

namespace mupo::sim {

using Rng = std::mt19937_64;

enum class ModelTag { CV, CA, Jerk, Singer, CS, CTKnown, CTUnknown };

std::string_view to_string(ModelTag tag);
ModelTag model_tag_from_string(std::string_view name);

/// One entry of the simulator's model library. Only the fields relevant to
/// `tag` are read.
struct DynamicModel {
  ModelTag tag = ModelTag::CV;
  double q = 0.0;          // process-noise spectral density of the driving white noise
  double tau = 20.0;       // Singer / CS maneuver time constant, s
  double sigma_m = 10.0;   // Singer maneuver std, m/s^2
  double a_max = 30.0;     // CS acceleration limit, m/s^2
  double omega = 0.0;      // CT_known turn rate, rad/s
  double omega_min = 0.0;  // CT_unknown |turn rate| range, rad/s
  double omega_max = 0.0;
  double omega_limit = 0.5;  // bound on any turn rate, rad/s

  void validate() const;
};

struct TargetState {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  ModelTag model = ModelTag::CV;
  std::size_t model_index = 0;
  // Model scratch: reset to zero whenever the active model changes.
  double ax = 0.0;
  double ay = 0.0;
  double jx = 0.0;
  double jy = 0.0;
  double omega = 0.0;

  geo::Vec2 position() const { return {x, y}; }
  geo::Vec2 velocity() const { return {vx, vy}; }
  double speed() const;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Uniform sampling box for the initial state; angles in radians.
struct InitRanges {
  Interval range{150e3, 400e3};
  Interval azimuth{-geo::kPi, geo::kPi};
  Interval speed{200.0, 220.0};
  Interval course{-geo::kPi, geo::kPi};
};

struct SwitchEvent {
  double t = 0.0;
  std::size_t model = 0;  // index into ScenarioConfig::models
};

enum class SnrFluctuation { Swerling1, None };

struct ScenarioConfig {
  InitRanges init;
  double duration = 200.0;
  double sim_dt = 0.1;
  double meas_dt = 1.0;
  double lambda_switch = 0.02;
  std::vector<DynamicModel> models = default_models();
  Eigen::MatrixXd transition = default_transition(default_models().size());
  std::size_t initial_model = 0;
  /// Replaces the Poisson/Markov schedule when set (scripted scenarios).
  std::optional<std::vector<SwitchEvent>> fixed_schedule;
  double snr_1 = 100.0;
  SnrFluctuation fluctuation = SnrFluctuation::Swerling1;
  geo::RadarParams radar;
  double v_max = 300.0;
  std::uint64_t seed = 1;

  void validate() const;

  static std::vector<DynamicModel> default_models();
  /// Uniform over the other models, zero self-transition.
  static Eigen::MatrixXd default_transition(std::size_t n);
};

struct Track {
  std::vector<TargetState> states;
};

TargetState sample_initial_state(const InitRanges& ranges, Rng& rng);

std::vector<SwitchEvent> sample_switch_schedule(double lambda_switch, double duration,
                                                const Eigen::MatrixXd& transition,
                                                std::size_t initial_model, Rng& rng);

/// Prepares the scratch part of `state` for entering `model` (zeroed; CT_unknown
/// draws its turn rate here).
void enter_model(TargetState& state, const DynamicModel& model, std::size_t index, Rng& rng);

TargetState propagate(const TargetState& state, const DynamicModel& model, double dt, Rng& rng);

Track generate_track(const ScenarioConfig& config, Rng& rng);

std::vector<geo::PolarMeasurement> generate_measurements(const Track& track,
                                                         const ScenarioConfig& config, Rng& rng);

/// Track state sampled at the measurement ticks (what each measurement observes).
std::vector<TargetState> truth_at_measurements(const Track& track, const ScenarioConfig& config);

/// Times (s) at which the truth model changes.
std::vector<double> switch_times(const Track& track);

/// The scripted six-segment maneuver pattern used for held-out evaluation:
/// CV, Jerk, CT, CS, Jerk, CT over 200 s.
ScenarioConfig maneuver_heavy_scenario(std::uint64_t seed);

}  // namespace mupo::sim
