#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mupo/geometry.hpp"

namespace mupo::imm {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

enum class Kinematics { CV, CA, CT };

/// One Kalman filter of the bank. CV/CT carry [x, vx, y, vy]; CA appends
/// [ax, ay]. The first four components are the common state used for mixing
/// and output.
struct FilterModel {
  Kinematics kind = Kinematics::CV;
  double q = 1.0;       // white-noise spectral density (acceleration for CV/CT, jerk for CA)
  double omega = 0.0;   // CT turn rate, rad/s
  double init_accel_var = 100.0;  // (m/s^2)^2, CA acceleration prior at initiation
  std::string label;

  int dim() const { return kind == Kinematics::CA ? 6 : 4; }
  Eigen::MatrixXd transition(double dt) const;
  Eigen::MatrixXd process_noise(double dt) const;
};

struct ImmConfig {
  std::vector<FilterModel> bank;
  Eigen::MatrixXd mixing;  // row-stochastic Markov matrix
  Eigen::VectorXd mu0;

  void validate() const;

  /// Eight models: CV q in {0.1, 10}, CA q in {1, 50}, CT at +-3 and +-10 deg/s.
  static ImmConfig desk_preset();
  /// Sixteen-model bank of the same families (approximate; the original
  /// parameterization is not published).
  static ImmConfig wide_preset();
  static ImmConfig single(const FilterModel& model);
  /// Builds the Markov matrix with `stay` on the diagonal, remainder uniform.
  static Eigen::MatrixXd sticky_mixing(std::size_t n, double stay);
  static ImmConfig from_preset(const std::string& name);
};

struct ModelState {
  Eigen::VectorXd x;
  Eigen::MatrixXd P;
};

struct ImmEstimate {
  Vec4 x = Vec4::Zero();  // [x, vx, y, vy]
  Mat4 P = Mat4::Zero();
  Eigen::VectorXd mu;
  double t = 0.0;

  geo::Vec2 position() const { return {x(0), x(2)}; }
  geo::Vec2 velocity() const { return {x(1), x(3)}; }
};

struct ImmState {
  std::vector<ModelState> models;
  Eigen::VectorXd mu;
  ImmEstimate estimate;
};

/// Two-point differencing initiation; velocity from (z2 - z1) / dt.
ImmState init_from_measurements(const geo::ConvertedMeasurement& z1,
                                const geo::ConvertedMeasurement& z2, const ImmConfig& cfg);

/// One IMM cycle: mixing, per-model predict/update with z as a linear position
/// measurement (R = z.cov), probability update and moment-matched combination.
ImmState imm_step(const ImmState& prev, const geo::ConvertedMeasurement& z, double dt,
                  const ImmConfig& cfg);

/// Normalized estimation error squared of the combined estimate.
double nees(const ImmEstimate& est, const Vec4& truth);

}  // namespace mupo::imm
