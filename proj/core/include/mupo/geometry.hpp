#pragma once

#include <Eigen/Dense>

namespace mupo::geo {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double kPi = 3.14159265358979323846;

// Azimuth sigma cap used by convert(): deep Swerling fades can push the
// model sigma past the range where the conversion is defined.
inline constexpr double kMaxAzimuthSigma = 0.5;

// Jitter added to a converted covariance that fails the positive-definite check.
inline constexpr double kCovJitter = 1e-6;

/// Radar accuracy model. The physical constants of the SNR/accuracy law are
/// folded into two coefficients: sigma = coeff / sqrt(2 * snr).
struct RadarParams {
  double range_coeff = 150.0;     // m, c / (2B) for a 1 MHz bandwidth
  double azimuth_coeff = 0.0109;  // rad, theta_3dB / 1.6 for a 1 degree beam
  double reference_snr = 100.0;
  double reference_range = 300e3;  // m

  void validate() const;
};

struct PolarMeasurement {
  double rho = 0.0;    // m
  double theta = 0.0;  // rad, (-pi, pi]
  double snr = 1.0;    // linear power ratio
  double t = 0.0;      // s
};

struct ConvertedMeasurement {
  double x = 0.0;
  double y = 0.0;
  Mat2 cov = Mat2::Identity();
  double t = 0.0;
  bool jittered = false;  // covariance needed the kCovJitter repair

  Vec2 position() const { return {x, y}; }
};

struct PolarSigma {
  double rho = 0.0;    // m
  double theta = 0.0;  // rad
};

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

/// Range/azimuth of a Cartesian point seen from the origin.
PolarMeasurement cartesian_to_polar(const Vec2& p);

PolarSigma snr_to_polar_sigma(double snr, const RadarParams& params);

/// Mean SNR at range `rho` given a reference SNR at `rho_ref` (fourth-power law).
double propagate_snr(double snr_ref, double rho_ref, double rho);

/// Modified unbiased conversion of a polar measurement to Cartesian position
/// with its covariance. The covariance is symmetrized; a non positive-definite
/// result is repaired with kCovJitter * I and flagged.
ConvertedMeasurement mucm_convert(const PolarMeasurement& z, double sigma_rho, double sigma_theta);

/// First-order (Jacobian) Cartesian covariance A diag(s_rho^2, s_theta^2) A^T.
Mat2 linearized_cartesian_cov(double rho, double theta, double sigma_rho, double sigma_theta);

/// Convenience: sigma from the measurement SNR (azimuth capped at
/// kMaxAzimuthSigma), then mucm_convert.
ConvertedMeasurement convert(const PolarMeasurement& z, const RadarParams& params);

bool is_positive_definite(const Mat2& m);

}  // namespace mupo::geo
