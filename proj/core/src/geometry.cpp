#include "mupo/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mupo::geo {

void RadarParams::validate() const {
  if (!(range_coeff > 0.0) || !(azimuth_coeff > 0.0) || !(reference_snr > 0.0) ||
      !(reference_range > 0.0)) {
    throw std::invalid_argument("RadarParams: all fields must be strictly positive");
  }
}

double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * kPi);  // [-pi, pi]
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

PolarMeasurement cartesian_to_polar(const Vec2& p) {
  PolarMeasurement z;
  z.rho = std::hypot(p.x(), p.y());
  z.theta = wrap_angle(std::atan2(p.y(), p.x()));
  return z;
}

PolarSigma snr_to_polar_sigma(double snr, const RadarParams& params) {
  if (!(snr > 0.0)) throw std::invalid_argument("snr_to_polar_sigma: snr must be positive");
  const double root = std::sqrt(2.0 * snr);
  return {params.range_coeff / root, params.azimuth_coeff / root};
}

double propagate_snr(double snr_ref, double rho_ref, double rho) {
  if (!(snr_ref > 0.0)) throw std::invalid_argument("propagate_snr: snr must be positive");
  if (!(rho_ref > 0.0) || !(rho > 0.0)) {
    throw std::invalid_argument("propagate_snr: ranges must be positive");
  }
  const double ratio = rho_ref / rho;
  return snr_ref * (ratio * ratio) * (ratio * ratio);
}

bool is_positive_definite(const Mat2& m) {
  // Sylvester's criterion, with the determinant required to clear rounding
  // noise relative to the trace (rank-one matrices otherwise pass by luck).
  const double tr = m(0, 0) + m(1, 1);
  return m(0, 0) > 0.0 && m(1, 1) > 0.0 && m.determinant() > 1e-12 * tr * tr;
}

ConvertedMeasurement mucm_convert(const PolarMeasurement& z, double sigma_rho, double sigma_theta) {
  const double st2 = sigma_theta * sigma_theta;
  if (!(st2 < 1.0)) throw std::invalid_argument("mucm_convert: sigma_theta^2 must be < 1");

  const double inv_lambda = std::exp(st2 / 2.0);
  const double c = std::cos(z.theta);
  const double s = std::sin(z.theta);

  ConvertedMeasurement out;
  out.t = z.t;
  out.x = inv_lambda * z.rho * c;
  out.y = inv_lambda * z.rho * s;

  const double rho2 = z.rho * z.rho;
  const double half_sum = 0.5 * (rho2 + sigma_rho * sigma_rho);
  const double e1 = std::exp(-st2);
  const double e2 = std::exp(-2.0 * st2);
  const double cos2 = std::cos(2.0 * z.theta);
  const double sin2 = std::sin(2.0 * z.theta);

  const double sxx = half_sum * (1.0 + cos2 * e2) - e1 * rho2 * c * c;
  const double syy = half_sum * (1.0 - cos2 * e2) - e1 * rho2 * s * s;
  const double sxy = half_sum * sin2 * e2 - e1 * rho2 * c * s;

  out.cov << sxx, sxy, sxy, syy;
  if (!is_positive_definite(out.cov)) {
    out.cov += kCovJitter * Mat2::Identity();
    out.jittered = true;
  }
  return out;
}

Mat2 linearized_cartesian_cov(double rho, double theta, double sigma_rho, double sigma_theta) {
  if (!(rho > 0.0)) throw std::invalid_argument("linearized_cartesian_cov: rho must be positive");
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Mat2 a;
  a << c, -rho * s, s, rho * c;
  const Eigen::Vector2d d(sigma_rho * sigma_rho, sigma_theta * sigma_theta);
  Mat2 cov = a * d.asDiagonal() * a.transpose();
  return 0.5 * (cov + cov.transpose());
}

ConvertedMeasurement convert(const PolarMeasurement& z, const RadarParams& params) {
  const PolarSigma sigma = snr_to_polar_sigma(z.snr, params);
  return mucm_convert(z, sigma.rho, std::min(sigma.theta, kMaxAzimuthSigma));
}

}  // namespace mupo::geo
