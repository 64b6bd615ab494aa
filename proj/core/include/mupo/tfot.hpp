#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mupo/geometry.hpp"

namespace mupo::tfot {

/// Polynomial trajectory x(s), y(s) on the power basis s^i, where
/// s = (t - t_start) / (t_end - t_start) is window-normalized time.
struct TfotFit {
  int degree = 0;
  Eigen::VectorXd coeff_x;
  Eigen::VectorXd coeff_y;
  double t_start = 0.0;
  double t_end = 0.0;
  double lambda = 0.0;

  double normalized_time(double t) const;
  geo::Vec2 evaluate(double t) const;
};

struct TimedPoint {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
};

/// Ridge-regularized least squares of position against normalized time. The
/// penalty lambda * |a_i|^2 applies to the non-constant coefficients.
TfotFit fit_tfot(std::span<const geo::ConvertedMeasurement> points, int degree, double lambda);

/// n_s evaluations at uniform times over [t_start, t_end], endpoints included.
std::vector<TimedPoint> sample_tfot(const TfotFit& fit, int n_s);

}  // namespace mupo::tfot
