#include "mupo/tfot.hpp"

#include <cmath>
#include <stdexcept>

namespace mupo::tfot {

double TfotFit::normalized_time(double t) const {
  const double span = t_end - t_start;
  return span > 0.0 ? (t - t_start) / span : 0.0;
}

geo::Vec2 TfotFit::evaluate(double t) const {
  const double s = normalized_time(t);
  // Horner
  double x = 0.0;
  double y = 0.0;
  for (int i = degree; i >= 0; --i) {
    x = x * s + coeff_x(i);
    y = y * s + coeff_y(i);
  }
  return {x, y};
}

TfotFit fit_tfot(std::span<const geo::ConvertedMeasurement> points, int degree, double lambda) {
  if (degree < 0) throw std::invalid_argument("fit_tfot: degree must be >= 0");
  if (lambda < 0.0) throw std::invalid_argument("fit_tfot: lambda must be >= 0");
  if (points.size() < static_cast<std::size_t>(degree) + 1) {
    throw std::invalid_argument("fit_tfot: fewer points than coefficients");
  }

  TfotFit fit;
  fit.degree = degree;
  fit.lambda = lambda;
  fit.t_start = points.front().t;
  fit.t_end = points.back().t;

  const auto n = static_cast<Eigen::Index>(points.size());
  const int k = degree + 1;
  Eigen::MatrixXd V(n, k);
  Eigen::VectorXd px(n), py(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& p = points[static_cast<std::size_t>(r)];
    const double s = fit.normalized_time(p.t);
    double pow_s = 1.0;
    for (int i = 0; i < k; ++i) {
      V(r, i) = pow_s;
      pow_s *= s;
    }
    px(r) = p.x;
    py(r) = p.y;
  }

  Eigen::MatrixXd normal = V.transpose() * V;
  for (int i = 1; i < k; ++i) normal(i, i) += lambda;
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(normal);
  if (qr.rank() < k) throw std::invalid_argument("fit_tfot: rank-deficient time samples");
  // Solve on centered positions; the intercept is unpenalized so the shift is exact.
  const double mx = px.mean();
  const double my = py.mean();
  fit.coeff_x = qr.solve(V.transpose() * (px.array() - mx).matrix());
  fit.coeff_y = qr.solve(V.transpose() * (py.array() - my).matrix());
  fit.coeff_x(0) += mx;
  fit.coeff_y(0) += my;
  if (!fit.coeff_x.allFinite() || !fit.coeff_y.allFinite()) {
    throw std::invalid_argument("fit_tfot: non-finite coefficients");
  }
  return fit;
}

std::vector<TimedPoint> sample_tfot(const TfotFit& fit, int n_s) {
  if (n_s < 2) throw std::invalid_argument("sample_tfot: n_s must be >= 2");
  std::vector<TimedPoint> out;
  out.reserve(static_cast<std::size_t>(n_s));
  for (int i = 0; i < n_s; ++i) {
    const double t = i == n_s - 1
                         ? fit.t_end
                         : fit.t_start + (fit.t_end - fit.t_start) * i / (n_s - 1);
    const geo::Vec2 p = fit.evaluate(t);
    out.push_back({t, p.x(), p.y()});
  }
  return out;
}

}  // namespace mupo::tfot
