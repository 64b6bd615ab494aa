#include "mupo/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mupo::det {

namespace {

void check_shapes(const HeadLogits& z, const TepLabels& labels, const HeadLogits* grad) {
  if (z.height != labels.height || z.width != labels.width) {
    throw std::invalid_argument("loss: logits " + std::to_string(z.height) + "x" +
                                std::to_string(z.width) + " vs labels " +
                                std::to_string(labels.height) + "x" +
                                std::to_string(labels.width));
  }
  if (grad && (grad->height != z.height || grad->width != z.width)) {
    throw std::invalid_argument("loss: gradient buffer shape mismatch");
  }
}

struct Clamped {
  double value;
  bool active;  // false when the clamp cut the gradient
};

Clamped clamp_prob(double p) {
  if (p < kProbEps) return {kProbEps, false};
  if (p > 1.0 - kProbEps) return {1.0 - kProbEps, false};
  return {p, true};
}

// Soft-target BCE and its derivative with respect to the logit.
double bce(double z, double target, double* dz) {
  const double p = sigmoid(z);
  const Clamped c = clamp_prob(p);
  const double loss = -(target * std::log(c.value) + (1.0 - target) * std::log(1.0 - c.value));
  if (dz) *dz = c.active ? (p - target) : 0.0;
  return loss;
}

}  // namespace

LossTerms& LossTerms::operator+=(const LossTerms& o) {
  detection += o.detection;
  regression += o.regression;
  confidence += o.confidence;
  constraint += o.constraint;
  total += o.total;
  return *this;
}

LossTerms LossTerms::scaled(double k) const {
  return {detection * k, regression * k, confidence * k, constraint * k, total * k};
}

double loss_detection(const HeadLogits& z, const TepLabels& labels, HeadLogits* grad,
                      double scale) {
  check_shapes(z, labels, grad);
  double loss = 0.0;
  for (std::size_t m = 0; m < z.size(); ++m) {
    double dz = 0.0;
    loss += bce(z.existence[m], labels.positive[m] ? 1.0 : 0.0, grad ? &dz : nullptr);
    if (grad) grad->existence[m] += scale * dz;
  }
  return loss;
}

double loss_confidence(const HeadLogits& z, const TepLabels& labels, HeadLogits* grad,
                       double scale) {
  check_shapes(z, labels, grad);
  double loss = 0.0;
  for (std::size_t m = 0; m < z.size(); ++m) {
    if (!labels.positive[m]) continue;
    double dz = 0.0;
    loss += bce(z.confidence[m], labels.alpha, grad ? &dz : nullptr);
    if (grad) grad->confidence[m] += scale * dz;
  }
  return loss;
}

double loss_regression(const HeadLogits& z, const TepLabels& labels, HeadLogits* grad,
                       double scale) {
  check_shapes(z, labels, grad);
  double loss = 0.0;
  for (int row = 0; row < z.height; ++row) {
    for (int col = 0; col < z.width; ++col) {
      const auto m = static_cast<std::size_t>(row) * z.width + col;
      if (!labels.positive[m]) continue;
      const double a = sigmoid(z.confidence[m]);
      const double tep_x = offset_from_logit(z.offset_x[m]) + col;
      const double tep_y = offset_from_logit(z.offset_y[m]) + row;
      const double ex = (1.0 - a) * tep_x + a * labels.imm_grid.x() - labels.truth_grid.x();
      const double ey = (1.0 - a) * tep_y + a * labels.imm_grid.y() - labels.truth_grid.y();
      loss += ex * ex + ey * ey;
      if (grad) {
        grad->offset_x[m] += scale * 2.0 * ex * (1.0 - a) * offset_slope(z.offset_x[m]);
        grad->offset_y[m] += scale * 2.0 * ey * (1.0 - a) * offset_slope(z.offset_y[m]);
        const double da = 2.0 * (ex * (labels.imm_grid.x() - tep_x) +
                                 ey * (labels.imm_grid.y() - tep_y));
        grad->confidence[m] += scale * da * a * (1.0 - a);
      }
    }
  }
  return loss;
}

double loss_constraint(const HeadLogits& z, const TepLabels& labels, const LossWeights& w,
                       HeadLogits* grad, double scale) {
  check_shapes(z, labels, grad);
  double entropy = 0.0;
  double neg_log_sum = 0.0;
  int inside = 0;
  for (std::size_t m = 0; m < z.size(); ++m) {
    const double p = sigmoid(z.existence[m]);
    const Clamped c = clamp_prob(p);
    if (labels.constraint[m]) {
      neg_log_sum -= std::log(c.value);
      ++inside;
    } else {
      entropy -= c.value * std::log(c.value);
      if (grad && c.active) {
        grad->existence[m] += scale * w.entropy * -(std::log(p) + 1.0) * p * (1.0 - p);
      }
    }
  }
  if (inside == 0) throw std::invalid_argument("loss_constraint: empty constraint set");
  const double perplexity = std::exp(neg_log_sum / inside);
  if (grad) {
    for (std::size_t m = 0; m < z.size(); ++m) {
      if (!labels.constraint[m]) continue;
      const double p = sigmoid(z.existence[m]);
      if (!clamp_prob(p).active) continue;
      grad->existence[m] += scale * w.perplexity * -perplexity * (1.0 - p) / inside;
    }
  }
  return w.entropy * entropy + w.perplexity * perplexity;
}

LossTerms total_loss(const HeadLogits& z, const TepLabels& labels, const LossWeights& w,
                     HeadLogits* grad, double scale) {
  LossTerms t;
  t.detection = loss_detection(z, labels, grad, scale * w.detection);
  t.regression = loss_regression(z, labels, grad, scale * w.regression);
  t.confidence = loss_confidence(z, labels, grad, scale * w.confidence);
  t.constraint = loss_constraint(z, labels, w, grad, scale * w.constraint);
  t.total = w.detection * t.detection + w.regression * t.regression +
            w.confidence * t.confidence + w.constraint * t.constraint;
  return t;
}

}  // namespace mupo::det
