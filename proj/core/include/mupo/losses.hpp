#pragma once

#include "mupo/detector.hpp"

namespace mupo::det {

inline constexpr double kProbEps = 1e-7;

struct LossTerms {
  double detection = 0.0;
  double regression = 0.0;
  double confidence = 0.0;
  double constraint = 0.0;
  double total = 0.0;

  LossTerms& operator+=(const LossTerms& o);
  LossTerms scaled(double k) const;
};

// Each loss returns its value for one sample and, when `grad` is given, adds
// scale * d(loss)/d(logits) into it. Probabilities are clamped to
// [kProbEps, 1 - kProbEps]; the gradient is zero where the clamp is active.

/// Binary cross-entropy of o_p over every TEP, summed.
double loss_detection(const HeadLogits& z, const TepLabels& labels, HeadLogits* grad = nullptr,
                      double scale = 1.0);

/// Cross-entropy of o_alpha against the predicted confidence over the positives.
double loss_confidence(const HeadLogits& z, const TepLabels& labels, HeadLogits* grad = nullptr,
                       double scale = 1.0);

/// Squared error of the fused estimate (1 - a)(offset + i) + a * imm against the
/// truth, grid units, over the positives.
double loss_regression(const HeadLogits& z, const TepLabels& labels, HeadLogits* grad = nullptr,
                       double scale = 1.0);

/// lambda_e * entropy of o_p outside C plus lambda_p * perplexity inside C.
double loss_constraint(const HeadLogits& z, const TepLabels& labels, const LossWeights& w,
                       HeadLogits* grad = nullptr, double scale = 1.0);

LossTerms total_loss(const HeadLogits& z, const TepLabels& labels, const LossWeights& w,
                     HeadLogits* grad = nullptr, double scale = 1.0);

}  // namespace mupo::det
