#include "mupo/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mupo::nn {

std::string Shape::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
         std::to_string(w) + ")";
}

void Tensor::fill(float v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::add(const Tensor& other) {
  if (!(other.shape_ == shape_)) {
    throw std::invalid_argument("Tensor::add: shape mismatch " + shape_.str() + " vs " +
                                other.shape_.str());
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

void adam_step(std::vector<Parameter>& params, const AdamConfig& cfg, long step) {
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  const float lr = static_cast<float>(cfg.learning_rate);
  const float b1 = static_cast<float>(cfg.beta1);
  const float b2 = static_cast<float>(cfg.beta2);
  const float c1 = static_cast<float>(1.0 / bc1);
  const float c2 = static_cast<float>(1.0 / bc2);
  const float eps = static_cast<float>(cfg.eps);
  for (Parameter& p : params) {
    float* w = p.value.data();
    const float* g = p.grad.data();
    float* m = p.m.data();
    float* v = p.v.data();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      m[i] = b1 * m[i] + (1.0f - b1) * g[i];
      v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
      const float mh = m[i] * c1;
      const float vh = v[i] * c2;
      w[i] -= lr * mh / (std::sqrt(vh) + eps);
    }
  }
}

void zero_grad(std::vector<Parameter>& params) {
  for (Parameter& p : params) p.grad.fill(0.0f);
}

double grad_norm(const std::vector<Parameter>& params) {
  double s = 0.0;
  for (const Parameter& p : params) {
    for (float g : p.grad.values()) s += static_cast<double>(g) * g;
  }
  return std::sqrt(s);
}

void scale_grad(std::vector<Parameter>& params, double factor) {
  const auto f = static_cast<float>(factor);
  for (Parameter& p : params) {
    for (float& g : p.grad.values()) g *= f;
  }
}

}  // namespace mupo::nn
