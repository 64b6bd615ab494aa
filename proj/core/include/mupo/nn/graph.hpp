#pragma once

#include <functional>
#include <vector>

#include "mupo/nn/tensor.hpp"

namespace mupo::nn {

/// Reverse-mode tape over a fixed operator set (convolution, SiLU, sigmoid,
/// addition, nearest 2x upsampling). Nodes are recorded in execution order;
/// backward() walks them in reverse and accumulates parameter gradients.
class Graph {
public:
  using Id = int;

  /// With `record == false` no backward state is kept (inference).
  explicit Graph(bool record = true) : record_(record) {}

  Id input(Tensor value);
  Id parameter(Parameter& p);

  /// weight: (cout, cin, k, k); bias: (1, cout, 1, 1). Zero padding `pad`.
  Id conv2d(Id x, Id weight, Id bias, int stride, int pad);
  Id silu(Id x);
  Id sigmoid(Id x);
  Id add(Id a, Id b);
  Id upsample2x(Id x);

  const Tensor& value(Id id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  Tensor& grad(Id id);

  /// Seeds d(out) = seed and propagates; parameter gradients are added to
  /// Parameter::grad.
  void backward(Id out, const Tensor& seed);

private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void()> back;
    Parameter* param = nullptr;
  };

  Id push(Tensor value);

  bool record_;
  std::vector<Node> nodes_;
};

}  // namespace mupo::nn
