#include "mupo/nn/graph.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include <Eigen/Core>

namespace mupo::nn {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

struct ConvGeometry {
  int cin, h, w, cout, k, stride, pad, ho, wo;
  int rows() const { return cin * k * k; }
  int cols() const { return ho * wo; }
};

// cols[(ci*k + ky)*k + kx][oy*wo + ox] = x[ci][oy*s + ky - pad][ox*s + kx - pad]
void im2col(const float* x, const ConvGeometry& g, float* cols) {
  for (int ci = 0; ci < g.cin; ++ci) {
    const float* xc = x + static_cast<std::size_t>(ci) * g.h * g.w;
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        float* row = cols + static_cast<std::size_t>((ci * g.k + ky) * g.k + kx) * g.cols();
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride + ky - g.pad;
          float* out = row + static_cast<std::size_t>(oy) * g.wo;
          if (iy < 0 || iy >= g.h) {
            std::fill(out, out + g.wo, 0.0f);
            continue;
          }
          const float* xrow = xc + static_cast<std::size_t>(iy) * g.w;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.stride + kx - g.pad;
            out[ox] = (ix >= 0 && ix < g.w) ? xrow[ix] : 0.0f;
          }
        }
      }
    }
  }
}

void col2im_add(const float* cols, const ConvGeometry& g, float* dx) {
  for (int ci = 0; ci < g.cin; ++ci) {
    float* dxc = dx + static_cast<std::size_t>(ci) * g.h * g.w;
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        const float* row =
            cols + static_cast<std::size_t>((ci * g.k + ky) * g.k + kx) * g.cols();
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride + ky - g.pad;
          if (iy < 0 || iy >= g.h) continue;
          float* dxrow = dxc + static_cast<std::size_t>(iy) * g.w;
          const float* in = row + static_cast<std::size_t>(oy) * g.wo;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.stride + kx - g.pad;
            if (ix >= 0 && ix < g.w) dxrow[ix] += in[ox];
          }
        }
      }
    }
  }
}

bool is_pointwise(const ConvGeometry& g) { return g.k == 1 && g.stride == 1 && g.pad == 0; }

}  // namespace

Graph::Id Graph::push(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

Tensor& Graph::grad(Id id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

Graph::Id Graph::input(Tensor value) { return push(std::move(value)); }

Graph::Id Graph::parameter(Parameter& p) {
  const Id id = push(p.value);
  nodes_.back().param = &p;
  return id;
}

Graph::Id Graph::conv2d(Id x, Id weight, Id bias, int stride, int pad) {
  const Shape xs = value(x).shape();
  const Shape ws = value(weight).shape();
  if (ws.c != xs.c || ws.h != ws.w) throw std::invalid_argument("conv2d: weight shape " + ws.str());
  ConvGeometry g{xs.c, xs.h, xs.w, ws.n, ws.h, stride, pad, 0, 0};
  g.ho = (xs.h + 2 * pad - g.k) / stride + 1;
  g.wo = (xs.w + 2 * pad - g.k) / stride + 1;
  if (g.ho <= 0 || g.wo <= 0) throw std::invalid_argument("conv2d: input too small " + xs.str());

  Tensor out(Shape{xs.n, g.cout, g.ho, g.wo});
  const ConstMapMat W(value(weight).data(), g.cout, g.rows());
  const float* b = value(bias).data();
  auto cols = std::make_shared<FloatBuffer>();
  if (!is_pointwise(g)) cols->resize(static_cast<std::size_t>(xs.n) * g.rows() * g.cols());

  for (int n = 0; n < xs.n; ++n) {
    const float* xn = value(x).plane(n, 0);
    const float* src = xn;
    if (!is_pointwise(g)) {
      float* cn = cols->data() + static_cast<std::size_t>(n) * g.rows() * g.cols();
      im2col(xn, g, cn);
      src = cn;
    }
    MapMat O(out.plane(n, 0), g.cout, g.cols());
    O.noalias() = W * ConstMapMat(src, g.rows(), g.cols());
    for (int co = 0; co < g.cout; ++co) O.row(co).array() += b[co];
  }
  if (!record_) cols.reset();

  const Id id = push(std::move(out));
  if (record_) {
    nodes_.back().back = [this, id, x, weight, bias, g, cols]() {
      const Tensor& dout = nodes_[static_cast<std::size_t>(id)].grad;
      Tensor& dw = grad(weight);
      Tensor& db = grad(bias);
      Tensor& dx = grad(x);
      const Tensor& xv = value(x);
      const ConstMapMat W(value(weight).data(), g.cout, g.rows());
      MapMat dW(dw.data(), g.cout, g.rows());
      RowMat dcols(g.rows(), g.cols());
      for (int n = 0; n < xv.shape().n; ++n) {
        const ConstMapMat D(dout.plane(n, 0), g.cout, g.cols());
        const float* src = is_pointwise(g)
                               ? xv.plane(n, 0)
                               : cols->data() + static_cast<std::size_t>(n) * g.rows() * g.cols();
        dW.noalias() += D * ConstMapMat(src, g.rows(), g.cols()).transpose();
        for (int co = 0; co < g.cout; ++co) {
          const float* d = dout.plane(n, co);
          float acc = 0.0f;
          for (int i = 0; i < g.cols(); ++i) acc += d[i];
          db[static_cast<std::size_t>(co)] += acc;
        }
        if (is_pointwise(g)) {
          MapMat(dx.plane(n, 0), g.rows(), g.cols()).noalias() += W.transpose() * D;
        } else {
          dcols.noalias() = W.transpose() * D;
          col2im_add(dcols.data(), g, dx.plane(n, 0));
        }
      }
    };
  }
  return id;
}

Graph::Id Graph::silu(Id x) {
  const Tensor& xv = value(x);
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const float s = 1.0f / (1.0f + std::exp(-xv[i]));
    out[i] = xv[i] * s;
  }
  const Id id = push(std::move(out));
  if (record_) {
    nodes_.back().back = [this, id, x]() {
      const Tensor& dout = nodes_[static_cast<std::size_t>(id)].grad;
      const Tensor& xv = value(x);
      Tensor& dx = grad(x);
      for (std::size_t i = 0; i < xv.size(); ++i) {
        const float s = 1.0f / (1.0f + std::exp(-xv[i]));
        dx[i] += dout[i] * (s + xv[i] * s * (1.0f - s));
      }
    };
  }
  return id;
}

Graph::Id Graph::sigmoid(Id x) {
  const Tensor& xv = value(x);
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = 1.0f / (1.0f + std::exp(-xv[i]));
  const Id id = push(std::move(out));
  if (record_) {
    nodes_.back().back = [this, id, x]() {
      const Tensor& dout = nodes_[static_cast<std::size_t>(id)].grad;
      const Tensor& y = value(id);
      Tensor& dx = grad(x);
      for (std::size_t i = 0; i < y.size(); ++i) dx[i] += dout[i] * y[i] * (1.0f - y[i]);
    };
  }
  return id;
}

Graph::Id Graph::add(Id a, Id b) {
  if (!(value(a).shape() == value(b).shape())) {
    throw std::invalid_argument("add: shape mismatch " + value(a).shape().str() + " vs " +
                                value(b).shape().str());
  }
  Tensor out = value(a);
  out.add(value(b));
  const Id id = push(std::move(out));
  if (record_) {
    nodes_.back().back = [this, id, a, b]() {
      const Tensor dout = nodes_[static_cast<std::size_t>(id)].grad;
      grad(a).add(dout);
      grad(b).add(dout);
    };
  }
  return id;
}

Graph::Id Graph::upsample2x(Id x) {
  const Tensor& xv = value(x);
  const Shape s = xv.shape();
  Tensor out(Shape{s.n, s.c, 2 * s.h, 2 * s.w});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float* in = xv.plane(n, c);
      float* o = out.plane(n, c);
      for (int y = 0; y < 2 * s.h; ++y) {
        for (int xx = 0; xx < 2 * s.w; ++xx) o[y * 2 * s.w + xx] = in[(y / 2) * s.w + xx / 2];
      }
    }
  }
  const Id id = push(std::move(out));
  if (record_) {
    nodes_.back().back = [this, id, x, s]() {
      const Tensor& dout = nodes_[static_cast<std::size_t>(id)].grad;
      Tensor& dx = grad(x);
      for (int n = 0; n < s.n; ++n) {
        for (int c = 0; c < s.c; ++c) {
          const float* d = dout.plane(n, c);
          float* g = dx.plane(n, c);
          for (int y = 0; y < 2 * s.h; ++y) {
            for (int xx = 0; xx < 2 * s.w; ++xx) g[(y / 2) * s.w + xx / 2] += d[y * 2 * s.w + xx];
          }
        }
      }
    };
  }
  return id;
}

void Graph::backward(Id out, const Tensor& seed) {
  if (!record_) throw std::logic_error("Graph::backward on a non-recording graph");
  if (!(seed.shape() == value(out).shape())) {
    throw std::invalid_argument("Graph::backward: seed shape mismatch");
  }
  grad(out) = seed;
  for (Id id = out; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.empty()) continue;
    if (n.back) n.back();
    if (n.param) n.param->grad.add(n.grad);
  }
}

}  // namespace mupo::nn
