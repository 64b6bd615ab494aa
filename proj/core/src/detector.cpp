#include "mupo/detector.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mupo/binary_io.hpp"
#include "mupo/errors.hpp"

namespace mupo::det {

using nlohmann::json;

void NetConfig::validate() const {
  if (stride != 8 && stride != 16 && stride != 32) {
    throw ConfigError("net.stride must be 8, 16 or 32 (got " + std::to_string(stride) + ")");
  }
  if (widths.size() != 5) throw ConfigError("net.widths must list 5 stage widths");
  for (int w : widths) {
    if (w <= 0) throw ConfigError("net.widths must be positive");
  }
  if (neck_width <= 0) throw ConfigError("net.neck_width must be positive");
  if (in_channels <= 0) throw ConfigError("net.in_channels must be positive");
  if (!(optimizer.learning_rate >= 0.0)) throw ConfigError("optimizer.learning_rate must be >= 0");
  if (optimizer.batch_size < 1) throw ConfigError("optimizer.batch_size must be >= 1");
  if (optimizer.epochs < 0) throw ConfigError("optimizer.epochs must be >= 0");
  for (double w : {loss.detection, loss.regression, loss.confidence, loss.constraint, loss.entropy,
                   loss.perplexity}) {
    if (!(w >= 0.0)) throw ConfigError("loss weights must be >= 0");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("net.threshold must lie in (0, 1)");
}

double NetConfig::effective_radius_sq() const {
  return radius_sq > 0.0 ? radius_sq : 4.0 * stride * stride;
}

std::string to_json(const NetConfig& cfg) {
  json j;
  j["stride"] = cfg.stride;
  j["widths"] = cfg.widths;
  j["neck_width"] = cfg.neck_width;
  j["in_channels"] = cfg.in_channels;
  j["seed"] = cfg.seed;
  j["radius_sq"] = cfg.radius_sq;
  j["threshold"] = cfg.threshold;
  j["optimizer"] = {{"learning_rate", cfg.optimizer.learning_rate},
                    {"batch_size", cfg.optimizer.batch_size},
                    {"epochs", cfg.optimizer.epochs},
                    {"grad_clip", cfg.optimizer.grad_clip}};
  j["loss"] = {{"detection", cfg.loss.detection},   {"regression", cfg.loss.regression},
               {"confidence", cfg.loss.confidence}, {"constraint", cfg.loss.constraint},
               {"entropy", cfg.loss.entropy},       {"perplexity", cfg.loss.perplexity}};
  return j.dump();
}

namespace {

template <typename T>
void read_field(const json& obj, const char* key, T& out, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                    const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      throw ConfigError("unknown key " + where + "." + key);
    }
  }
}

}  // namespace

NetConfig net_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("net config: ") + e.what());
  }
  reject_unknown(j,
                 {"stride", "widths", "neck_width", "in_channels", "seed", "radius_sq",
                  "threshold", "optimizer", "loss"},
                 "net");
  NetConfig cfg;
  read_field(j, "stride", cfg.stride, "net");
  read_field(j, "widths", cfg.widths, "net");
  read_field(j, "neck_width", cfg.neck_width, "net");
  read_field(j, "in_channels", cfg.in_channels, "net");
  read_field(j, "seed", cfg.seed, "net");
  read_field(j, "radius_sq", cfg.radius_sq, "net");
  read_field(j, "threshold", cfg.threshold, "net");
  if (auto it = j.find("optimizer"); it != j.end()) {
    reject_unknown(*it, {"learning_rate", "batch_size", "epochs", "grad_clip"}, "net.optimizer");
    read_field(*it, "learning_rate", cfg.optimizer.learning_rate, "net.optimizer");
    read_field(*it, "batch_size", cfg.optimizer.batch_size, "net.optimizer");
    read_field(*it, "epochs", cfg.optimizer.epochs, "net.optimizer");
    read_field(*it, "grad_clip", cfg.optimizer.grad_clip, "net.optimizer");
  }
  if (auto it = j.find("loss"); it != j.end()) {
    reject_unknown(*it,
                   {"detection", "regression", "confidence", "constraint", "entropy",
                    "perplexity"},
                   "net.loss");
    read_field(*it, "detection", cfg.loss.detection, "net.loss");
    read_field(*it, "regression", cfg.loss.regression, "net.loss");
    read_field(*it, "confidence", cfg.loss.confidence, "net.loss");
    read_field(*it, "constraint", cfg.loss.constraint, "net.loss");
    read_field(*it, "entropy", cfg.loss.entropy, "net.loss");
    read_field(*it, "perplexity", cfg.loss.perplexity, "net.loss");
  }
  cfg.validate();
  return cfg;
}

HeadLogits::HeadLogits(int h, int w)
    : height(h),
      width(w),
      existence(static_cast<std::size_t>(h) * w, 0.0),
      offset_x(existence.size(), 0.0),
      offset_y(existence.size(), 0.0),
      confidence(existence.size(), 0.0) {}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double offset_from_logit(double z) { return 3.0 * sigmoid(z) - 1.0; }

double offset_slope(double z) {
  const double s = sigmoid(z);
  return 3.0 * s * (1.0 - s);
}

TepGrid activate(const HeadLogits& logits, int stride, const raster::RasterRegion& region) {
  TepGrid g;
  g.height = logits.height;
  g.width = logits.width;
  g.stride = stride;
  g.region = region;
  const std::size_t n = logits.size();
  g.p.resize(n);
  g.dx.resize(n);
  g.dy.resize(n);
  g.alpha.resize(n);
  for (std::size_t m = 0; m < n; ++m) {
    g.p[m] = sigmoid(logits.existence[m]);
    g.dx[m] = offset_from_logit(logits.offset_x[m]);
    g.dy[m] = offset_from_logit(logits.offset_y[m]);
    g.alpha[m] = sigmoid(logits.confidence[m]);
  }
  return g;
}

geo::Vec2 world_to_grid(const raster::RasterRegion& region, int stride, const geo::Vec2& p) {
  const raster::PixelCoord px = raster::world_to_pixel(region, p);
  return {(px.col + 0.5) / stride, (px.row + 0.5) / stride};
}

geo::Vec2 grid_to_world(const raster::RasterRegion& region, int stride, const geo::Vec2& g) {
  return raster::pixel_to_world(region, {g.y() * stride - 0.5, g.x() * stride - 0.5});
}

int TepLabels::positive_count() const {
  return static_cast<int>(std::count(positive.begin(), positive.end(), std::uint8_t{1}));
}

double confidence_target(double imm_error, double meas_error) {
  if (!(meas_error > 0.0)) return imm_error <= 0.0 ? 1.0 : 0.0;
  return std::clamp((meas_error - imm_error) / meas_error, 0.0, 1.0);
}

std::optional<TepLabels> assign_labels(const raster::RasterRegion& region, const geo::Vec2& truth,
                                       const geo::Vec2& imm, double imm_error, double meas_error,
                                       int stride, double radius_sq) {
  if (stride <= 0 || region.height % stride != 0 || region.width % stride != 0) {
    throw std::invalid_argument("assign_labels: region not divisible by stride");
  }
  if (!raster::contains(region, truth)) return std::nullopt;

  TepLabels L;
  L.height = region.height / stride;
  L.width = region.width / stride;
  L.stride = stride;
  const std::size_t n = L.size();
  L.positive.assign(n, 0);
  L.constraint.assign(n, 0);
  L.target_dx.assign(n, 0.0);
  L.target_dy.assign(n, 0.0);
  L.truth_grid = world_to_grid(region, stride, truth);
  L.imm_grid = world_to_grid(region, stride, imm);
  L.truth_pixel = raster::world_to_pixel(region, truth);
  L.alpha = confidence_target(imm_error, meas_error);

  const int cell_row = std::clamp(static_cast<int>(std::floor(L.truth_grid.y())), 0, L.height - 1);
  const int cell_col = std::clamp(static_cast<int>(std::floor(L.truth_grid.x())), 0, L.width - 1);
  const double half = 0.5 * stride - 0.5;
  for (int row = 0; row < L.height; ++row) {
    for (int col = 0; col < L.width; ++col) {
      const auto m = static_cast<std::size_t>(row) * L.width + col;
      L.positive[m] = (std::abs(row - cell_row) <= 1 && std::abs(col - cell_col) <= 1) ? 1 : 0;
      L.target_dx[m] = L.truth_grid.x() - col;
      L.target_dy[m] = L.truth_grid.y() - row;
      const double cr = row * stride + half - L.truth_pixel.row;
      const double cc = col * stride + half - L.truth_pixel.col;
      L.constraint[m] = (cr * cr + cc * cc < radius_sq) ? 1 : 0;
    }
  }
  return L;
}

std::optional<Detection> decode(const TepGrid& grid, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("decode: threshold must lie in (0, 1)");
  }
  double wsum = 0.0;
  geo::Vec2 acc = geo::Vec2::Zero();
  double conf = 0.0;
  int count = 0;
  for (int row = 0; row < grid.height; ++row) {
    for (int col = 0; col < grid.width; ++col) {
      const auto m = static_cast<std::size_t>(row) * grid.width + col;
      const double p = grid.p[m];
      if (!(p > threshold)) continue;
      wsum += p;
      acc += p * geo::Vec2(col + grid.dx[m], row + grid.dy[m]);
      conf += p * grid.alpha[m];
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  Detection d;
  d.position = grid_to_world(grid.region, grid.stride, acc / wsum);
  d.confidence = std::clamp(conf / wsum, 0.0, 1.0);
  d.count = count;
  return d;
}

nn::Tensor to_input(const raster::MupoTensor& tensor) {
  const raster::MupoTensor* one = &tensor;
  return to_batch(std::span<const raster::MupoTensor* const>(&one, 1));
}

nn::Tensor to_batch(std::span<const raster::MupoTensor* const> tensors) {
  if (tensors.empty()) throw std::invalid_argument("to_batch: empty batch");
  const raster::RasterRegion& r0 = tensors.front()->region;
  const int c = tensors.front()->channels;
  nn::Tensor out(nn::Shape{static_cast<int>(tensors.size()), c, r0.height, r0.width});
  for (std::size_t n = 0; n < tensors.size(); ++n) {
    const raster::MupoTensor& t = *tensors[n];
    if (t.region.height != r0.height || t.region.width != r0.width || t.channels != c) {
      throw std::invalid_argument("to_batch: tensors differ in shape");
    }
    for (int ch = 0; ch < c; ++ch) {
      const auto src = t.channel(ch);
      const float mx = src.empty() ? 0.0f : *std::max_element(src.begin(), src.end());
      const float scale = 1.0f / std::max(1.0f, mx);
      float* dst = out.plane(static_cast<int>(n), ch);
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * scale;
    }
  }
  return out;
}

Network::Network(const NetConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const auto& w = cfg_.widths;
  const int nw = cfg_.neck_width;
  declare("down1", w[0], cfg_.in_channels, 3);
  declare("down2", w[1], w[0], 3);
  declare("down3", w[2], w[1], 3);
  declare("refine3", w[2], w[2], 3);
  declare("down4", w[3], w[2], 3);
  declare("refine4", w[3], w[3], 3);
  declare("down5", w[4], w[3], 3);
  declare("refine5", w[4], w[4], 3);
  declare("lateral5", nw, w[4], 1);
  declare("lateral4", nw, w[3], 1);
  declare("lateral3", nw, w[2], 1);
  if (cfg_.stride >= 16) declare("pan4", nw, nw, 3);
  if (cfg_.stride >= 32) declare("pan5", nw, nw, 3);
  declare("head", nw, nw, 3);
  declare("head_out", 4, nw, 1);

  std::mt19937_64 rng(cfg_.seed);
  for (nn::Parameter& p : params_) {
    if (p.name.ends_with(".bias")) continue;
    const nn::Shape s = p.value.shape();
    const double fan_in = static_cast<double>(s.c) * s.h * s.w;
    const double scale = p.name.starts_with("head_out") ? 0.1 : 1.0;
    std::normal_distribution<double> normal(0.0, scale * std::sqrt(2.0 / fan_in));
    for (float& v : p.value.values()) v = static_cast<float>(normal(rng));
  }
}

void Network::declare(const std::string& name, int cout, int cin, int k) {
  params_.emplace_back(name + ".weight", nn::Shape{cout, cin, k, k});
  params_.emplace_back(name + ".bias", nn::Shape{1, cout, 1, 1});
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const nn::Parameter& p : params_) n += p.value.size();
  return n;
}

template <typename ParamFn>
nn::Graph::Id Network::build(nn::Graph& g, nn::Graph::Id x, ParamFn&& param) const {
  using Id = nn::Graph::Id;
  std::size_t next = 0;
  auto conv = [&](Id in, int stride, int k) {
    const Id w = param(next++);
    const Id b = param(next++);
    return g.conv2d(in, w, b, stride, k / 2);
  };
  auto conv_silu = [&](Id in, int stride, int k) { return g.silu(conv(in, stride, k)); };

  const Id c1 = conv_silu(x, 2, 3);
  const Id c2 = conv_silu(c1, 2, 3);
  const Id c3 = conv_silu(conv_silu(c2, 2, 3), 1, 3);
  const Id c4 = conv_silu(conv_silu(c3, 2, 3), 1, 3);
  const Id c5 = conv_silu(conv_silu(c4, 2, 3), 1, 3);

  const Id p5 = conv_silu(c5, 1, 1);
  const Id p4 = g.add(conv_silu(c4, 1, 1), g.upsample2x(p5));
  const Id p3 = g.add(conv_silu(c3, 1, 1), g.upsample2x(p4));

  Id level = p3;
  if (cfg_.stride >= 16) level = g.add(conv_silu(level, 2, 3), p4);
  if (cfg_.stride >= 32) level = g.add(conv_silu(level, 2, 3), p5);

  const Id out = conv(conv_silu(level, 1, 3), 1, 1);
  if (next != params_.size()) throw std::logic_error("Network::build: parameter count mismatch");
  return out;
}

nn::Graph::Id Network::forward(nn::Graph& g, const nn::Tensor& input) {
  const nn::Shape s = input.shape();
  if (s.c != cfg_.in_channels) {
    throw std::invalid_argument("Network::forward: expected " + std::to_string(cfg_.in_channels) +
                                " channels, got " + s.str());
  }
  if (s.h % 32 != 0 || s.w % 32 != 0) {
    throw std::invalid_argument("Network::forward: input " + s.str() +
                                " not divisible by 32");
  }
  const nn::Graph::Id x = g.input(input);
  return build(g, x, [&](std::size_t i) { return g.parameter(params_[i]); });
}

std::vector<HeadLogits> Network::infer(const nn::Tensor& input) const {
  nn::Graph g(false);
  const nn::Shape s = input.shape();
  if (s.c != cfg_.in_channels || s.h % 32 != 0 || s.w % 32 != 0) {
    throw std::invalid_argument("Network::infer: bad input shape " + s.str());
  }
  const nn::Graph::Id x = g.input(input);
  const nn::Graph::Id out = build(g, x, [&](std::size_t i) { return g.input(params_[i].value); });
  return split_head(g.value(out));
}

TepGrid Network::predict(const raster::MupoTensor& tensor) const {
  std::vector<HeadLogits> logits = infer(to_input(tensor));
  return activate(logits.front(), cfg_.stride, tensor.region);
}

std::vector<HeadLogits> split_head(const nn::Tensor& head) {
  const nn::Shape s = head.shape();
  if (s.c != 4) throw std::invalid_argument("split_head: expected 4 channels, got " + s.str());
  std::vector<HeadLogits> out;
  out.reserve(static_cast<std::size_t>(s.n));
  for (int n = 0; n < s.n; ++n) {
    HeadLogits h(s.h, s.w);
    std::vector<double>* maps[4] = {&h.existence, &h.offset_x, &h.offset_y, &h.confidence};
    for (int c = 0; c < 4; ++c) {
      const float* src = head.plane(n, c);
      std::copy(src, src + s.plane(), maps[c]->begin());
    }
    out.push_back(std::move(h));
  }
  return out;
}

void Network::save(std::ostream& out) const {
  binary::write_magic(out, "MTTN");
  binary::write_u16(out, kCheckpointVersion);
  const std::string cfg = to_json(cfg_);
  binary::write_u32(out, static_cast<std::uint32_t>(cfg.size()));
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  binary::write_u32(out, static_cast<std::uint32_t>(params_.size()));
  for (const nn::Parameter& p : params_) {
    const nn::Shape s = p.value.shape();
    binary::write_u32(out, 4);
    for (int d : {s.n, s.c, s.h, s.w}) binary::write_u32(out, static_cast<std::uint32_t>(d));
    for (float v : p.value.values()) binary::write_f32(out, v);
  }
  if (!out) throw IoError("checkpoint write failed");
}

Network Network::load(std::istream& in) {
  binary::expect_magic(in, "MTTN");
  const std::uint16_t version = binary::read_u16(in);
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t len = binary::read_u32(in);
  if (len > (1u << 20)) throw IoError("checkpoint config blob too large");
  std::string text(len, '\0');
  in.read(text.data(), len);
  if (!in) throw IoError("unexpected end of checkpoint");
  Network net(net_config_from_json(text));
  const std::uint32_t count = binary::read_u32(in);
  if (count != net.params_.size()) {
    throw ConfigError("checkpoint has " + std::to_string(count) + " tensors, network expects " +
                      std::to_string(net.params_.size()));
  }
  for (nn::Parameter& p : net.params_) {
    const std::uint32_t ndims = binary::read_u32(in);
    if (ndims != 4) throw ConfigError("checkpoint tensor " + p.name + " is not 4-d");
    nn::Shape s;
    s.n = static_cast<int>(binary::read_u32(in));
    s.c = static_cast<int>(binary::read_u32(in));
    s.h = static_cast<int>(binary::read_u32(in));
    s.w = static_cast<int>(binary::read_u32(in));
    if (!(s == p.value.shape())) {
      throw ConfigError("checkpoint tensor " + p.name + " has shape " + s.str() + ", expected " +
                        p.value.shape().str());
    }
    for (float& v : p.value.values()) v = binary::read_f32(in);
  }
  return net;
}

}  // namespace mupo::det
