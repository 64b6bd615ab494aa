#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mupo/geometry.hpp"
#include "mupo/nn/graph.hpp"
#include "mupo/nn/tensor.hpp"
#include "mupo/raster.hpp"

namespace mupo::det {

struct LossWeights {
  double detection = 1.0;
  double regression = 5.0;
  double confidence = 0.5;
  double constraint = 0.1;
  double entropy = 1.0;     // lambda_e inside the constraint loss
  double perplexity = 1.0;  // lambda_p inside the constraint loss

  bool operator==(const LossWeights&) const = default;
};

struct OptimizerConfig {
  double learning_rate = 1e-3;
  int batch_size = 8;
  int epochs = 30;
  double grad_clip = 0.0;  // global L2 norm; <= 0 disables

  bool operator==(const OptimizerConfig&) const = default;
};

struct NetConfig {
  int stride = 32;  // 1 / r, one of 8, 16, 32
  std::vector<int> widths{16, 32, 64, 128, 128};  // backbone stages at strides 2..32
  int neck_width = 64;
  int in_channels = raster::kChannels;
  std::uint64_t seed = 1;
  OptimizerConfig optimizer;
  LossWeights loss;
  double radius_sq = 0.0;  // pixels^2; <= 0 selects (2 * stride)^2
  double threshold = 0.5;

  void validate() const;
  double effective_radius_sq() const;
  bool operator==(const NetConfig&) const = default;
};

/// Canonical JSON (sorted keys) and its inverse; parse errors raise ConfigError.
std::string to_json(const NetConfig& cfg);
NetConfig net_config_from_json(const std::string& text);

/// Raw head outputs of one sample, row-major over the TEP grid.
struct HeadLogits {
  int height = 0;
  int width = 0;
  std::vector<double> existence;
  std::vector<double> offset_x;
  std::vector<double> offset_y;
  std::vector<double> confidence;

  HeadLogits() = default;
  HeadLogits(int h, int w);
  std::size_t size() const { return static_cast<std::size_t>(height) * width; }
};

double sigmoid(double z);
/// Offsets live in (-1, 2) cell units so that every neighbor in the 3x3
/// positive set can reach a truth in the adjacent cell.
double offset_from_logit(double z);
double offset_slope(double z);

/// Activated outputs: o_p, cell-local offsets and o_alpha per TEP.
struct TepGrid {
  int height = 0;
  int width = 0;
  int stride = raster::kDetectorStride;
  raster::RasterRegion region;
  std::vector<double> p;
  std::vector<double> dx;
  std::vector<double> dy;
  std::vector<double> alpha;

  std::size_t size() const { return static_cast<std::size_t>(height) * width; }
};

TepGrid activate(const HeadLogits& logits, int stride, const raster::RasterRegion& region);

/// TEP grid coordinates: g = (pixel + 0.5) / stride, x along columns, y along
/// rows. TEP (row m, col n) covers [n, n+1) x [m, m+1).
geo::Vec2 world_to_grid(const raster::RasterRegion& region, int stride, const geo::Vec2& p);
geo::Vec2 grid_to_world(const raster::RasterRegion& region, int stride, const geo::Vec2& g);

struct TepLabels {
  int height = 0;
  int width = 0;
  int stride = raster::kDetectorStride;
  std::vector<std::uint8_t> positive;    // o_p and the responsibility mask A_j
  std::vector<double> target_dx;         // truth in each TEP's cell frame
  std::vector<double> target_dy;
  std::vector<std::uint8_t> constraint;  // C_j
  double alpha = 0.0;                    // o_alpha, shared by the positives
  geo::Vec2 truth_grid = geo::Vec2::Zero();
  geo::Vec2 imm_grid = geo::Vec2::Zero();
  raster::PixelCoord truth_pixel;

  std::size_t size() const { return static_cast<std::size_t>(height) * width; }
  int positive_count() const;
};

double confidence_target(double imm_error, double meas_error);

/// Labels for a raster whose newest measurement time has truth `truth` and
/// IMM estimate `imm`. Returns nullopt when the truth lies outside the region.
std::optional<TepLabels> assign_labels(const raster::RasterRegion& region, const geo::Vec2& truth,
                                       const geo::Vec2& imm, double imm_error, double meas_error,
                                       int stride, double radius_sq);

struct Detection {
  geo::Vec2 position = geo::Vec2::Zero();  // world, m
  double confidence = 0.0;
  int count = 0;  // TEPs above threshold
};

std::optional<Detection> decode(const TepGrid& grid, double threshold);

/// Per-channel division by max(1, channel max); shape (1, C, H, W).
nn::Tensor to_input(const raster::MupoTensor& tensor);
/// Stacks equally shaped tensors into one batch.
nn::Tensor to_batch(std::span<const raster::MupoTensor* const> tensors);

class Network {
public:
  explicit Network(const NetConfig& cfg);

  const NetConfig& config() const { return cfg_; }
  std::vector<nn::Parameter>& parameters() { return params_; }
  const std::vector<nn::Parameter>& parameters() const { return params_; }
  std::size_t parameter_count() const;

  /// Records the forward pass on `g`; returns the head node, shape (N, 4, H/s, W/s).
  nn::Graph::Id forward(nn::Graph& g, const nn::Tensor& input);

  /// Inference-only forward; one HeadLogits per batch entry.
  std::vector<HeadLogits> infer(const nn::Tensor& input) const;
  TepGrid predict(const raster::MupoTensor& tensor) const;

  void save(std::ostream& out) const;
  static Network load(std::istream& in);

private:
  template <typename ParamFn>
  nn::Graph::Id build(nn::Graph& g, nn::Graph::Id x, ParamFn&& param) const;
  void declare(const std::string& name, int cout, int cin, int k);

  NetConfig cfg_;
  std::vector<nn::Parameter> params_;
};

std::vector<HeadLogits> split_head(const nn::Tensor& head);

/// Checkpoint format: "MTTN", u16 version, u32 length + NetConfig JSON, u32
/// tensor count, then per tensor u32 ndims, u32 dims, f32 values.
inline constexpr std::uint16_t kCheckpointVersion = 1;

}  // namespace mupo::det
