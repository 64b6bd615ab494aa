#include "mupo/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "mupo/binary_io.hpp"

namespace mupo::raster {

namespace {

// Kernel support: Mahalanobis^2 beyond this contributes < e^-40.
constexpr double kSupport = 80.0;

int round_up(int n, int stride) { return ((n + stride - 1) / stride) * stride; }

int pixels_for(double extent, double cell) {
  return std::max(1, static_cast<int>(std::ceil(extent / cell - 1e-9)));
}

RasterRegion centered_region(const geo::Vec2& center, int height, int width, double cell) {
  RasterRegion r;
  r.cell = cell;
  r.height = height;
  r.width = width;
  r.x0 = center.x() - 0.5 * (width - 1) * cell;
  r.y0 = center.y() - 0.5 * (height - 1) * cell;
  return r;
}

}  // namespace

std::string_view channel_name(Channel c) {
  switch (c) {
    case Channel::Sequence: return "sequence";
    case Channel::Imm: return "imm";
    case Channel::Tfot: return "tfot";
    case Channel::Latest: return "latest";
  }
  return "?";
}

Channel channel_from_name(std::string_view name) {
  for (int i = 0; i < kChannels; ++i) {
    if (channel_name(static_cast<Channel>(i)) == name) return static_cast<Channel>(i);
  }
  throw std::invalid_argument("unknown channel: " + std::string(name));
}

std::string_view to_string(RegionMode m) { return m == RegionMode::Fixed ? "fixed" : "flexible"; }

RegionMode region_mode_from_string(std::string_view name) {
  if (name == "fixed") return RegionMode::Fixed;
  if (name == "flexible") return RegionMode::Flexible;
  throw std::invalid_argument("unknown raster mode: " + std::string(name));
}

PixelCoord world_to_pixel(const RasterRegion& region, const geo::Vec2& p) {
  return {(p.y() - region.y0) / region.cell, (p.x() - region.x0) / region.cell};
}

geo::Vec2 pixel_to_world(const RasterRegion& region, const PixelCoord& px) {
  return {region.x0 + px.col * region.cell, region.y0 + px.row * region.cell};
}

PixelIndex pixel_index(const RasterRegion& region, const geo::Vec2& p) {
  const PixelCoord c = world_to_pixel(region, p);
  return {std::lround(c.row), std::lround(c.col)};
}

bool contains(const RasterRegion& region, const geo::Vec2& p) {
  const PixelCoord c = world_to_pixel(region, p);
  return c.row >= -0.5 && c.row < region.height - 0.5 && c.col >= -0.5 &&
         c.col < region.width - 0.5;
}

float Plane::max() const {
  return data.empty() ? 0.0f : *std::max_element(data.begin(), data.end());
}

double Plane::sum() const {
  double s = 0.0;
  for (float v : data) s += v;
  return s;
}

PixelIndex Plane::argmax() const {
  const auto it = std::max_element(data.begin(), data.end());
  const auto i = static_cast<long>(std::distance(data.begin(), it));
  return {i / width, i % width};
}

void accumulate_gaussian(Plane& plane, const RasterRegion& region, const geo::Vec2& mean,
                         const geo::Mat2& cov) {
  if (!geo::is_positive_definite(cov)) {
    throw std::invalid_argument("normalized_gaussian_plane: covariance must be positive definite");
  }
  const geo::Mat2 info = cov.inverse();
  const double a = info(0, 0);
  const double b = 0.5 * (info(0, 1) + info(1, 0));
  const double c = info(1, 1);
  // Offsets are formed relative to the region origin so that a common
  // translation of region and mean leaves every value unchanged.
  const double ox = region.x0 - mean.x();
  const double oy = region.y0 - mean.y();
  const double cell = region.cell;

  for (int row = 0; row < region.height; ++row) {
    const double dy = oy + row * cell;
    // Columns where a dx^2 + 2 b dx dy + c dy^2 <= kSupport.
    const double disc = b * b * dy * dy - a * (c * dy * dy - kSupport);
    if (disc < 0.0) continue;
    const double root = std::sqrt(disc);
    const double dx_lo = (-b * dy - root) / a;
    const double dx_hi = (-b * dy + root) / a;
    const double lo = std::clamp(std::floor((dx_lo - ox) / cell), 0.0, double(region.width));
    const double hi = std::clamp(std::ceil((dx_hi - ox) / cell), -1.0, double(region.width - 1));
    const int col_lo = static_cast<int>(lo);
    const int col_hi = static_cast<int>(hi);
    float* out = plane.data.data() + static_cast<std::size_t>(row) * plane.width;
    for (int col = col_lo; col <= col_hi; ++col) {
      const double dx = ox + col * cell;
      const double m2 = a * dx * dx + 2.0 * b * dx * dy + c * dy * dy;
      if (m2 <= kSupport) out[col] += static_cast<float>(std::exp(-0.5 * m2));
    }
  }
}

Plane normalized_gaussian_plane(const RasterRegion& region, const geo::Vec2& mean,
                                const geo::Mat2& cov) {
  Plane plane(region.height, region.width);
  accumulate_gaussian(plane, region, mean, cov);
  return plane;
}

double max_principal_sigma(const geo::Mat2& cov) {
  const Eigen::SelfAdjointEigenSolver<geo::Mat2> es(cov, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues()(1)));
}

double min_principal_sigma(const geo::Mat2& cov) {
  const Eigen::SelfAdjointEigenSolver<geo::Mat2> es(cov, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues()(0)));
}

RasterRegion build_region_fixed(std::span<const geo::ConvertedMeasurement> window,
                                const FixedRegionParams& params) {
  if (window.empty()) throw std::invalid_argument("build_region_fixed: empty window");
  if (!(params.cell > 0.0) || params.stride <= 0) {
    throw std::invalid_argument("build_region_fixed: cell and stride must be positive");
  }
  double margin = params.margin;
  if (margin < 0.0) {
    margin = 0.0;
    for (const auto& z : window) margin = std::max(margin, 3.0 * max_principal_sigma(z.cov));
  }
  const double span = window.back().t - window.front().t;
  const double half = params.v_max * span + margin;
  const int n = round_up(pixels_for(2.0 * half, params.cell), params.stride);
  return centered_region(window.front().position(), n, n, params.cell);
}

double flexible_cell(std::span<const geo::ConvertedMeasurement> window, double cell_min,
                     double cell_max) {
  double sigma = std::numeric_limits<double>::infinity();
  for (const auto& z : window) sigma = std::min(sigma, min_principal_sigma(z.cov));
  return std::clamp(sigma / 3.0, cell_min, cell_max);
}

RasterRegion build_region_flexible(std::span<const geo::ConvertedMeasurement> window,
                                   const FlexibleRegionParams& params) {
  if (window.empty()) throw std::invalid_argument("build_region_flexible: empty window");
  if (params.stride <= 0 || params.max_side < params.stride) {
    throw std::invalid_argument("build_region_flexible: bad stride or max_side");
  }
  double cell = params.cell > 0.0 ? params.cell
                                  : flexible_cell(window, params.cell_min, params.cell_max);

  const geo::Vec2 center = window.front().position();
  double hx = 0.0;
  double hy = 0.0;
  for (const auto& z : window) {
    const double r = params.k_sigma * max_principal_sigma(z.cov);
    hx = std::max({hx, z.x + r - center.x(), center.x() - (z.x - r)});
    hy = std::max({hy, z.y + r - center.y(), center.y() - (z.y - r)});
  }
  hx = std::max(hx, 0.5 * cell);
  hy = std::max(hy, 0.5 * cell);

  int width = round_up(pixels_for(2.0 * hx, cell), params.stride);
  int height = round_up(pixels_for(2.0 * hy, cell), params.stride);
  if (std::max(width, height) > params.max_side) {
    cell = 2.0 * std::max(hx, hy) / params.max_side;
    width = std::min(params.max_side, round_up(pixels_for(2.0 * hx, cell), params.stride));
    height = std::min(params.max_side, round_up(pixels_for(2.0 * hy, cell), params.stride));
  }
  return centered_region(center, height, width, cell);
}

Plane render_sequence_channel(const RasterRegion& region,
                              std::span<const geo::ConvertedMeasurement> window) {
  Plane plane(region.height, region.width);
  for (const auto& z : window) accumulate_gaussian(plane, region, z.position(), z.cov);
  return plane;
}

geo::Mat2 model_covariance(const geo::Vec2& p, double snr_ref, double rho_ref,
                           const geo::RadarParams& radar) {
  geo::PolarMeasurement polar = geo::cartesian_to_polar(p);
  polar.snr = geo::propagate_snr(snr_ref, rho_ref, polar.rho);
  const geo::PolarSigma sigma = geo::snr_to_polar_sigma(polar.snr, radar);
  return geo::mucm_convert(polar, sigma.rho, sigma.theta).cov;
}

AuxPlanes render_aux_channels(const RasterRegion& region, std::span<const geo::Vec2> imm_history,
                              std::span<const tfot::TimedPoint> tfot_samples,
                              const geo::ConvertedMeasurement& latest, double latest_snr,
                              const geo::RadarParams& radar) {
  const double rho_ref = std::hypot(latest.x, latest.y);
  AuxPlanes out{Plane(region.height, region.width), Plane(region.height, region.width),
                Plane(region.height, region.width)};
  for (const geo::Vec2& p : imm_history) {
    accumulate_gaussian(out.imm, region, p, model_covariance(p, latest_snr, rho_ref, radar));
  }
  for (const tfot::TimedPoint& s : tfot_samples) {
    const geo::Vec2 p(s.x, s.y);
    accumulate_gaussian(out.tfot, region, p, model_covariance(p, latest_snr, rho_ref, radar));
  }
  accumulate_gaussian(out.latest, region, latest.position(), latest.cov);
  return out;
}

void RasterParams::validate() const {
  if (window_length < 1) throw std::invalid_argument("RasterParams: window_length must be >= 1");
  if (tfot_degree < 0 || tfot_degree + 1 > window_length) {
    throw std::invalid_argument("RasterParams: tfot_degree needs window_length >= degree + 1");
  }
  if (tfot_lambda < 0.0) throw std::invalid_argument("RasterParams: tfot_lambda must be >= 0");
  if (!(fixed.cell > 0.0) || !(fixed.v_max > 0.0)) {
    throw std::invalid_argument("RasterParams: fixed cell and v_max must be positive");
  }
  if (fixed.stride != kDetectorStride || flexible.stride != kDetectorStride) {
    throw std::invalid_argument("RasterParams: stride must equal the detector stride (32)");
  }
  if (!(flexible.k_sigma > 0.0) || !(flexible.cell_min > 0.0) ||
      flexible.cell_max < flexible.cell_min) {
    throw std::invalid_argument("RasterParams: bad flexible parameters");
  }
}

Plane MupoTensor::plane(int c) const {
  Plane p(region.height, region.width);
  const auto src = channel(c);
  std::copy(src.begin(), src.end(), p.data.begin());
  return p;
}

MupoTensor assemble(std::span<const geo::ConvertedMeasurement> window,
                    std::span<const geo::Vec2> imm_history, const tfot::TfotFit& fit,
                    double latest_snr, const geo::RadarParams& radar, const RasterParams& params) {
  if (static_cast<int>(window.size()) != params.window_length) {
    throw std::invalid_argument("assemble: window length differs from the configured L");
  }
  MupoTensor t;
  t.region = params.mode == RegionMode::Fixed ? build_region_fixed(window, params.fixed)
                                              : build_region_flexible(window, params.flexible);
  t.channels = kChannels;
  t.data.assign(kChannels * t.plane_size(), 0.0f);
  for (const auto& z : window) t.timestamps.push_back(z.t);

  const Plane seq = render_sequence_channel(t.region, window);
  const auto samples = tfot::sample_tfot(fit, params.effective_tfot_samples());
  const AuxPlanes aux =
      render_aux_channels(t.region, imm_history, samples, window.back(), latest_snr, radar);
  const Plane* planes[kChannels] = {&seq, &aux.imm, &aux.tfot, &aux.latest};
  for (int c = 0; c < kChannels; ++c) {
    std::copy(planes[c]->data.begin(), planes[c]->data.end(), t.channel(c).begin());
  }
  return t;
}

void write_raster(std::ostream& out, const MupoTensor& tensor) {
  binary::write_magic(out, "MUPO");
  binary::write_u16(out, kRasterVersion);
  binary::write_u32(out, static_cast<std::uint32_t>(tensor.region.height));
  binary::write_u32(out, static_cast<std::uint32_t>(tensor.region.width));
  binary::write_u32(out, static_cast<std::uint32_t>(tensor.channels));
  binary::write_f64(out, tensor.region.x0);
  binary::write_f64(out, tensor.region.y0);
  binary::write_f64(out, tensor.region.cell);
  for (float v : tensor.data) binary::write_f32(out, v);
  if (!out) throw IoError("write_raster: stream failure");
}

MupoTensor read_raster(std::istream& in) {
  binary::expect_magic(in, "MUPO");
  const std::uint16_t version = binary::read_u16(in);
  if (version != kRasterVersion) {
    throw IoError("read_raster: unsupported version " + std::to_string(version));
  }
  MupoTensor t;
  t.region.height = static_cast<int>(binary::read_u32(in));
  t.region.width = static_cast<int>(binary::read_u32(in));
  t.channels = static_cast<int>(binary::read_u32(in));
  t.region.x0 = binary::read_f64(in);
  t.region.y0 = binary::read_f64(in);
  t.region.cell = binary::read_f64(in);
  if (t.region.height <= 0 || t.region.width <= 0 || t.channels <= 0 ||
      t.region.height > (1 << 16) || t.region.width > (1 << 16) || t.channels > 64) {
    throw IoError("read_raster: implausible dimensions");
  }
  t.data.resize(static_cast<std::size_t>(t.channels) * t.plane_size());
  for (float& v : t.data) v = binary::read_f32(in);
  return t;
}

}  // namespace mupo::raster
