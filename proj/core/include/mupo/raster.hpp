#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "mupo/geometry.hpp"
#include "mupo/tfot.hpp"

namespace mupo::raster {

inline constexpr int kDetectorStride = 32;
inline constexpr int kChannels = 4;

enum class Channel : int { Sequence = 0, Imm = 1, Tfot = 2, Latest = 3 };
std::string_view channel_name(Channel c);
Channel channel_from_name(std::string_view name);

enum class RegionMode { Fixed, Flexible };
std::string_view to_string(RegionMode m);
RegionMode region_mode_from_string(std::string_view name);

/// Georeferenced pixel grid. Pixel (row, col) has its center at
/// (x0 + col * cell, y0 + row * cell): columns run east, rows run north.
struct RasterRegion {
  double x0 = 0.0;
  double y0 = 0.0;
  double cell = 1.0;
  int height = 0;
  int width = 0;

  bool operator==(const RasterRegion&) const = default;
};

struct PixelCoord {
  double row = 0.0;
  double col = 0.0;
};

struct PixelIndex {
  long row = 0;
  long col = 0;
  bool operator==(const PixelIndex&) const = default;
};

PixelCoord world_to_pixel(const RasterRegion& region, const geo::Vec2& p);
geo::Vec2 pixel_to_world(const RasterRegion& region, const PixelCoord& px);
/// Nearest pixel center; may lie outside the region.
PixelIndex pixel_index(const RasterRegion& region, const geo::Vec2& p);
bool contains(const RasterRegion& region, const geo::Vec2& p);

struct Plane {
  int height = 0;
  int width = 0;
  std::vector<float> data;

  Plane() = default;
  Plane(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w, 0.0f) {}

  float& at(int row, int col) { return data[static_cast<std::size_t>(row) * width + col]; }
  float at(int row, int col) const { return data[static_cast<std::size_t>(row) * width + col]; }
  float max() const;
  double sum() const;
  PixelIndex argmax() const;
};

/// Unit-peak Gaussian kernel exp(-0.5 d^T cov^-1 d) at every pixel center, i.e.
/// the likelihood density scaled by 2 pi |cov|^(1/2).
Plane normalized_gaussian_plane(const RasterRegion& region, const geo::Vec2& mean,
                                const geo::Mat2& cov);

/// Adds the kernel into an existing plane.
void accumulate_gaussian(Plane& plane, const RasterRegion& region, const geo::Vec2& mean,
                         const geo::Mat2& cov);

struct FixedRegionParams {
  double v_max = 300.0;          // m/s
  double cell = 23.4375;         // m/pixel
  int stride = kDetectorStride;
  double margin = 600.0;         // m; negative selects 3 * max principal sigma of the window
};

struct FlexibleRegionParams {
  double k_sigma = 3.0;
  double cell = 0.0;             // m/pixel; <= 0 selects flexible_cell()
  double cell_min = 5.0;
  double cell_max = 100.0;
  int stride = kDetectorStride;
  int max_side = 512;            // pixels; the cell grows to respect it
};

RasterRegion build_region_fixed(std::span<const geo::ConvertedMeasurement> window,
                                const FixedRegionParams& params);

RasterRegion build_region_flexible(std::span<const geo::ConvertedMeasurement> window,
                                   const FlexibleRegionParams& params);

/// Smallest principal sigma of the window divided by 3, clamped.
double flexible_cell(std::span<const geo::ConvertedMeasurement> window, double cell_min,
                     double cell_max);

double max_principal_sigma(const geo::Mat2& cov);
double min_principal_sigma(const geo::Mat2& cov);

Plane render_sequence_channel(const RasterRegion& region,
                              std::span<const geo::ConvertedMeasurement> window);

/// Covariance attributed to a Cartesian point from the radar model: SNR
/// propagated from the reference return to the point's range, then the
/// polar sigmas and the converted covariance at the point.
geo::Mat2 model_covariance(const geo::Vec2& p, double snr_ref, double rho_ref,
                           const geo::RadarParams& radar);

struct AuxPlanes {
  Plane imm;
  Plane tfot;
  Plane latest;
};

AuxPlanes render_aux_channels(const RasterRegion& region, std::span<const geo::Vec2> imm_history,
                              std::span<const tfot::TimedPoint> tfot_samples,
                              const geo::ConvertedMeasurement& latest, double latest_snr,
                              const geo::RadarParams& radar);

struct RasterParams {
  RegionMode mode = RegionMode::Fixed;
  int window_length = 4;
  FixedRegionParams fixed;
  FlexibleRegionParams flexible;
  int tfot_degree = 2;
  double tfot_lambda = 1e-3;
  int tfot_samples = 0;  // <= 0 selects 4 * window_length

  int effective_tfot_samples() const { return tfot_samples > 0 ? tfot_samples : 4 * window_length; }
  void validate() const;
};

/// Multi-channel raster, channel-major then row-major.
struct MupoTensor {
  RasterRegion region;
  int channels = kChannels;
  std::vector<float> data;
  std::vector<double> timestamps;

  std::size_t plane_size() const { return static_cast<std::size_t>(region.height) * region.width; }
  std::span<float> channel(int c) { return {data.data() + c * plane_size(), plane_size()}; }
  std::span<const float> channel(int c) const {
    return {data.data() + c * plane_size(), plane_size()};
  }
  Plane plane(int c) const;
};

/// Builds the region per `params.mode` and renders the channels in the order
/// {sequence, imm, tfot, latest}. `imm_history` holds one position per window
/// measurement; `latest_snr` is the SNR of the newest return.
MupoTensor assemble(std::span<const geo::ConvertedMeasurement> window,
                    std::span<const geo::Vec2> imm_history, const tfot::TfotFit& fit,
                    double latest_snr, const geo::RadarParams& radar, const RasterParams& params);

/// Raster binary format: "MUPO", u16 version, H, W, C as u32, x0, y0, cell as
/// f64, then C*H*W f32; all little-endian.
inline constexpr std::uint16_t kRasterVersion = 1;
void write_raster(std::ostream& out, const MupoTensor& tensor);
MupoTensor read_raster(std::istream& in);

}  // namespace mupo::raster
