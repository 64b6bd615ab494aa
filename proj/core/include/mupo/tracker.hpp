#pragma once

#include <deque>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mupo/detector.hpp"
#include "mupo/geometry.hpp"
#include "mupo/imm.hpp"
#include "mupo/raster.hpp"

namespace mupo::track {

enum class Source { Fused, ImmOnly, Init };
std::string_view to_string(Source s);
Source source_from_string(std::string_view name);

struct TrackEstimate {
  double t = 0.0;
  geo::Vec2 position = geo::Vec2::Zero();
  geo::Vec2 velocity = geo::Vec2::Zero();
  Source source = Source::Init;
  double confidence = 1.0;
  std::string note;  // reason for a fallback, empty otherwise
};

struct TrackerConfig {
  raster::RasterParams raster;
  imm::ImmConfig imm = imm::ImmConfig::desk_preset();
  geo::RadarParams radar;

  void validate() const;
};

/// Fused position in world coordinates: (1 - c) * net + c * imm.
geo::Vec2 fuse(const geo::Vec2& net, const geo::Vec2& imm, double c);

/// Sliding-window tracker for one target. Every call to step() consumes one
/// measurement and emits one estimate. The first L - 1 estimates are
/// init-source (measurement, then IMM); afterwards each step runs the window
/// pipeline: conversion, IMM update, T-FoT fit, raster assembly, detection
/// and fusion. Without a network the window stage reports imm-only.
class Tracker {
public:
  explicit Tracker(TrackerConfig cfg, const det::Network* net = nullptr);

  /// When `tensor_out` is non-null the window raster is assembled even without
  /// a network and returned (empty region before the window fills).
  TrackEstimate step(const geo::PolarMeasurement& z, raster::MupoTensor* tensor_out = nullptr);

  const std::optional<imm::ImmState>& imm_state() const { return imm_; }
  const std::deque<geo::ConvertedMeasurement>& window() const { return window_; }
  long ticks() const { return ticks_; }

private:
  void advance_imm(const geo::ConvertedMeasurement& c, TrackEstimate& est);

  TrackerConfig cfg_;
  const det::Network* net_;
  std::optional<imm::ImmState> imm_;
  std::deque<geo::ConvertedMeasurement> window_;
  std::deque<double> window_snr_;
  std::deque<geo::Vec2> imm_history_;
  long ticks_ = 0;
};

/// Runs a tracker over a full measurement sequence (length >= L + 1), one
/// estimate per measurement.
std::vector<TrackEstimate> run_track(std::span<const geo::PolarMeasurement> measurements,
                                     const det::Network* net, const TrackerConfig& cfg);

}  // namespace mupo::track
