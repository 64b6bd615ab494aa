#include "mupo/tracker.hpp"

#include <cmath>
#include <stdexcept>

#include "mupo/errors.hpp"
#include "mupo/tfot.hpp"

namespace mupo::track {

std::string_view to_string(Source s) {
  switch (s) {
    case Source::Fused: return "fused";
    case Source::ImmOnly: return "imm-only";
    case Source::Init: return "init";
  }
  return "init";
}

Source source_from_string(std::string_view name) {
  if (name == "fused") return Source::Fused;
  if (name == "imm-only") return Source::ImmOnly;
  if (name == "init") return Source::Init;
  throw std::invalid_argument("unknown estimate source: " + std::string(name));
}

void TrackerConfig::validate() const {
  raster.validate();
  imm.validate();
  radar.validate();
  if (raster.window_length < 2) throw ConfigError("tracker needs a window length of at least 2");
}

geo::Vec2 fuse(const geo::Vec2& net, const geo::Vec2& imm, double c) {
  return (1.0 - c) * net + c * imm;
}

Tracker::Tracker(TrackerConfig cfg, const det::Network* net) : cfg_(std::move(cfg)), net_(net) {
  cfg_.validate();
  if (net_ && cfg_.raster.mode == raster::RegionMode::Fixed &&
      cfg_.raster.fixed.stride % net_->config().stride != 0) {
    throw ConfigError("raster stride is not a multiple of the network stride");
  }
}

void Tracker::advance_imm(const geo::ConvertedMeasurement& c, TrackEstimate& est) {
  if (ticks_ == 0) {
    est.position = c.position();
    return;
  }
  const geo::ConvertedMeasurement& prev = window_[window_.size() - 2];
  try {
    if (!imm_) {
      imm_ = imm::init_from_measurements(prev, c, cfg_.imm);
    } else {
      imm_ = imm::imm_step(*imm_, c, c.t - imm_->estimate.t, cfg_.imm);
    }
  } catch (const std::exception& e) {
    // Restart the filter from the last two measurements.
    imm_ = imm::init_from_measurements(prev, c, cfg_.imm);
    est.note = std::string("imm restarted: ") + e.what();
  }
  est.position = imm_->estimate.position();
  est.velocity = imm_->estimate.velocity();
}

TrackEstimate Tracker::step(const geo::PolarMeasurement& z, raster::MupoTensor* tensor_out) {
  const std::size_t L = static_cast<std::size_t>(cfg_.raster.window_length);
  if (!window_.empty() && !(z.t > window_.back().t)) {
    throw std::invalid_argument("Tracker::step: measurement times must increase");
  }
  const geo::ConvertedMeasurement c = geo::convert(z, cfg_.radar);
  window_.push_back(c);
  window_snr_.push_back(z.snr);
  if (window_.size() > L) {
    window_.pop_front();
    window_snr_.pop_front();
  }

  TrackEstimate est;
  est.t = z.t;
  est.confidence = 1.0;
  advance_imm(c, est);
  imm_history_.push_back(est.position);
  if (imm_history_.size() > L) imm_history_.pop_front();
  ++ticks_;

  if (tensor_out) *tensor_out = raster::MupoTensor{};
  if (window_.size() < L) {
    est.source = Source::Init;
    return est;
  }
  est.source = Source::ImmOnly;
  if (!net_ && !tensor_out) return est;

  const geo::Vec2 imm_pos = est.position;
  try {
    const std::vector<geo::ConvertedMeasurement> win(window_.begin(), window_.end());
    const std::vector<geo::Vec2> hist(imm_history_.begin(), imm_history_.end());
    const tfot::TfotFit fit =
        tfot::fit_tfot(win, cfg_.raster.tfot_degree, cfg_.raster.tfot_lambda);
    raster::MupoTensor tensor =
        raster::assemble(win, hist, fit, window_snr_.back(), cfg_.radar, cfg_.raster);
    if (net_) {
      const det::TepGrid grid = net_->predict(tensor);
      const auto det = det::decode(grid, net_->config().threshold);
      if (det) {
        est.position = fuse(det->position, imm_pos, det->confidence);
        est.confidence = det->confidence;
        est.source = Source::Fused;
      } else {
        est.note = "no detection";
      }
    }
    if (tensor_out) *tensor_out = std::move(tensor);
  } catch (const std::exception& e) {
    est.position = imm_pos;
    est.confidence = 1.0;
    est.source = Source::ImmOnly;
    est.note = std::string("window stage failed: ") + e.what();
  }
  if (!std::isfinite(est.position.x()) || !std::isfinite(est.position.y())) {
    est.position = imm_pos;
    est.confidence = 1.0;
    est.source = Source::ImmOnly;
    est.note = "non-finite fused position";
  }
  return est;
}

std::vector<TrackEstimate> run_track(std::span<const geo::PolarMeasurement> measurements,
                                     const det::Network* net, const TrackerConfig& cfg) {
  const std::size_t L = static_cast<std::size_t>(cfg.raster.window_length);
  if (measurements.size() < L + 1) {
    throw std::invalid_argument("run_track: need at least L + 1 = " + std::to_string(L + 1) +
                                " measurements, got " + std::to_string(measurements.size()));
  }
  Tracker tracker(cfg, net);
  std::vector<TrackEstimate> out;
  out.reserve(measurements.size());
  for (const geo::PolarMeasurement& z : measurements) out.push_back(tracker.step(z));
  return out;
}

}  // namespace mupo::track
