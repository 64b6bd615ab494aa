#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mupo/detector.hpp"
#include "mupo/raster.hpp"
#include "mupo/scenario.hpp"
#include "mupo/tracker.hpp"
#include "mupo/training.hpp"

namespace mupo::data {

/// One windowed raster with the quantities needed to label it at any TEP
/// density.
struct WindowRecord {
  raster::MupoTensor tensor;
  double t = 0.0;  // newest measurement time
  geo::Vec2 truth = geo::Vec2::Zero();
  geo::Vec2 imm = geo::Vec2::Zero();
  double imm_error = 0.0;   // |imm - truth|, m
  double meas_error = 0.0;  // |converted newest measurement - truth|, m
};

struct Dataset {
  std::vector<WindowRecord> records;
  int windows = 0;  // windows produced, including dropped ones
  int dropped = 0;  // truth outside the region
};

/// Runs the tracker pipeline (no network) over a measurement sequence and
/// keeps one record per full window. `truth` is aligned with `measurements`.
Dataset make_dataset(std::span<const geo::PolarMeasurement> measurements,
                     std::span<const sim::TargetState> truth, const track::TrackerConfig& cfg);

/// Concatenates datasets from `n_tracks` simulated trajectories; track i uses
/// seed `seed + i` for both the trajectory and the noise.
Dataset simulate_dataset(const sim::ScenarioConfig& scenario, int n_tracks, std::uint64_t seed,
                         const track::TrackerConfig& cfg);

/// Labels every record for the given network stride. Records whose truth is
/// outside the region are skipped.
std::vector<det::TrainingSample> to_training(const std::vector<WindowRecord>& records, int stride,
                                             double radius_sq);

/// dataset.bin: rasters back to back; labels.jsonl: one object per raster.
void write_dataset(const std::filesystem::path& dir, const Dataset& dataset);
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace mupo::data
