#pragma once

#include <iosfwd>
#include <vector>

#include "mupo/geometry.hpp"
#include "mupo/raster.hpp"
#include "mupo/scenario.hpp"
#include "mupo/tracker.hpp"

namespace mupo::io {

// JSON Lines with sorted keys and shortest round-trip number formatting, so
// write -> read -> write reproduces the bytes.

/// {"model","t","vx","vy","x","y"}
void write_truth(std::ostream& out, const std::vector<sim::TargetState>& states);
std::vector<sim::TargetState> read_truth(std::istream& in);

/// {"rho","snr","t","theta"}
void write_measurements(std::ostream& out, const std::vector<geo::PolarMeasurement>& zs);
std::vector<geo::PolarMeasurement> read_measurements(std::istream& in);

/// {"conf","source","t","vx","vy","x","y"}
void write_estimates(std::ostream& out, const std::vector<track::TrackEstimate>& estimates);
std::vector<track::TrackEstimate> read_estimates(std::istream& in);

/// Binary PGM (P5, maxval 255). Pixel = lround(v * 255 / max) with max the
/// plane maximum (all zero when max is 0). Rows are written north-up, i.e.
/// raster row H-1 first.
void write_pgm(std::ostream& out, const raster::Plane& plane);

}  // namespace mupo::io
