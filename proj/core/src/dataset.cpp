#include "mupo/dataset.hpp"

#include <fstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "mupo/errors.hpp"

namespace mupo::data {

using nlohmann::json;

Dataset make_dataset(std::span<const geo::PolarMeasurement> measurements,
                     std::span<const sim::TargetState> truth, const track::TrackerConfig& cfg) {
  if (measurements.size() != truth.size()) {
    throw std::invalid_argument("make_dataset: " + std::to_string(measurements.size()) +
                                " measurements but " + std::to_string(truth.size()) +
                                " truth states");
  }
  track::Tracker tracker(cfg);
  Dataset out;
  for (std::size_t k = 0; k < measurements.size(); ++k) {
    raster::MupoTensor tensor;
    const track::TrackEstimate est = tracker.step(measurements[k], &tensor);
    if (est.source == track::Source::Init || tensor.data.empty()) continue;
    ++out.windows;
    const geo::Vec2 p = truth[k].position();
    if (!raster::contains(tensor.region, p)) {
      ++out.dropped;
      continue;
    }
    WindowRecord rec;
    rec.t = measurements[k].t;
    rec.truth = p;
    rec.imm = est.position;
    rec.imm_error = (est.position - p).norm();
    rec.meas_error = (tracker.window().back().position() - p).norm();
    rec.tensor = std::move(tensor);
    out.records.push_back(std::move(rec));
  }
  return out;
}

Dataset simulate_dataset(const sim::ScenarioConfig& scenario, int n_tracks, std::uint64_t seed,
                         const track::TrackerConfig& cfg) {
  Dataset all;
  for (int i = 0; i < n_tracks; ++i) {
    sim::ScenarioConfig sc = scenario;
    sc.seed = seed + static_cast<std::uint64_t>(i);
    sim::Rng rng(sc.seed);
    const sim::Track track = sim::generate_track(sc, rng);
    const auto meas = sim::generate_measurements(track, sc, rng);
    const auto truth = sim::truth_at_measurements(track, sc);
    Dataset part = make_dataset(meas, truth, cfg);
    all.windows += part.windows;
    all.dropped += part.dropped;
    for (WindowRecord& r : part.records) all.records.push_back(std::move(r));
  }
  return all;
}

std::vector<det::TrainingSample> to_training(const std::vector<WindowRecord>& records, int stride,
                                             double radius_sq) {
  std::vector<det::TrainingSample> out;
  out.reserve(records.size());
  for (const WindowRecord& r : records) {
    auto labels = det::assign_labels(r.tensor.region, r.truth, r.imm, r.imm_error, r.meas_error,
                                     stride, radius_sq);
    if (!labels) continue;
    out.push_back({r.tensor, std::move(*labels)});
  }
  return out;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::ofstream bin(dir / "dataset.bin", std::ios::binary);
  std::ofstream labels(dir / "labels.jsonl", std::ios::binary);
  if (!bin || !labels) throw IoError("cannot write dataset files in " + dir.string());
  for (const WindowRecord& r : dataset.records) {
    raster::write_raster(bin, r.tensor);
    json j;
    j["t"] = r.t;
    j["truth"] = {r.truth.x(), r.truth.y()};
    j["imm"] = {r.imm.x(), r.imm.y()};
    j["imm_error"] = r.imm_error;
    j["meas_error"] = r.meas_error;
    j["timestamps"] = r.tensor.timestamps;
    labels << j.dump() << '\n';
  }
  if (!bin || !labels) throw IoError("write failed in " + dir.string());
}

Dataset read_dataset(const std::filesystem::path& dir) {
  std::ifstream bin(dir / "dataset.bin", std::ios::binary);
  std::ifstream labels(dir / "labels.jsonl", std::ios::binary);
  if (!bin || !labels) throw IoError("cannot open dataset files in " + dir.string());
  Dataset out;
  std::string line;
  long line_no = 0;
  while (std::getline(labels, line)) {
    ++line_no;
    if (line.empty()) continue;
    WindowRecord r;
    try {
      const json j = json::parse(line);
      r.t = j.at("t").get<double>();
      const auto truth = j.at("truth").get<std::vector<double>>();
      const auto imm = j.at("imm").get<std::vector<double>>();
      if (truth.size() != 2 || imm.size() != 2) throw ConfigError("positions must have 2 entries");
      r.truth = {truth[0], truth[1]};
      r.imm = {imm[0], imm[1]};
      r.imm_error = j.at("imm_error").get<double>();
      r.meas_error = j.at("meas_error").get<double>();
      r.tensor = raster::read_raster(bin);
      r.tensor.timestamps = j.value("timestamps", std::vector<double>{});
    } catch (const json::exception& e) {
      throw ConfigError("labels.jsonl line " + std::to_string(line_no) + ": " + e.what());
    }
    out.records.push_back(std::move(r));
  }
  if (bin.peek() != std::char_traits<char>::eof()) {
    throw ConfigError("dataset.bin holds more rasters than labels.jsonl has lines");
  }
  out.windows = static_cast<int>(out.records.size());
  return out;
}

}  // namespace mupo::data
