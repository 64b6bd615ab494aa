#include "mupo/io.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "mupo/errors.hpp"

namespace mupo::io {

using nlohmann::json;

namespace {

template <typename Fn>
void for_each_line(std::istream& in, const char* what, Fn&& fn) {
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      throw ConfigError(std::string(what) + " line " + std::to_string(line_no) + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string(what) + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void write_line(std::ostream& out, const json& j) {
  out << j.dump() << '\n';
  if (!out) throw IoError("write failed");
}

}  // namespace

void write_truth(std::ostream& out, const std::vector<sim::TargetState>& states) {
  for (const auto& s : states) {
    write_line(out, {{"t", s.t},
                     {"x", s.x},
                     {"y", s.y},
                     {"vx", s.vx},
                     {"vy", s.vy},
                     {"model", std::string(sim::to_string(s.model))}});
  }
}

std::vector<sim::TargetState> read_truth(std::istream& in) {
  std::vector<sim::TargetState> out;
  for_each_line(in, "truth", [&](const json& j) {
    sim::TargetState s;
    s.t = j.at("t").get<double>();
    s.x = j.at("x").get<double>();
    s.y = j.at("y").get<double>();
    s.vx = j.at("vx").get<double>();
    s.vy = j.at("vy").get<double>();
    s.model = sim::model_tag_from_string(j.at("model").get<std::string>());
    out.push_back(s);
  });
  return out;
}

void write_measurements(std::ostream& out, const std::vector<geo::PolarMeasurement>& zs) {
  for (const auto& z : zs) {
    write_line(out, {{"t", z.t}, {"rho", z.rho}, {"theta", z.theta}, {"snr", z.snr}});
  }
}

std::vector<geo::PolarMeasurement> read_measurements(std::istream& in) {
  std::vector<geo::PolarMeasurement> out;
  for_each_line(in, "measurements", [&](const json& j) {
    geo::PolarMeasurement z;
    z.t = j.at("t").get<double>();
    z.rho = j.at("rho").get<double>();
    z.theta = j.at("theta").get<double>();
    z.snr = j.at("snr").get<double>();
    out.push_back(z);
  });
  return out;
}

void write_estimates(std::ostream& out, const std::vector<track::TrackEstimate>& estimates) {
  for (const auto& e : estimates) {
    write_line(out, {{"t", e.t},
                     {"x", e.position.x()},
                     {"y", e.position.y()},
                     {"vx", e.velocity.x()},
                     {"vy", e.velocity.y()},
                     {"source", std::string(track::to_string(e.source))},
                     {"conf", e.confidence}});
  }
}

std::vector<track::TrackEstimate> read_estimates(std::istream& in) {
  std::vector<track::TrackEstimate> out;
  for_each_line(in, "estimates", [&](const json& j) {
    track::TrackEstimate e;
    e.t = j.at("t").get<double>();
    e.position = {j.at("x").get<double>(), j.at("y").get<double>()};
    e.velocity = {j.at("vx").get<double>(), j.at("vy").get<double>()};
    e.source = track::source_from_string(j.at("source").get<std::string>());
    e.confidence = j.at("conf").get<double>();
    out.push_back(e);
  });
  return out;
}

void write_pgm(std::ostream& out, const raster::Plane& plane) {
  out << "P5\n" << plane.width << ' ' << plane.height << "\n255\n";
  const double mx = plane.data.empty() ? 0.0 : static_cast<double>(plane.max());
  std::string row(static_cast<std::size_t>(plane.width), '\0');
  for (int r = plane.height - 1; r >= 0; --r) {
    for (int c = 0; c < plane.width; ++c) {
      long v = 0;
      if (mx > 0.0) v = std::lround(static_cast<double>(plane.at(r, c)) * 255.0 / mx);
      row[static_cast<std::size_t>(c)] = static_cast<char>(static_cast<unsigned char>(std::clamp(v, 0L, 255L)));
    }
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw IoError("PGM write failed");
}

}  // namespace mupo::io
