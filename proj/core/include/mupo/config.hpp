#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mupo/detector.hpp"
#include "mupo/eval.hpp"
#include "mupo/raster.hpp"
#include "mupo/scenario.hpp"
#include "mupo/tracker.hpp"

namespace mupo::config {

inline constexpr int kSchemaVersion = 1;

/// A scenario with a preset name ("random", "maneuver-heavy", "cv") plus the
/// overrides applied on top of it.
struct NamedScenario {
  std::string name;
  std::string preset = "random";
  sim::ScenarioConfig config;
};

struct EvalParams {
  int n_runs = 25;
  std::uint64_t seed = 7;
  double warmup_s = 10.0;
  int post_switch_ticks = 20;
  std::vector<std::string> methods{"passthrough", "imm", "mupo-ttn"};
  std::vector<NamedScenario> scenarios;
};

struct RunConfig {
  int schema_version = kSchemaVersion;
  NamedScenario scenario;
  raster::RasterParams raster;
  det::NetConfig net;
  std::string imm_preset = "desk8";
  geo::RadarParams radar;
  EvalParams eval;

  void validate() const;
  track::TrackerConfig tracker() const;
};

RunConfig default_run_config();

/// Parses a RunConfig document; missing keys keep their defaults, unknown keys
/// are rejected. Malformed JSON raises ConfigError naming line and column.
RunConfig parse_run_config(std::string_view text);

/// Canonical JSON: sorted keys, shortest round-trip numbers.
std::string to_json(const RunConfig& cfg);

/// Scenario preset by name with the given seed.
sim::ScenarioConfig scenario_preset(std::string_view name, std::uint64_t seed);

std::uint64_t fnv1a64(std::string_view bytes);
/// 16 hex digits of fnv1a64 over the canonical JSON.
std::string config_digest(const RunConfig& cfg);

/// 1-based line and column of a byte offset.
std::pair<long, long> line_column(std::string_view text, std::size_t offset);

}  // namespace mupo::config
