#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mupo/detector.hpp"
#include "mupo/scenario.hpp"
#include "mupo/tracker.hpp"

namespace mupo::eval {

struct TimedPosition {
  double t = 0.0;
  geo::Vec2 p = geo::Vec2::Zero();
};

/// RMSE(t) = sqrt(mean over runs of |p_hat(t) - p(t)|^2). Every run must
/// share the truth timestamps (within 1e-9 s).
std::vector<double> rmse_series(const std::vector<std::vector<TimedPosition>>& runs,
                                std::span<const TimedPosition> truth);

/// Time mean of `series` over ticks with t >= warmup_s.
double armse(std::span<const double> series, std::span<const double> times, double warmup_s);

/// Mean of `series` over the union of the first `ticks` measurement ticks
/// strictly after each switch time.
double post_switch_mean(std::span<const double> series, std::span<const double> times,
                        std::span<const double> switches, int ticks);

enum class MethodKind { Passthrough, Imm, MupoTtn };
std::string_view to_string(MethodKind k);
MethodKind method_kind_from_string(std::string_view name);

struct Method {
  std::string name;
  MethodKind kind = MethodKind::Imm;
  const det::Network* net = nullptr;  // MupoTtn only
};

struct EvalConfig {
  int n_runs = 25;
  std::uint64_t seed = 1;
  double warmup_s = 10.0;
  int post_switch_ticks = 20;
  int threads = 1;
  track::TrackerConfig tracker;
};

struct MethodReport {
  std::string name;
  std::vector<double> rmse;
  double armse = 0.0;
  double post_switch = 0.0;  // NaN when the truth has no switches
  int failures = 0;          // runs that raised
  long fused = 0;            // estimates with source "fused"
  long imm_only = 0;
};

struct McReport {
  std::string scenario;
  std::vector<double> times;
  std::vector<double> switch_times;
  std::vector<MethodReport> methods;
  int n_runs = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> run_seeds;
  std::string config_digest;
};

/// Estimates of one method on one measurement realization, one per tick.
std::vector<TimedPosition> run_method(const Method& method,
                                      std::span<const geo::PolarMeasurement> measurements,
                                      const track::TrackerConfig& cfg, long* fused = nullptr,
                                      long* imm_only = nullptr);

/// One fixed truth track from `scenario.seed`; run r draws its measurement
/// noise from seed ^ r and every method sees the same realization. Runs are
/// executed on `cfg.threads` workers and reduced in run order.
McReport monte_carlo(const sim::ScenarioConfig& scenario, const std::string& scenario_name,
                     const std::vector<Method>& methods, const EvalConfig& cfg);

/// CSV: t,<method>... per-tick RMSE.
void write_rmse_csv(std::ostream& out, const McReport& report);
/// JSON summary: ARMSE per method and scenario, run count, seeds, digest.
void write_summary_json(std::ostream& out, const std::vector<McReport>& reports);

int resolve_threads(int requested);

}  // namespace mupo::eval
