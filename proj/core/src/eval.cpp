#include "mupo/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <set>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace mupo::eval {

std::vector<double> rmse_series(const std::vector<std::vector<TimedPosition>>& runs,
                                std::span<const TimedPosition> truth) {
  if (runs.empty()) throw std::invalid_argument("rmse_series: no runs");
  std::vector<double> acc(truth.size(), 0.0);
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto& run = runs[r];
    if (run.size() != truth.size()) {
      throw std::invalid_argument("rmse_series: run " + std::to_string(r) + " has " +
                                  std::to_string(run.size()) + " estimates for " +
                                  std::to_string(truth.size()) + " truth ticks");
    }
    for (std::size_t k = 0; k < truth.size(); ++k) {
      if (std::abs(run[k].t - truth[k].t) > 1e-9) {
        throw std::invalid_argument("rmse_series: misaligned timestamp at tick " +
                                    std::to_string(k) + " of run " + std::to_string(r));
      }
      acc[k] += (run[k].p - truth[k].p).squaredNorm();
    }
  }
  for (double& v : acc) v = std::sqrt(v / static_cast<double>(runs.size()));
  return acc;
}

double armse(std::span<const double> series, std::span<const double> times, double warmup_s) {
  if (series.size() != times.size()) throw std::invalid_argument("armse: size mismatch");
  double sum = 0.0;
  long n = 0;
  for (std::size_t k = 0; k < series.size(); ++k) {
    if (times[k] + 1e-9 < warmup_s) continue;
    sum += series[k];
    ++n;
  }
  if (n == 0) throw std::invalid_argument("armse: no ticks after warmup");
  return sum / static_cast<double>(n);
}

double post_switch_mean(std::span<const double> series, std::span<const double> times,
                        std::span<const double> switches, int ticks) {
  if (series.size() != times.size()) throw std::invalid_argument("post_switch_mean: size mismatch");
  std::set<std::size_t> picked;
  for (double ts : switches) {
    int taken = 0;
    for (std::size_t k = 0; k < times.size() && taken < ticks; ++k) {
      if (times[k] > ts) {
        picked.insert(k);
        ++taken;
      }
    }
  }
  if (picked.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (std::size_t k : picked) sum += series[k];
  return sum / static_cast<double>(picked.size());
}

std::string_view to_string(MethodKind k) {
  switch (k) {
    case MethodKind::Passthrough: return "passthrough";
    case MethodKind::Imm: return "imm";
    case MethodKind::MupoTtn: return "mupo-ttn";
  }
  return "imm";
}

MethodKind method_kind_from_string(std::string_view name) {
  if (name == "passthrough") return MethodKind::Passthrough;
  if (name == "imm") return MethodKind::Imm;
  if (name == "mupo-ttn") return MethodKind::MupoTtn;
  throw std::invalid_argument("unknown method: " + std::string(name));
}

std::vector<TimedPosition> run_method(const Method& method,
                                      std::span<const geo::PolarMeasurement> measurements,
                                      const track::TrackerConfig& cfg, long* fused,
                                      long* imm_only) {
  std::vector<TimedPosition> out;
  out.reserve(measurements.size());
  if (method.kind == MethodKind::Passthrough) {
    for (const auto& z : measurements) out.push_back({z.t, geo::convert(z, cfg.radar).position()});
    return out;
  }
  if (method.kind == MethodKind::MupoTtn && !method.net) {
    throw std::invalid_argument("method " + method.name + " needs a network");
  }
  const det::Network* net = method.kind == MethodKind::MupoTtn ? method.net : nullptr;
  for (const auto& e : track::run_track(measurements, net, cfg)) {
    out.push_back({e.t, e.position});
    if (fused && e.source == track::Source::Fused) ++*fused;
    if (imm_only && e.source == track::Source::ImmOnly) ++*imm_only;
  }
  return out;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("MUPO_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

McReport monte_carlo(const sim::ScenarioConfig& scenario, const std::string& scenario_name,
                     const std::vector<Method>& methods, const EvalConfig& cfg) {
  if (cfg.n_runs < 1) throw std::invalid_argument("monte_carlo: n_runs must be >= 1");
  if (methods.empty()) throw std::invalid_argument("monte_carlo: no methods");
  scenario.validate();

  sim::Rng truth_rng(scenario.seed);
  const sim::Track track = sim::generate_track(scenario, truth_rng);
  const std::vector<sim::TargetState> truth_states = sim::truth_at_measurements(track, scenario);
  std::vector<TimedPosition> truth;
  for (const auto& s : truth_states) truth.push_back({s.t, s.position()});

  McReport report;
  report.scenario = scenario_name;
  report.n_runs = cfg.n_runs;
  report.seed = cfg.seed;
  for (const auto& p : truth) report.times.push_back(p.t);
  report.switch_times = sim::switch_times(track);

  struct RunResult {
    std::vector<std::vector<TimedPosition>> per_method;
    std::vector<bool> failed;
    std::vector<long> fused;
    std::vector<long> imm_only;
  };
  const auto n_runs = static_cast<std::size_t>(cfg.n_runs);
  std::vector<RunResult> results(n_runs);
  for (std::size_t r = 0; r < n_runs; ++r) report.run_seeds.push_back(cfg.seed ^ r);

  auto do_run = [&](std::size_t r) {
    sim::Rng rng(report.run_seeds[r]);
    const auto meas = sim::generate_measurements(track, scenario, rng);
    RunResult& res = results[r];
    res.per_method.resize(methods.size());
    res.failed.assign(methods.size(), false);
    res.fused.assign(methods.size(), 0);
    res.imm_only.assign(methods.size(), 0);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      try {
        res.per_method[m] =
            run_method(methods[m], meas, cfg.tracker, &res.fused[m], &res.imm_only[m]);
      } catch (const std::exception&) {
        res.failed[m] = true;
      }
    }
  };

  const int threads = std::min<int>(resolve_threads(cfg.threads), cfg.n_runs);
  if (threads <= 1) {
    for (std::size_t r = 0; r < n_runs; ++r) do_run(r);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t r = next++; r < n_runs; r = next++) do_run(r);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  for (std::size_t m = 0; m < methods.size(); ++m) {
    MethodReport mr;
    mr.name = methods[m].name;
    std::vector<std::vector<TimedPosition>> runs;
    for (std::size_t r = 0; r < n_runs; ++r) {
      if (results[r].failed[m]) {
        ++mr.failures;
        continue;
      }
      runs.push_back(std::move(results[r].per_method[m]));
      mr.fused += results[r].fused[m];
      mr.imm_only += results[r].imm_only[m];
    }
    if (runs.empty()) {
      mr.rmse.assign(truth.size(), std::numeric_limits<double>::quiet_NaN());
      mr.armse = std::numeric_limits<double>::quiet_NaN();
      mr.post_switch = mr.armse;
    } else {
      mr.rmse = rmse_series(runs, truth);
      mr.armse = armse(mr.rmse, report.times, cfg.warmup_s);
      mr.post_switch =
          post_switch_mean(mr.rmse, report.times, report.switch_times, cfg.post_switch_ticks);
    }
    report.methods.push_back(std::move(mr));
  }
  return report;
}

void write_rmse_csv(std::ostream& out, const McReport& report) {
  out << "t";
  for (const auto& m : report.methods) out << ',' << m.name;
  out << '\n';
  char buf[64];
  for (std::size_t k = 0; k < report.times.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.6f", report.times[k]);
    out << buf;
    for (const auto& m : report.methods) {
      std::snprintf(buf, sizeof buf, ",%.9g", m.rmse[k]);
      out << buf;
    }
    out << '\n';
  }
}

void write_summary_json(std::ostream& out, const std::vector<McReport>& reports) {
  using nlohmann::json;
  json armse_table = json::object();
  json scenarios = json::array();
  for (const McReport& r : reports) {
    json s;
    s["name"] = r.scenario;
    s["n_runs"] = r.n_runs;
    s["seed"] = r.seed;
    s["run_seeds"] = r.run_seeds;
    s["config_digest"] = r.config_digest;
    s["switch_times"] = r.switch_times;
    json methods = json::object();
    for (const MethodReport& m : r.methods) {
      json mj;
      mj["armse"] = std::isfinite(m.armse) ? json(m.armse) : json(nullptr);
      mj["post_switch_rmse"] = std::isfinite(m.post_switch) ? json(m.post_switch) : json(nullptr);
      mj["failures"] = m.failures;
      mj["fused_estimates"] = m.fused;
      mj["imm_only_estimates"] = m.imm_only;
      methods[m.name] = mj;
      armse_table[m.name][r.scenario] = mj["armse"];
    }
    s["methods"] = methods;
    scenarios.push_back(s);
  }
  json doc;
  doc["armse"] = armse_table;
  doc["scenarios"] = scenarios;
  out << doc.dump(2) << '\n';
}

}  // namespace mupo::eval
