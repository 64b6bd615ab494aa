#include "mupo/config.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mupo/errors.hpp"
#include "mupo/imm.hpp"

namespace mupo::config {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                    const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      throw ConfigError("unknown key " + where + "." + key);
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

json interval_json(const sim::Interval& iv) { return json::array({iv.lo, iv.hi}); }

void read_interval(const json& obj, const char* key, sim::Interval& iv, const std::string& where) {
  std::vector<double> v;
  if (obj.find(key) == obj.end()) return;
  read(obj, key, v, where);
  if (v.size() != 2) throw ConfigError(where + "." + key + " must be [lo, hi]");
  iv = {v[0], v[1]};
}

json model_json(const sim::DynamicModel& m) {
  return {{"tag", std::string(sim::to_string(m.tag))},
          {"q", m.q},
          {"tau", m.tau},
          {"sigma_m", m.sigma_m},
          {"a_max", m.a_max},
          {"omega", m.omega},
          {"omega_min", m.omega_min},
          {"omega_max", m.omega_max},
          {"omega_limit", m.omega_limit}};
}

sim::DynamicModel parse_model(const json& j, const std::string& where) {
  reject_unknown(j,
                 {"tag", "q", "tau", "sigma_m", "a_max", "omega", "omega_min", "omega_max",
                  "omega_limit"},
                 where);
  sim::DynamicModel m;
  std::string tag = "CV";
  read(j, "tag", tag, where);
  try {
    m.tag = sim::model_tag_from_string(tag);
  } catch (const std::exception& e) {
    throw ConfigError(where + ".tag: " + e.what());
  }
  read(j, "q", m.q, where);
  read(j, "tau", m.tau, where);
  read(j, "sigma_m", m.sigma_m, where);
  read(j, "a_max", m.a_max, where);
  read(j, "omega", m.omega, where);
  read(j, "omega_min", m.omega_min, where);
  read(j, "omega_max", m.omega_max, where);
  read(j, "omega_limit", m.omega_limit, where);
  return m;
}

json radar_json(const geo::RadarParams& r) {
  return {{"range_coeff", r.range_coeff},
          {"azimuth_coeff", r.azimuth_coeff},
          {"reference_snr", r.reference_snr},
          {"reference_range", r.reference_range}};
}

geo::RadarParams parse_radar(const json& j) {
  reject_unknown(j, {"range_coeff", "azimuth_coeff", "reference_snr", "reference_range"}, "radar");
  geo::RadarParams r;
  read(j, "range_coeff", r.range_coeff, "radar");
  read(j, "azimuth_coeff", r.azimuth_coeff, "radar");
  read(j, "reference_snr", r.reference_snr, "radar");
  read(j, "reference_range", r.reference_range, "radar");
  return r;
}

json scenario_json(const NamedScenario& s) {
  const sim::ScenarioConfig& c = s.config;
  json j;
  j["name"] = s.name;
  j["preset"] = s.preset;
  j["seed"] = c.seed;
  j["duration"] = c.duration;
  j["sim_dt"] = c.sim_dt;
  j["meas_dt"] = c.meas_dt;
  j["lambda_switch"] = c.lambda_switch;
  j["snr_1"] = c.snr_1;
  j["fluctuation"] = c.fluctuation == sim::SnrFluctuation::Swerling1 ? "swerling1" : "none";
  j["v_max"] = c.v_max;
  j["initial_model"] = c.initial_model;
  j["init"] = {{"range", interval_json(c.init.range)},
               {"azimuth", interval_json(c.init.azimuth)},
               {"speed", interval_json(c.init.speed)},
               {"course", interval_json(c.init.course)}};
  j["models"] = json::array();
  for (const auto& m : c.models) j["models"].push_back(model_json(m));
  j["transition"] = json::array();
  for (Eigen::Index r = 0; r < c.transition.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index k = 0; k < c.transition.cols(); ++k) row.push_back(c.transition(r, k));
    j["transition"].push_back(row);
  }
  if (c.fixed_schedule) {
    j["schedule"] = json::array();
    for (const auto& e : *c.fixed_schedule) j["schedule"].push_back({{"t", e.t}, {"model", e.model}});
  } else {
    j["schedule"] = nullptr;
  }
  return j;
}

NamedScenario parse_scenario(const json& j, const std::string& where, const NamedScenario& base) {
  reject_unknown(j,
                 {"name", "preset", "seed", "duration", "sim_dt", "meas_dt", "lambda_switch",
                  "snr_1", "fluctuation", "v_max", "initial_model", "init", "models",
                  "transition", "schedule"},
                 where);
  NamedScenario s = base;
  read(j, "name", s.name, where);
  std::uint64_t seed = base.config.seed;
  read(j, "seed", seed, where);
  if (auto it = j.find("preset"); it != j.end()) {
    read(j, "preset", s.preset, where);
    s.config = scenario_preset(s.preset, seed);
  }
  sim::ScenarioConfig& c = s.config;
  c.seed = seed;
  read(j, "duration", c.duration, where);
  read(j, "sim_dt", c.sim_dt, where);
  read(j, "meas_dt", c.meas_dt, where);
  read(j, "lambda_switch", c.lambda_switch, where);
  read(j, "snr_1", c.snr_1, where);
  read(j, "v_max", c.v_max, where);
  read(j, "initial_model", c.initial_model, where);
  if (auto it = j.find("fluctuation"); it != j.end()) {
    std::string f;
    read(j, "fluctuation", f, where);
    if (f == "swerling1") {
      c.fluctuation = sim::SnrFluctuation::Swerling1;
    } else if (f == "none") {
      c.fluctuation = sim::SnrFluctuation::None;
    } else {
      throw ConfigError(where + ".fluctuation must be \"swerling1\" or \"none\"");
    }
  }
  if (auto it = j.find("init"); it != j.end()) {
    reject_unknown(*it, {"range", "azimuth", "speed", "course"}, where + ".init");
    read_interval(*it, "range", c.init.range, where + ".init");
    read_interval(*it, "azimuth", c.init.azimuth, where + ".init");
    read_interval(*it, "speed", c.init.speed, where + ".init");
    read_interval(*it, "course", c.init.course, where + ".init");
  }
  if (auto it = j.find("models"); it != j.end()) {
    if (!it->is_array()) throw ConfigError(where + ".models must be an array");
    c.models.clear();
    for (std::size_t i = 0; i < it->size(); ++i) {
      c.models.push_back(parse_model((*it)[i], where + ".models[" + std::to_string(i) + "]"));
    }
    if (j.find("transition") == j.end()) {
      c.transition = sim::ScenarioConfig::default_transition(c.models.size());
    }
  }
  if (auto it = j.find("transition"); it != j.end()) {
    std::vector<std::vector<double>> rows;
    read(j, "transition", rows, where);
    const auto n = static_cast<Eigen::Index>(rows.size());
    c.transition.resize(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) != n) {
        throw ConfigError(where + ".transition must be square");
      }
      for (Eigen::Index k = 0; k < n; ++k) {
        c.transition(r, k) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)];
      }
    }
  }
  if (auto it = j.find("schedule"); it != j.end()) {
    if (it->is_null()) {
      c.fixed_schedule.reset();
    } else {
      if (!it->is_array()) throw ConfigError(where + ".schedule must be an array or null");
      std::vector<sim::SwitchEvent> events;
      for (const auto& e : *it) {
        reject_unknown(e, {"t", "model"}, where + ".schedule[]");
        sim::SwitchEvent ev;
        read(e, "t", ev.t, where + ".schedule[]");
        read(e, "model", ev.model, where + ".schedule[]");
        events.push_back(ev);
      }
      c.fixed_schedule = std::move(events);
    }
  }
  return s;
}

json raster_json(const raster::RasterParams& r) {
  return {{"mode", std::string(raster::to_string(r.mode))},
          {"window_length", r.window_length},
          {"tfot_degree", r.tfot_degree},
          {"tfot_lambda", r.tfot_lambda},
          {"tfot_samples", r.tfot_samples},
          {"fixed", {{"v_max", r.fixed.v_max}, {"cell", r.fixed.cell}, {"margin", r.fixed.margin}}},
          {"flexible",
           {{"k_sigma", r.flexible.k_sigma},
            {"cell", r.flexible.cell},
            {"cell_min", r.flexible.cell_min},
            {"cell_max", r.flexible.cell_max},
            {"max_side", r.flexible.max_side}}}};
}

raster::RasterParams parse_raster(const json& j) {
  reject_unknown(j,
                 {"mode", "window_length", "tfot_degree", "tfot_lambda", "tfot_samples", "fixed",
                  "flexible"},
                 "raster");
  raster::RasterParams r;
  if (j.find("mode") != j.end()) {
    std::string mode;
    read(j, "mode", mode, "raster");
    try {
      r.mode = raster::region_mode_from_string(mode);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("raster.mode: ") + e.what());
    }
  }
  read(j, "window_length", r.window_length, "raster");
  read(j, "tfot_degree", r.tfot_degree, "raster");
  read(j, "tfot_lambda", r.tfot_lambda, "raster");
  read(j, "tfot_samples", r.tfot_samples, "raster");
  if (auto it = j.find("fixed"); it != j.end()) {
    reject_unknown(*it, {"v_max", "cell", "margin"}, "raster.fixed");
    read(*it, "v_max", r.fixed.v_max, "raster.fixed");
    read(*it, "cell", r.fixed.cell, "raster.fixed");
    read(*it, "margin", r.fixed.margin, "raster.fixed");
  }
  if (auto it = j.find("flexible"); it != j.end()) {
    reject_unknown(*it, {"k_sigma", "cell", "cell_min", "cell_max", "max_side"}, "raster.flexible");
    read(*it, "k_sigma", r.flexible.k_sigma, "raster.flexible");
    read(*it, "cell", r.flexible.cell, "raster.flexible");
    read(*it, "cell_min", r.flexible.cell_min, "raster.flexible");
    read(*it, "cell_max", r.flexible.cell_max, "raster.flexible");
    read(*it, "max_side", r.flexible.max_side, "raster.flexible");
  }
  return r;
}

void apply_radar(RunConfig& cfg) {
  cfg.scenario.config.radar = cfg.radar;
  for (auto& s : cfg.eval.scenarios) s.config.radar = cfg.radar;
}

}  // namespace

sim::ScenarioConfig scenario_preset(std::string_view name, std::uint64_t seed) {
  sim::ScenarioConfig c;
  if (name == "random") {
    c.seed = seed;
  } else if (name == "maneuver-heavy") {
    c = sim::maneuver_heavy_scenario(seed);
  } else if (name == "cv") {
    c.seed = seed;
    sim::DynamicModel cv;
    cv.tag = sim::ModelTag::CV;
    cv.q = 0.1;
    c.models = {cv};
    c.transition = sim::ScenarioConfig::default_transition(1);
    c.lambda_switch = 0.0;
  } else {
    throw ConfigError("unknown scenario preset \"" + std::string(name) +
                      "\" (expected random, maneuver-heavy or cv)");
  }
  return c;
}

RunConfig default_run_config() {
  RunConfig cfg;
  cfg.scenario.name = "train";
  cfg.scenario.preset = "random";
  cfg.scenario.config = scenario_preset("random", 1);
  NamedScenario s1{"scene1", "maneuver-heavy", scenario_preset("maneuver-heavy", 101)};
  NamedScenario s2{"scene2", "maneuver-heavy", scenario_preset("maneuver-heavy", 202)};
  cfg.eval.scenarios = {s1, s2};
  apply_radar(cfg);
  return cfg;
}

void RunConfig::validate() const {
  if (schema_version != kSchemaVersion) {
    throw ConfigError("unsupported schema_version " + std::to_string(schema_version) +
                      " (expected " + std::to_string(kSchemaVersion) + ")");
  }
  try {
    scenario.config.validate();
    for (const auto& s : eval.scenarios) s.config.validate();
    raster.validate();
    radar.validate();
    (void)imm::ImmConfig::from_preset(imm_preset);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  net.validate();
  if (raster::kDetectorStride % net.stride != 0) {
    throw ConfigError("net.stride must divide the raster stride");
  }
  if (raster.window_length < 2) throw ConfigError("raster.window_length must be >= 2");
  if (eval.n_runs < 1) throw ConfigError("eval.n_runs must be >= 1");
  if (eval.post_switch_ticks < 1) throw ConfigError("eval.post_switch_ticks must be >= 1");
  for (const auto& m : eval.methods) {
    try {
      (void)eval::method_kind_from_string(m);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("eval.methods: ") + e.what());
    }
  }
}

track::TrackerConfig RunConfig::tracker() const {
  track::TrackerConfig t;
  t.raster = raster;
  t.imm = imm::ImmConfig::from_preset(imm_preset);
  t.radar = radar;
  return t;
}

std::pair<long, long> line_column(std::string_view text, std::size_t offset) {
  long line = 1;
  long col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

RunConfig parse_run_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // nlohmann reports the byte just past the offending character.
    const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    const auto [line, col] = line_column(text, at);
    throw ConfigError("malformed JSON at line " + std::to_string(line) + ", column " +
                      std::to_string(col) + ": " + e.what());
  }
  reject_unknown(j,
                 {"schema_version", "scenario", "raster", "net", "imm_preset", "radar", "eval"},
                 "config");
  RunConfig cfg = default_run_config();
  read(j, "schema_version", cfg.schema_version, "config");
  if (cfg.schema_version != kSchemaVersion) {
    throw ConfigError("unsupported schema_version " + std::to_string(cfg.schema_version));
  }
  if (auto it = j.find("radar"); it != j.end()) cfg.radar = parse_radar(*it);
  if (auto it = j.find("scenario"); it != j.end()) {
    cfg.scenario = parse_scenario(*it, "scenario", cfg.scenario);
  }
  if (auto it = j.find("raster"); it != j.end()) cfg.raster = parse_raster(*it);
  if (auto it = j.find("net"); it != j.end()) cfg.net = det::net_config_from_json(it->dump());
  read(j, "imm_preset", cfg.imm_preset, "config");
  if (auto it = j.find("eval"); it != j.end()) {
    reject_unknown(*it,
                   {"n_runs", "seed", "warmup_s", "post_switch_ticks", "methods", "scenarios"},
                   "eval");
    read(*it, "n_runs", cfg.eval.n_runs, "eval");
    read(*it, "seed", cfg.eval.seed, "eval");
    read(*it, "warmup_s", cfg.eval.warmup_s, "eval");
    read(*it, "post_switch_ticks", cfg.eval.post_switch_ticks, "eval");
    read(*it, "methods", cfg.eval.methods, "eval");
    if (auto sit = it->find("scenarios"); sit != it->end()) {
      if (!sit->is_array()) throw ConfigError("eval.scenarios must be an array");
      cfg.eval.scenarios.clear();
      for (std::size_t i = 0; i < sit->size(); ++i) {
        NamedScenario base;
        base.name = "scene" + std::to_string(i + 1);
        base.config = scenario_preset("random", 1);
        cfg.eval.scenarios.push_back(
            parse_scenario((*sit)[i], "eval.scenarios[" + std::to_string(i) + "]", base));
      }
    }
  }
  apply_radar(cfg);
  cfg.validate();
  return cfg;
}

std::string to_json(const RunConfig& cfg) {
  json j;
  j["schema_version"] = cfg.schema_version;
  j["scenario"] = scenario_json(cfg.scenario);
  j["raster"] = raster_json(cfg.raster);
  j["net"] = json::parse(det::to_json(cfg.net));
  j["imm_preset"] = cfg.imm_preset;
  j["radar"] = radar_json(cfg.radar);
  json ev;
  ev["n_runs"] = cfg.eval.n_runs;
  ev["seed"] = cfg.eval.seed;
  ev["warmup_s"] = cfg.eval.warmup_s;
  ev["post_switch_ticks"] = cfg.eval.post_switch_ticks;
  ev["methods"] = cfg.eval.methods;
  ev["scenarios"] = json::array();
  for (const auto& s : cfg.eval.scenarios) ev["scenarios"].push_back(scenario_json(s));
  j["eval"] = ev;
  return j.dump(2);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_digest(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_json(cfg))));
  return buf;
}

}  // namespace mupo::config
