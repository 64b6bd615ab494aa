#include "mupo/scenario.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace mupo::sim {

namespace {

constexpr double kDeg = geo::kPi / 180.0;
constexpr double kTimeEps = 1e-9;

double uniform(const Interval& iv, Rng& rng) {
  if (iv.lo == iv.hi) return iv.lo;
  return std::uniform_real_distribution<double>(iv.lo, iv.hi)(rng);
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Discrete process noise of an n-th order integrator chain driven by white
// noise of spectral density q on its last derivative.
Eigen::MatrixXd chain_noise(int n, double q, double dt) {
  Eigen::MatrixXd Q(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int p = 2 * n - 1 - i - j;
      Q(i, j) = q * std::pow(dt, p) / (factorial(n - 1 - i) * factorial(n - 1 - j) * p);
    }
  }
  return Q;
}

// Correlated noise sample for one axis of an integrator chain.
Eigen::VectorXd chain_sample(int n, double q, double dt, Rng& rng) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  if (q <= 0.0) return w;
  const Eigen::MatrixXd L = chain_noise(n, q, dt).llt().matrixL();
  std::normal_distribution<double> normal;
  Eigen::VectorXd u(n);
  for (int i = 0; i < n; ++i) u(i) = normal(rng);
  return L * u;
}

// Deterministic n-th order chain transition for one axis, state = [p, v, a, j].
void chain_step(std::array<double, 4>& s, int n, double dt) {
  std::array<double, 4> out{};
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = i; j < n; ++j) acc += s[j] * std::pow(dt, j - i) / factorial(j - i);
    out[i] = acc;
  }
  s = out;
}

void add_white_acceleration(TargetState& s, double q, double dt, Rng& rng) {
  if (q <= 0.0) return;
  const Eigen::VectorXd wx = chain_sample(2, q, dt, rng);
  const Eigen::VectorXd wy = chain_sample(2, q, dt, rng);
  s.x += wx(0);
  s.vx += wx(1);
  s.y += wy(0);
  s.vy += wy(1);
}

void turn(TargetState& s, double omega, double dt) {
  if (std::abs(omega) < 1e-12) {
    s.x += s.vx * dt;
    s.y += s.vy * dt;
    return;
  }
  const double sw = std::sin(omega * dt);
  const double cw = std::cos(omega * dt);
  const double vx = s.vx;
  const double vy = s.vy;
  s.x += (sw / omega) * vx - ((1.0 - cw) / omega) * vy;
  s.y += ((1.0 - cw) / omega) * vx + (sw / omega) * vy;
  s.vx = cw * vx - sw * vy;
  s.vy = sw * vx + cw * vy;
}

void chain_model(TargetState& s, int order, double q, double dt, Rng& rng) {
  std::array<double, 4> ax{s.x, s.vx, s.ax, s.jx};
  std::array<double, 4> ay{s.y, s.vy, s.ay, s.jy};
  chain_step(ax, order, dt);
  chain_step(ay, order, dt);
  const Eigen::VectorXd wx = chain_sample(order, q, dt, rng);
  const Eigen::VectorXd wy = chain_sample(order, q, dt, rng);
  for (int i = 0; i < order; ++i) {
    ax[i] += wx(i);
    ay[i] += wy(i);
  }
  s.x = ax[0];
  s.vx = ax[1];
  s.y = ay[0];
  s.vy = ay[1];
  if (order >= 3) {
    s.ax = ax[2];
    s.ay = ay[2];
  }
  if (order >= 4) {
    s.jx = ax[3];
    s.jy = ay[3];
  }
}

// Exponentially correlated acceleration: exact mean propagation over dt with
// the acceleration held at its conditional mean, then the acceleration noise.
void singer_axis(double& p, double& v, double& a, double mean_a, double tau, double var,
                 double dt, std::normal_distribution<double>& normal, Rng& rng) {
  const double rho = std::exp(-dt / tau);
  const double da = a - mean_a;
  p += v * dt + mean_a * dt * dt / 2.0 + da * tau * tau * (dt / tau - 1.0 + rho);
  v += mean_a * dt + da * tau * (1.0 - rho);
  a = mean_a + rho * da;
  if (var > 0.0) a += std::sqrt(var * (1.0 - rho * rho)) * normal(rng);
}

void clamp_speed(TargetState& s, double v_max) {
  const double v = s.speed();
  if (v > v_max && v > 0.0) {
    const double k = v_max / v;
    s.vx *= k;
    s.vy *= k;
  }
}

}  // namespace

std::string_view to_string(ModelTag tag) {
  switch (tag) {
    case ModelTag::CV: return "CV";
    case ModelTag::CA: return "CA";
    case ModelTag::Jerk: return "Jerk";
    case ModelTag::Singer: return "Singer";
    case ModelTag::CS: return "CS";
    case ModelTag::CTKnown: return "CT_known";
    case ModelTag::CTUnknown: return "CT_unknown";
  }
  return "?";
}

ModelTag model_tag_from_string(std::string_view name) {
  for (ModelTag t : {ModelTag::CV, ModelTag::CA, ModelTag::Jerk, ModelTag::Singer, ModelTag::CS,
                     ModelTag::CTKnown, ModelTag::CTUnknown}) {
    if (to_string(t) == name) return t;
  }
  throw std::invalid_argument("unknown dynamic model tag: " + std::string(name));
}

double TargetState::speed() const { return std::hypot(vx, vy); }

void DynamicModel::validate() const {
  if (q < 0.0) throw std::invalid_argument("DynamicModel: q must be >= 0");
  if (!(tau > 0.0)) throw std::invalid_argument("DynamicModel: tau must be > 0");
  if (sigma_m < 0.0 || a_max < 0.0) throw std::invalid_argument("DynamicModel: negative limit");
  if (std::abs(omega) > omega_limit || omega_max > omega_limit || omega_min < 0.0 ||
      omega_min > omega_max) {
    throw std::invalid_argument("DynamicModel: turn rate outside configured bound");
  }
}

std::vector<DynamicModel> ScenarioConfig::default_models() {
  std::vector<DynamicModel> m(7);
  m[0].tag = ModelTag::CV;
  m[0].q = 0.1;
  m[1].tag = ModelTag::CA;
  m[1].q = 1.0;
  m[2].tag = ModelTag::Jerk;
  m[2].q = 0.005;
  m[3].tag = ModelTag::Singer;
  m[3].tau = 20.0;
  m[3].sigma_m = 10.0;
  m[4].tag = ModelTag::CS;
  m[4].tau = 20.0;
  m[4].a_max = 30.0;
  m[5].tag = ModelTag::CTKnown;
  m[5].omega = 5.0 * kDeg;
  m[5].q = 0.1;
  m[6].tag = ModelTag::CTUnknown;
  m[6].omega_min = 2.0 * kDeg;
  m[6].omega_max = 12.0 * kDeg;
  m[6].q = 0.1;
  return m;
}

Eigen::MatrixXd ScenarioConfig::default_transition(std::size_t n) {
  const auto k = static_cast<Eigen::Index>(n);
  if (n == 1) return Eigen::MatrixXd::Ones(1, 1);
  Eigen::MatrixXd p = Eigen::MatrixXd::Constant(k, k, 1.0 / static_cast<double>(n - 1));
  p.diagonal().setZero();
  return p;
}

void ScenarioConfig::validate() const {
  auto nonempty = [](const Interval& iv) { return iv.lo <= iv.hi; };
  if (!nonempty(init.range) || !nonempty(init.azimuth) || !nonempty(init.speed) ||
      !nonempty(init.course)) {
    throw std::invalid_argument("ScenarioConfig: empty initial-state interval");
  }
  if (init.range.lo <= 0.0) throw std::invalid_argument("ScenarioConfig: range must be > 0");
  if (!(duration > 0.0) || !(sim_dt > 0.0) || !(meas_dt > 0.0)) {
    throw std::invalid_argument("ScenarioConfig: durations must be positive");
  }
  if (sim_dt > meas_dt) throw std::invalid_argument("ScenarioConfig: sim_dt must be <= meas_dt");
  if (lambda_switch < 0.0) throw std::invalid_argument("ScenarioConfig: lambda_switch < 0");
  if (models.empty()) throw std::invalid_argument("ScenarioConfig: empty model set");
  for (const auto& m : models) m.validate();
  const auto n = static_cast<Eigen::Index>(models.size());
  if (transition.rows() != n || transition.cols() != n) {
    throw std::invalid_argument("ScenarioConfig: transition matrix shape mismatch");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if ((transition.row(i).array() < 0.0).any() ||
        std::abs(transition.row(i).sum() - 1.0) > 1e-12) {
      throw std::invalid_argument("ScenarioConfig: transition rows must be stochastic");
    }
  }
  if (initial_model >= models.size()) {
    throw std::invalid_argument("ScenarioConfig: initial model out of range");
  }
  if (fixed_schedule) {
    for (const auto& e : *fixed_schedule) {
      if (e.model >= models.size()) {
        throw std::invalid_argument("ScenarioConfig: scheduled model out of range");
      }
    }
  }
  if (!(snr_1 > 0.0)) throw std::invalid_argument("ScenarioConfig: snr_1 must be > 0");
  if (!(v_max > 0.0)) throw std::invalid_argument("ScenarioConfig: v_max must be > 0");
  radar.validate();
}

TargetState sample_initial_state(const InitRanges& ranges, Rng& rng) {
  const double rho = uniform(ranges.range, rng);
  const double az = uniform(ranges.azimuth, rng);
  const double speed = uniform(ranges.speed, rng);
  const double course = uniform(ranges.course, rng);
  TargetState s;
  s.x = rho * std::cos(az);
  s.y = rho * std::sin(az);
  s.vx = speed * std::cos(course);
  s.vy = speed * std::sin(course);
  return s;
}

std::vector<SwitchEvent> sample_switch_schedule(double lambda_switch, double duration,
                                                const Eigen::MatrixXd& transition,
                                                std::size_t initial_model, Rng& rng) {
  std::vector<SwitchEvent> events;
  if (lambda_switch <= 0.0) return events;
  std::exponential_distribution<double> gap(lambda_switch);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::size_t current = initial_model;
  double t = 0.0;
  for (;;) {
    t += gap(rng);
    if (t > duration) break;
    const double u = u01(rng);
    const auto n = transition.cols();
    double cum = 0.0;
    std::size_t next = static_cast<std::size_t>(n - 1);
    for (Eigen::Index j = 0; j < n; ++j) {
      cum += transition(static_cast<Eigen::Index>(current), j);
      if (u < cum) {
        next = static_cast<std::size_t>(j);
        break;
      }
    }
    events.push_back({t, next});
    current = next;
  }
  return events;
}

void enter_model(TargetState& state, const DynamicModel& model, std::size_t index, Rng& rng) {
  state.model = model.tag;
  state.model_index = index;
  state.ax = state.ay = state.jx = state.jy = 0.0;
  state.omega = 0.0;
  if (model.tag == ModelTag::CTKnown) {
    state.omega = model.omega;
  } else if (model.tag == ModelTag::CTUnknown) {
    const double mag =
        uniform(Interval{model.omega_min, model.omega_max}, rng);
    const bool left = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
    state.omega = left ? mag : -mag;
  }
}

TargetState propagate(const TargetState& state, const DynamicModel& model, double dt, Rng& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("propagate: dt must be > 0");
  TargetState s = state;
  s.t = state.t + dt;
  std::normal_distribution<double> normal;
  switch (model.tag) {
    case ModelTag::CV:
      chain_model(s, 2, model.q, dt, rng);
      break;
    case ModelTag::CA:
      chain_model(s, 3, model.q, dt, rng);
      break;
    case ModelTag::Jerk:
      chain_model(s, 4, model.q, dt, rng);
      break;
    case ModelTag::Singer: {
      const double var = model.sigma_m * model.sigma_m;
      singer_axis(s.x, s.vx, s.ax, 0.0, model.tau, var, dt, normal, rng);
      singer_axis(s.y, s.vy, s.ay, 0.0, model.tau, var, dt, normal, rng);
      break;
    }
    case ModelTag::CS: {
      // Mean acceleration tracks the current acceleration; variance from the
      // Rayleigh-limit rule (4 - pi) / pi * (a_max - |a|)^2.
      const double k = (4.0 - geo::kPi) / geo::kPi;
      const double vx = k * std::pow(std::max(0.0, model.a_max - std::abs(s.ax)), 2);
      const double vy = k * std::pow(std::max(0.0, model.a_max - std::abs(s.ay)), 2);
      singer_axis(s.x, s.vx, s.ax, s.ax, model.tau, vx, dt, normal, rng);
      singer_axis(s.y, s.vy, s.ay, s.ay, model.tau, vy, dt, normal, rng);
      s.ax = std::clamp(s.ax, -model.a_max, model.a_max);
      s.ay = std::clamp(s.ay, -model.a_max, model.a_max);
      break;
    }
    case ModelTag::CTKnown:
    case ModelTag::CTUnknown:
      turn(s, s.omega, dt);
      add_white_acceleration(s, model.q, dt, rng);
      break;
    default:
      throw std::invalid_argument("propagate: unknown model tag");
  }
  return s;
}

Track generate_track(const ScenarioConfig& config, Rng& rng) {
  config.validate();
  TargetState s = sample_initial_state(config.init, rng);
  const std::vector<SwitchEvent> schedule =
      config.fixed_schedule ? *config.fixed_schedule
                            : sample_switch_schedule(config.lambda_switch, config.duration,
                                                     config.transition, config.initial_model, rng);
  clamp_speed(s, config.v_max);
  enter_model(s, config.models[config.initial_model], config.initial_model, rng);

  const auto steps = static_cast<std::size_t>(std::llround(config.duration / config.sim_dt));
  Track track;
  track.states.reserve(steps + 1);
  track.states.push_back(s);
  std::size_t next_event = 0;
  for (std::size_t k = 1; k <= steps; ++k) {
    const TargetState& prev = track.states.back();
    TargetState cur = propagate(prev, config.models[prev.model_index], config.sim_dt, rng);
    cur.t = static_cast<double>(k) * config.sim_dt;
    clamp_speed(cur, config.v_max);
    std::size_t active = prev.model_index;
    while (next_event < schedule.size() && schedule[next_event].t <= cur.t + kTimeEps) {
      active = schedule[next_event].model;
      ++next_event;
    }
    if (active != prev.model_index) enter_model(cur, config.models[active], active, rng);
    track.states.push_back(cur);
  }
  return track;
}

std::vector<TargetState> truth_at_measurements(const Track& track, const ScenarioConfig& config) {
  std::vector<TargetState> out;
  if (track.states.empty()) return out;
  const auto ticks = static_cast<std::size_t>(std::floor(config.duration / config.meas_dt + kTimeEps));
  for (std::size_t j = 1; j <= ticks; ++j) {
    const auto k = static_cast<std::size_t>(
        std::llround(static_cast<double>(j) * config.meas_dt / config.sim_dt));
    if (k >= track.states.size()) break;
    out.push_back(track.states[k]);
  }
  return out;
}

std::vector<geo::PolarMeasurement> generate_measurements(const Track& track,
                                                         const ScenarioConfig& config, Rng& rng) {
  if (track.states.empty()) throw std::invalid_argument("generate_measurements: empty track");
  const std::vector<TargetState> truth = truth_at_measurements(track, config);
  std::vector<geo::PolarMeasurement> out;
  out.reserve(truth.size());
  if (truth.empty()) return out;

  std::normal_distribution<double> normal;
  const double rho_1 = std::hypot(truth.front().x, truth.front().y);
  for (const TargetState& s : truth) {
    const geo::PolarMeasurement clean = geo::cartesian_to_polar(s.position());
    const double mean_snr = geo::propagate_snr(config.snr_1, rho_1, clean.rho);
    double snr = mean_snr;
    if (config.fluctuation == SnrFluctuation::Swerling1) {
      snr = std::exponential_distribution<double>(1.0 / mean_snr)(rng);
      snr = std::max(snr, std::numeric_limits<double>::min());
    }
    const geo::PolarSigma sigma = geo::snr_to_polar_sigma(snr, config.radar);
    geo::PolarMeasurement z;
    z.t = s.t;
    z.snr = snr;
    z.rho = std::max(clean.rho + sigma.rho * normal(rng), 1.0);
    z.theta = geo::wrap_angle(clean.theta + sigma.theta * normal(rng));
    out.push_back(z);
  }
  return out;
}

std::vector<double> switch_times(const Track& track) {
  std::vector<double> out;
  for (std::size_t k = 1; k < track.states.size(); ++k) {
    if (track.states[k].model_index != track.states[k - 1].model_index) {
      out.push_back(track.states[k].t);
    }
  }
  return out;
}

ScenarioConfig maneuver_heavy_scenario(std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.seed = seed;
  cfg.duration = 200.0;
  // Indices into default_models(): 0 CV, 2 Jerk, 4 CS, 5 CT_known.
  cfg.initial_model = 0;
  cfg.fixed_schedule = std::vector<SwitchEvent>{
      {33.4, 2}, {103.4, 5}, {123.4, 4}, {164.9, 2}, {192.0, 5}};
  return cfg;
}

}  // namespace mupo::sim
