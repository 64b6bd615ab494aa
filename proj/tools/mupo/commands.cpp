#include "mupo/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mupo/dataset.hpp"
#include "mupo/detector.hpp"
#include "mupo/errors.hpp"
#include "mupo/eval.hpp"
#include "mupo/io.hpp"
#include "mupo/raster.hpp"
#include "mupo/scenario.hpp"
#include "mupo/tracker.hpp"
#include "mupo/training.hpp"

namespace mupo::cli {

namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

fs::path out_dir(const GlobalOptions& g) {
  const fs::path dir(g.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

det::Network load_network(const std::string& path) {
  if (path.empty()) throw IoError("a checkpoint is required (--checkpoint)");
  if (!fs::exists(path)) throw IoError("checkpoint not found: " + path);
  std::ifstream in = open_in(path);
  return det::Network::load(in);
}

}  // namespace

config::RunConfig load_config(const GlobalOptions& g) {
  if (g.config_path.empty()) return config::default_run_config();
  return config::parse_run_config(read_text(g.config_path));
}

void cmd_simulate(const GlobalOptions& g) {
  const config::RunConfig cfg = load_config(g);
  sim::ScenarioConfig sc = cfg.scenario.config;
  if (g.seed) sc.seed = *g.seed;
  sim::Rng rng(sc.seed);
  const sim::Track track = sim::generate_track(sc, rng);
  const auto meas = sim::generate_measurements(track, sc, rng);
  const auto truth = sim::truth_at_measurements(track, sc);

  const fs::path dir = out_dir(g);
  {
    std::ofstream out = open_out(dir / "truth.jsonl");
    io::write_truth(out, truth);
  }
  {
    std::ofstream out = open_out(dir / "measurements.jsonl");
    io::write_measurements(out, meas);
  }
  std::cout << "truth " << truth.size() << " records -> " << (dir / "truth.jsonl").string() << '\n'
            << "measurements " << meas.size() << " records -> "
            << (dir / "measurements.jsonl").string() << '\n';
}

void cmd_make_dataset(const GlobalOptions& g, const DatasetOptions& o) {
  const config::RunConfig cfg = load_config(g);
  std::ifstream min = open_in(o.measurements);
  std::ifstream tin = open_in(o.truth);
  const auto meas = io::read_measurements(min);
  const auto truth = io::read_truth(tin);
  if (meas.size() != truth.size()) {
    throw ConfigError("measurement and truth files differ in length (" +
                      std::to_string(meas.size()) + " vs " + std::to_string(truth.size()) + ")");
  }
  const data::Dataset ds = data::make_dataset(meas, truth, cfg.tracker());
  const fs::path dir = out_dir(g);
  data::write_dataset(dir, ds);
  std::cout << "windows " << ds.windows << ", kept " << ds.records.size() << ", dropped "
            << ds.dropped << " (truth outside region) -> " << dir.string() << '\n';
}

void cmd_train(const GlobalOptions& g, const TrainOptions& o) {
  config::RunConfig cfg = load_config(g);
  if (g.seed) cfg.net.seed = *g.seed;
  const data::Dataset ds = data::read_dataset(o.dataset);
  const auto samples =
      data::to_training(ds.records, cfg.net.stride, cfg.net.effective_radius_sq());
  if (samples.empty()) throw ConfigError("dataset has no usable samples");

  det::Network net(cfg.net);
  det::TrainOptions opts;
  opts.epochs = o.epochs;
  opts.on_epoch = [](const det::EpochLog& e) {
    std::cerr << "epoch " << e.epoch << " loss " << e.mean.total << " (" << e.seconds << " s)\n";
  };
  const auto log = det::train(net, samples, opts);

  const fs::path dir = out_dir(g);
  {
    std::ofstream out = open_out(dir / "checkpoint.mttn");
    net.save(out);
  }
  {
    std::ofstream out = open_out(dir / "train_log.csv");
    det::write_training_log(out, log);
  }
  std::cout << "trained on " << samples.size() << " samples for " << log.size()
            << " epochs -> " << (dir / "checkpoint.mttn").string() << '\n';
}

void cmd_track(const GlobalOptions& g, const TrackOptions& o) {
  config::RunConfig cfg = load_config(g);
  const det::Network net = load_network(o.checkpoint);
  std::ifstream min = open_in(o.measurements);
  const auto meas = io::read_measurements(min);
  const auto estimates = track::run_track(meas, &net, cfg.tracker());
  const fs::path dir = out_dir(g);
  std::ofstream out = open_out(dir / "estimates.jsonl");
  io::write_estimates(out, estimates);
  long fused = 0;
  for (const auto& e : estimates) fused += e.source == track::Source::Fused ? 1 : 0;
  std::cout << "estimates " << estimates.size() << " (fused " << fused << ") -> "
            << (dir / "estimates.jsonl").string() << '\n';
}

void cmd_eval(const GlobalOptions& g, const EvalOptions& o) {
  config::RunConfig cfg = load_config(g);
  if (g.seed) cfg.eval.seed = *g.seed;
  if (o.runs > 0) cfg.eval.n_runs = o.runs;

  std::optional<det::Network> net;
  std::vector<eval::Method> methods;
  for (const std::string& name : cfg.eval.methods) {
    eval::Method m;
    m.name = name;
    m.kind = eval::method_kind_from_string(name);
    if (m.kind == eval::MethodKind::MupoTtn) {
      if (!net) net.emplace(load_network(o.checkpoint));
      m.net = &*net;
    }
    methods.push_back(m);
  }

  eval::EvalConfig ec;
  ec.n_runs = cfg.eval.n_runs;
  ec.seed = cfg.eval.seed;
  ec.warmup_s = cfg.eval.warmup_s;
  ec.post_switch_ticks = cfg.eval.post_switch_ticks;
  ec.threads = g.threads;
  ec.tracker = cfg.tracker();

  const std::string digest = config::config_digest(cfg);
  const fs::path dir = out_dir(g);
  std::vector<eval::McReport> reports;
  for (const auto& s : cfg.eval.scenarios) {
    eval::McReport r = eval::monte_carlo(s.config, s.name, methods, ec);
    r.config_digest = digest;
    std::ofstream out = open_out(dir / ("rmse_" + s.name + ".csv"));
    eval::write_rmse_csv(out, r);
    std::cout << s.name << ":";
    for (const auto& m : r.methods) std::cout << ' ' << m.name << " ARMSE " << m.armse << " m;";
    std::cout << '\n';
    reports.push_back(std::move(r));
  }
  std::ofstream out = open_out(dir / "summary.json");
  eval::write_summary_json(out, reports);
}

void cmd_inspect(const GlobalOptions& g, const InspectOptions& o) {
  std::ifstream in = open_in(o.raster);
  raster::MupoTensor t;
  for (int i = 0; i <= o.index; ++i) t = raster::read_raster(in);

  int channel = -1;
  try {
    channel = static_cast<int>(raster::channel_from_name(o.channel));
  } catch (const std::exception&) {
    try {
      channel = std::stoi(o.channel);
    } catch (const std::exception&) {
      throw ConfigError("unknown channel \"" + o.channel + "\"");
    }
  }
  if (channel < 0 || channel >= t.channels) {
    throw ConfigError("channel " + std::to_string(channel) + " out of range");
  }
  fs::path path = o.output.empty() ? out_dir(g) / ("channel_" + o.channel + ".pgm")
                                   : fs::path(o.output);
  std::ofstream out = open_out(path);
  io::write_pgm(out, t.plane(channel));
  std::cout << t.region.height << "x" << t.region.width << " channel " << channel << " -> "
            << path.string() << '\n';
}

}  // namespace mupo::cli
