#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "mupo/commands.hpp"
#include "mupo/errors.hpp"

using namespace mupo;

int main(int argc, char** argv) {
  CLI::App app{"mupo: measurement-uncertainty projection tracking"};
  app.require_subcommand(1);
  app.fallthrough();

  cli::GlobalOptions g;
  if (const char* env = std::getenv("MUPO_THREADS")) g.threads = std::atoi(env);
  std::uint64_t seed = 0;
  app.add_option("--config", g.config_path, "RunConfig JSON file");
  auto* seed_opt = app.add_option("--seed", seed, "Seed override");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--threads", g.threads, "Worker threads (default MUPO_THREADS)");

  auto* simulate = app.add_subcommand("simulate", "Simulate a truth track and its measurements");

  cli::DatasetOptions ds;
  auto* make_dataset = app.add_subcommand("make-dataset", "Window measurements into rasters");
  make_dataset->add_option("--measurements", ds.measurements)->required();
  make_dataset->add_option("--truth", ds.truth)->required();

  cli::TrainOptions tr;
  auto* train = app.add_subcommand("train", "Train the detector on a dataset directory");
  train->add_option("--dataset", tr.dataset)->required();
  train->add_option("--epochs", tr.epochs, "Override the configured epoch count");

  cli::TrackOptions tk;
  auto* track = app.add_subcommand("track", "Track a measurement file with a checkpoint");
  track->add_option("--measurements", tk.measurements)->required();
  track->add_option("--checkpoint", tk.checkpoint)->required();

  cli::EvalOptions ev;
  auto* eval = app.add_subcommand("eval", "Monte-Carlo comparison of the configured methods");
  eval->add_option("--checkpoint", ev.checkpoint);
  eval->add_option("--runs", ev.runs, "Override eval.n_runs");

  cli::InspectOptions in;
  auto* inspect = app.add_subcommand("inspect", "Write one raster channel as PGM");
  inspect->add_option("--raster", in.raster)->required();
  inspect->add_option("--channel", in.channel, "sequence, imm, tfot, latest or an index");
  inspect->add_option("--index", in.index, "Raster index inside a concatenated file");
  inspect->add_option("--pgm", in.output, "Output file (default <out>/channel_<name>.pgm)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? cli::kOk : cli::kConfig;
  }
  if (*seed_opt) g.seed = seed;

  try {
    if (*simulate) cli::cmd_simulate(g);
    if (*make_dataset) cli::cmd_make_dataset(g, ds);
    if (*train) cli::cmd_train(g, tr);
    if (*track) cli::cmd_track(g, tk);
    if (*eval) cli::cmd_eval(g, ev);
    if (*inspect) cli::cmd_inspect(g, in);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return cli::kConfig;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return cli::kIo;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return cli::kNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return cli::kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kNumeric;
  }
  return cli::kOk;
}
