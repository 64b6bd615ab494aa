#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "mupo/config.hpp"

namespace mupo::cli {

enum ExitCode : int { kOk = 0, kConfig = 1, kIo = 2, kNumeric = 3 };

struct GlobalOptions {
  std::string config_path;  // empty: built-in defaults
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  int threads = 0;  // 0: MUPO_THREADS or hardware concurrency
};

config::RunConfig load_config(const GlobalOptions& g);

struct DatasetOptions {
  std::string measurements;
  std::string truth;
};

struct TrainOptions {
  std::string dataset;
  int epochs = -1;
};

struct TrackOptions {
  std::string measurements;
  std::string checkpoint;
};

struct EvalOptions {
  std::string checkpoint;
  int runs = 0;  // 0: config value
};

struct InspectOptions {
  std::string raster;
  std::string channel = "sequence";
  std::string output;
  int index = 0;  // raster index inside a concatenated file
};

void cmd_simulate(const GlobalOptions& g);
void cmd_make_dataset(const GlobalOptions& g, const DatasetOptions& o);
void cmd_train(const GlobalOptions& g, const TrainOptions& o);
void cmd_track(const GlobalOptions& g, const TrackOptions& o);
void cmd_eval(const GlobalOptions& g, const EvalOptions& o);
void cmd_inspect(const GlobalOptions& g, const InspectOptions& o);

}  // namespace mupo::cli
