#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "mupo/detector.hpp"
#include "mupo/losses.hpp"
#include "mupo/raster.hpp"

namespace mupo::det {

struct TrainingSample {
  raster::MupoTensor tensor;
  TepLabels labels;
};

struct EpochLog {
  int epoch = 0;         // 1-based
  LossTerms mean;        // per-sample mean over the epoch
  double seconds = 0.0;  // wall time of the epoch
};

struct TrainOptions {
  int epochs = -1;  // < 0 uses the network config
  bool shuffle = true;
  std::function<void(const EpochLog&)> on_epoch;
};

/// Mini-batch Adam on the total loss. Equally shaped consecutive samples are
/// batched up to the configured batch size; differently shaped ones run
/// singly. Deterministic for a fixed network seed. A non-finite loss raises
/// NumericError naming the epoch and sample.
std::vector<EpochLog> train(Network& net, const std::vector<TrainingSample>& data,
                            const TrainOptions& options = {});

/// Mean loss of the current parameters over `data`, without updates.
LossTerms evaluate_loss(const Network& net, const std::vector<TrainingSample>& data);

/// CSV: epoch,loss_total,loss_det,loss_reg,loss_conf,loss_constraint
void write_training_log(std::ostream& out, const std::vector<EpochLog>& log);

}  // namespace mupo::det
