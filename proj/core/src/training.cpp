#include "mupo/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "mupo/errors.hpp"

namespace mupo::det {

namespace {

bool same_shape(const raster::MupoTensor& a, const raster::MupoTensor& b) {
  return a.region.height == b.region.height && a.region.width == b.region.width &&
         a.channels == b.channels;
}

std::vector<std::vector<std::size_t>> make_batches(const std::vector<TrainingSample>& data,
                                                   const std::vector<std::size_t>& order,
                                                   int batch_size) {
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t idx : order) {
    if (!batches.empty() && static_cast<int>(batches.back().size()) < batch_size &&
        same_shape(data[batches.back().front()].tensor, data[idx].tensor)) {
      batches.back().push_back(idx);
    } else {
      batches.push_back({idx});
    }
  }
  return batches;
}

nn::Tensor batch_input(const std::vector<TrainingSample>& data,
                       const std::vector<std::size_t>& batch) {
  std::vector<const raster::MupoTensor*> ptrs;
  ptrs.reserve(batch.size());
  for (std::size_t i : batch) ptrs.push_back(&data[i].tensor);
  return to_batch(ptrs);
}

void check_finite(const LossTerms& t, int epoch, std::size_t sample) {
  if (!std::isfinite(t.total)) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "non-finite loss at epoch %d, sample %zu (det %g, reg %g, conf %g, cons %g)",
                  epoch, sample, t.detection, t.regression, t.confidence, t.constraint);
    throw NumericError(buf);
  }
}

}  // namespace

std::vector<EpochLog> train(Network& net, const std::vector<TrainingSample>& data,
                            const TrainOptions& options) {
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  const NetConfig& cfg = net.config();
  const int epochs = options.epochs >= 0 ? options.epochs : cfg.optimizer.epochs;
  nn::AdamConfig adam;
  adam.learning_rate = cfg.optimizer.learning_rate;

  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<EpochLog> log;
  long step = 0;
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    if (options.shuffle) std::shuffle(order.begin(), order.end(), rng);
    LossTerms sum;
    for (const auto& batch : make_batches(data, order, cfg.optimizer.batch_size)) {
      nn::Graph g;
      const nn::Graph::Id out = net.forward(g, batch_input(data, batch));
      const nn::Tensor& head = g.value(out);
      const std::vector<HeadLogits> logits = split_head(head);
      nn::Tensor seed(head.shape());
      for (std::size_t b = 0; b < batch.size(); ++b) {
        const TepLabels& labels = data[batch[b]].labels;
        HeadLogits grad(logits[b].height, logits[b].width);
        const LossTerms t = total_loss(logits[b], labels, cfg.loss, &grad);
        check_finite(t, epoch, batch[b]);
        sum += t;
        const std::vector<double>* maps[4] = {&grad.existence, &grad.offset_x, &grad.offset_y,
                                              &grad.confidence};
        for (int c = 0; c < 4; ++c) {
          float* dst = seed.plane(static_cast<int>(b), c);
          for (std::size_t i = 0; i < grad.size(); ++i) dst[i] = static_cast<float>((*maps[c])[i]);
        }
      }
      zero_grad(net.parameters());
      g.backward(out, seed);
      if (cfg.optimizer.grad_clip > 0.0) {
        const double norm = grad_norm(net.parameters());
        if (norm > cfg.optimizer.grad_clip) scale_grad(net.parameters(), cfg.optimizer.grad_clip / norm);
      }
      adam_step(net.parameters(), adam, ++step);
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.mean = sum.scaled(1.0 / static_cast<double>(data.size()));
    entry.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log.push_back(entry);
    if (options.on_epoch) options.on_epoch(entry);
  }
  return log;
}

LossTerms evaluate_loss(const Network& net, const std::vector<TrainingSample>& data) {
  if (data.empty()) throw std::invalid_argument("evaluate_loss: empty dataset");
  LossTerms sum;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::vector<HeadLogits> logits = net.infer(to_input(data[i].tensor));
    const LossTerms t = total_loss(logits.front(), data[i].labels, net.config().loss);
    check_finite(t, 0, i);
    sum += t;
  }
  return sum.scaled(1.0 / static_cast<double>(data.size()));
}

void write_training_log(std::ostream& out, const std::vector<EpochLog>& log) {
  out << "epoch,loss_total,loss_det,loss_reg,loss_conf,loss_constraint\n";
  char buf[256];
  for (const EpochLog& e : log) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g,%.9g\n", e.epoch, e.mean.total,
                  e.mean.detection, e.mean.regression, e.mean.confidence, e.mean.constraint);
    out << buf;
  }
}

}  // namespace mupo::det
