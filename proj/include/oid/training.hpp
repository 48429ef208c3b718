#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "json.hpp"
#include "oid/nn/graph.hpp"
#include "oid/nn/optimizer.hpp"

namespace oid {

struct TrainConfig {
  double learning_rate = 0.001;
  double lr_decay = 0.05;
  double grad_clip_norm = 5.0;
  double l2_coeff = 1e-6;
  int epochs = 10;
  int batch_size = 16;
  std::uint64_t seed = 13;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig defaults = {});

struct EpochRecord {
  int epoch = 0;
  double learning_rate = 0.0;
  /// Mean per-example training loss over the epoch.
  double loss = 0.0;
  /// Optional development score (NaN when not evaluated).
  double dev_score = 0.0;
};

/// Computes one example's loss, adds its parameter gradients to `grads` and
/// returns the loss value. `rng` drives dropout for that example.
using ExampleStep =
    std::function<double(std::size_t index, Rng& rng, nn::Gradients& grads)>;

/// Shuffled mini-batch Adam. Gradients are averaged over each batch in a fixed
/// order, so a run is bit-reproducible for a given seed. `after_epoch`
/// may fill `dev_score`.
std::vector<EpochRecord> run_training(nn::Adam& optimizer, std::size_t examples,
                                      const TrainConfig& config, const ExampleStep& step,
                                      const std::function<void(EpochRecord&)>& after_epoch = {});

/// Calls fn(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). `fn` must only touch slot i of any shared output.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  unsigned threads = 0);

}  // namespace oid
