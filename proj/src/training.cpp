#include "oid/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "oid/error.hpp"
#include "oid/json_config.hpp"

namespace oid {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ArgumentError("learning_rate must be positive");
  if (lr_decay < 0.0) throw ArgumentError("lr_decay must be non-negative");
  if (l2_coeff < 0.0) throw ArgumentError("l2_coeff must be non-negative");
  if (epochs < 0) throw ArgumentError("epochs must be non-negative");
  if (batch_size < 1) throw ArgumentError("batch_size must be positive");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"lr_decay", c.lr_decay},
          {"grad_clip_norm", c.grad_clip_norm}, {"l2_coeff", c.l2_coeff},
          {"epochs", c.epochs}, {"batch_size", c.batch_size}, {"seed", c.seed}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  ConfigReader r(j, "train");
  r.get("learning_rate", c.learning_rate);
  r.get("lr_decay", c.lr_decay);
  r.get("grad_clip_norm", c.grad_clip_norm);
  r.get("l2_coeff", c.l2_coeff);
  r.get("epochs", c.epochs);
  r.get("batch_size", c.batch_size);
  r.get("seed", c.seed);
  r.finish();
  c.validate();
  return c;
}

std::vector<EpochRecord> run_training(nn::Adam& optimizer, std::size_t examples,
                                      const TrainConfig& config, const ExampleStep& step,
                                      const std::function<void(EpochRecord&)>& after_epoch) {
  config.validate();
  std::vector<std::size_t> order(examples);
  std::iota(order.begin(), order.end(), 0);
  Rng shuffler(Rng::mix(config.seed, 0x5eed));
  std::vector<EpochRecord> history;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffler.shuffle(order);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.learning_rate = nn::decayed_learning_rate(config.learning_rate, config.lr_decay, epoch);
    rec.dev_score = std::numeric_limits<double>::quiet_NaN();
    double total = 0.0;
    for (std::size_t begin = 0; begin < examples; begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(examples, begin + static_cast<std::size_t>(config.batch_size));
      nn::Gradients batch;
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t idx = order[k];
        Rng rng(Rng::mix(config.seed, static_cast<std::uint64_t>(epoch) * 1000003ULL + idx));
        nn::Gradients g;
        const double loss = step(idx, rng, g);
        if (!std::isfinite(loss)) throw TrainingError("non-finite loss at epoch " + std::to_string(epoch));
        total += loss;
        batch.merge(g, 1.0 / static_cast<double>(end - begin));
      }
      nn::apply_update(optimizer, batch, rec.learning_rate, config.grad_clip_norm, config.l2_coeff);
    }
    rec.loss = examples ? total / static_cast<double>(examples) : 0.0;
    if (after_epoch) after_epoch(rec);
    history.push_back(rec);
  }
  return history;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace oid
