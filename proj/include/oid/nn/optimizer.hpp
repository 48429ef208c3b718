#pragma once

#include <vector>

#include "oid/nn/graph.hpp"

namespace oid::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam over a fixed parameter list. Parameters without a gradient in a
/// step are treated as having a zero gradient.
class Adam {
 public:
  Adam(ParameterRefs params, AdamConfig config = {});

  void step(const Gradients& grads, double learning_rate);
  long steps() const { return t_; }
  const ParameterRefs& parameters() const { return params_; }

 private:
  ParameterRefs params_;
  AdamConfig config_;
  std::vector<Matrix> m_, v_;
  long t_ = 0;
};

/// Adds the L2 term, clips the global norm to `clip_norm` (<= 0 disables) and
/// applies one Adam step. Returns the pre-clipping gradient norm.
double apply_update(Adam& optimizer, Gradients& grads, double learning_rate, double clip_norm,
                    double l2);

/// lr / (1 + decay * epoch)
double decayed_learning_rate(double lr, double decay, int epoch);

}  // namespace oid::nn
